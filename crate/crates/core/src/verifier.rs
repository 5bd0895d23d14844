//! The certificate check over the d/l tries, exhaustive search built on it,
//! and a brute-force oracle that never touches the tables.

use std::ops::AddAssign;

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{Assignment, AssignmentError, CspInstance, Val, Var};
use crate::normalize::normalize;
use crate::tables::{build_tables, key, pair_key, BuildOptions, TableError, TableStats, VerificationTables};

/// Default cap on enumerated candidates, overridable per call.
pub const DEFAULT_MAX_CANDIDATES: u64 = 20_000_000;

const BATCH: usize = 2048;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("candidate has size {got} but the parameter is {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("parameter {0} exceeds the supported maximum of 63")]
    ParameterTooLarge(usize),
    #[error("invalid certificate: {0}")]
    Certificate(#[from] AssignmentError),
    #[error(transparent)]
    Tables(#[from] TableError),
    #[error("search space of {count} candidates exceeds the cap of {cap}")]
    TooManyCandidates { count: u128, cap: u64 },
    #[error("accepted candidate {0} violates a source constraint")]
    Unsound(String),
}

/// Work done by one or more certificate checks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LookupStats {
    pub d_lookups: u64,
    pub l_lookups: u64,
    pub nodes_touched: u64,
}

impl AddAssign for LookupStats {
    fn add_assign(&mut self, rhs: Self) {
        self.d_lookups += rhs.d_lookups;
        self.l_lookups += rhs.l_lookups;
        self.nodes_touched += rhs.nodes_touched;
    }
}

impl std::fmt::Display for LookupStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "d={} l={} nodes={}", self.d_lookups, self.l_lookups, self.nodes_touched)
    }
}

/// Checks a size-k candidate against the tables.
///
/// For every `T ⊆ B` with `d[T] > 0`, the sum of `l[T, W]` over
/// `T ⊊ W ⊆ B` must equal `d[T]`. All subsets are visited even after a
/// failure so the lookup counts depend on `B` and the tables only.
pub fn check_candidate(b: &Assignment, tables: &VerificationTables) -> Result<(bool, LookupStats), VerifyError> {
    let k = tables.k();
    if b.size() != k {
        return Err(VerifyError::SizeMismatch {
            expected: k,
            got: b.size(),
        });
    }
    if k > 63 {
        return Err(VerifyError::ParameterTooLarge(k));
    }
    let full: u64 = if k == 0 { 0 } else { u64::MAX >> (64 - k) };
    let mut stats = LookupStats::default();
    let mut ok = true;
    for t_mask in 0..=full {
        let t = b.select(t_mask);
        let (d, touched) = tables.d_trie().lookup_counted(&key(&t));
        stats.d_lookups += 1;
        stats.nodes_touched += touched as u64;
        if d <= 0 {
            continue;
        }
        let rest = full & !t_mask;
        let mut sum = 0i64;
        // nonempty submasks of `rest`, ascending
        let mut sub = rest.wrapping_neg() & rest;
        while sub != 0 {
            let w = b.select(t_mask | sub);
            let (l, touched) = tables.l_trie().lookup_counted(&pair_key(&t, &w));
            stats.l_lookups += 1;
            stats.nodes_touched += touched as u64;
            sum += l;
            sub = ((sub | !rest).wrapping_add(1)) & rest;
        }
        if sum != d {
            ok = false;
        }
    }
    Ok((ok, stats))
}

/// Size-k supports in lexicographic order: variable k-subsets ascending, and
/// within one subset the value tuples ascending with the last variable fastest.
pub struct SupportCandidates {
    n_vars: usize,
    values: Vec<Val>,
    combo: Vec<usize>,
    digits: Vec<usize>,
    done: bool,
}

impl SupportCandidates {
    pub fn new(n_vars: usize, values: Vec<Val>, k: usize) -> Self {
        let done = k > n_vars || (k > 0 && values.is_empty());
        SupportCandidates {
            n_vars,
            values,
            combo: (0..k).collect(),
            digits: vec![0; k],
            done,
        }
    }

    /// Number of candidates the iterator yields.
    pub fn count_total(n_vars: usize, n_values: usize, k: usize) -> u128 {
        if k > n_vars {
            return 0;
        }
        let mut binom: u128 = 1;
        for i in 0..k {
            binom = binom * (n_vars - i) as u128 / (i as u128 + 1);
        }
        binom.saturating_mul((n_values as u128).saturating_pow(k as u32))
    }

    fn advance(&mut self) {
        let k = self.combo.len();
        for i in (0..k).rev() {
            if self.digits[i] + 1 < self.values.len() {
                self.digits[i] += 1;
                for d in &mut self.digits[i + 1..] {
                    *d = 0;
                }
                return;
            }
        }
        for d in &mut self.digits {
            *d = 0;
        }
        for i in (0..k).rev() {
            if self.combo[i] < self.n_vars - k + i {
                self.combo[i] += 1;
                for j in i + 1..k {
                    self.combo[j] = self.combo[j - 1] + 1;
                }
                return;
            }
        }
        self.done = true;
    }
}

impl Iterator for SupportCandidates {
    type Item = Assignment;

    fn next(&mut self) -> Option<Assignment> {
        if self.done {
            return None;
        }
        let a = Assignment::from_sorted_unchecked(
            self.combo
                .iter()
                .zip(&self.digits)
                .map(|(&v, &d)| (Var(v as u32), self.values[d]))
                .collect(),
        );
        self.advance();
        Some(a)
    }
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub build: BuildOptions,
    pub max_candidates: u64,
    /// Check candidates in parallel batches; the reported witness is always
    /// the first accepted candidate in enumeration order.
    pub parallel: bool,
    /// Cross-check accepted witnesses against the source constraints in release builds too.
    pub paranoid: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            build: BuildOptions::default(),
            max_candidates: DEFAULT_MAX_CANDIDATES,
            parallel: true,
            paranoid: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SearchReport {
    pub witness: Option<Assignment>,
    pub candidates_checked: u64,
    pub stats: LookupStats,
    pub table_stats: TableStats,
}

/// Builds the tables for `inst` at its own parameter.
pub fn prepare(inst: &CspInstance, build: BuildOptions) -> Result<VerificationTables, VerifyError> {
    let normalized = normalize(inst, inst.k());
    Ok(build_tables(&normalized, build)?)
}

fn cross_check(inst: &CspInstance, tables: &VerificationTables, b: &Assignment, paranoid: bool) -> Result<(), VerifyError> {
    if tables.options().patch_empty && (paranoid || cfg!(debug_assertions)) && !inst.satisfies_all(b) {
        return Err(VerifyError::Unsound(inst.display(b).to_string()));
    }
    Ok(())
}

/// Checks one user-supplied certificate.
pub fn verify_certificate(
    inst: &CspInstance,
    certificate: &Assignment,
    options: &SearchOptions,
) -> Result<(bool, LookupStats), VerifyError> {
    inst.check_assignment(certificate)?;
    let tables = prepare(inst, options.build)?;
    let (ok, stats) = check_candidate(certificate, &tables)?;
    if ok {
        cross_check(inst, &tables, certificate, options.paranoid)?;
    }
    Ok((ok, stats))
}

/// Enumerates size-k candidates against prebuilt tables, stopping at the first acceptance.
pub fn search(
    inst: &CspInstance,
    tables: &VerificationTables,
    options: &SearchOptions,
) -> Result<SearchReport, VerifyError> {
    let values = inst.nonzero_values();
    let total = SupportCandidates::count_total(inst.num_vars(), values.len(), tables.k());
    if total > options.max_candidates as u128 {
        return Err(VerifyError::TooManyCandidates {
            count: total,
            cap: options.max_candidates,
        });
    }
    let mut candidates = SupportCandidates::new(inst.num_vars(), values, tables.k());
    let mut report = SearchReport {
        witness: None,
        candidates_checked: 0,
        stats: LookupStats::default(),
        table_stats: tables.stats(),
    };
    loop {
        let batch: Vec<Assignment> = candidates.by_ref().take(BATCH).collect();
        if batch.is_empty() {
            break;
        }
        let results: Vec<(bool, LookupStats)> = if options.parallel {
            batch
                .par_iter()
                .map(|b| check_candidate(b, tables))
                .collect::<Result<_, _>>()?
        } else {
            batch
                .iter()
                .map(|b| check_candidate(b, tables))
                .collect::<Result<_, _>>()?
        };
        for (b, (ok, stats)) in batch.into_iter().zip(results) {
            report.candidates_checked += 1;
            report.stats += stats;
            if ok {
                cross_check(inst, tables, &b, options.paranoid)?;
                report.witness = Some(b);
                return Ok(report);
            }
        }
    }
    Ok(report)
}

pub fn solve_with(inst: &CspInstance, options: &SearchOptions) -> Result<SearchReport, VerifyError> {
    let tables = prepare(inst, options.build)?;
    search(inst, &tables, options)
}

/// Some size-k support accepted by the table check, or `None`.
pub fn solve(inst: &CspInstance) -> Result<Option<Assignment>, VerifyError> {
    Ok(solve_with(inst, &SearchOptions::default())?.witness)
}

/// Brute force over all `|D|^|V|` total assignments, keeping those of size
/// exactly k and testing every constraint directly.
pub fn oracle_solve(inst: &CspInstance, max_candidates: u64) -> Result<Option<Assignment>, VerifyError> {
    let n = inst.num_vars();
    let d = inst.domain_size();
    let total = (d as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if total > max_candidates as u128 {
        return Err(VerifyError::TooManyCandidates {
            count: total,
            cap: max_candidates,
        });
    }
    if inst.k() > n {
        return Ok(None);
    }
    let free = inst.free_value();
    let mut full = vec![free; n];
    loop {
        if full.iter().filter(|&&v| v != free).count() == inst.k() {
            let a = Assignment::from_pairs(
                full.iter()
                    .enumerate()
                    .filter(|(_, &v)| v != free)
                    .map(|(i, &v)| (Var(i as u32), v)),
            )
            .expect("distinct variables");
            if inst.constraints().iter().all(|c| inst.satisfies(&a, c)) {
                return Ok(Some(a));
            }
        }
        // odometer over full assignments, first variable fastest
        let mut i = 0;
        loop {
            if i == n {
                return Ok(None);
            }
            let next = full[i].0 + 1;
            if (next as usize) < d {
                full[i] = Val(next);
                break;
            }
            full[i] = Val(0);
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_instance;

    fn instance(relations: &str, constraints: &str, vars: &str, k: usize) -> CspInstance {
        parse_instance(&format!(
            r#"{{"domain": ["0","1"], "free_value": "0", "variables": [{vars}],
                "relations": {{{relations}}}, "constraints": [{constraints}], "k": {k}}}"#
        ))
        .unwrap()
    }

    fn a(inst: &CspInstance, text: &str) -> Assignment {
        inst.parse_assignment(text).unwrap()
    }

    fn check(inst: &CspInstance, text: &str) -> bool {
        let tables = prepare(inst, BuildOptions::default()).unwrap();
        check_candidate(&a(inst, text), &tables).unwrap().0
    }

    #[test]
    fn chain_block_candidates() {
        let inst = instance(
            r#""R": {"arity": 2, "tuples": [["1","0"],["1","1"]]}"#,
            r#"{"relation": "R", "vars": ["x","y"]}"#,
            r#""x","y","z""#,
            2,
        );
        assert!(check(&inst, "x=1,z=1"));
        assert!(inst.satisfies_all(&a(&inst, "x=1,z=1")));
        assert!(!check(&inst, "y=1,z=1"));
        assert!(!inst.satisfies_all(&a(&inst, "y=1,z=1")));
    }

    #[test]
    fn exactly_one_rejects_both() {
        let inst = instance(
            r#""R": {"arity": 2, "tuples": [["1","0"],["0","1"]]}"#,
            r#"{"relation": "R", "vars": ["x","y"]}"#,
            r#""x","y""#,
            2,
        );
        assert!(!check(&inst, "x=1,y=1"));
    }

    #[test]
    fn size_mismatch_is_an_error() {
        let inst = instance("", "", r#""x","y""#, 2);
        let tables = prepare(&inst, BuildOptions::default()).unwrap();
        assert!(matches!(
            check_candidate(&a(&inst, "x=1"), &tables),
            Err(VerifyError::SizeMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn solve_examples() {
        let unary = instance(
            r#""R": {"arity": 1, "tuples": [["1"]]}"#,
            r#"{"relation": "R", "vars": ["x"]}"#,
            r#""x","y""#,
            1,
        );
        assert_eq!(solve(&unary).unwrap(), Some(a(&unary, "x=1")));
        assert_eq!(oracle_solve(&unary, 1000).unwrap(), Some(a(&unary, "x=1")));

        let k0 = unary.with_k(0);
        assert_eq!(solve(&k0).unwrap(), None);
        assert_eq!(oracle_solve(&k0, 1000).unwrap(), None);

        let empty_block = instance(
            r#""R": {"arity": 2, "tuples": [["1","0"]]}"#,
            r#"{"relation": "R", "vars": ["x","x"]}"#,
            r#""x","y""#,
            1,
        );
        for k in 0..=2 {
            let inst = empty_block.with_k(k);
            assert_eq!(solve(&inst).unwrap(), None, "k={k}");
            assert_eq!(oracle_solve(&inst, 1000).unwrap(), None, "k={k}");
        }
    }

    #[test]
    fn oracle_edge_cases() {
        let nothing = instance("", "", "", 0);
        assert_eq!(oracle_solve(&nothing, 10).unwrap(), Some(Assignment::empty()));
        assert_eq!(solve(&nothing).unwrap(), Some(Assignment::empty()));
        let small = instance("", "", r#""x""#, 2);
        assert_eq!(oracle_solve(&small, 10).unwrap(), None);
        assert_eq!(solve(&small).unwrap(), None);
        let wide = instance("", "", r#""a","b","c","d""#, 1);
        assert!(matches!(oracle_solve(&wide, 8), Err(VerifyError::TooManyCandidates { .. })));
    }

    #[test]
    fn candidate_order_and_count() {
        let all: Vec<Vec<(u32, u32)>> = SupportCandidates::new(3, vec![Val(1), Val(2)], 2)
            .map(|a| a.pairs().iter().map(|(v, d)| (v.0, d.0)).collect())
            .collect();
        assert_eq!(all.len(), 12);
        assert_eq!(SupportCandidates::count_total(3, 2, 2), 12);
        assert_eq!(all[0], vec![(0, 1), (1, 1)]);
        assert_eq!(all[1], vec![(0, 1), (1, 2)]);
        assert_eq!(all[4], vec![(0, 1), (2, 1)]);
        assert_eq!(all[11], vec![(1, 2), (2, 2)]);
        assert_eq!(SupportCandidates::new(2, vec![Val(1)], 0).count(), 1);
        assert_eq!(SupportCandidates::new(2, vec![Val(1)], 3).count(), 0);
        assert_eq!(SupportCandidates::count_total(2, 1, 3), 0);
    }

    #[test]
    fn empty_frontier_gap_regression() {
        let inst = instance(
            r#""R": {"arity": 1, "tuples": [["1"]]}"#,
            r#"{"relation": "R", "vars": ["x"]}"#,
            r#""x","y""#,
            1,
        );
        let patched = prepare(&inst, BuildOptions::default()).unwrap();
        let literal = prepare(&inst, BuildOptions::literal()).unwrap();
        let y = a(&inst, "y=1");
        let x = a(&inst, "x=1");
        assert!(!check_candidate(&y, &patched).unwrap().0);
        assert!(check_candidate(&x, &patched).unwrap().0);
        assert!(check_candidate(&y, &literal).unwrap().0);
    }

    #[test]
    fn stats_respect_bounds() {
        let inst = instance(
            r#""R": {"arity": 2, "tuples": [["1","0"],["0","1"],["1","1"]]}"#,
            r#"{"relation": "R", "vars": ["x","y"]}, {"relation": "R", "vars": ["y","z"]}"#,
            r#""x","y","z""#,
            2,
        );
        let tables = prepare(&inst, BuildOptions::default()).unwrap();
        for b in SupportCandidates::new(3, vec![Val(1)], 2) {
            let (_, s) = check_candidate(&b, &tables).unwrap();
            assert_eq!(s.d_lookups, 4);
            assert!(s.l_lookups <= 16);
            assert!(s.nodes_touched <= 6 * (s.d_lookups + s.l_lookups));
        }
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let inst = instance(
            r#""R": {"arity": 2, "tuples": [["0","1"],["1","1"]]}"#,
            r#"{"relation": "R", "vars": ["a","b"]}, {"relation": "R", "vars": ["c","d"]}"#,
            r#""a","b","c","d""#,
            2,
        );
        let par = solve_with(&inst, &SearchOptions::default()).unwrap();
        let seq = solve_with(
            &inst,
            &SearchOptions {
                parallel: false,
                ..SearchOptions::default()
            },
        )
        .unwrap();
        assert_eq!(par.witness, seq.witness);
        assert_eq!(par.stats, seq.stats);
        assert_eq!(par.witness, Some(a(&inst, "b=1,d=1")));
    }
}
