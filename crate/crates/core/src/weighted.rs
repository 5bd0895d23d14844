//! Weighted Boolean CSP: a shared size-k guess is first checked against the
//! weight target with the carry-digit check, and only then against the
//! constraint tables.

use num_bigint::BigUint;
use rayon::prelude::*;
use thiserror::Error;

use crate::model::{Assignment, CspInstance, Val, Var};
use crate::subset_sum::{check_sum, DigitTables, SubsetSumError};
use crate::tables::{BuildOptions, VerificationTables};
use crate::verifier::{check_candidate, prepare, LookupStats, SupportCandidates, VerifyError, DEFAULT_MAX_CANDIDATES};

#[derive(Debug, Error)]
pub enum WcspError {
    #[error("weighted instances need a two-value domain, found {0} values")]
    NotBoolean(usize),
    #[error("variable `{0}` has no weight")]
    MissingWeight(String),
    #[error("instance has no target")]
    MissingTarget,
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    SubsetSum(#[from] SubsetSumError),
}

#[derive(Clone, Debug)]
pub struct WeightedCspInstance {
    base: CspInstance,
    weights: Vec<BigUint>,
    target: BigUint,
    f_of_k: Option<u32>,
}

impl WeightedCspInstance {
    /// Takes weights, target and `f_of_k` from the instance document fields.
    pub fn from_instance(base: CspInstance) -> Result<Self, WcspError> {
        let target = base.target().cloned().ok_or(WcspError::MissingTarget)?;
        let weights = (0..base.num_vars())
            .map(|i| {
                base.weights()
                    .and_then(|w| w.get(&Var(i as u32)).cloned())
                    .ok_or_else(|| WcspError::MissingWeight(base.variables()[i].clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let f_of_k = base.f_of_k();
        Self::new(base, weights, target, f_of_k)
    }

    pub fn new(base: CspInstance, weights: Vec<BigUint>, target: BigUint, f_of_k: Option<u32>) -> Result<Self, WcspError> {
        if base.domain_size() != 2 {
            return Err(WcspError::NotBoolean(base.domain_size()));
        }
        if weights.len() != base.num_vars() {
            let missing = base.variables().get(weights.len()).cloned().unwrap_or_default();
            return Err(WcspError::MissingWeight(missing));
        }
        Ok(WeightedCspInstance {
            base,
            weights,
            target,
            f_of_k,
        })
    }

    pub fn base(&self) -> &CspInstance {
        &self.base
    }

    pub fn weights(&self) -> &[BigUint] {
        &self.weights
    }

    pub fn target(&self) -> &BigUint {
        &self.target
    }

    pub fn k(&self) -> usize {
        self.base.k()
    }

    pub fn one(&self) -> Val {
        self.base.nonzero_values()[0]
    }
}

/// Result of checking one guessed support.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CandidateOutcome {
    pub weight_ok: bool,
    pub constraint_ok: bool,
    /// Table lookups; zero whenever the weight check failed.
    pub stats: LookupStats,
}

impl CandidateOutcome {
    pub fn accepted(&self) -> bool {
        self.weight_ok && self.constraint_ok
    }
}

/// Both deterministic phases done: constraint tables and weight digit tables.
pub struct ProgramH {
    tables: VerificationTables,
    weight_digits: DigitTables,
    k: usize,
}

impl ProgramH {
    /// The weight base is `max(|V|, 2)` unless `weight_base` overrides it.
    pub fn prepare(inst: &WeightedCspInstance, build: BuildOptions, weight_base: Option<u64>) -> Result<Self, WcspError> {
        let tables = prepare(&inst.base, build)?;
        let base = weight_base.unwrap_or(inst.base.num_vars().max(2) as u64);
        let weight_digits = DigitTables::build(&inst.weights, &inst.target, base, inst.f_of_k)?;
        Ok(ProgramH {
            tables,
            weight_digits,
            k: inst.k(),
        })
    }

    pub fn tables(&self) -> &VerificationTables {
        &self.tables
    }

    pub fn weight_digits(&self) -> &DigitTables {
        &self.weight_digits
    }

    pub fn check(&self, b: &Assignment) -> Result<CandidateOutcome, WcspError> {
        let indices: Vec<usize> = b.pairs().iter().map(|(v, _)| v.index()).collect();
        let weight_ok = check_sum(&indices, &self.weight_digits, self.k)?.accepted;
        if !weight_ok {
            return Ok(CandidateOutcome {
                weight_ok,
                constraint_ok: false,
                stats: LookupStats::default(),
            });
        }
        let (constraint_ok, stats) = check_candidate(b, &self.tables)?;
        Ok(CandidateOutcome {
            weight_ok,
            constraint_ok,
            stats,
        })
    }
}

#[derive(Clone, Debug, Default)]
pub struct WcspReport {
    pub witness: Option<Assignment>,
    pub candidates_checked: u64,
    pub weight_failures: u64,
    pub stats: LookupStats,
}

/// First size-k support (enumeration order) passing both checks.
pub fn solve_wcsp_with(inst: &WeightedCspInstance, build: BuildOptions, max_candidates: u64) -> Result<WcspReport, WcspError> {
    let total = SupportCandidates::count_total(inst.base.num_vars(), 1, inst.k());
    if total > max_candidates as u128 {
        return Err(VerifyError::TooManyCandidates {
            count: total,
            cap: max_candidates,
        }
        .into());
    }
    let program = ProgramH::prepare(inst, build, None)?;
    let candidates: Vec<Assignment> = SupportCandidates::new(inst.base.num_vars(), vec![inst.one()], inst.k()).collect();
    let outcomes = candidates
        .par_iter()
        .map(|b| program.check(b))
        .collect::<Result<Vec<_>, _>>()?;
    let mut report = WcspReport::default();
    for (b, outcome) in candidates.into_iter().zip(outcomes) {
        report.candidates_checked += 1;
        report.stats += outcome.stats;
        if !outcome.weight_ok {
            report.weight_failures += 1;
        }
        if outcome.accepted() {
            report.witness = Some(b);
            break;
        }
    }
    Ok(report)
}

pub fn solve_wcsp(inst: &WeightedCspInstance) -> Result<Option<Assignment>, WcspError> {
    Ok(solve_wcsp_with(inst, BuildOptions::default(), DEFAULT_MAX_CANDIDATES)?.witness)
}

/// Exhaustive over all `2^|V|` assignments with exact weight sums.
pub fn oracle_wcsp(inst: &WeightedCspInstance, max_candidates: u64) -> Result<Option<Assignment>, WcspError> {
    let n = inst.base.num_vars();
    if n >= 64 || (1u128 << n) > max_candidates as u128 {
        return Err(VerifyError::TooManyCandidates {
            count: 1u128.checked_shl(n as u32).unwrap_or(u128::MAX),
            cap: max_candidates,
        }
        .into());
    }
    let one = inst.one();
    for mask in 0u64..(1u64 << n) {
        if mask.count_ones() as usize != inst.k() {
            continue;
        }
        let ones: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let weight: BigUint = ones.iter().map(|&i| &inst.weights[i]).sum();
        if weight != inst.target {
            continue;
        }
        let a = Assignment::from_pairs(ones.iter().map(|&i| (Var(i as u32), one))).expect("distinct");
        if inst.base.satisfies_all(&a) {
            return Ok(Some(a));
        }
    }
    Ok(None)
}
