//! The property suite behind `w1 selftest`: every law the library relies on,
//! checked on seeded random inputs against independent evaluations.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bench::{bench, lookups_independent_of_n};
use crate::gen::{random_hitting, random_instance, random_subset_sum, GeneratorConfig};
use crate::hitting::{oracle_hitting, solve_hitting, HypergraphFamilyInstance};
use crate::model::{Assignment, CspInstance, Val, Var};
use crate::nram::{audit, subset_sum_bounds, subset_sum_preload, subset_sum_program, GuessResolver, MachineConfig, Outcome};
use crate::poset::{accumulate, cover_frontier, invert, maximal_elements, FinitePoset, IntegerWeighting, SubsetPosetSpec};
use crate::subset_sum::{check_sum, solve as solve_subset_sum, DEFAULT_MAX_SUBSETS};
use crate::tables::BuildOptions;
use crate::verifier::{check_candidate, oracle_solve, prepare, solve, SupportCandidates, DEFAULT_MAX_CANDIDATES};
use crate::weighted::{oracle_wcsp, solve_wcsp, ProgramH, WeightedCspInstance};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SelftestConfig {
    pub seed: u64,
    /// Multiplies every case count; 1.0 is the full suite.
    pub scale: f64,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        SelftestConfig { seed: 0, scale: 1.0 }
    }
}

impl SelftestConfig {
    fn cases(&self, full: usize) -> usize {
        ((full as f64 * self.scale).ceil() as usize).max(1)
    }

    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropertyOutcome {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    pub first_failure: Option<String>,
}

impl PropertyOutcome {
    fn new(name: &'static str) -> Self {
        PropertyOutcome {
            name,
            cases: 0,
            failures: 0,
            first_failure: None,
        }
    }

    fn record(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(detail());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

impl fmt::Display for PropertyOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {} cases={} failures={}", self.name, self.cases, self.failures)?;
        if let Some(detail) = &self.first_failure {
            write!(f, " first: {detail}")?;
        }
        Ok(())
    }
}

/// The configuration for the i-th instance of the small random family:
/// at most 6 variables, 3 values, 4 constraints of arity at most 3, k ≤ 3.
pub fn small_family_config<R: Rng>(rng: &mut R) -> GeneratorConfig {
    GeneratorConfig {
        vars: rng.gen_range(0..=6),
        domain: rng.gen_range(1..=3),
        constraints: rng.gen_range(0..=4),
        arity_cap: 3,
        density: rng.gen_range(0.2..0.9),
        k: rng.gen_range(0..=3),
        seed: rng.gen(),
        ..GeneratorConfig::default()
    }
}

fn small_instance<R: Rng>(rng: &mut R) -> CspInstance {
    let cfg = small_family_config(rng);
    CspInstance::from_document(random_instance(&cfg, &mut cfg.rng())).expect("generated instance is valid")
}

pub fn oracle_equivalence(cfg: &SelftestConfig) -> PropertyOutcome {
    let mut out = PropertyOutcome::new("oracle-equivalence");
    let mut rng = cfg.rng(1);
    for _ in 0..cfg.cases(1000) {
        let inst = small_instance(&mut rng);
        let fast = solve(&inst).map(|w| w.is_some());
        let slow = oracle_solve(&inst, DEFAULT_MAX_CANDIDATES).map(|w| w.is_some());
        let ok = matches!((&fast, &slow), (Ok(a), Ok(b)) if a == b);
        out.record(ok, || format!("solve={fast:?} oracle={slow:?} on {}", inst.to_document().to_json().trim()));
    }
    out
}

pub fn unit_sum_law(cfg: &SelftestConfig) -> PropertyOutcome {
    let mut out = PropertyOutcome::new("unit-sum-law");
    let mut rng = cfg.rng(2);
    for _ in 0..cfg.cases(500) {
        let inst = small_instance(&mut rng);
        let tables = match prepare(&inst, BuildOptions::default()) {
            Ok(t) => t,
            Err(e) => {
                out.record(false, || e.to_string());
                continue;
            }
        };
        for block in tables.blocks() {
            for ww in &block.witnesses {
                for u in &ww.witnesses {
                    let sum: i64 = ww
                        .witnesses
                        .iter()
                        .zip(&ww.weights)
                        .filter(|(w, _)| w.is_subset_of(u))
                        .map(|(_, f)| *f)
                        .sum();
                    out.record(sum == 1, || format!("block {:?} T={:?} U={:?} sum={sum}", block.vars, ww.frontier, u));
                }
            }
        }
    }
    out
}

/// A random family of subsets of a 4-element set containing `∅`, as bitmasks.
pub fn random_subset_poset<R: Rng>(rng: &mut R, max_len: usize) -> FinitePoset<u8> {
    let mut masks: Vec<u8> = (1..16).collect();
    masks.shuffle(rng);
    masks.truncate(rng.gen_range(0..max_len));
    masks.push(0);
    FinitePoset::new(masks, |a, b| a & b == *a)
}

pub fn mobius_round_trip(cfg: &SelftestConfig) -> PropertyOutcome {
    let mut out = PropertyOutcome::new("mobius-round-trip");
    let mut rng = cfg.rng(3);
    for _ in 0..cfg.cases(1000) {
        let poset = random_subset_poset(&mut rng, 12);
        let f = IntegerWeighting((0..poset.len()).map(|_| BigInt::from(rng.gen_range(-50i64..=50))).collect());
        let back = accumulate(&poset, &f).and_then(|g| invert(&poset, &g));
        let ok = back.as_ref() == Ok(&f);
        out.record(ok, || format!("elements={:?} f={:?} got={back:?}", poset.elements(), f.0));
    }
    out
}

pub fn cover_criterion(cfg: &SelftestConfig) -> PropertyOutcome {
    let mut out = PropertyOutcome::new("cover-frontier");
    let mut rng = cfg.rng(4);
    for _ in 0..cfg.cases(500) {
        // ground sets of at most 4 (variable, value) pairs
        let (n_vars, n_vals) = *[(1, 1), (1, 2), (1, 3), (1, 4), (2, 1), (2, 2), (3, 1), (4, 1)].choose(&mut rng).unwrap();
        let ambient = SubsetPosetSpec {
            vars: (0..n_vars).map(Var).collect(),
            values: (1..=n_vals).map(Val).collect(),
        };
        let all = ambient.all_elements();
        let q: Vec<Assignment> = all.iter().filter(|_| rng.gen_bool(0.4)).cloned().collect();
        let frontier = cover_frontier(&q, &ambient, false).expect("q inside ambient");
        for y in &all {
            let below: Vec<Assignment> = q.iter().chain(&frontier).filter(|w| w.is_subset_of(y)).cloned().collect();
            let maxes = maximal_elements(&below, |a, b| a.is_subset_of(b));
            let rhs = maxes.iter().all(|m| frontier.contains(m));
            out.record(!q.contains(y) == rhs, || format!("Q={q:?} y={y:?}"));
        }
    }
    out
}

pub fn lookup_bounds(cfg: &SelftestConfig) -> PropertyOutcome {
    let mut out = PropertyOutcome::new("lookup-bounds");
    let mut rng = cfg.rng(5);
    for _ in 0..cfg.cases(300) {
        let inst = small_instance(&mut rng);
        let Ok(tables) = prepare(&inst, BuildOptions::default()) else {
            out.record(false, || "table build failed".into());
            continue;
        };
        let k = inst.k() as u32;
        for b in SupportCandidates::new(inst.num_vars(), inst.nonzero_values(), inst.k()) {
            let (_, s) = check_candidate(&b, &tables).expect("size k");
            let ok = s.d_lookups <= 1 << k
                && s.l_lookups <= 1 << (2 * k)
                && s.nodes_touched <= (2 * k as u64 + 2) * (s.d_lookups + s.l_lookups);
            out.record(ok, || format!("k={k} B={b:?} {s}"));
        }
    }
    let rows = bench(&[10, 50, 100, 500], 2);
    let ok = rows.as_ref().map(|r| lookups_independent_of_n(r)).unwrap_or(false);
    out.record(ok, || "per-candidate lookups differ across n on the chain family".into());
    out
}

pub fn size_bounds(cfg: &SelftestConfig) -> PropertyOutcome {
    let mut out = PropertyOutcome::new("size-bounds");
    let mut rng = cfg.rng(6);
    for _ in 0..cfg.cases(500) {
        let inst = small_instance(&mut rng);
        let Ok(tables) = prepare(&inst, BuildOptions::default()) else {
            out.record(false, || "table build failed".into());
            continue;
        };
        let d = inst.domain_size();
        for block in tables.blocks() {
            let bound = block.vars.len() * d * (block.sat_count + 1) + 1;
            let ok = block.frontier.len() <= bound && block.sat_count <= block.listed_tuples;
            out.record(ok, || {
                format!(
                    "block {:?}: frontier={} bound={} sat={} listed={}",
                    block.vars,
                    block.frontier.len(),
                    bound,
                    block.sat_count,
                    block.listed_tuples
                )
            });
        }
    }
    out
}

pub fn subset_sum_equivalence(cfg: &SelftestConfig) -> PropertyOutcome {
    let mut out = PropertyOutcome::new("subset-sum-equivalence");
    let mut rng = cfg.rng(7);
    for _ in 0..cfg.cases(10_000) {
        let n = rng.gen_range(1..=20);
        let k = rng.gen_range(0..=4usize.min(n));
        let inst = random_subset_sum(n, k, &mut rng);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        idx.truncate(k);
        let trace = check_sum(&idx, &inst.tables(), k).expect("valid subset");
        let exact: BigUint = idx.iter().map(|&i| &inst.values()[i]).sum();
        let ok = trace.accepted == (&exact == inst.target()) && trace.max_carry() <= k as u64 + 1;
        out.record(ok, || format!("values={:?} target={} B={idx:?} trace={trace:?}", inst.values(), inst.target()));
    }
    out
}

pub fn wcsp_equivalence(cfg: &SelftestConfig) -> PropertyOutcome {
    let mut out = PropertyOutcome::new("wcsp-equivalence");
    let mut rng = cfg.rng(8);
    for _ in 0..cfg.cases(1000) {
        let gen = GeneratorConfig {
            vars: rng.gen_range(0..=7),
            domain: 2,
            constraints: rng.gen_range(0..=4),
            arity_cap: 3,
            density: rng.gen_range(0.3..0.9),
            k: rng.gen_range(0..=3),
            seed: rng.gen(),
            weights: true,
            target: true,
            max_weight: rng.gen_range(1..=30),
        };
        let base = CspInstance::from_document(gen.generate()).expect("valid");
        let inst = WeightedCspInstance::from_instance(base).expect("weighted");
        let fast = solve_wcsp(&inst).map(|w| w.is_some());
        let slow = oracle_wcsp(&inst, DEFAULT_MAX_CANDIDATES).map(|w| w.is_some());
        let ok = matches!((&fast, &slow), (Ok(a), Ok(b)) if a == b);
        out.record(ok, || format!("solve={fast:?} oracle={slow:?} seed={}", gen.seed));
        let program = ProgramH::prepare(&inst, BuildOptions::default(), None).expect("prepared");
        for b in SupportCandidates::new(inst.base().num_vars(), vec![inst.one()], inst.k()) {
            let c = program.check(&b).expect("size k");
            let ok = c.weight_ok || c.stats == Default::default();
            out.record(ok, || format!("weight failure did lookups: {}", c.stats));
        }
    }
    out
}

pub fn hitting_equivalence(cfg: &SelftestConfig) -> PropertyOutcome {
    let mut out = PropertyOutcome::new("hitting-equivalence");
    let mut rng = cfg.rng(9);
    for _ in 0..cfg.cases(500) {
        let ground = rng.gen_range(1..=7);
        let doc = random_hitting(ground, rng.gen_range(0..=4), rng.gen_range(0..=3), &mut rng);
        let h = HypergraphFamilyInstance::from_document(doc).expect("valid");
        let fast = solve_hitting(&h).map(|w| w.is_some());
        let slow = oracle_hitting(&h).is_some();
        out.record(matches!(fast, Ok(d) if d == slow), || format!("solve={fast:?} oracle={slow} on {h:?}"));
    }
    out
}

pub fn nram_equivalence(cfg: &SelftestConfig) -> PropertyOutcome {
    let mut out = PropertyOutcome::new("nram-audit");
    let mut rng = cfg.rng(10);
    let machine = MachineConfig {
        max_runs: 1 << 20,
        ..MachineConfig::default()
    };
    for _ in 0..cfg.cases(300) {
        let n = rng.gen_range(1..=12);
        let k = rng.gen_range(0..=3);
        let inst = random_subset_sum(n, k, &mut rng);
        let tables = inst.tables();
        let (_, init) = subset_sum_preload(&tables, k);
        let bounds = subset_sum_bounds(&tables, k);
        let expected = solve_subset_sum(&inst, DEFAULT_MAX_SUBSETS).expect("small").is_some();
        match audit(subset_sum_program(), &init, &GuessResolver::Exhaustive, &bounds, &machine) {
            Ok(report) => {
                let ok = (report.outcome == Outcome::Accept) == expected && report.passed();
                out.record(ok, || format!("values={:?} target={} k={k} expected={expected}\n{report}", inst.values(), inst.target()));
            }
            Err(e) => out.record(false, || e.to_string()),
        }
    }
    out
}

/// The instance `R(x) = {("1")}` over `{x, y}` with `k = 1`.
pub fn patch_regression_instance() -> CspInstance {
    crate::model::parse_instance(
        r#"{"domain": ["0","1"], "free_value": "0", "variables": ["x","y"],
            "relations": {"R": {"arity": 1, "tuples": [["1"]]}},
            "constraints": [{"relation": "R", "vars": ["x"]}], "k": 1}"#,
    )
    .expect("valid")
}

pub fn patch_regression(_cfg: &SelftestConfig) -> PropertyOutcome {
    let mut out = PropertyOutcome::new("empty-frontier-patch");
    let inst = patch_regression_instance();
    let y1 = inst.parse_assignment("y=1").expect("valid");
    let x1 = inst.parse_assignment("x=1").expect("valid");
    let patched = prepare(&inst, BuildOptions::default()).expect("tables");
    let literal = prepare(&inst, BuildOptions::literal()).expect("tables");
    let accepts = |t, b| check_candidate(b, t).map(|r| r.0).ok();
    out.record(accepts(&patched, &y1) == Some(false), || "patched pipeline accepts y=1".into());
    out.record(accepts(&patched, &x1) == Some(true), || "patched pipeline rejects x=1".into());
    out.record(accepts(&literal, &y1) == Some(true), || "literal pipeline no longer accepts y=1".into());
    out
}

pub fn generation_determinism(cfg: &SelftestConfig) -> PropertyOutcome {
    let mut out = PropertyOutcome::new("generation-determinism");
    let mut rng = cfg.rng(11);
    for _ in 0..cfg.cases(200) {
        let gen = small_family_config(&mut rng);
        let (a, b) = (gen.generate(), gen.generate());
        let valid = CspInstance::from_document(a.clone()).is_ok();
        out.record(valid && a.to_json() == b.to_json(), || format!("{gen:?}"));
    }
    out
}

pub type Property = fn(&SelftestConfig) -> PropertyOutcome;

pub const PROPERTIES: &[Property] = &[
    oracle_equivalence,
    unit_sum_law,
    mobius_round_trip,
    cover_criterion,
    lookup_bounds,
    size_bounds,
    subset_sum_equivalence,
    wcsp_equivalence,
    hitting_equivalence,
    nram_equivalence,
    patch_regression,
    generation_determinism,
];

pub fn run_all(cfg: &SelftestConfig) -> Vec<PropertyOutcome> {
    PROPERTIES.iter().map(|p| p(cfg)).collect()
}
