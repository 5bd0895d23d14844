//! Seeded random instances for tests, the self-test suite and benchmarks.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::hitting::{HittingDocument, HypergraphDocument};
use crate::model::{ConstraintDocument, InstanceDocument, RelationDocument};
use crate::subset_sum::SubsetSumInstance;

/// Tuple spaces larger than this are sampled instead of enumerated.
const ENUMERATION_LIMIT: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub vars: usize,
    pub domain: usize,
    pub constraints: usize,
    pub arity_cap: usize,
    /// Probability that any one tuple is listed.
    pub density: f64,
    pub k: usize,
    pub seed: u64,
    pub weights: bool,
    pub target: bool,
    pub max_weight: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            vars: 5,
            domain: 2,
            constraints: 3,
            arity_cap: 2,
            density: 0.5,
            k: 2,
            seed: 0,
            weights: false,
            target: false,
            max_weight: 20,
        }
    }
}

impl GeneratorConfig {
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    pub fn generate(&self) -> InstanceDocument {
        random_instance(self, &mut self.rng())
    }
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Variables `x0..`, domain `0..` with free value `0`, relations `R0..`.
pub fn random_instance<R: Rng>(cfg: &GeneratorConfig, rng: &mut R) -> InstanceDocument {
    let domain_size = cfg.domain.max(1);
    let domain = names("", domain_size);
    let variables = names("x", cfg.vars);
    let mut relations = BTreeMap::new();
    let mut constraints = Vec::new();
    let cap = cfg.arity_cap.min(cfg.vars);
    if cap > 0 {
        for c in 0..cfg.constraints {
            let arity = rng.gen_range(1..=cap);
            let mut scope: Vec<usize> = (0..cfg.vars).collect();
            scope.shuffle(rng);
            scope.truncate(arity);
            let name = format!("R{c}");
            relations.insert(
                name.clone(),
                RelationDocument {
                    arity,
                    tuples: random_tuples(&domain, arity, cfg.density, rng),
                },
            );
            constraints.push(ConstraintDocument {
                relation: name,
                vars: scope.iter().map(|&v| variables[v].clone()).collect(),
            });
        }
    }
    let weight_values: Vec<u64> = if cfg.weights {
        (0..cfg.vars).map(|_| rng.gen_range(0..=cfg.max_weight)).collect()
    } else {
        Vec::new()
    };
    let target = cfg.target.then(|| {
        if !weight_values.is_empty() && cfg.k <= cfg.vars && rng.gen_bool(0.5) {
            let mut pick: Vec<usize> = (0..cfg.vars).collect();
            pick.shuffle(rng);
            pick[..cfg.k].iter().map(|&i| weight_values[i]).sum::<u64>()
        } else {
            rng.gen_range(0..=cfg.max_weight * cfg.k as u64)
        }
        .to_string()
    });
    InstanceDocument {
        domain,
        free_value: "0".into(),
        variables: variables.clone(),
        relations,
        constraints,
        k: cfg.k,
        weights: cfg.weights.then(|| {
            variables
                .iter()
                .zip(&weight_values)
                .map(|(v, w)| (v.clone(), w.to_string()))
                .collect()
        }),
        target,
        f_of_k: None,
    }
}

fn random_tuples<R: Rng>(domain: &[String], arity: usize, density: f64, rng: &mut R) -> Vec<Vec<String>> {
    let d = domain.len();
    let total = d.checked_pow(arity as u32).unwrap_or(usize::MAX);
    if total <= ENUMERATION_LIMIT {
        let mut out = Vec::new();
        for mut code in 0..total {
            let keep = rng.gen_bool(density.clamp(0.0, 1.0));
            let mut t = vec![String::new(); arity];
            for slot in t.iter_mut().rev() {
                *slot = domain[code % d].clone();
                code /= d;
            }
            if keep {
                out.push(t);
            }
        }
        out
    } else {
        let count = (density.clamp(0.0, 1.0) * ENUMERATION_LIMIT as f64) as usize;
        let mut out: Vec<Vec<String>> = (0..count)
            .map(|_| (0..arity).map(|_| domain[rng.gen_range(0..d)].clone()).collect())
            .collect();
        out.sort();
        out.dedup();
        out
    }
}

/// Boolean chain `… → v1 → v0` with one implication constraint per
/// consecutive pair, so a prefix `v0..v(k-1)` is the typical witness; used
/// to watch lookup counts while `n` grows.
pub fn chain_instance(n: usize, k: usize) -> InstanceDocument {
    let variables = names("v", n);
    let implies = |a: &str, b: &str| vec![a.to_string(), b.to_string()];
    let mut relations = BTreeMap::new();
    relations.insert(
        "Imp".to_string(),
        RelationDocument {
            arity: 2,
            tuples: vec![implies("0", "0"), implies("1", "0"), implies("1", "1")],
        },
    );
    let constraints = variables
        .windows(2)
        .map(|w| ConstraintDocument {
            relation: "Imp".into(),
            vars: w.to_vec(),
        })
        .collect();
    InstanceDocument {
        domain: vec!["0".into(), "1".into()],
        free_value: "0".into(),
        variables,
        relations,
        constraints,
        k,
        weights: None,
        target: None,
        f_of_k: None,
    }
}

/// `m` hypergraphs over a ground set `g0..`, each on a random nonempty
/// vertex set with a random set of edges.
pub fn random_hitting<R: Rng>(ground: usize, m: usize, k: usize, rng: &mut R) -> HittingDocument {
    let ground_names = names("g", ground);
    let mut hypergraphs = Vec::with_capacity(m);
    if ground > 0 {
        for _ in 0..m {
            let size = rng.gen_range(1..=ground.min(4));
            let mut verts: Vec<usize> = (0..ground).collect();
            verts.shuffle(rng);
            verts.truncate(size);
            let edge_count = rng.gen_range(0..=(1usize << size).min(6));
            let edges = (0..edge_count)
                .map(|_| {
                    verts
                        .iter()
                        .filter(|_| rng.gen_bool(0.5))
                        .map(|&v| ground_names[v].clone())
                        .collect()
                })
                .collect();
            hypergraphs.push(HypergraphDocument {
                vertices: verts.iter().map(|&v| ground_names[v].clone()).collect(),
                edges,
            });
        }
    }
    HittingDocument {
        ground: ground_names,
        hypergraphs,
        k,
    }
}

/// Values in `[0, n^k]`; the target is a true k-sum half of the time.
pub fn random_subset_sum<R: Rng>(n: usize, k: usize, rng: &mut R) -> SubsetSumInstance {
    let cap = (n.max(2) as u64).saturating_pow(k as u32);
    let values: Vec<u64> = (0..n).map(|_| rng.gen_range(0..=cap)).collect();
    let target = if k <= n && rng.gen_bool(0.5) {
        let mut pick: Vec<usize> = (0..n).collect();
        pick.shuffle(rng);
        pick[..k].iter().map(|&i| values[i]).sum::<u64>()
    } else {
        rng.gen_range(0..=cap.saturating_mul(k as u64))
    };
    SubsetSumInstance::new(values.into_iter().map(BigUint::from).collect(), BigUint::from(target), k, None)
        .expect("generated subset-sum instance is valid")
}
