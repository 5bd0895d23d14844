//! Table-build time and per-candidate check cost on the chain family as `n` grows.

use std::fmt;
use std::time::{Duration, Instant};

use crate::gen::chain_instance;
use crate::model::CspInstance;
use crate::tables::BuildOptions;
use crate::verifier::{check_candidate, prepare, LookupStats, SupportCandidates, VerifyError};

/// Candidates are all size-k supports over the first `PROBE_VARS` variables.
pub const PROBE_VARS: usize = 3;

#[derive(Clone, Debug)]
pub struct BenchRow {
    pub n: usize,
    pub k: usize,
    pub build: Duration,
    pub check: Duration,
    pub accepted: usize,
    /// One entry per probed candidate, in enumeration order.
    pub lookups: Vec<LookupStats>,
}

impl BenchRow {
    pub fn per_candidate(&self) -> Duration {
        self.check / self.lookups.len().max(1) as u32
    }

    pub fn max_lookups(&self) -> LookupStats {
        self.lookups.iter().fold(LookupStats::default(), |m, s| LookupStats {
            d_lookups: m.d_lookups.max(s.d_lookups),
            l_lookups: m.l_lookups.max(s.l_lookups),
            nodes_touched: m.nodes_touched.max(s.nodes_touched),
        })
    }

    pub fn total_lookups(&self) -> LookupStats {
        let mut total = LookupStats::default();
        for s in &self.lookups {
            total += *s;
        }
        total
    }
}

impl fmt::Display for BenchRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let max = self.max_lookups();
        write!(
            f,
            "n={} k={} build_us={} check_ns={} candidates={} accepted={} max_d={} max_l={} max_nodes={} total {}",
            self.n,
            self.k,
            self.build.as_micros(),
            self.per_candidate().as_nanos(),
            self.lookups.len(),
            self.accepted,
            max.d_lookups,
            max.l_lookups,
            max.nodes_touched,
            self.total_lookups()
        )
    }
}

pub fn bench_chain(n: usize, k: usize) -> Result<BenchRow, VerifyError> {
    let inst = CspInstance::from_document(chain_instance(n, k)).expect("chain instance is valid");
    let start = Instant::now();
    let tables = prepare(&inst, BuildOptions::default())?;
    let build = start.elapsed();
    let start = Instant::now();
    let mut lookups = Vec::new();
    let mut accepted = 0;
    for b in SupportCandidates::new(PROBE_VARS.min(n), inst.nonzero_values(), k) {
        let (ok, stats) = check_candidate(&b, &tables)?;
        accepted += ok as usize;
        lookups.push(stats);
    }
    Ok(BenchRow {
        n,
        k,
        build,
        check: start.elapsed(),
        accepted,
        lookups,
    })
}

pub fn bench(ns: &[usize], k: usize) -> Result<Vec<BenchRow>, VerifyError> {
    ns.iter().map(|&n| bench_chain(n, k)).collect()
}

/// Whether every row saw exactly the same per-candidate lookup counts.
pub fn lookups_independent_of_n(rows: &[BenchRow]) -> bool {
    rows.windows(2).all(|w| w[0].lookups == w[1].lookups)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_chain_profile_is_stable() {
        let rows = bench(&[5, 20], 2).unwrap();
        assert_eq!(rows[0].lookups.len(), 3);
        assert!(lookups_independent_of_n(&rows));
        assert!(rows.iter().all(|r| r.accepted == 1));
        assert!(rows[0].to_string().starts_with("n=5 k=2 "));
    }
}
