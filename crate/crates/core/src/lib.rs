//! Parameterized verification for uniform constraint satisfaction.
//!
//! An instance is normalized into one satisfying set per variable set, the
//! satisfying sets are compiled into two tries, and a size-k candidate is then
//! checked with at most `2^k` d-lookups and `4^k` l-lookups, independent of
//! the instance size. The same shape is provided for k-term subset sum with a
//! base-n carry check, for the weighted combination of both, and as a
//! nondeterministic RAM interpreter that audits step, guess and register use.

pub mod model;
pub mod normalize;
pub mod poset;
pub mod tables;
pub mod verifier;
pub mod subset_sum;
pub mod weighted;
pub mod hitting;
pub mod nram;
pub mod gen;
pub mod bench;
pub mod selftest;

pub use model::{parse_instance, restrict, Assignment, CspInstance, InstanceDocument, InstanceError, Val, Var};
pub use normalize::{normalize, NormalizedInstance, SatSet};
pub use tables::{build_tables, BuildOptions, VerificationTables};
pub use verifier::{check_candidate, oracle_solve, solve, LookupStats};
