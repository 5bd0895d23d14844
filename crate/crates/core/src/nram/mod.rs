//! Nondeterministic RAM: assembler, interpreter with pluggable guess
//! resolution, resource auditing, and a bundled subset-sum verifier program.

mod audit;
mod bundled;
mod isa;
mod machine;

pub use audit::{audit, AuditBounds, AuditCheck, AuditReport};
pub use bundled::{subset_sum_bounds, subset_sum_preload, subset_sum_program, SubsetSumLayout, SUBSET_SUM_ASM};
pub use isa::{assemble, AssembleError, Instr, NramProgram};
pub use machine::{
    run, DivRounding, GuessResolver, MachineConfig, Outcome, ResourceAudit, RunError, RunReport, TraceStep,
    DEFAULT_BUDGET,
};
