use std::fmt;

use super::isa::NramProgram;
use super::machine::{run, GuessResolver, MachineConfig, Outcome, RunError};

/// Concrete numbers standing in for the step, guess, register, value and tail bounds of one input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AuditBounds {
    pub step_bound: u64,
    pub nondet_bound: u64,
    pub register_bound: u64,
    pub value_bound: u64,
    pub tail_window: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditCheck {
    pub name: &'static str,
    pub pass: bool,
    pub observed: u64,
    pub bound: u64,
}

impl fmt::Display for AuditCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "CHECK {} {} observed={} bound={}",
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            self.observed,
            self.bound
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditReport {
    pub outcome: Outcome,
    pub runs: usize,
    pub checks: Vec<AuditCheck>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&AuditCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Runs the program with a step budget of `bounds.step_bound + 1` and
/// compares the worst case over all explored runs against every bound.
/// Exceeding a bound is a failed check, never an error.
pub fn audit(
    program: &NramProgram,
    init: &[(usize, u64)],
    resolver: &GuessResolver,
    bounds: &AuditBounds,
    config: &MachineConfig,
) -> Result<AuditReport, RunError> {
    let config = MachineConfig {
        budget: bounds.step_bound.saturating_add(1),
        record_trace: false,
        ..*config
    };
    let report = run(program, init, resolver, &config)?;
    let worst = |f: &dyn Fn(&super::machine::ResourceAudit) -> u64| report.runs.iter().map(f).max().unwrap_or(0);
    let check = |name, observed: u64, bound: u64| AuditCheck {
        name,
        pass: observed <= bound,
        observed,
        bound,
    };
    let checks = vec![
        check("steps", worst(&|a| a.total_steps), bounds.step_bound),
        check("nondet", worst(&|a| a.nondet_count()), bounds.nondet_bound),
        check("registers", worst(&|a| a.max_register_index as u64), bounds.register_bound),
        check("values", worst(&|a| a.max_value_stored), bounds.value_bound),
        check("tail", worst(&|a| a.tail_depth()), bounds.tail_window),
    ];
    Ok(AuditReport {
        outcome: report.outcome,
        runs: report.runs.len(),
        checks,
    })
}
