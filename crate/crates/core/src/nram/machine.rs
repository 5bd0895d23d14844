use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::isa::{Instr, NramProgram};

pub const DEFAULT_BUDGET: u64 = 1_000_000;

/// Highest register index a run may touch.
const REGISTER_LIMIT: usize = 1 << 24;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DivRounding {
    #[default]
    Floor,
    HalfUp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MachineConfig {
    /// Step cap per run (per branch under exhaustive resolution).
    pub budget: u64,
    /// Cap on explored branches under exhaustive resolution.
    pub max_runs: u64,
    pub rounding: DivRounding,
    pub record_trace: bool,
}

impl Default for MachineConfig {
    fn default() -> Self {
        MachineConfig {
            budget: DEFAULT_BUDGET,
            max_runs: 10_000_000,
            rounding: DivRounding::Floor,
            record_trace: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GuessResolver {
    /// Guesses are read from the tape in order.
    Tape(Vec<u64>),
    /// Uniform in `[0, acc]` from a seeded generator.
    Random(u64),
    /// Every guess value is explored; accept iff some branch accepts.
    Exhaustive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Accept,
    Reject,
    OutOfBudget,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Outcome::Accept => "accept",
            Outcome::Reject => "reject",
            Outcome::OutOfBudget => "out-of-budget",
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RunError {
    #[error("step {step}: guess tape exhausted")]
    TapeExhausted { step: u64 },
    #[error("step {step}: guess {guess} outside [0, {bound}]")]
    GuessOutOfRange { step: u64, guess: u64, bound: u64 },
    #[error("step {step}: addition overflowed")]
    Overflow { step: u64 },
    #[error("step {step}: register {index} beyond the machine limit")]
    RegisterLimit { step: u64, index: u64 },
    #[error("exhaustive resolution exceeded {0} branches")]
    TooManyRuns(u64),
}

/// Resource use of one run. Steps are numbered from 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResourceAudit {
    pub total_steps: u64,
    pub nondet_steps: Vec<u64>,
    pub max_register_index: usize,
    pub max_value_stored: u64,
    pub outcome: Outcome,
}

impl ResourceAudit {
    pub fn nondet_count(&self) -> u64 {
        self.nondet_steps.len() as u64
    }

    /// Length of the run suffix that starts at the first guess; 0 without guesses.
    pub fn tail_depth(&self) -> u64 {
        self.nondet_steps
            .first()
            .map_or(0, |&first| self.total_steps - first + 1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub step: u64,
    pub pc: usize,
    pub instr: Instr,
    pub guess: Option<u64>,
    /// Registers read or written by the step, accumulator included.
    pub touched: Vec<usize>,
    /// Values placed in registers by the step.
    pub stored: Vec<u64>,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub outcome: Outcome,
    /// One audit per explored run; a single entry unless resolution is exhaustive.
    pub runs: Vec<ResourceAudit>,
    /// Recorded for tape and random resolution when requested.
    pub trace: Option<Vec<TraceStep>>,
}

impl RunReport {
    /// The accepting run if there is one, else the first run.
    pub fn primary(&self) -> &ResourceAudit {
        self.runs
            .iter()
            .find(|r| r.outcome == Outcome::Accept)
            .unwrap_or(&self.runs[0])
    }
}

#[derive(Clone, Debug)]
struct State {
    pc: usize,
    regs: Vec<u64>,
    audit: ResourceAudit,
}

impl State {
    fn new(init: &[(usize, u64)]) -> Result<Self, RunError> {
        let mut s = State {
            pc: 0,
            regs: vec![0; 1],
            audit: ResourceAudit {
                total_steps: 0,
                nondet_steps: Vec::new(),
                max_register_index: 0,
                max_value_stored: 0,
                outcome: Outcome::Reject,
            },
        };
        for &(r, v) in init {
            s.write(r as u64, v, 0)?;
        }
        Ok(s)
    }

    fn touch(&mut self, index: u64, step: u64) -> Result<usize, RunError> {
        if index as usize >= REGISTER_LIMIT || index > usize::MAX as u64 {
            return Err(RunError::RegisterLimit { step, index });
        }
        let i = index as usize;
        if i >= self.regs.len() {
            self.regs.resize(i + 1, 0);
        }
        self.audit.max_register_index = self.audit.max_register_index.max(i);
        Ok(i)
    }

    fn read(&mut self, index: u64, step: u64) -> Result<u64, RunError> {
        let i = self.touch(index, step)?;
        Ok(self.regs[i])
    }

    fn write(&mut self, index: u64, value: u64, step: u64) -> Result<(), RunError> {
        let i = self.touch(index, step)?;
        self.regs[i] = value;
        self.audit.max_value_stored = self.audit.max_value_stored.max(value);
        Ok(())
    }
}

enum Step {
    Continue,
    Halt(Outcome),
    /// A GUESS needs resolving; the accumulator holds the bound.
    Guess(u64),
}

fn exec(p: &NramProgram, s: &mut State, config: &MachineConfig, trace: Option<&mut Vec<TraceStep>>) -> Result<Step, RunError> {
    let Some(&instr) = p.instrs().get(s.pc) else {
        return Ok(Step::Halt(Outcome::Reject));
    };
    if instr == Instr::Guess {
        // counted when the guess is applied
        let acc = s.regs[0];
        return Ok(Step::Guess(acc));
    }
    let step = s.audit.total_steps + 1;
    s.audit.total_steps = step;
    let pc = s.pc;
    let mut touched = Vec::new();
    let mut stored = Vec::new();
    let mut next = pc + 1;
    let mut halt = None;
    macro_rules! rd {
        ($i:expr) => {{
            let i = $i as u64;
            touched.push(i as usize);
            s.read(i, step)?
        }};
    }
    macro_rules! wr {
        ($i:expr, $v:expr) => {{
            let (i, v) = ($i as u64, $v);
            touched.push(i as usize);
            stored.push(v);
            s.write(i, v, step)?
        }};
    }
    match instr {
        Instr::LoadI(c) => wr!(0, c),
        Instr::Load(r) => {
            let v = rd!(r);
            wr!(0, v)
        }
        Instr::Store(r) => {
            let v = rd!(0);
            wr!(r, v)
        }
        Instr::LoadInd(r) => {
            let a = rd!(r);
            let v = rd!(a);
            wr!(0, v)
        }
        Instr::StoreInd(r) => {
            let a = rd!(r);
            let v = rd!(0);
            wr!(a, v)
        }
        Instr::Add(r) => {
            let x = rd!(0);
            let y = rd!(r);
            wr!(0, x.checked_add(y).ok_or(RunError::Overflow { step })?)
        }
        Instr::Sub(r) => {
            let x = rd!(0);
            let y = rd!(r);
            wr!(0, x.saturating_sub(y))
        }
        Instr::Div2 => {
            let x = rd!(0);
            let v = match config.rounding {
                DivRounding::Floor => x / 2,
                DivRounding::HalfUp => x / 2 + x % 2,
            };
            wr!(0, v)
        }
        Instr::Jump(l) => next = l,
        Instr::JZero(l) => {
            if rd!(0) == 0 {
                next = l;
            }
        }
        Instr::Accept => halt = Some(Outcome::Accept),
        Instr::Reject => halt = Some(Outcome::Reject),
        Instr::Guess => unreachable!(),
    }
    s.pc = next;
    if let Some(trace) = trace {
        trace.push(TraceStep {
            step,
            pc,
            instr,
            guess: None,
            touched,
            stored,
        });
    }
    Ok(match halt {
        Some(o) => Step::Halt(o),
        None => Step::Continue,
    })
}

fn apply_guess(s: &mut State, guess: u64, trace: Option<&mut Vec<TraceStep>>) -> Result<(), RunError> {
    let step = s.audit.total_steps + 1;
    let bound = s.regs[0];
    if guess > bound {
        return Err(RunError::GuessOutOfRange { step, guess, bound });
    }
    s.audit.total_steps = step;
    s.audit.nondet_steps.push(step);
    s.write(0, guess, step)?;
    if let Some(trace) = trace {
        trace.push(TraceStep {
            step,
            pc: s.pc,
            instr: Instr::Guess,
            guess: Some(guess),
            touched: vec![0],
            stored: vec![guess],
        });
    }
    s.pc += 1;
    Ok(())
}

/// Runs `program` from registers preloaded with `init`.
pub fn run(
    program: &NramProgram,
    init: &[(usize, u64)],
    resolver: &GuessResolver,
    config: &MachineConfig,
) -> Result<RunReport, RunError> {
    let start = State::new(init)?;
    match resolver {
        GuessResolver::Exhaustive => run_exhaustive(program, start, config),
        GuessResolver::Tape(tape) => {
            let mut tape = tape.iter().copied();
            run_linear(program, start, config, move |step, _| tape.next().ok_or(RunError::TapeExhausted { step }))
        }
        GuessResolver::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            run_linear(program, start, config, move |_, bound| Ok(rng.gen_range(0..=bound)))
        }
    }
}

fn run_linear(
    program: &NramProgram,
    mut s: State,
    config: &MachineConfig,
    mut next_guess: impl FnMut(u64, u64) -> Result<u64, RunError>,
) -> Result<RunReport, RunError> {
    let mut trace = config.record_trace.then(Vec::new);
    let outcome = loop {
        if s.audit.total_steps >= config.budget {
            break Outcome::OutOfBudget;
        }
        match exec(program, &mut s, config, trace.as_mut())? {
            Step::Continue => {}
            Step::Halt(o) => break o,
            Step::Guess(bound) => {
                let g = next_guess(s.audit.total_steps + 1, bound)?;
                apply_guess(&mut s, g, trace.as_mut())?;
            }
        }
    };
    s.audit.outcome = outcome;
    Ok(RunReport {
        outcome,
        runs: vec![s.audit],
        trace,
    })
}

fn run_exhaustive(program: &NramProgram, start: State, config: &MachineConfig) -> Result<RunReport, RunError> {
    let mut stack = vec![start];
    let mut runs = Vec::new();
    while let Some(mut s) = stack.pop() {
        let outcome = loop {
            if s.audit.total_steps >= config.budget {
                break Outcome::OutOfBudget;
            }
            match exec(program, &mut s, config, None)? {
                Step::Continue => {}
                Step::Halt(o) => break o,
                Step::Guess(bound) => {
                    // push larger guesses first so branches are explored in ascending guess order
                    for g in (1..=bound).rev() {
                        let mut fork = s.clone();
                        apply_guess(&mut fork, g, None)?;
                        stack.push(fork);
                    }
                    apply_guess(&mut s, 0, None)?;
                }
            }
        };
        s.audit.outcome = outcome;
        runs.push(s.audit);
        if runs.len() as u64 + stack.len() as u64 > config.max_runs {
            return Err(RunError::TooManyRuns(config.max_runs));
        }
    }
    let outcome = if runs.iter().any(|r| r.outcome == Outcome::Accept) {
        Outcome::Accept
    } else if runs.iter().any(|r| r.outcome == Outcome::OutOfBudget) {
        Outcome::OutOfBudget
    } else {
        Outcome::Reject
    };
    Ok(RunReport {
        outcome,
        runs,
        trace: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nram::assemble;

    fn go(src: &str, init: &[(usize, u64)], resolver: GuessResolver) -> RunReport {
        let p = assemble(src).unwrap();
        run(&p, init, &resolver, &MachineConfig::default()).unwrap()
    }

    fn acc_after(src: &str, init: &[(usize, u64)], tape: Vec<u64>) -> u64 {
        // store the accumulator in r99 and accept so the value is observable
        let p = assemble(&format!("{src}\nSTORE 99\nACCEPT")).unwrap();
        let cfg = MachineConfig {
            record_trace: true,
            ..MachineConfig::default()
        };
        let report = run(&p, init, &GuessResolver::Tape(tape), &cfg).unwrap();
        let trace = report.trace.unwrap();
        let last_store = trace.iter().rev().find(|t| matches!(t.instr, Instr::Store(99))).unwrap();
        last_store.stored[0]
    }

    #[test]
    fn guess_from_tape() {
        assert_eq!(acc_after("LOADI 5\nGUESS", &[], vec![3]), 3);
        let r = go("LOADI 5\nGUESS\nACCEPT", &[], GuessResolver::Tape(vec![3]));
        assert_eq!(r.outcome, Outcome::Accept);
        assert_eq!(r.runs[0].nondet_steps, vec![2]);
        assert_eq!(r.runs[0].total_steps, 3);
    }

    #[test]
    fn cut_off_subtraction_and_halving() {
        assert_eq!(acc_after("LOADI 3\nSUB 4", &[(4, 5)], vec![]), 0);
        assert_eq!(acc_after("LOADI 9\nSUB 4", &[(4, 5)], vec![]), 4);
        assert_eq!(acc_after("LOADI 5\nDIV2", &[], vec![]), 2);
        let p = assemble("LOADI 5\nDIV2\nSTORE 1\nACCEPT").unwrap();
        let cfg = MachineConfig {
            rounding: DivRounding::HalfUp,
            ..MachineConfig::default()
        };
        let r = run(&p, &[], &GuessResolver::Tape(vec![]), &cfg).unwrap();
        assert_eq!(r.runs[0].max_value_stored, 5);
        assert_eq!(acc_after("LOADI 1\nSTORE 2\nLOADIND 2", &[(1, 42)], vec![]), 42);
    }

    #[test]
    fn falling_off_rejects() {
        let r = go("", &[], GuessResolver::Tape(vec![]));
        assert_eq!(r.outcome, Outcome::Reject);
        assert_eq!(r.runs[0].total_steps, 0);
        assert_eq!(go("LOADI 1", &[], GuessResolver::Exhaustive).outcome, Outcome::Reject);
    }

    #[test]
    fn guess_errors() {
        let p = assemble("LOADI 2\nGUESS\nACCEPT").unwrap();
        let cfg = MachineConfig::default();
        assert_eq!(
            run(&p, &[], &GuessResolver::Tape(vec![]), &cfg).unwrap_err(),
            RunError::TapeExhausted { step: 2 }
        );
        assert_eq!(
            run(&p, &[], &GuessResolver::Tape(vec![3]), &cfg).unwrap_err(),
            RunError::GuessOutOfRange { step: 2, guess: 3, bound: 2 }
        );
    }

    #[test]
    fn budget_is_enforced() {
        let p = assemble("top: JUMP top").unwrap();
        let cfg = MachineConfig {
            budget: 50,
            ..MachineConfig::default()
        };
        let r = run(&p, &[], &GuessResolver::Tape(vec![]), &cfg).unwrap();
        assert_eq!(r.outcome, Outcome::OutOfBudget);
        assert_eq!(r.runs[0].total_steps, 50);
    }

    #[test]
    fn exhaustive_finds_the_accepting_branch() {
        // accept iff the guess equals r4
        let src = "LOADI 5\nGUESS\nSTORE 1\nLOAD 4\nSUB 1\nSTORE 2\nLOAD 1\nSUB 4\nADD 2\nJZERO yes\nREJECT\nyes: ACCEPT";
        let r = go(src, &[(4, 3)], GuessResolver::Exhaustive);
        assert_eq!(r.outcome, Outcome::Accept);
        assert_eq!(r.runs.len(), 6);
        assert_eq!(r.runs.iter().filter(|a| a.outcome == Outcome::Accept).count(), 1);
        let r = go(src, &[(4, 7)], GuessResolver::Exhaustive);
        assert_eq!(r.outcome, Outcome::Reject);
    }

    #[test]
    fn random_guesses_stay_in_range() {
        let p = assemble("LOADI 4\nGUESS\nSTORE 1\nLOADI 4\nGUESS\nSTORE 2\nACCEPT").unwrap();
        let cfg = MachineConfig {
            record_trace: true,
            ..MachineConfig::default()
        };
        for seed in 0..50 {
            let r = run(&p, &[], &GuessResolver::Random(seed), &cfg).unwrap();
            for t in r.trace.unwrap() {
                if let Some(g) = t.guess {
                    assert!(g <= 4);
                }
            }
        }
    }

    #[test]
    fn register_limit() {
        let p = assemble("LOADI 99999999\nSTORE 1\nSTOREIND 1").unwrap();
        let r = run(&p, &[], &GuessResolver::Tape(vec![]), &MachineConfig::default());
        assert!(matches!(r, Err(RunError::RegisterLimit { .. })));
    }
}
