use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Register 0 is the accumulator; every other operand names a register.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Instr {
    LoadI(u64),
    Load(usize),
    Store(usize),
    /// acc ← reg[reg[r]]
    LoadInd(usize),
    /// reg[reg[r]] ← acc
    StoreInd(usize),
    Add(usize),
    /// Cut off at 0.
    Sub(usize),
    Div2,
    Jump(usize),
    /// Jump when the accumulator is 0.
    JZero(usize),
    Guess,
    Accept,
    Reject,
}

impl Instr {
    pub fn mnemonic(&self) -> &'static str {
        match self {
            Instr::LoadI(_) => "LOADI",
            Instr::Load(_) => "LOAD",
            Instr::Store(_) => "STORE",
            Instr::LoadInd(_) => "LOADIND",
            Instr::StoreInd(_) => "STOREIND",
            Instr::Add(_) => "ADD",
            Instr::Sub(_) => "SUB",
            Instr::Div2 => "DIV2",
            Instr::Jump(_) => "JUMP",
            Instr::JZero(_) => "JZERO",
            Instr::Guess => "GUESS",
            Instr::Accept => "ACCEPT",
            Instr::Reject => "REJECT",
        }
    }
}

impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Instr::LoadI(c) => write!(f, "LOADI {c}"),
            Instr::Load(r) | Instr::Store(r) | Instr::LoadInd(r) | Instr::StoreInd(r) | Instr::Add(r) | Instr::Sub(r) => {
                write!(f, "{} {r}", self.mnemonic())
            }
            Instr::Jump(l) | Instr::JZero(l) => write!(f, "{} @{l}", self.mnemonic()),
            _ => f.write_str(self.mnemonic()),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AssembleError {
    #[error("line {line}: unknown mnemonic `{mnemonic}`")]
    UnknownMnemonic { line: usize, mnemonic: String },
    #[error("line {line}: unresolved label `{label}`")]
    UnresolvedLabel { line: usize, label: String },
    #[error("line {line}: malformed operand for {mnemonic}: {detail}")]
    MalformedOperand {
        line: usize,
        mnemonic: String,
        detail: String,
    },
    #[error("line {line}: label `{label}` defined twice")]
    DuplicateLabel { line: usize, label: String },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NramProgram {
    instrs: Vec<Instr>,
}

impl NramProgram {
    pub fn new(instrs: Vec<Instr>) -> Self {
        NramProgram { instrs }
    }

    pub fn instrs(&self) -> &[Instr] {
        &self.instrs
    }

    pub fn len(&self) -> usize {
        self.instrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instrs.is_empty()
    }

    /// Label-free listing; jump targets are written `@index`.
    pub fn listing(&self) -> String {
        self.instrs.iter().map(|i| format!("{i}\n")).collect()
    }
}

fn is_label(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// One instruction per line, optional `label:` prefixes, `;` comments.
/// Register operands are decimal, optionally written `rN`; jump targets are
/// labels or `@index`.
pub fn assemble(text: &str) -> Result<NramProgram, AssembleError> {
    struct Pending<'a> {
        line: usize,
        mnemonic: String,
        operand: Option<&'a str>,
    }
    let mut labels: HashMap<String, usize> = HashMap::new();
    let mut pending = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let mut rest = raw.split(';').next().unwrap_or("").trim();
        while let Some(colon) = rest.find(':') {
            let label = rest[..colon].trim();
            if !is_label(label) {
                break;
            }
            if labels.insert(label.to_string(), pending.len()).is_some() {
                return Err(AssembleError::DuplicateLabel {
                    line,
                    label: label.to_string(),
                });
            }
            rest = rest[colon + 1..].trim();
        }
        if rest.is_empty() {
            continue;
        }
        let mut parts = rest.split_whitespace();
        let mnemonic = parts.next().expect("nonempty").to_ascii_uppercase();
        let operand = parts.next();
        if let Some(extra) = parts.next() {
            return Err(AssembleError::MalformedOperand {
                line,
                mnemonic,
                detail: format!("unexpected `{extra}`"),
            });
        }
        pending.push(Pending { line, mnemonic, operand });
    }

    let mut instrs = Vec::with_capacity(pending.len());
    for p in pending {
        let malformed = |detail: String| AssembleError::MalformedOperand {
            line: p.line,
            mnemonic: p.mnemonic.clone(),
            detail,
        };
        let number = |allow_r: bool| -> Result<u64, AssembleError> {
            let op = p.operand.ok_or_else(|| malformed("missing operand".into()))?;
            let digits = if allow_r {
                op.strip_prefix('r').or_else(|| op.strip_prefix('R')).unwrap_or(op)
            } else {
                op
            };
            digits.parse::<u64>().map_err(|_| malformed(format!("`{op}` is not a number")))
        };
        let register = || number(true).map(|r| r as usize);
        let target = || -> Result<usize, AssembleError> {
            let op = p.operand.ok_or_else(|| malformed("missing label".into()))?;
            if let Some(abs) = op.strip_prefix('@') {
                return abs.parse().map_err(|_| malformed(format!("`{op}` is not an address")));
            }
            labels.get(op).copied().ok_or_else(|| AssembleError::UnresolvedLabel {
                line: p.line,
                label: op.to_string(),
            })
        };
        let nullary = |i: Instr| -> Result<Instr, AssembleError> {
            match p.operand {
                None => Ok(i),
                Some(op) => Err(malformed(format!("unexpected operand `{op}`"))),
            }
        };
        let instr = match p.mnemonic.as_str() {
            "LOADI" => Instr::LoadI(number(false)?),
            "LOAD" => Instr::Load(register()?),
            "STORE" => Instr::Store(register()?),
            "LOADIND" => Instr::LoadInd(register()?),
            "STOREIND" => Instr::StoreInd(register()?),
            "ADD" => Instr::Add(register()?),
            "SUB" => Instr::Sub(register()?),
            "DIV2" => nullary(Instr::Div2)?,
            "JUMP" => Instr::Jump(target()?),
            "JZERO" => Instr::JZero(target()?),
            "GUESS" => nullary(Instr::Guess)?,
            "ACCEPT" => nullary(Instr::Accept)?,
            "REJECT" => nullary(Instr::Reject)?,
            other => {
                return Err(AssembleError::UnknownMnemonic {
                    line: p.line,
                    mnemonic: other.to_string(),
                })
            }
        };
        instrs.push(instr);
    }
    // a label may point one past the end (falls off, rejects); anything else is out of range
    for (i, instr) in instrs.iter().enumerate() {
        if let Instr::Jump(t) | Instr::JZero(t) = instr {
            if *t > instrs.len() {
                return Err(AssembleError::UnresolvedLabel {
                    line: i + 1,
                    label: format!("@{t}"),
                });
            }
        }
    }
    Ok(NramProgram { instrs })
}
