//! The bundled subset-sum verifier: register layout, preload, and its
//! frozen resource manifest.

use std::sync::OnceLock;

use super::audit::AuditBounds;
use super::isa::{assemble, NramProgram};
use crate::subset_sum::DigitTables;

pub const SUBSET_SUM_ASM: &str = include_str!("subset_sum_p.asm");

/// First register of the row-pointer table; r0..r31 are fixed and scratch registers.
const TABLE_START: usize = 32;

/// Steps ≤ `STEP_C · (k+1) · (width+k+1)`.
pub const STEP_C: u64 = 34;
/// Every guess lies within the last `TAIL_C · k · (width+k)` steps.
pub const TAIL_C: u64 = 62;

pub fn subset_sum_program() -> &'static NramProgram {
    static PROGRAM: OnceLock<NramProgram> = OnceLock::new();
    PROGRAM.get_or_init(|| assemble(SUBSET_SUM_ASM).expect("bundled program assembles"))
}

/// Register addresses of the preloaded tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SubsetSumLayout {
    pub n: usize,
    pub k: usize,
    pub width: usize,
    pub row_ptrs: usize,
    pub rows: usize,
    pub target: usize,
    pub guesses: usize,
}

impl SubsetSumLayout {
    pub fn new(n: usize, k: usize, width: usize) -> Self {
        let row_ptrs = TABLE_START;
        let rows = row_ptrs + n;
        let target = rows + n * width;
        let guesses = target + width;
        SubsetSumLayout {
            n,
            k,
            width,
            row_ptrs,
            rows,
            target,
            guesses,
        }
    }

    /// One past the last register the program can touch.
    pub fn register_end(&self) -> usize {
        self.guesses + self.k
    }
}

/// Register preload for the bundled program; digits are row-major, then the target digits.
pub fn subset_sum_preload(tables: &DigitTables, k: usize) -> (SubsetSumLayout, Vec<(usize, u64)>) {
    let n = tables.n();
    let layout = SubsetSumLayout::new(n, k, tables.width());
    let mut init = vec![
        (1, n as u64),
        (2, k as u64),
        (3, tables.base()),
        (4, tables.width() as u64),
        (5, n.saturating_sub(1) as u64),
        (6, layout.row_ptrs as u64),
        (7, layout.target as u64),
        (8, layout.guesses as u64),
        (9, 1),
    ];
    for (i, row) in tables.x_digits().iter().enumerate() {
        let row_addr = layout.rows + i * tables.width();
        init.push((layout.row_ptrs + i, row_addr as u64));
        for (j, &d) in row.iter().enumerate() {
            init.push((row_addr + j, d));
        }
    }
    for (j, &d) in tables.t_digits().iter().enumerate() {
        init.push((layout.target + j, d));
    }
    (layout, init)
}

/// The manifest bounds for one input: `g(k) = k` guesses, steps and tail
/// window from the frozen constants, registers and values from the layout.
pub fn subset_sum_bounds(tables: &DigitTables, k: usize) -> AuditBounds {
    let layout = SubsetSumLayout::new(tables.n(), k, tables.width());
    let (k64, w) = (k as u64, tables.width() as u64);
    let register_bound = layout.register_end() as u64;
    AuditBounds {
        step_bound: STEP_C * (k64 + 1) * (w + k64 + 1),
        nondet_bound: k64,
        register_bound,
        value_bound: register_bound.max((k64 + 1) * tables.base()),
        tail_window: TAIL_C * k64 * (w + k64),
    }
}
