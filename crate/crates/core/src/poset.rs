//! Finite posets: the Möbius function, Möbius inversion, cover frontiers,
//! maximal elements, and the unit down-sum weighting used by the tables.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::model::{Assignment, Val, Var};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PosetError {
    #[error("element is not in the poset")]
    UnknownElement,
    #[error("poset has no minimum element")]
    NoMinimum,
    #[error("support {0:?} is not in the ambient subset poset")]
    OutsideAmbient(Assignment),
    #[error("weighting has {got} entries for a poset of {expected} elements")]
    WeightingSize { expected: usize, got: usize },
    #[error("weight overflowed 64-bit arithmetic")]
    Overflow,
}

/// A finite poset with its order relation tabulated at construction.
pub struct FinitePoset<T> {
    elements: Vec<T>,
    leq: Vec<bool>,
    // indices sorted so that x < y implies x comes first
    linear_extension: Vec<usize>,
    mobius_rows: Vec<OnceLock<Vec<BigInt>>>,
}

impl<T: PartialEq> FinitePoset<T> {
    /// `leq` must be a partial order on `elements`; checked exhaustively in
    /// debug builds for small posets.
    pub fn new(elements: Vec<T>, leq: impl Fn(&T, &T) -> bool) -> Self {
        let n = elements.len();
        let mut table = vec![false; n * n];
        for (i, x) in elements.iter().enumerate() {
            for (j, y) in elements.iter().enumerate() {
                table[i * n + j] = leq(x, y);
            }
        }
        let mut linear_extension: Vec<usize> = (0..n).collect();
        let below: Vec<usize> = (0..n).map(|j| (0..n).filter(|&i| table[i * n + j]).count()).collect();
        linear_extension.sort_by_key(|&i| below[i]);
        let poset = FinitePoset {
            elements,
            leq: table,
            linear_extension,
            mobius_rows: (0..n).map(|_| OnceLock::new()).collect(),
        };
        debug_assert!(n > 24 || poset.is_partial_order());
        poset
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[T] {
        &self.elements
    }

    pub fn index_of(&self, x: &T) -> Option<usize> {
        self.elements.iter().position(|e| e == x)
    }

    pub fn leq_at(&self, i: usize, j: usize) -> bool {
        self.leq[i * self.len() + j]
    }

    fn lt_at(&self, i: usize, j: usize) -> bool {
        i != j && self.leq_at(i, j)
    }

    /// Reflexivity, antisymmetry and transitivity over all pairs and triples.
    pub fn is_partial_order(&self) -> bool {
        let n = self.len();
        (0..n).all(|i| self.leq_at(i, i))
            && (0..n).all(|i| (0..n).all(|j| i == j || !(self.leq_at(i, j) && self.leq_at(j, i))))
            && (0..n).all(|i| {
                (0..n).all(|j| !self.leq_at(i, j) || (0..n).all(|l| !self.leq_at(j, l) || self.leq_at(i, l)))
            })
    }

    pub fn minimum(&self) -> Option<usize> {
        (0..self.len()).find(|&m| (0..self.len()).all(|j| self.leq_at(m, j)))
    }

    fn mobius_row(&self, x: usize) -> &[BigInt] {
        self.mobius_rows[x].get_or_init(|| {
            let mut row = vec![BigInt::zero(); self.len()];
            for &y in &self.linear_extension {
                if y == x {
                    row[y] = BigInt::one();
                } else if self.leq_at(x, y) {
                    let acc: BigInt = row
                        .iter()
                        .enumerate()
                        .filter(|&(z, _)| self.leq_at(x, z) && self.lt_at(z, y))
                        .map(|(_, m)| m)
                        .sum();
                    row[y] = -acc;
                }
            }
            row
        })
    }

    pub fn mobius_at(&self, x: usize, y: usize) -> BigInt {
        self.mobius_row(x)[y].clone()
    }

    pub fn mobius(&self, x: &T, y: &T) -> Result<BigInt, PosetError> {
        let i = self.index_of(x).ok_or(PosetError::UnknownElement)?;
        let j = self.index_of(y).ok_or(PosetError::UnknownElement)?;
        Ok(self.mobius_at(i, j))
    }
}

/// Integer values aligned with the elements of a poset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegerWeighting(pub Vec<BigInt>);

impl IntegerWeighting {
    pub fn zero(n: usize) -> Self {
        IntegerWeighting(vec![BigInt::zero(); n])
    }

    pub fn from_i64(values: &[i64]) -> Self {
        IntegerWeighting(values.iter().map(|&v| BigInt::from(v)).collect())
    }
}

/// `g(x) = Σ_{y ≤ x} f(y)`.
pub fn accumulate<T: PartialEq>(poset: &FinitePoset<T>, f: &IntegerWeighting) -> Result<IntegerWeighting, PosetError> {
    let n = poset.len();
    if f.0.len() != n {
        return Err(PosetError::WeightingSize { expected: n, got: f.0.len() });
    }
    Ok(IntegerWeighting(
        (0..n)
            .map(|x| (0..n).filter(|&y| poset.leq_at(y, x)).map(|y| &f.0[y]).sum())
            .collect(),
    ))
}

/// `f(x) = Σ_{y ≤ x} g(y) μ(y, x)`; the poset must have a minimum.
pub fn invert<T: PartialEq>(poset: &FinitePoset<T>, g: &IntegerWeighting) -> Result<IntegerWeighting, PosetError> {
    let n = poset.len();
    if g.0.len() != n {
        return Err(PosetError::WeightingSize { expected: n, got: g.0.len() });
    }
    if n > 0 && poset.minimum().is_none() {
        return Err(PosetError::NoMinimum);
    }
    Ok(IntegerWeighting(
        (0..n)
            .map(|x| {
                (0..n)
                    .filter(|&y| poset.leq_at(y, x))
                    .map(|y| &g.0[y] * poset.mobius_row(y)[x].clone())
                    .sum()
            })
            .collect(),
    ))
}

/// The subset poset `P_S`: all supports over `vars` with values from `values`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsetPosetSpec {
    pub vars: Vec<Var>,
    pub values: Vec<Val>,
}

impl SubsetPosetSpec {
    pub fn contains(&self, a: &Assignment) -> bool {
        a.pairs()
            .iter()
            .all(|(v, d)| self.vars.contains(v) && self.values.contains(d))
    }

    /// Every element of the poset; exponential, for tests and small ground sets.
    pub fn all_elements(&self) -> Vec<Assignment> {
        let mut out = vec![Assignment::empty()];
        for &var in &self.vars {
            let mut next = Vec::with_capacity(out.len() * (self.values.len() + 1));
            for a in &out {
                next.push(a.clone());
                for &val in &self.values {
                    next.push(a.extended(var, val));
                }
            }
            out = next;
        }
        out.sort_by(|a, b| a.cmp_size_lex(b));
        out
    }
}

/// Elements of `P_S` outside `q` covering some member of `q`; with
/// `patch_empty`, also `∅` whenever `∅ ∉ q`. Sorted (size, lexicographic).
pub fn cover_frontier(
    q: &[Assignment],
    ambient: &SubsetPosetSpec,
    patch_empty: bool,
) -> Result<Vec<Assignment>, PosetError> {
    if let Some(bad) = q.iter().find(|a| !ambient.contains(a)) {
        return Err(PosetError::OutsideAmbient(bad.clone()));
    }
    let members: BTreeSet<&Assignment> = q.iter().collect();
    let mut out = BTreeSet::new();
    for x in q {
        for &var in &ambient.vars {
            if x.contains_var(var) {
                continue;
            }
            for &val in &ambient.values {
                let y = x.extended(var, val);
                if !members.contains(&y) {
                    out.insert(y);
                }
            }
        }
    }
    let empty = Assignment::empty();
    if patch_empty && !members.contains(&empty) {
        out.insert(empty);
    }
    let mut out: Vec<Assignment> = out.into_iter().collect();
    out.sort_by(|a, b| a.cmp_size_lex(b));
    Ok(out)
}

pub fn maximal_elements<T: Clone + PartialEq>(family: &[T], leq: impl Fn(&T, &T) -> bool) -> Vec<T> {
    family
        .iter()
        .filter(|x| !family.iter().any(|y| y != *x && leq(x, y)))
        .cloned()
        .collect()
}

/// The weighting `f` on `h` with `Σ_{W ∈ h, W ⊆ U} f(W) = 1` for every `U ∈ h`,
/// aligned with the input order. Elements of `h` must be distinct.
pub fn unit_sum_solution(h: &[Assignment]) -> Result<Vec<i64>, PosetError> {
    let mut order: Vec<usize> = (0..h.len()).collect();
    order.sort_by(|&a, &b| h[a].cmp_size_lex(&h[b]));
    let mut f = vec![0i64; h.len()];
    for (pos, &u) in order.iter().enumerate() {
        let mut below = 0i64;
        for &w in &order[..pos] {
            if h[w].is_proper_subset_of(&h[u]) {
                below = below.checked_add(f[w]).ok_or(PosetError::Overflow)?;
            }
        }
        f[u] = 1i64.checked_sub(below).ok_or(PosetError::Overflow)?;
    }
    Ok(f)
}
