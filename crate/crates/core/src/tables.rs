//! Deterministic preprocessing: cover frontiers per block, witness sets,
//! unit-sum weightings, and the two tries queried by the certificate check.
//!
//! For every frontier element `T` the d-trie stores `d[T]`, the number of
//! blocks whose frontier contains `T`. The l-trie stores, for every `W` that
//! is a proper superset of `T` inside some such block's satisfying set,
//! `l[T, W] = Σ_S f_{T,S}(W)`, where `f_{T,S}` has unit down-sums on
//! `H_{T,S}` and is zero outside it.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{Assignment, CspInstance, Val, Var};
use crate::normalize::{NormalizedInstance, SatSet};
use crate::poset::{cover_frontier, unit_sum_solution, PosetError, SubsetPosetSpec};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TableError {
    #[error("block {vars:?}: {source}")]
    Block {
        vars: Vec<Var>,
        #[source]
        source: PosetError,
    },
    #[error("l-value overflowed 64-bit arithmetic")]
    Overflow,
}

/// One trie edge label. `Separator` splits `key(T)` from `key(W)` in l-trie keys.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    Separator,
    Pair(Var, Val),
}

/// Key of a support: its pairs in ascending variable order.
pub fn key(t: &Assignment) -> Vec<Symbol> {
    t.pairs().iter().map(|&(v, d)| Symbol::Pair(v, d)).collect()
}

/// Key of `(T, W)` in the l-trie: `key(T) ∥ SEP ∥ key(W)`.
pub fn pair_key(t: &Assignment, w: &Assignment) -> Vec<Symbol> {
    let mut k = Vec::with_capacity(t.size() + w.size() + 1);
    k.extend(key(t));
    k.push(Symbol::Separator);
    k.extend(key(w));
    k
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct TrieNode {
    children: BTreeMap<Symbol, u32>,
    value: Option<i64>,
}

/// A trie over symbol strings with signed payloads. Absent keys read as 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssignmentTrie {
    nodes: Vec<TrieNode>,
    entries: usize,
}

impl Default for AssignmentTrie {
    fn default() -> Self {
        Self::new()
    }
}

impl AssignmentTrie {
    pub fn new() -> Self {
        AssignmentTrie {
            nodes: vec![TrieNode::default()],
            entries: 0,
        }
    }

    fn slot(&mut self, key: &[Symbol]) -> &mut Option<i64> {
        let mut cur = 0usize;
        for sym in key {
            let next = match self.nodes[cur].children.get(sym) {
                Some(&n) => n as usize,
                None => {
                    self.nodes.push(TrieNode::default());
                    let n = self.nodes.len() - 1;
                    self.nodes[cur].children.insert(*sym, n as u32);
                    n
                }
            };
            cur = next;
        }
        &mut self.nodes[cur].value
    }

    pub fn insert(&mut self, key: &[Symbol], value: i64) {
        let slot = self.slot(key);
        let fresh = slot.is_none();
        *slot = Some(value);
        if fresh {
            self.entries += 1;
        }
    }

    /// Adds `delta` to the stored value, creating the entry at 0 if needed.
    pub fn add(&mut self, key: &[Symbol], delta: i64) -> Result<(), TableError> {
        let slot = self.slot(key);
        let fresh = slot.is_none();
        let cur = slot.unwrap_or(0);
        *slot = Some(cur.checked_add(delta).ok_or(TableError::Overflow)?);
        if fresh {
            self.entries += 1;
        }
        Ok(())
    }

    pub fn lookup(&self, key: &[Symbol]) -> i64 {
        self.lookup_counted(key).0
    }

    /// The stored value (or 0) and the number of nodes visited, root included.
    pub fn lookup_counted(&self, key: &[Symbol]) -> (i64, usize) {
        let mut cur = 0usize;
        let mut touched = 1;
        for sym in key {
            match self.nodes[cur].children.get(sym) {
                Some(&n) => {
                    cur = n as usize;
                    touched += 1;
                }
                None => return (0, touched),
            }
        }
        (self.nodes[cur].value.unwrap_or(0), touched)
    }

    /// Number of stored keys.
    pub fn len(&self) -> usize {
        self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries == 0
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// All stored entries in symbol order.
    pub fn entries(&self) -> Vec<(Vec<Symbol>, i64)> {
        let mut out = Vec::with_capacity(self.entries);
        let mut stack = vec![(0usize, Vec::new())];
        while let Some((node, prefix)) = stack.pop() {
            if let Some(v) = self.nodes[node].value {
                out.push((prefix.clone(), v));
            }
            for (sym, &child) in self.nodes[node].children.iter().rev() {
                let mut p = prefix.clone();
                p.push(*sym);
                stack.push((child as usize, p));
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BuildOptions {
    /// Add `∅` to a block's frontier whenever `∅` is not a satisfying support.
    pub patch_empty: bool,
    /// Drop frontier elements of size `k + 1`; they are never subsets of a candidate.
    pub prune_oversize: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            patch_empty: true,
            prune_oversize: false,
        }
    }
}

impl BuildOptions {
    /// The frontier exactly as defined, without the `∅` addition.
    pub fn literal() -> Self {
        BuildOptions {
            patch_empty: false,
            prune_oversize: false,
        }
    }
}

/// `H_{T,S}` and its unit-sum weighting for one frontier element of one block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessWeights {
    pub frontier: Assignment,
    pub witnesses: Vec<Assignment>,
    pub weights: Vec<i64>,
}

/// Per-block intermediate results, kept for dumps and audits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockTables {
    pub vars: Vec<Var>,
    pub sat_count: usize,
    pub listed_tuples: usize,
    pub frontier: Vec<Assignment>,
    pub witnesses: Vec<WitnessWeights>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TableStats {
    pub blocks: usize,
    pub frontier: usize,
    pub d_entries: usize,
    pub l_entries: usize,
    pub d_nodes: usize,
    pub l_nodes: usize,
}

#[derive(Clone, Debug)]
pub struct VerificationTables {
    frontier: BTreeMap<Assignment, Vec<usize>>,
    d_trie: AssignmentTrie,
    l_trie: AssignmentTrie,
    k: usize,
    blocks: Vec<BlockTables>,
    options: BuildOptions,
    stats: TableStats,
}

impl VerificationTables {
    pub fn k(&self) -> usize {
        self.k
    }

    /// The global frontier with, per element, the indices of the blocks listing it.
    pub fn frontier(&self) -> &BTreeMap<Assignment, Vec<usize>> {
        &self.frontier
    }

    pub fn d_trie(&self) -> &AssignmentTrie {
        &self.d_trie
    }

    pub fn l_trie(&self) -> &AssignmentTrie {
        &self.l_trie
    }

    pub fn blocks(&self) -> &[BlockTables] {
        &self.blocks
    }

    pub fn options(&self) -> BuildOptions {
        self.options
    }

    pub fn stats(&self) -> TableStats {
        self.stats
    }

    pub fn d(&self, t: &Assignment) -> i64 {
        self.d_trie.lookup(&key(t))
    }

    pub fn l(&self, t: &Assignment, w: &Assignment) -> i64 {
        self.l_trie.lookup(&pair_key(t, w))
    }

    /// Line-oriented dump: `d <key> <value>` then `l <keyT> | <keyW> <value>`,
    /// each group sorted by rendered key. The empty key renders as `{}`.
    pub fn dump(&self, inst: &CspInstance) -> String {
        let mut d_lines: Vec<(String, i64)> = self
            .d_trie
            .entries()
            .into_iter()
            .map(|(k, v)| (render_key(inst, &k), v))
            .collect();
        d_lines.sort();
        let mut l_lines: Vec<(String, String, i64)> = self
            .l_trie
            .entries()
            .into_iter()
            .map(|(k, v)| {
                let sep = k.iter().position(|s| *s == Symbol::Separator).expect("l key has a separator");
                (render_key(inst, &k[..sep]), render_key(inst, &k[sep + 1..]), v)
            })
            .collect();
        l_lines.sort();
        let mut out = String::new();
        for (k, v) in d_lines {
            let _ = writeln!(out, "d {k} {v}");
        }
        for (t, w, v) in l_lines {
            let _ = writeln!(out, "l {t} | {w} {v}");
        }
        out
    }
}

fn render_key(inst: &CspInstance, key: &[Symbol]) -> String {
    if key.is_empty() {
        return "{}".to_string();
    }
    key.iter()
        .map(|s| match s {
            Symbol::Pair(v, d) => format!("{}={}", inst.var_name(*v), inst.val_label(*d)),
            Symbol::Separator => "|".to_string(),
        })
        .collect::<Vec<_>>()
        .join(",")
}

/// `H_{T,S}`: members of the satisfying set that are proper supersets of `t`.
pub fn h_set(t: &Assignment, sat: &SatSet) -> Vec<Assignment> {
    sat.members()
        .iter()
        .filter(|u| t.is_proper_subset_of(u))
        .cloned()
        .collect()
}

fn build_block(sat: &SatSet, values: &[Val], k: usize, options: BuildOptions) -> Result<BlockTables, TableError> {
    let ambient = SubsetPosetSpec {
        vars: sat.vars().to_vec(),
        values: values.to_vec(),
    };
    let wrap = |source| TableError::Block {
        vars: sat.vars().to_vec(),
        source,
    };
    let mut frontier = cover_frontier(sat.members(), &ambient, options.patch_empty).map_err(wrap)?;
    if options.prune_oversize {
        frontier.retain(|t| t.size() <= k);
    }
    let witnesses = frontier
        .iter()
        .map(|t| {
            let witnesses = h_set(t, sat);
            let weights = unit_sum_solution(&witnesses).map_err(wrap)?;
            Ok(WitnessWeights {
                frontier: t.clone(),
                witnesses,
                weights,
            })
        })
        .collect::<Result<Vec<_>, TableError>>()?;
    Ok(BlockTables {
        vars: sat.vars().to_vec(),
        sat_count: sat.members().len(),
        listed_tuples: sat.listed_tuples(),
        frontier,
        witnesses,
    })
}

/// Builds frontier, d-trie and l-trie for a normalized instance.
pub fn build_tables(normalized: &NormalizedInstance<'_>, options: BuildOptions) -> Result<VerificationTables, TableError> {
    let values = normalized.source().nonzero_values();
    let k = normalized.k();
    let blocks = normalized
        .blocks()
        .par_iter()
        .map(|sat| build_block(sat, &values, k, options))
        .collect::<Result<Vec<_>, _>>()?;

    let mut frontier: BTreeMap<Assignment, Vec<usize>> = BTreeMap::new();
    let mut l_trie = AssignmentTrie::new();
    for (bi, block) in blocks.iter().enumerate() {
        for ww in &block.witnesses {
            frontier.entry(ww.frontier.clone()).or_default().push(bi);
            for (w, &f) in ww.witnesses.iter().zip(&ww.weights) {
                l_trie.add(&pair_key(&ww.frontier, w), f)?;
            }
        }
    }
    let mut d_trie = AssignmentTrie::new();
    for (t, owners) in &frontier {
        d_trie.insert(&key(t), owners.len() as i64);
    }
    let stats = TableStats {
        blocks: blocks.len(),
        frontier: frontier.len(),
        d_entries: d_trie.len(),
        l_entries: l_trie.len(),
        d_nodes: d_trie.node_count(),
        l_nodes: l_trie.node_count(),
    };
    Ok(VerificationTables {
        frontier,
        d_trie,
        l_trie,
        k,
        blocks,
        options,
        stats,
    })
}
