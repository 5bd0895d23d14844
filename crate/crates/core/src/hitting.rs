//! Hypergraph-family hitting: find `S ⊆ W` with `|S| = k` and `S ∩ V_i ∈ E_i`
//! for every hypergraph `(V_i, E_i)`, by reduction to a Boolean size-k CSP.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ConstraintDocument, CspInstance, InstanceDocument, InstanceError, RelationDocument};
use crate::subset_sum::Combinations;
use crate::verifier::{solve_with, SearchOptions, VerifyError};

#[derive(Debug, Error)]
pub enum HittingError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("schema violation at `{field}`: {message}")]
    Schema { field: String, message: String },
    #[error("ground element `{0}` is repeated")]
    DuplicateGround(String),
    #[error("hypergraph {index}: `{name}` is not a ground element")]
    UnknownVertex { index: usize, name: String },
    #[error("hypergraph {index}: edge element `{name}` is not among its vertices")]
    InvalidEdge { index: usize, name: String },
    #[error("hypergraph {0} has no vertices")]
    EmptyVertexSet(usize),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypergraphDocument {
    pub vertices: Vec<String>,
    pub edges: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HittingDocument {
    pub ground: Vec<String>,
    pub hypergraphs: Vec<HypergraphDocument>,
    pub k: usize,
}

/// One hypergraph, vertices and edges as ground indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hypergraph {
    pub vertices: BTreeSet<usize>,
    pub edges: BTreeSet<BTreeSet<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HypergraphFamilyInstance {
    ground: Vec<String>,
    hypergraphs: Vec<Hypergraph>,
    k: usize,
}

impl HypergraphFamilyInstance {
    pub fn parse(text: &str) -> Result<Self, HittingError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let doc: HittingDocument = serde_path_to_error::deserialize(de).map_err(|err| {
            let field = err.path().to_string();
            let inner = err.into_inner();
            match inner.classify() {
                serde_json::error::Category::Data => HittingError::Schema {
                    field,
                    message: inner.to_string(),
                },
                _ => HittingError::Syntax {
                    line: inner.line(),
                    column: inner.column(),
                    message: inner.to_string(),
                },
            }
        })?;
        Self::from_document(doc)
    }

    pub fn from_document(doc: HittingDocument) -> Result<Self, HittingError> {
        let mut index = HashMap::new();
        for (i, g) in doc.ground.iter().enumerate() {
            if index.insert(g.clone(), i).is_some() {
                return Err(HittingError::DuplicateGround(g.clone()));
            }
        }
        let mut hypergraphs = Vec::with_capacity(doc.hypergraphs.len());
        for (hi, h) in doc.hypergraphs.iter().enumerate() {
            let vertices = h
                .vertices
                .iter()
                .map(|v| {
                    index.get(v).copied().ok_or_else(|| HittingError::UnknownVertex {
                        index: hi,
                        name: v.clone(),
                    })
                })
                .collect::<Result<BTreeSet<_>, _>>()?;
            if vertices.is_empty() {
                return Err(HittingError::EmptyVertexSet(hi));
            }
            let edges = h
                .edges
                .iter()
                .map(|e| {
                    e.iter()
                        .map(|v| match index.get(v) {
                            Some(i) if vertices.contains(i) => Ok(*i),
                            _ => Err(HittingError::InvalidEdge {
                                index: hi,
                                name: v.clone(),
                            }),
                        })
                        .collect::<Result<BTreeSet<_>, _>>()
                })
                .collect::<Result<BTreeSet<_>, _>>()?;
            hypergraphs.push(Hypergraph { vertices, edges });
        }
        Ok(HypergraphFamilyInstance {
            ground: doc.ground,
            hypergraphs,
            k: doc.k,
        })
    }

    pub fn ground(&self) -> &[String] {
        &self.ground
    }

    pub fn hypergraphs(&self) -> &[Hypergraph] {
        &self.hypergraphs
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Whether `s ∩ V_i ∈ E_i` for every hypergraph.
    pub fn is_hit(&self, s: &BTreeSet<usize>) -> bool {
        self.hypergraphs.iter().all(|h| {
            let inter: BTreeSet<usize> = s.intersection(&h.vertices).copied().collect();
            h.edges.contains(&inter)
        })
    }
}

/// Boolean CSP over the ground set with one constraint per hypergraph whose
/// relation lists the characteristic vectors of its edges.
pub fn reduce(h: &HypergraphFamilyInstance) -> Result<CspInstance, HittingError> {
    let mut relations = BTreeMap::new();
    let mut constraints = Vec::new();
    for (i, hg) in h.hypergraphs.iter().enumerate() {
        let name = format!("H{i}");
        let tuples = hg
            .edges
            .iter()
            .map(|e| {
                hg.vertices
                    .iter()
                    .map(|v| if e.contains(v) { "1" } else { "0" }.to_string())
                    .collect()
            })
            .collect();
        relations.insert(
            name.clone(),
            RelationDocument {
                arity: hg.vertices.len(),
                tuples,
            },
        );
        constraints.push(ConstraintDocument {
            relation: name,
            vars: hg.vertices.iter().map(|&v| h.ground[v].clone()).collect(),
        });
    }
    Ok(CspInstance::from_document(InstanceDocument {
        domain: vec!["0".into(), "1".into()],
        free_value: "0".into(),
        variables: h.ground.clone(),
        relations,
        constraints,
        k: h.k,
        weights: None,
        target: None,
        f_of_k: None,
    })?)
}

/// Reduces and solves; the witness is returned as ground names.
pub fn solve_hitting_with(h: &HypergraphFamilyInstance, options: &SearchOptions) -> Result<Option<BTreeSet<String>>, HittingError> {
    let inst = reduce(h)?;
    let report = solve_with(&inst, options)?;
    Ok(report.witness.map(|a| {
        a.pairs()
            .iter()
            .map(|(v, _)| h.ground[v.index()].clone())
            .collect()
    }))
}

pub fn solve_hitting(h: &HypergraphFamilyInstance) -> Result<Option<BTreeSet<String>>, HittingError> {
    solve_hitting_with(h, &SearchOptions::default())
}

/// Direct check of every k-subset of the ground set.
pub fn oracle_hitting(h: &HypergraphFamilyInstance) -> Option<BTreeSet<usize>> {
    Combinations::new(h.ground.len(), h.k)
        .map(|c| c.into_iter().collect::<BTreeSet<usize>>())
        .find(|s| h.is_hit(s))
}
