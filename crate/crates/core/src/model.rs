//! Uniform CSP instances: the document format, validation, and the direct
//! tuple-lookup semantics every other module is checked against.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of a variable in declaration order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Var(pub u32);

/// Index of a domain value in declaration order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Val(pub u32);

impl Var {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl Val {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InstanceError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema violation at `{field}`: {message}")]
    Schema { field: String, message: String },
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl InstanceError {
    fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        InstanceError::Schema {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AssignmentError {
    #[error("variable {0} occurs twice")]
    DuplicateVariable(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("unknown value `{0}`")]
    UnknownValue(String),
    #[error("pair `{0}` is malformed, expected var=val")]
    Malformed(String),
    #[error("value index {0} is outside the domain")]
    ValueOutOfRange(u32),
    #[error("variable index {0} is outside the instance")]
    VariableOutOfRange(u32),
}

/// An assignment in support form: the (variable, value) pairs whose value is
/// not the free value, kept sorted by variable index.
///
/// The derived ordering is lexicographic over the sorted pair list. Use
/// [`Assignment::cmp_size_lex`] for the (size, lexicographic) order.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Assignment {
    pairs: Vec<(Var, Val)>,
}

impl Assignment {
    pub fn empty() -> Self {
        Assignment { pairs: Vec::new() }
    }

    /// Builds an assignment from arbitrary-order pairs; rejects repeated variables.
    /// Does not know the free value, see [`CspInstance::check_assignment`].
    pub fn from_pairs<I: IntoIterator<Item = (Var, Val)>>(pairs: I) -> Result<Self, AssignmentError> {
        let mut pairs: Vec<(Var, Val)> = pairs.into_iter().collect();
        pairs.sort();
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(AssignmentError::DuplicateVariable(format!("#{}", w[0].0 .0)));
            }
        }
        Ok(Assignment { pairs })
    }

    /// Pairs must already be strictly ascending by variable.
    pub(crate) fn from_sorted_unchecked(pairs: Vec<(Var, Val)>) -> Self {
        debug_assert!(pairs.windows(2).all(|w| w[0].0 < w[1].0));
        Assignment { pairs }
    }

    pub fn size(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(Var, Val)] {
        &self.pairs
    }

    pub fn get(&self, var: Var) -> Option<Val> {
        self.pairs
            .binary_search_by_key(&var, |p| p.0)
            .ok()
            .map(|i| self.pairs[i].1)
    }

    pub fn contains_var(&self, var: Var) -> bool {
        self.get(var).is_some()
    }

    /// `self ⊆ other` as sets of pairs.
    pub fn is_subset_of(&self, other: &Assignment) -> bool {
        if self.pairs.len() > other.pairs.len() {
            return false;
        }
        let mut it = other.pairs.iter();
        'outer: for p in &self.pairs {
            for q in it.by_ref() {
                if q.0 == p.0 {
                    if q.1 == p.1 {
                        continue 'outer;
                    }
                    return false;
                }
                if q.0 > p.0 {
                    return false;
                }
            }
            return false;
        }
        true
    }

    pub fn is_proper_subset_of(&self, other: &Assignment) -> bool {
        self.pairs.len() < other.pairs.len() && self.is_subset_of(other)
    }

    /// Adds a pair on a variable that is not yet assigned.
    pub fn extended(&self, var: Var, val: Val) -> Assignment {
        debug_assert!(!self.contains_var(var));
        let pos = self.pairs.partition_point(|p| p.0 < var);
        let mut pairs = self.pairs.clone();
        pairs.insert(pos, (var, val));
        Assignment { pairs }
    }

    /// Keeps only the pairs whose variable is in `vars`.
    pub fn restrict(&self, vars: &[Var]) -> Assignment {
        Assignment {
            pairs: self
                .pairs
                .iter()
                .copied()
                .filter(|(v, _)| vars.contains(v))
                .collect(),
        }
    }

    /// The sub-assignment selected by `mask` over the pair list.
    pub fn select(&self, mask: u64) -> Assignment {
        Assignment {
            pairs: self
                .pairs
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, p)| *p)
                .collect(),
        }
    }

    pub fn cmp_size_lex(&self, other: &Assignment) -> std::cmp::Ordering {
        self.size()
            .cmp(&other.size())
            .then_with(|| self.pairs.cmp(&other.pairs))
    }
}

/// A listed relation; tuples keep their first-seen order after deduplication.
#[derive(Clone, Debug)]
pub struct Relation {
    name: String,
    arity: usize,
    tuples: Vec<Vec<Val>>,
    index: HashSet<Vec<Val>>,
}

impl Relation {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn tuples(&self) -> &[Vec<Val>] {
        &self.tuples
    }

    pub fn contains(&self, tuple: &[Val]) -> bool {
        self.index.contains(tuple)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub relation: usize,
    pub vars: Vec<Var>,
}

impl Constraint {
    /// The variable set of the constraint, repetitions collapsed, in global order.
    pub fn scope(&self) -> Vec<Var> {
        let mut s = self.vars.clone();
        s.sort();
        s.dedup();
        s
    }
}

/// A validated p-Size-CSP instance. Immutable after construction.
#[derive(Clone, Debug)]
pub struct CspInstance {
    domain: Vec<String>,
    free_value: Val,
    variables: Vec<String>,
    relations: Vec<Relation>,
    constraints: Vec<Constraint>,
    k: usize,
    weights: Option<BTreeMap<Var, BigUint>>,
    target: Option<BigUint>,
    f_of_k: Option<u32>,
    var_index: HashMap<String, Var>,
    val_index: HashMap<String, Val>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationDocument {
    pub arity: usize,
    pub tuples: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintDocument {
    pub relation: String,
    pub vars: Vec<String>,
}

/// The on-disk instance format.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDocument {
    pub domain: Vec<String>,
    pub free_value: String,
    pub variables: Vec<String>,
    pub relations: BTreeMap<String, RelationDocument>,
    pub constraints: Vec<ConstraintDocument>,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_of_k: Option<u32>,
}

impl InstanceDocument {
    /// Parses the JSON text without semantic validation.
    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|err| {
            let path = err.path().to_string();
            let inner = err.into_inner();
            match inner.classify() {
                serde_json::error::Category::Data => InstanceError::schema(path, strip_position(&inner)),
                _ => InstanceError::Syntax {
                    line: inner.line(),
                    column: inner.column(),
                    message: strip_position(&inner),
                },
            }
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("document serializes");
        s.push('\n');
        s
    }
}

fn strip_position(err: &serde_json::Error) -> String {
    let msg = err.to_string();
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg,
    }
}

fn parse_decimal(field: String, text: &str) -> Result<BigUint, InstanceError> {
    if text.is_empty() || !text.bytes().all(|b| b.is_ascii_digit()) {
        return Err(InstanceError::schema(field, format!("`{text}` is not a nonnegative decimal")));
    }
    Ok(text.parse().expect("digits parse"))
}

/// Parses and validates an instance document.
pub fn parse_instance(text: &str) -> Result<CspInstance, InstanceError> {
    CspInstance::from_document(InstanceDocument::from_json(text)?)
}

impl CspInstance {
    pub fn from_document(doc: InstanceDocument) -> Result<Self, InstanceError> {
        let mut val_index = HashMap::new();
        for (i, label) in doc.domain.iter().enumerate() {
            if val_index.insert(label.clone(), Val(i as u32)).is_some() {
                return Err(InstanceError::Invariant(format!("domain label `{label}` is repeated")));
            }
        }
        let mut var_index = HashMap::new();
        for (i, name) in doc.variables.iter().enumerate() {
            if var_index.insert(name.clone(), Var(i as u32)).is_some() {
                return Err(InstanceError::Invariant(format!("variable `{name}` is repeated")));
            }
        }
        let free_value = *val_index.get(&doc.free_value).ok_or_else(|| {
            InstanceError::Invariant(format!("free value `{}` is not in the domain", doc.free_value))
        })?;

        let mut relations = Vec::with_capacity(doc.relations.len());
        let mut rel_index = HashMap::new();
        for (name, rd) in &doc.relations {
            if rd.arity == 0 {
                return Err(InstanceError::Invariant(format!("relation `{name}` has arity 0")));
            }
            let mut tuples = Vec::with_capacity(rd.tuples.len());
            let mut index = HashSet::with_capacity(rd.tuples.len());
            for (ti, tuple) in rd.tuples.iter().enumerate() {
                if tuple.len() != rd.arity {
                    return Err(InstanceError::Invariant(format!(
                        "relation `{name}` tuple {ti} has length {} but arity is {}",
                        tuple.len(),
                        rd.arity
                    )));
                }
                let vals = tuple
                    .iter()
                    .map(|label| {
                        val_index.get(label).copied().ok_or_else(|| {
                            InstanceError::Invariant(format!(
                                "relation `{name}` tuple {ti} uses `{label}`, which is not a domain value"
                            ))
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                if index.insert(vals.clone()) {
                    tuples.push(vals);
                } else {
                    log::warn!("relation `{name}`: duplicate tuple {tuple:?} dropped");
                }
            }
            rel_index.insert(name.clone(), relations.len());
            relations.push(Relation {
                name: name.clone(),
                arity: rd.arity,
                tuples,
                index,
            });
        }

        let mut constraints = Vec::with_capacity(doc.constraints.len());
        for (ci, cd) in doc.constraints.iter().enumerate() {
            let relation = *rel_index.get(&cd.relation).ok_or_else(|| {
                InstanceError::schema(
                    format!("constraints[{ci}].relation"),
                    format!("undeclared relation `{}`", cd.relation),
                )
            })?;
            let vars = cd
                .vars
                .iter()
                .map(|v| {
                    var_index.get(v).copied().ok_or_else(|| {
                        InstanceError::schema(format!("constraints[{ci}].vars"), format!("undeclared variable `{v}`"))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            if vars.len() != relations[relation].arity {
                return Err(InstanceError::Invariant(format!(
                    "constraint {ci} passes {} variables to `{}` of arity {}",
                    vars.len(),
                    cd.relation,
                    relations[relation].arity
                )));
            }
            constraints.push(Constraint { relation, vars });
        }

        let weights = match doc.weights {
            None => None,
            Some(map) => {
                let mut out = BTreeMap::new();
                for (name, w) in map {
                    let var = *var_index.get(&name).ok_or_else(|| {
                        InstanceError::schema(format!("weights.{name}"), format!("undeclared variable `{name}`"))
                    })?;
                    out.insert(var, parse_decimal(format!("weights.{name}"), &w)?);
                }
                Some(out)
            }
        };
        let target = doc
            .target
            .as_deref()
            .map(|t| parse_decimal("target".into(), t))
            .transpose()?;

        Ok(CspInstance {
            domain: doc.domain,
            free_value,
            variables: doc.variables,
            relations,
            constraints,
            k: doc.k,
            weights,
            target,
            f_of_k: doc.f_of_k,
            var_index,
            val_index,
        })
    }

    /// Canonical document form; `parse_instance(to_document().to_json())` reproduces `self`.
    pub fn to_document(&self) -> InstanceDocument {
        let label = |v: &Val| self.domain[v.index()].clone();
        InstanceDocument {
            domain: self.domain.clone(),
            free_value: label(&self.free_value),
            variables: self.variables.clone(),
            relations: self
                .relations
                .iter()
                .map(|r| {
                    (
                        r.name.clone(),
                        RelationDocument {
                            arity: r.arity,
                            tuples: r.tuples.iter().map(|t| t.iter().map(label).collect()).collect(),
                        },
                    )
                })
                .collect(),
            constraints: self
                .constraints
                .iter()
                .map(|c| ConstraintDocument {
                    relation: self.relations[c.relation].name.clone(),
                    vars: c.vars.iter().map(|v| self.variables[v.index()].clone()).collect(),
                })
                .collect(),
            k: self.k,
            weights: self.weights.as_ref().map(|w| {
                w.iter()
                    .map(|(v, x)| (self.variables[v.index()].clone(), x.to_string()))
                    .collect()
            }),
            target: self.target.as_ref().map(|t| t.to_string()),
            f_of_k: self.f_of_k,
        }
    }

    pub fn domain(&self) -> &[String] {
        &self.domain
    }

    pub fn domain_size(&self) -> usize {
        self.domain.len()
    }

    pub fn free_value(&self) -> Val {
        self.free_value
    }

    /// Domain values other than the free value, in declaration order.
    pub fn nonzero_values(&self) -> Vec<Val> {
        (0..self.domain.len() as u32)
            .map(Val)
            .filter(|v| *v != self.free_value)
            .collect()
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn weights(&self) -> Option<&BTreeMap<Var, BigUint>> {
        self.weights.as_ref()
    }

    pub fn target(&self) -> Option<&BigUint> {
        self.target.as_ref()
    }

    pub fn f_of_k(&self) -> Option<u32> {
        self.f_of_k
    }

    /// Same instance with a different parameter.
    pub fn with_k(&self, k: usize) -> CspInstance {
        CspInstance { k, ..self.clone() }
    }

    pub fn var_named(&self, name: &str) -> Option<Var> {
        self.var_index.get(name).copied()
    }

    pub fn val_named(&self, label: &str) -> Option<Val> {
        self.val_index.get(label).copied()
    }

    pub fn var_name(&self, var: Var) -> &str {
        &self.variables[var.index()]
    }

    pub fn val_label(&self, val: Val) -> &str {
        &self.domain[val.index()]
    }

    /// Total number of tuples listed over all relations.
    pub fn listed_tuples(&self) -> usize {
        self.relations.iter().map(|r| r.tuples.len()).sum()
    }

    /// Checks that `a` only uses known variables and non-free domain values.
    pub fn check_assignment(&self, a: &Assignment) -> Result<(), AssignmentError> {
        for &(var, val) in a.pairs() {
            if var.index() >= self.variables.len() {
                return Err(AssignmentError::VariableOutOfRange(var.0));
            }
            if val.index() >= self.domain.len() || val == self.free_value {
                return Err(AssignmentError::ValueOutOfRange(val.0));
            }
        }
        Ok(())
    }

    /// The value `a` gives `var`, reading absent variables as the free value.
    pub fn value_of(&self, a: &Assignment, var: Var) -> Val {
        a.get(var).unwrap_or(self.free_value)
    }

    /// Whether the constraint's evaluated tuple is listed in its relation.
    pub fn satisfies(&self, a: &Assignment, c: &Constraint) -> bool {
        debug_assert!(self.check_assignment(a).is_ok());
        let tuple: Vec<Val> = c.vars.iter().map(|&v| self.value_of(a, v)).collect();
        self.relations[c.relation].contains(&tuple)
    }

    pub fn satisfies_all(&self, a: &Assignment) -> bool {
        self.constraints.iter().all(|c| self.satisfies(a, c))
    }

    /// Parses a certificate of the form `x=1,z=1`; empty text is the empty assignment.
    pub fn parse_assignment(&self, text: &str) -> Result<Assignment, AssignmentError> {
        let text = text.trim();
        if text.is_empty() {
            return Ok(Assignment::empty());
        }
        let mut pairs = Vec::new();
        for item in text.split(',') {
            let (name, label) = item
                .split_once('=')
                .ok_or_else(|| AssignmentError::Malformed(item.to_string()))?;
            let (name, label) = (name.trim(), label.trim());
            let var = self
                .var_named(name)
                .ok_or_else(|| AssignmentError::UnknownVariable(name.to_string()))?;
            let val = self
                .val_named(label)
                .ok_or_else(|| AssignmentError::UnknownValue(label.to_string()))?;
            pairs.push((var, val));
        }
        let a = Assignment::from_pairs(pairs).map_err(|_| AssignmentError::DuplicateVariable(text.to_string()))?;
        let free = self.free_value;
        Ok(Assignment::from_sorted_unchecked(
            a.pairs().iter().copied().filter(|p| p.1 != free).collect(),
        ))
    }

    pub fn display<'a>(&'a self, a: &'a Assignment) -> AssignmentDisplay<'a> {
        AssignmentDisplay { inst: self, a }
    }
}

/// Renders an assignment as comma-joined `var=val` pairs.
pub struct AssignmentDisplay<'a> {
    inst: &'a CspInstance,
    a: &'a Assignment,
}

impl fmt::Display for AssignmentDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, &(var, val)) in self.a.pairs().iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}={}", self.inst.var_name(var), self.inst.val_label(val))?;
        }
        Ok(())
    }
}

/// `restrict(a, S)` as a free function, mirroring [`Assignment::restrict`].
pub fn restrict(a: &Assignment, vars: &[Var]) -> Assignment {
    a.restrict(vars)
}
