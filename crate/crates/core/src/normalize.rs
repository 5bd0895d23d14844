//! Rebuilds an instance so that every variable set carries exactly one
//! constraint, materialized as its set of satisfying supports of size ≤ k.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::model::{Assignment, Constraint, CspInstance, InstanceDocument, RelationDocument, ConstraintDocument, Var};

/// Satisfying supports of one variable set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SatSet {
    vars: Vec<Var>,
    members: Vec<Assignment>,
    listed_tuples: usize,
}

impl SatSet {
    /// The variable set, ascending in the global order.
    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    /// Members in (size, lexicographic) order.
    pub fn members(&self) -> &[Assignment] {
        &self.members
    }

    pub fn contains(&self, a: &Assignment) -> bool {
        self.members
            .binary_search_by(|m| m.cmp_size_lex(a))
            .is_ok()
    }

    /// Number of tuples listed across the source constraints on this set.
    pub fn listed_tuples(&self) -> usize {
        self.listed_tuples
    }
}

#[derive(Clone, Debug)]
pub struct NormalizedInstance<'a> {
    source: &'a CspInstance,
    blocks: Vec<SatSet>,
    k: usize,
}

impl<'a> NormalizedInstance<'a> {
    pub fn source(&self) -> &'a CspInstance {
        self.source
    }

    /// Blocks sorted by variable set.
    pub fn blocks(&self) -> &[SatSet] {
        &self.blocks
    }

    pub fn block(&self, vars: &[Var]) -> Option<&SatSet> {
        self.blocks
            .binary_search_by(|b| b.vars.as_slice().cmp(vars))
            .ok()
            .map(|i| &self.blocks[i])
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Whether every block contains the restriction of `a`.
    pub fn accepts(&self, a: &Assignment) -> bool {
        self.blocks.iter().all(|b| b.contains(&a.restrict(&b.vars)))
    }

    /// The normalized instance as a document: one relation `C[x,y,...]` per block.
    pub fn to_document(&self) -> InstanceDocument {
        let src = self.source;
        let mut relations = BTreeMap::new();
        let mut constraints = Vec::new();
        for block in &self.blocks {
            let names: Vec<String> = block.vars.iter().map(|v| src.var_name(*v).to_string()).collect();
            let rel = format!("C[{}]", names.join(","));
            let tuples = block
                .members
                .iter()
                .map(|m| {
                    block
                        .vars
                        .iter()
                        .map(|v| src.val_label(src.value_of(m, *v)).to_string())
                        .collect()
                })
                .collect();
            relations.insert(
                rel.clone(),
                RelationDocument {
                    arity: block.vars.len(),
                    tuples,
                },
            );
            constraints.push(ConstraintDocument { relation: rel, vars: names });
        }
        InstanceDocument {
            domain: src.domain().to_vec(),
            free_value: src.val_label(src.free_value()).to_string(),
            variables: src.variables().to_vec(),
            relations,
            constraints,
            k: self.k,
            weights: None,
            target: None,
            f_of_k: None,
        }
    }
}

/// Groups constraints by variable set and builds one [`SatSet`] per group.
pub fn normalize(inst: &CspInstance, k: usize) -> NormalizedInstance<'_> {
    let mut groups: BTreeMap<Vec<Var>, Vec<&Constraint>> = BTreeMap::new();
    for c in inst.constraints() {
        groups.entry(c.scope()).or_default().push(c);
    }
    let groups: Vec<_> = groups.into_iter().collect();
    let blocks = groups
        .par_iter()
        .map(|(vars, cs)| sat_set(vars, cs, k, inst))
        .collect();
    NormalizedInstance {
        source: inst,
        blocks,
        k,
    }
}

/// Satisfying supports of size ≤ k for constraints that all have scope `vars`.
///
/// Candidates come from the listed tuples of the first constraint; no
/// enumeration over `|D|^|S|` happens here.
pub fn sat_set(vars: &[Var], constraints: &[&Constraint], k: usize, inst: &CspInstance) -> SatSet {
    debug_assert!(constraints.iter().all(|c| c.scope() == vars));
    let listed_tuples = constraints
        .iter()
        .map(|c| inst.relations()[c.relation].tuples().len())
        .sum();
    let mut members = BTreeSet::new();
    if let Some(first) = constraints.first() {
        for tuple in inst.relations()[first.relation].tuples() {
            let Some(candidate) = induced_support(first, tuple, inst) else {
                continue;
            };
            if candidate.size() <= k && constraints.iter().all(|c| inst.satisfies(&candidate, c)) {
                members.insert(candidate);
            }
        }
    }
    let mut members: Vec<Assignment> = members.into_iter().collect();
    members.sort_by(|a, b| a.cmp_size_lex(b));
    SatSet {
        vars: vars.to_vec(),
        members,
        listed_tuples,
    }
}

/// The support a tuple induces through a constraint's variable list, or `None`
/// when a repeated variable would need two different values.
fn induced_support(c: &Constraint, tuple: &[crate::model::Val], inst: &CspInstance) -> Option<Assignment> {
    let mut seen: BTreeMap<Var, crate::model::Val> = BTreeMap::new();
    for (&var, &val) in c.vars.iter().zip(tuple) {
        if let Some(prev) = seen.insert(var, val) {
            if prev != val {
                return None;
            }
        }
    }
    let free = inst.free_value();
    Some(
        Assignment::from_pairs(seen.into_iter().filter(|&(_, val)| val != free))
            .expect("map keys are distinct"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_instance, Val};

    fn instance(relations: &str, constraints: &str, vars: &str, k: usize) -> CspInstance {
        parse_instance(&format!(
            r#"{{"domain": ["0","1"], "free_value": "0", "variables": [{vars}],
                "relations": {{{relations}}}, "constraints": [{constraints}], "k": {k}}}"#
        ))
        .unwrap()
    }

    /// Every assignment of `vars` over the whole domain.
    fn all_assignments(inst: &CspInstance, vars: &[Var]) -> Vec<Assignment> {
        let d = inst.domain_size() as u32;
        let total = (d as usize).pow(vars.len() as u32);
        (0..total)
            .map(|mut code| {
                let mut pairs = Vec::new();
                for &v in vars {
                    let val = Val((code % d as usize) as u32);
                    code /= d as usize;
                    if val != inst.free_value() {
                        pairs.push((v, val));
                    }
                }
                Assignment::from_pairs(pairs).unwrap()
            })
            .collect()
    }

    fn oracle_members(inst: &CspInstance, vars: &[Var], k: usize) -> Vec<Assignment> {
        let mut out: Vec<Assignment> = all_assignments(inst, vars)
            .into_iter()
            .filter(|a| a.size() <= k)
            .filter(|a| {
                inst.constraints()
                    .iter()
                    .filter(|c| c.scope() == vars)
                    .all(|c| inst.satisfies(a, c))
            })
            .collect();
        out.sort_by(|a, b| a.cmp_size_lex(b));
        out
    }

    #[test]
    fn binary_block_matches_enumeration() {
        let inst = instance(
            r#""R": {"arity": 2, "tuples": [["1","0"],["1","1"]]}"#,
            r#"{"relation": "R", "vars": ["x","y"]}"#,
            r#""x","y""#,
            2,
        );
        let n = normalize(&inst, 2);
        assert_eq!(n.blocks().len(), 1);
        let x1 = inst.parse_assignment("x=1").unwrap();
        let xy = inst.parse_assignment("x=1,y=1").unwrap();
        assert_eq!(n.blocks()[0].members(), &[x1, xy]);
        assert_eq!(n.blocks()[0].members(), oracle_members(&inst, &[Var(0), Var(1)], 2).as_slice());
    }

    #[test]
    fn repeated_variable_drops_inconsistent_tuples() {
        let inst = instance(
            r#""R": {"arity": 2, "tuples": [["1","0"]]}"#,
            r#"{"relation": "R", "vars": ["x","x"]}"#,
            r#""x""#,
            1,
        );
        let n = normalize(&inst, 1);
        assert_eq!(n.blocks()[0].vars(), &[Var(0)]);
        assert!(n.blocks()[0].members().is_empty());
        assert!(oracle_members(&inst, &[Var(0)], 1).is_empty());
    }

    #[test]
    fn two_constraints_on_one_set_intersect() {
        let inst = instance(
            r#""R1": {"arity": 2, "tuples": [["1","0"],["1","1"],["0","0"]]},
               "R2": {"arity": 2, "tuples": [["1","1"],["0","1"],["0","0"]]}"#,
            r#"{"relation": "R1", "vars": ["x","y"]}, {"relation": "R2", "vars": ["y","x"]}"#,
            r#""x","y""#,
            2,
        );
        let n = normalize(&inst, 2);
        assert_eq!(n.blocks().len(), 1);
        let expected = oracle_members(&inst, &[Var(0), Var(1)], 2);
        assert_eq!(expected, vec![Assignment::empty(), inst.parse_assignment("x=1").unwrap(), inst.parse_assignment("x=1,y=1").unwrap()]);
        assert_eq!(n.blocks()[0].members(), expected.as_slice());
    }

    #[test]
    fn sat_set_examples() {
        let inst = instance(
            r#""R": {"arity": 1, "tuples": [["1"]]}"#,
            r#"{"relation": "R", "vars": ["x"]}"#,
            r#""x""#,
            1,
        );
        let cs: Vec<&Constraint> = inst.constraints().iter().collect();
        let s1 = sat_set(&[Var(0)], &cs, 1, &inst);
        assert_eq!(s1.members(), &[inst.parse_assignment("x=1").unwrap()]);
        let s0 = sat_set(&[Var(0)], &cs, 0, &inst);
        assert!(s0.members().is_empty());

        let inst = instance(
            r#""R1": {"arity": 2, "tuples": [["1","0"]]}, "R2": {"arity": 2, "tuples": [["1","1"]]}"#,
            r#"{"relation": "R1", "vars": ["x","y"]}, {"relation": "R2", "vars": ["x","y"]}"#,
            r#""x","y""#,
            2,
        );
        let cs: Vec<&Constraint> = inst.constraints().iter().collect();
        let s = sat_set(&[Var(0), Var(1)], &cs, 2, &inst);
        assert!(s.members().is_empty());
        assert_eq!(s.listed_tuples(), 2);
    }

    #[test]
    fn document_dump_lists_blocks() {
        let inst = instance(
            r#""R": {"arity": 2, "tuples": [["1","0"],["1","1"]]}"#,
            r#"{"relation": "R", "vars": ["y","x"]}"#,
            r#""x","y""#,
            2,
        );
        let doc = normalize(&inst, 2).to_document();
        let rel = &doc.relations["C[x,y]"];
        assert_eq!(rel.tuples, vec![vec!["0".to_string(), "1".to_string()], vec!["1".into(), "1".into()]]);
        // the dump is itself a valid instance
        assert!(CspInstance::from_document(doc).is_ok());
    }
}
