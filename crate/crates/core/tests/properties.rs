use std::collections::HashMap;

use num_bigint::BigInt;
use proptest::prelude::*;

use w1_core::gen::{random_instance, GeneratorConfig};
use w1_core::nram::{assemble, run, GuessResolver, Instr, MachineConfig, NramProgram, Outcome};
use w1_core::poset::{accumulate, invert, unit_sum_solution, FinitePoset, IntegerWeighting};
use w1_core::{build_tables, normalize, restrict, Assignment, BuildOptions, CspInstance, InstanceDocument, Val, Var};

fn config() -> impl Strategy<Value = GeneratorConfig> {
    (0usize..=5, 1usize..=3, 0usize..=4, 1usize..=3, 0.1f64..0.9, 0usize..=3, any::<u64>()).prop_map(
        |(vars, domain, constraints, arity_cap, density, k, seed)| GeneratorConfig {
            vars,
            domain,
            constraints,
            arity_cap,
            density,
            k,
            seed,
            ..GeneratorConfig::default()
        },
    )
}

fn instance_and_values() -> impl Strategy<Value = (InstanceDocument, Vec<usize>)> {
    config().prop_flat_map(|cfg| {
        let doc = random_instance(&cfg, &mut cfg.rng());
        let d = doc.domain.len();
        (Just(doc), proptest::collection::vec(0..d, cfg.vars))
    })
}

fn assignment(values: &[usize]) -> Assignment {
    Assignment::from_pairs(
        values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(i, &v)| (Var(i as u32), Val(v as u32))),
    )
    .unwrap()
}

/// Evaluates every constraint from the document alone.
fn doc_satisfies(doc: &InstanceDocument, values: &[usize]) -> bool {
    let label: HashMap<&str, &str> = doc
        .variables
        .iter()
        .zip(values)
        .map(|(v, &d)| (v.as_str(), doc.domain[d].as_str()))
        .collect();
    doc.constraints.iter().all(|c| {
        let tuple: Vec<String> = c.vars.iter().map(|v| label[v.as_str()].to_string()).collect();
        doc.relations[&c.relation].tuples.contains(&tuple)
    })
}

fn mask_assignment(mask: u8) -> Assignment {
    Assignment::from_pairs((0..4).filter(|i| mask >> i & 1 == 1).map(|i| (Var(i), Val(1)))).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn restrict_is_idempotent((doc, values) in instance_and_values(), keep in any::<u8>()) {
        let a = assignment(&values);
        let vars: Vec<Var> = (0..doc.variables.len() as u32).filter(|i| keep >> (i % 8) & 1 == 1).map(Var).collect();
        let once = restrict(&a, &vars);
        prop_assert_eq!(restrict(&once, &vars), once.clone());
        prop_assert!(once.is_subset_of(&a));
        prop_assert!(once.pairs().iter().all(|(v, _)| vars.contains(v)));
    }

    #[test]
    fn satisfies_matches_document_evaluation((doc, values) in instance_and_values()) {
        let inst = CspInstance::from_document(doc.clone()).unwrap();
        prop_assert_eq!(inst.satisfies_all(&assignment(&values)), doc_satisfies(&doc, &values));
    }

    #[test]
    fn document_round_trip(cfg in config()) {
        let doc = cfg.generate();
        let text = doc.to_json();
        prop_assert_eq!(&InstanceDocument::from_json(&text).unwrap(), &doc);
        let inst = CspInstance::from_document(doc).unwrap();
        prop_assert_eq!(inst.to_document().to_json(), text);
    }

    #[test]
    fn normalization_preserves_small_solutions((doc, values) in instance_and_values()) {
        let inst = CspInstance::from_document(doc).unwrap();
        let a = assignment(&values);
        let normalized = normalize(&inst, inst.k());
        if a.size() <= inst.k() {
            prop_assert_eq!(normalized.accepts(&a), inst.satisfies_all(&a));
        }
        for block in normalized.blocks() {
            prop_assert!(block.members().iter().all(|m| m.size() <= inst.k()));
        }
    }

    #[test]
    fn tables_are_deterministic(cfg in config()) {
        let inst = CspInstance::from_document(cfg.generate()).unwrap();
        let first = build_tables(&normalize(&inst, inst.k()), BuildOptions::default()).unwrap();
        let second = build_tables(&normalize(&inst, inst.k()), BuildOptions::default()).unwrap();
        prop_assert_eq!(first.dump(&inst), second.dump(&inst));
        prop_assert_eq!(first.stats(), second.stats());
    }

    #[test]
    fn mobius_round_trip(set in proptest::collection::btree_set(1u8..16, 0..12), seed in proptest::collection::vec(-100i64..100, 12)) {
        let mut masks: Vec<u8> = set.into_iter().collect();
        masks.insert(0, 0);
        let poset = FinitePoset::new(masks.clone(), |a: &u8, b: &u8| a & b == *a);
        let f = IntegerWeighting(seed[..masks.len()].iter().map(|&v| BigInt::from(v)).collect());
        let g = accumulate(&poset, &f).unwrap();
        prop_assert_eq!(invert(&poset, &g).unwrap(), f);
    }

    #[test]
    fn unit_sum_agrees_with_inversion(set in proptest::collection::btree_set(0u8..16, 1..10)) {
        let h: Vec<Assignment> = set.iter().map(|&m| mask_assignment(m)).collect();
        let f = unit_sum_solution(&h).unwrap();
        // h plus an artificial bottom, with g = 1 on h and 0 on the bottom
        let elements: Vec<Option<u8>> = std::iter::once(None).chain(set.iter().map(|&m| Some(m))).collect();
        let poset = FinitePoset::new(elements.clone(), |a: &Option<u8>, b: &Option<u8>| match (a, b) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(x), Some(y)) => x & y == *x,
        });
        let g = IntegerWeighting(elements.iter().map(|e| BigInt::from(e.is_some() as i64)).collect());
        let inverted = invert(&poset, &g).unwrap();
        prop_assert_eq!(&inverted.0[0], &BigInt::from(0));
        let expected: Vec<BigInt> = f.iter().map(|&v| BigInt::from(v)).collect();
        prop_assert_eq!(&inverted.0[1..], &expected[..]);
    }

    #[test]
    fn sub_truncates_and_div2_floors(a in any::<u32>(), b in any::<u32>()) {
        let src = format!("LOADI {a}\nSTORE 1\nLOADI {b}\nSTORE 2\nLOAD 1\nSUB 2\nSTORE 3\nLOAD 1\nDIV2\nSTORE 4\nACCEPT");
        let program = assemble(&src).unwrap();
        let cfg = MachineConfig { record_trace: true, ..MachineConfig::default() };
        let report = run(&program, &[], &GuessResolver::Tape(vec![]), &cfg).unwrap();
        let trace = report.trace.unwrap();
        let written = |reg: usize| trace.iter().rev().find(|t| matches!(t.instr, Instr::Store(r) if r == reg)).unwrap().stored[0];
        prop_assert_eq!(written(3), (a as u64).saturating_sub(b as u64));
        prop_assert_eq!(written(4), a as u64 / 2);
    }

    #[test]
    fn audit_counters_match_trace(program in random_program(), tape in proptest::collection::vec(0u64..4, 8), init in proptest::collection::vec((0usize..6, 0u64..8), 0..4)) {
        let cfg = MachineConfig { budget: 200, record_trace: true, ..MachineConfig::default() };
        // guesses are clamped by the program to [0, 3]
        let Ok(report) = run(&program, &init, &GuessResolver::Tape(tape), &cfg) else { return Ok(()) };
        let trace = report.trace.clone().unwrap();
        let audit = report.primary();
        prop_assert_eq!(audit.total_steps, trace.len() as u64);
        let guesses: Vec<u64> = trace.iter().filter(|t| t.guess.is_some()).map(|t| t.step).collect();
        prop_assert_eq!(&audit.nondet_steps, &guesses);
        let max_reg = trace.iter().flat_map(|t| t.touched.iter().copied()).chain(init.iter().map(|p| p.0)).max().unwrap_or(0);
        prop_assert_eq!(audit.max_register_index, max_reg);
        let max_val = trace.iter().flat_map(|t| t.stored.iter().copied()).chain(init.iter().map(|p| p.1)).max().unwrap_or(0);
        prop_assert_eq!(audit.max_value_stored, max_val);
        let tail = guesses.first().map_or(0, |&g| trace.len() as u64 - g + 1);
        prop_assert_eq!(audit.tail_depth(), tail);
        if report.outcome == Outcome::OutOfBudget {
            prop_assert_eq!(audit.total_steps, 200);
        }
    }
}

/// Straight-line and looping programs over registers 0..6, every GUESS preceded by `LOADI 3`.
fn random_program() -> impl Strategy<Value = NramProgram> {
    let instr = (0u8..11, 0usize..6, 0u64..8, 0usize..12).prop_map(|(op, r, c, target)| match op {
        0 => vec![Instr::LoadI(c)],
        1 => vec![Instr::Load(r)],
        2 => vec![Instr::Store(r)],
        3 => vec![Instr::Add(r)],
        4 => vec![Instr::Sub(r)],
        5 => vec![Instr::Div2],
        6 => vec![Instr::JZero(target)],
        7 => vec![Instr::Jump(target)],
        8 => vec![Instr::LoadI(3), Instr::Guess],
        9 => vec![Instr::Accept],
        _ => vec![Instr::Reject],
    });
    proptest::collection::vec(instr, 1..12).prop_map(|chunks| {
        let mut instrs: Vec<Instr> = chunks.into_iter().flatten().collect();
        let len = instrs.len();
        for i in &mut instrs {
            if let Instr::Jump(t) | Instr::JZero(t) = i {
                *t %= len + 1;
            }
        }
        NramProgram::new(instrs)
    })
}
