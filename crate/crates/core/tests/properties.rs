//! Cross-module invariants checked over random inputs.

mod common;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::{Rng as _, SeedableRng as _};
use rand_chacha::ChaCha8Rng;

use sheetstruct::addr::CellAddress;
use sheetstruct::analysis::{build_graph, classify, find_cycles, replication_classes};
use sheetstruct::eval::{evaluate, identity_mapping, value_diff, values_match};
use sheetstruct::formula::{parse_formula, CellRef, FormulaAst, Func};
use sheetstruct::structure::{modularize, InputGrouping};
use sheetstruct::workbook::{CellContent, Workbook};

fn cell_ref_strategy(lo: u32, hi: u32) -> impl Strategy<Value = CellRef> {
    (lo..hi, lo..hi, any::<bool>(), any::<bool>()).prop_map(|(col, row, abs_col, abs_row)| {
        CellRef {
            addr: CellAddress::new(col, row),
            abs_col,
            abs_row,
        }
    })
}

fn range_strategy(lo: u32, hi: u32) -> impl Strategy<Value = FormulaAst> {
    (cell_ref_strategy(lo, hi), cell_ref_strategy(lo, hi)).prop_map(|(a, b)| {
        let (sc, ec) = if a.addr.col <= b.addr.col {
            ((a.addr.col, a.abs_col), (b.addr.col, b.abs_col))
        } else {
            ((b.addr.col, b.abs_col), (a.addr.col, a.abs_col))
        };
        let (sr, er) = if a.addr.row <= b.addr.row {
            ((a.addr.row, a.abs_row), (b.addr.row, b.abs_row))
        } else {
            ((b.addr.row, b.abs_row), (a.addr.row, a.abs_row))
        };
        FormulaAst::Range(
            CellRef {
                addr: CellAddress::new(sc.0, sr.0),
                abs_col: sc.1,
                abs_row: sr.1,
            },
            CellRef {
                addr: CellAddress::new(ec.0, er.0),
                abs_col: ec.1,
                abs_row: er.1,
            },
        )
    })
}

/// Grammar-reachable ASTs: literals are non-negative (negation is a
/// unary node), ranges appear only as aggregate arguments, IF is ternary.
fn ast_strategy(lo: u32, hi: u32) -> impl Strategy<Value = FormulaAst> {
    let leaf = prop_oneof![
        (0u32..4000).prop_map(|n| FormulaAst::Number(n as f64 / 4.0)),
        cell_ref_strategy(lo, hi).prop_map(FormulaAst::Ref),
    ];
    leaf.prop_recursive(4, 48, 4, move |inner| {
        let unary = inner.clone().prop_map(|operand| FormulaAst::Unary {
            op: sheetstruct::formula::UnaryOp::Neg,
            operand: Box::new(operand),
        });
        let binary = (
            prop_oneof![
                Just(sheetstruct::formula::BinaryOp::Add),
                Just(sheetstruct::formula::BinaryOp::Sub),
                Just(sheetstruct::formula::BinaryOp::Mul),
                Just(sheetstruct::formula::BinaryOp::Div),
                Just(sheetstruct::formula::BinaryOp::Eq),
                Just(sheetstruct::formula::BinaryOp::Lt),
                Just(sheetstruct::formula::BinaryOp::Gt),
                Just(sheetstruct::formula::BinaryOp::Le),
                Just(sheetstruct::formula::BinaryOp::Ge),
                Just(sheetstruct::formula::BinaryOp::Ne),
            ],
            inner.clone(),
            inner.clone(),
        )
            .prop_map(|(op, left, right)| FormulaAst::Binary {
                op,
                left: Box::new(left),
                right: Box::new(right),
            });
        let aggregate = (
            prop_oneof![
                Just(Func::Sum),
                Just(Func::Average),
                Just(Func::Min),
                Just(Func::Max)
            ],
            proptest::collection::vec(prop_oneof![inner.clone(), range_strategy(lo, hi)], 1..4),
        )
            .prop_map(|(func, args)| FormulaAst::Call { func, args });
        let selection =
            (inner.clone(), inner.clone(), inner.clone()).prop_map(|(c, t, e)| FormulaAst::Call {
                func: Func::If,
                args: vec![c, t, e],
            });
        prop_oneof![unary, binary, aggregate, selection]
    })
}

proptest! {
    #[test]
    fn print_then_parse_is_identity(ast in ast_strategy(1, 60)) {
        let text = ast.to_source();
        let reparsed = parse_formula(&text).unwrap();
        prop_assert_eq!(reparsed, ast, "text: {}", text);
    }

    #[test]
    fn normal_form_is_translation_invariant(
        ast in ast_strategy(10, 40),
        origin_col in 10u32..40,
        origin_row in 10u32..40,
        drow in -5i64..=5,
        dcol in -5i64..=5,
    ) {
        let origin = CellAddress::new(origin_col, origin_row);
        let shifted = ast.translate(drow, dcol).expect("stays in grid");
        let shifted_origin = origin.offset(drow, dcol).expect("stays in grid");
        prop_assert_eq!(
            shifted.normal_form(shifted_origin),
            ast.normal_form(origin)
        );
    }

    #[test]
    fn precedents_have_no_duplicates(ast in ast_strategy(1, 30)) {
        let precedents = ast.precedents();
        let unique: BTreeSet<_> = precedents.iter().collect();
        prop_assert_eq!(unique.len(), precedents.len());
        // Everything returned is actually mentioned.
        let mut mentioned = BTreeSet::new();
        collect_all_refs(&ast, &mut mentioned);
        for p in &precedents {
            prop_assert!(mentioned.contains(p));
        }
    }
}

fn collect_all_refs(ast: &FormulaAst, out: &mut BTreeSet<CellAddress>) {
    match ast {
        FormulaAst::Number(_) => {}
        FormulaAst::Ref(r) => {
            out.insert(r.addr);
        }
        FormulaAst::Range(s, e) => {
            for row in s.addr.row..=e.addr.row {
                for col in s.addr.col..=e.addr.col {
                    out.insert(CellAddress::new(col, row));
                }
            }
        }
        FormulaAst::Unary { operand, .. } => collect_all_refs(operand, out),
        FormulaAst::Binary { left, right, .. } => {
            collect_all_refs(left, out);
            collect_all_refs(right, out);
        }
        FormulaAst::Call { args, .. } => {
            for a in args {
                collect_all_refs(a, out);
            }
        }
    }
}

#[test]
fn fcsv_round_trip_on_random_models() {
    for seed in 0..120u64 {
        let wb = common::random_acyclic_model(seed).workbook("round-trip");
        let mut bytes = Vec::new();
        sheetstruct::fcsv::save_workbook(&wb, &mut bytes).unwrap();
        let again = sheetstruct::fcsv::load_workbook(&bytes[..], "again").unwrap();
        assert_eq!(wb, again, "seed {seed}");

        // Canonical output is a fixed point of save∘load.
        let mut bytes2 = Vec::new();
        sheetstruct::fcsv::save_workbook(&again, &mut bytes2).unwrap();
        assert_eq!(bytes, bytes2, "seed {seed}");
    }
}

#[test]
fn stored_formula_sources_reparse_to_stored_asts() {
    for seed in 0..60u64 {
        let wb = common::random_acyclic_model(seed).workbook("reparse");
        for (a, content) in wb.iter() {
            if let CellContent::Formula { source, ast } = content {
                assert_eq!(&parse_formula(source).unwrap(), ast, "{a} in seed {seed}");
            }
        }
    }
}

#[test]
fn cycle_detection_agrees_with_kahn() {
    let mut cyclic_seen = 0;
    let mut acyclic_seen = 0;
    for seed in 0..300u64 {
        let wb = common::random_maybe_cyclic_model(seed).workbook("cycles");
        let g = build_graph(&wb, false).unwrap();
        let cycles = find_cycles(&g);
        let order = g.topological_order();
        assert_eq!(
            cycles.is_empty(),
            order.is_some(),
            "seed {seed}: SCC and Kahn disagree"
        );
        if cycles.is_empty() {
            acyclic_seen += 1;
            let order = order.unwrap();
            let position: std::collections::BTreeMap<_, _> =
                order.iter().enumerate().map(|(i, a)| (*a, i)).collect();
            for (p, d) in &g.edges {
                assert!(
                    position[p] < position[d],
                    "seed {seed}: order violates {p}->{d}"
                );
            }
        } else {
            cyclic_seen += 1;
        }
    }
    assert!(cyclic_seen > 10, "corpus exercises cyclic graphs");
    assert!(acyclic_seen > 10, "corpus exercises acyclic graphs");
}

#[test]
fn graph_edge_count_is_sum_of_deduped_precedents() {
    for seed in 0..60u64 {
        let wb = common::random_acyclic_model(seed).workbook("edges");
        let g = build_graph(&wb, false).unwrap();
        let mut expected = 0;
        for (_, content) in wb.iter() {
            if let CellContent::Formula { ast, .. } = content {
                expected += ast.precedents().len();
            }
        }
        assert_eq!(g.edges.len(), expected, "seed {seed}");
    }
}

#[test]
fn classification_partitions_nonempty_cells() {
    for seed in 0..60u64 {
        let wb = common::random_acyclic_model(seed).workbook("classify");
        let g = build_graph(&wb, false).unwrap();
        let c = classify(&wb, &g);
        assert_eq!(
            c.inputs.len() + c.calculated.len() + c.labels.len(),
            wb.len(),
            "seed {seed}"
        );
        assert!(c.inputs.is_disjoint(&c.calculated));
        assert!(c.inputs.is_disjoint(&c.labels));
        assert!(c.calculated.is_disjoint(&c.labels));
        // No input has incoming edges.
        for (_, d) in &g.edges {
            assert!(
                !c.inputs.contains(d),
                "seed {seed}: input {d} has a precedent"
            );
        }
    }
}

#[test]
fn replication_classes_partition_copied_formulas() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _case in 0..40 {
        let mut wb = Workbook::new("replication");
        // A block of inputs so references always resolve.
        for row in 1..=10u32 {
            for col in 1..=4u32 {
                wb.set(
                    CellAddress::new(col, row),
                    CellContent::Number(rng.gen_range(0..50) as f64),
                );
            }
        }
        // A few base formulas, each copied to several translated homes.
        let bases = ["=A1+B1", "=SUM(A1:A3)*2", "=A1*$B$1"];
        let n_copies: Vec<usize> = (0..3).map(|_| rng.gen_range(0..4)).collect();
        let mut expected_sizes = Vec::new();
        for (i, base) in bases.iter().enumerate() {
            let ast = parse_formula(base).unwrap();
            let home = CellAddress::new(6 + i as u32, 1);
            wb.set(
                home,
                CellContent::Formula {
                    source: base.to_string(),
                    ast: ast.clone(),
                },
            );
            for k in 0..n_copies[i] {
                let delta = (k + 1) as i64;
                let moved = ast.translate(delta, 0).unwrap();
                let target = home.offset(delta, 0).unwrap();
                wb.set(
                    target,
                    CellContent::Formula {
                        source: moved.to_source(),
                        ast: moved,
                    },
                );
            }
            if n_copies[i] + 1 >= 2 {
                expected_sizes.push(n_copies[i] + 1);
            }
        }
        let classes = replication_classes(&wb);
        let mut sizes: Vec<usize> = classes.iter().map(|c| c.members.len()).collect();
        sizes.sort();
        expected_sizes.sort();
        assert_eq!(sizes, expected_sizes);
        // Partition: no member in two classes; every member shares the form.
        let mut seen = BTreeSet::new();
        for class in &classes {
            assert!(class.members.len() >= 2);
            for m in &class.members {
                assert!(seen.insert(*m), "member {m} appears twice");
                match wb.get(*m) {
                    Some(CellContent::Formula { ast, .. }) => {
                        assert_eq!(ast.normal_form(*m), class.normal_form)
                    }
                    other => panic!("non-formula member {other:?}"),
                }
            }
        }
    }
}

#[test]
fn evaluation_perturbation_is_local() {
    for seed in 0..40u64 {
        let model = common::random_acyclic_model(seed);
        let wb = model.workbook("locality");
        let g = build_graph(&wb, false).unwrap();
        let c = classify(&wb, &g);
        let Some(input) = c.inputs.iter().next().copied() else {
            continue;
        };
        let base = match evaluate(&wb) {
            Ok(v) => v,
            Err(_) => continue, // division by zero in this sample
        };

        let mut perturbed = wb.clone();
        let old = match wb.get(input) {
            Some(CellContent::Number(v)) => *v,
            _ => unreachable!(),
        };
        perturbed.set(input, CellContent::Number(old + 1.0));
        let Ok(new) = evaluate(&perturbed) else {
            continue;
        };

        // Reachable set from the perturbed input.
        let mut reachable = BTreeSet::new();
        let mut stack = vec![input];
        while let Some(n) = stack.pop() {
            for d in g.dependents(n) {
                if reachable.insert(d) {
                    stack.push(d);
                }
            }
        }
        let diffs = value_diff(&base, &new, &identity_mapping(&base)).unwrap();
        for (cell, _, _) in diffs {
            assert!(
                cell == input || reachable.contains(&cell),
                "seed {seed}: {cell} changed but is not downstream of {input}"
            );
        }
    }
}

/// A deliberately different evaluation strategy: sweep all cells,
/// computing any whose precedents are known, until nothing changes.
fn fixpoint_evaluate(wb: &Workbook) -> BTreeMap<CellAddress, f64> {
    let mut values: BTreeMap<CellAddress, f64> = BTreeMap::new();
    for (a, content) in wb.iter() {
        if let CellContent::Number(v) = content {
            values.insert(a, *v);
        }
    }
    loop {
        let mut progressed = false;
        for (a, content) in wb.iter() {
            if values.contains_key(&a) {
                continue;
            }
            if let CellContent::Formula { ast, .. } = content {
                if ast.precedents().iter().all(|p| values.contains_key(p)) {
                    let mut probe = Workbook::new("probe");
                    for p in ast.precedents() {
                        probe.set(p, CellContent::Number(values[&p]));
                    }
                    probe.set(a, content.clone());
                    match evaluate(&probe) {
                        Ok(v) => {
                            values.insert(a, v.get(a).unwrap());
                            progressed = true;
                        }
                        Err(_) => return values, // division by zero; caller skips
                    }
                }
            }
        }
        if !progressed {
            return values;
        }
    }
}

#[test]
fn evaluation_is_order_independent() {
    for seed in 0..30u64 {
        let wb = common::random_acyclic_model(seed).workbook("order");
        let Ok(reference) = evaluate(&wb) else {
            continue;
        };
        let sweeped = fixpoint_evaluate(&wb);
        assert_eq!(
            sweeped.len(),
            reference.values.len(),
            "seed {seed}: fixpoint sweep stalled"
        );
        for (cell, value) in &reference.values {
            assert_eq!(sweeped.get(cell), Some(value), "seed {seed}: {cell}");
        }
    }
}

#[test]
fn sum_only_models_scale_linearly() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _case in 0..30 {
        let mut wb = Workbook::new("linear");
        let n = rng.gen_range(2..=8u32);
        for row in 1..=n {
            wb.set(
                CellAddress::new(1, row),
                CellContent::Number(rng.gen_range(-30..=30) as f64),
            );
        }
        wb.set(
            CellAddress::new(2, 1),
            CellContent::formula(&format!("=SUM(A1:A{n})")).unwrap(),
        );
        wb.set(
            CellAddress::new(2, 2),
            CellContent::formula("=B1+SUM(A1:A2)").unwrap(),
        );
        let base = evaluate(&wb).unwrap();

        let k = rng.gen_range(2..=5) as f64;
        let mut scaled = wb.clone();
        for row in 1..=n {
            let a = CellAddress::new(1, row);
            let v = match wb.get(a) {
                Some(CellContent::Number(v)) => *v,
                _ => unreachable!(),
            };
            scaled.set(a, CellContent::Number(k * v));
        }
        let after = evaluate(&scaled).unwrap();
        for (cell, value) in &base.values {
            assert!(
                values_match(k * value, after.get(*cell).unwrap()),
                "cell {cell}: {} vs {}",
                k * value,
                after.get(*cell).unwrap()
            );
        }
    }
}

#[test]
fn modularization_is_insertion_order_independent() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for seed in 0..40u64 {
        let model = common::random_acyclic_model(seed);
        let reference = {
            let wb = model.workbook("ref");
            let g = build_graph(&wb, false).unwrap();
            let c = classify(&wb, &g);
            modularize(&wb, &g, &c, InputGrouping::Single).unwrap()
        };
        let ref_roots: Vec<CellAddress> = reference.modules.iter().map(|m| m.root_addr).collect();
        for _shuffle in 0..3 {
            let wb = model.shuffled_workbook("shuffled", &mut rng);
            let g = build_graph(&wb, false).unwrap();
            let c = classify(&wb, &g);
            let mg = modularize(&wb, &g, &c, InputGrouping::Single).unwrap();
            let roots: Vec<CellAddress> = mg.modules.iter().map(|m| m.root_addr).collect();
            assert_eq!(roots, ref_roots, "seed {seed}");
        }
    }
}
