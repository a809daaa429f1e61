//! Awkward model shapes pushed through the whole pipeline. Each case
//! must restructure with an empty preservation diff.

mod common;

use sheetstruct::eval::evaluate;
use sheetstruct::pipeline::{restructure, RestructureOptions};
use sheetstruct::structure::InputGrouping;
use sheetstruct::workbook::Workbook;

fn load(text: &str) -> Workbook {
    sheetstruct::fcsv::load_workbook(text.as_bytes(), "case").unwrap()
}

fn assert_preserved(text: &str) {
    for grouping in [InputGrouping::Single, InputGrouping::PerConsumer] {
        let wb = load(text);
        let options = RestructureOptions {
            input_grouping: grouping,
            empty_as_zero: false,
        };
        let result = restructure(&wb, options).unwrap();
        assert!(
            result.diffs.is_empty(),
            "diffs for {text:?} under {grouping:?}: {:?}",
            result.diffs
        );
        // The output itself loads and evaluates after a save round trip.
        let mut bytes = Vec::new();
        sheetstruct::fcsv::save_workbook(result.workbook(), &mut bytes).unwrap();
        let reloaded = sheetstruct::fcsv::load_workbook(&bytes[..], "reloaded").unwrap();
        assert_eq!(&reloaded, result.workbook());
        evaluate(&reloaded).unwrap();
    }
}

#[test]
fn bare_reference_formula() {
    assert_preserved("7,=A1\n");
}

#[test]
fn nested_selections() {
    assert_preserved("1\n2\n3\n4\n,\"=IF(A1>0,IF(A2>1,A3,A4),A1+A2)\"\n");
}

#[test]
fn selection_condition_with_its_own_subtree() {
    // The condition references a calculated cell that must land as a
    // condition row with children of its own.
    assert_preserved("3,=A1*2\n5\n9\n,\"=IF(B1>4,A2,A3)\"\n");
}

#[test]
fn aggregate_over_expressions() {
    assert_preserved("2,3,\"=SUM(A1*2,B1+1,4)\"\n");
}

#[test]
fn aggregate_nested_in_condition() {
    assert_preserved("1\n8\n,\"=IF(SUM(A1:A2)>5,MIN(A1:A2),7)\"\n");
}

#[test]
fn mixed_range_and_scalar_average() {
    // A2 is a formula, so the range members land on non-consecutive
    // rows and the AVERAGE must splice them in as explicit arguments
    // while keeping the denominator at 4.
    assert_preserved("3\n=A1*2\n5\n,\"=AVERAGE(A1:A3,7)\"\n");
}

#[test]
fn empty_as_zero_range_member() {
    let wb = load("1\n\n3\n,=SUM(A1:A3)\n");
    let options = RestructureOptions {
        input_grouping: InputGrouping::Single,
        empty_as_zero: true,
    };
    let result = restructure(&wb, options).unwrap();
    assert!(result.diffs.is_empty());
    // The implicit zero became a real input cell.
    assert!(result
        .module_graph
        .input_modules
        .iter()
        .any(|im| im.cells.contains(&common::addr("A2"))));
    let values = evaluate(result.workbook()).unwrap();
    let root = result.placement.row_positions[0][0];
    assert_eq!(values.get(root), Some(4.0));
}

#[test]
fn shared_cell_used_from_branch_and_sequence() {
    // B1 is referenced by a selection branch and by a plain sum.
    assert_preserved("2,=A1+1,\"=IF(A1>0,B1,A1)\",=B1+C1\n");
}

#[test]
fn chain_of_shared_modules() {
    // s1 <- s2 <- two users each: modules referencing modules.
    assert_preserved("1,=A1+1,=B1*2,=B1*3,=C1+D1,=C1-D1,=E1+F1\n");
}

#[test]
fn module_chain_three_deep() {
    let text = "1,=A1+1,=B1+1,=C1+B1,=D1+C1,=E1+D1,=F1+E1\n";
    // Every interior cell has two dependents, so each becomes a module.
    let wb = load(text);
    let result = restructure(&wb, RestructureOptions::default()).unwrap();
    assert!(result.module_graph.modules.len() >= 4);
    assert_preserved(text);
}

#[test]
fn long_dependency_chain() {
    // One formula per row, each referencing the previous row; the layout
    // gets 120 levels deep.
    let mut chain = String::from("1,=A1\n");
    for row in 2..=120 {
        chain.push_str(&format!(",=B{}+1\n", row - 1));
    }
    assert_preserved(&chain);
}

#[test]
fn cell_shared_across_two_terminals() {
    // B1 feeds two separate terminal charts, so its module is referenced
    // from two different module bodies.
    let text = "4,=A1+1,=B1*2,=B1*3\n";
    let wb = load(text);
    let result = restructure(&wb, RestructureOptions::default()).unwrap();
    assert_eq!(result.module_graph.modules.len(), 3);
    assert_eq!(
        result.module_graph.edges.len(),
        2,
        "both terminals reference the shared module"
    );
    assert_preserved(text);
}

#[test]
fn numbers_only_model_keeps_inputs() {
    let wb = load("5\n6\n");
    let result = restructure(&wb, RestructureOptions::default()).unwrap();
    assert!(result.module_graph.modules.is_empty());
    assert_eq!(result.module_graph.input_modules.len(), 1);
    assert!(result.diffs.is_empty());
    let values = evaluate(result.workbook()).unwrap();
    assert_eq!(values.values.len(), 2);
}

#[test]
fn labels_only_model_is_empty_output() {
    let wb = load("alpha,beta\n");
    let result = restructure(&wb, RestructureOptions::default()).unwrap();
    assert!(result.module_graph.modules.is_empty());
    assert!(result.module_graph.input_modules.is_empty());
    assert!(result.workbook().is_empty());
}

#[test]
fn constant_branches_get_rows() {
    assert_preserved("1,\"=IF(A1>0,5,7)\"\n");
}

#[test]
fn repeated_cell_in_both_branches() {
    assert_preserved("4,\"=IF(A1>2,A1,A1)\"\n");
}
