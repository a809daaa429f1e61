//! End-to-end restructuring: graph, modules, layouts, placement, and the
//! built-in semantic-preservation check.

use std::collections::BTreeMap;

use crate::addr::CellAddress;
use crate::analysis::{build_graph, classify, find_cycles, CellClassification, DependencyGraph};
use crate::error::{Error, Result};
use crate::eval::{evaluate, evaluate_with_options, value_diff};
use crate::layout::{emit_layout, place_and_rewrite, Placement, StructuredLayout};
use crate::structure::{modularize, InputGrouping, ModuleGraph};
use crate::workbook::Workbook;

#[derive(Debug, Clone, Copy, Default)]
pub struct RestructureOptions {
    pub input_grouping: InputGrouping,
    pub empty_as_zero: bool,
}

/// Everything the restructure pipeline produced, including the
/// verification evidence.
#[derive(Debug, Clone)]
pub struct Restructured {
    pub graph: DependencyGraph,
    pub classification: CellClassification,
    pub module_graph: ModuleGraph,
    pub layouts: Vec<StructuredLayout>,
    pub placement: Placement,
    /// Cells whose values changed (must be empty for a sound result).
    pub diffs: Vec<(CellAddress, f64, f64)>,
}

impl Restructured {
    pub fn workbook(&self) -> &Workbook {
        &self.placement.workbook
    }

    pub fn origin_map(&self) -> &BTreeMap<CellAddress, CellAddress> {
        &self.placement.origin_map
    }
}

/// Runs the full pipeline. Fails on reference errors or cycles; the
/// returned `diffs` list is the semantic-preservation check (empty means
/// the structured workbook evaluates identically to the original).
pub fn restructure(wb: &Workbook, options: RestructureOptions) -> Result<Restructured> {
    let graph = build_graph(wb, options.empty_as_zero)?;
    let cycles = find_cycles(&graph);
    if !cycles.is_empty() {
        return Err(Error::Cycles(cycles));
    }
    let classification = classify(wb, &graph);
    let module_graph = modularize(wb, &graph, &classification, options.input_grouping)?;
    let layouts: Vec<StructuredLayout> = module_graph.modules.iter().map(emit_layout).collect();
    let placement = place_and_rewrite(&layouts, &module_graph.input_modules, wb)?;

    let before = evaluate_with_options(wb, options.empty_as_zero)?;
    let after = evaluate(&placement.workbook)?;
    let diffs = value_diff(&before, &after, &placement.origin_map)?;

    Ok(Restructured {
        graph,
        classification,
        module_graph,
        layouts,
        placement,
        diffs,
    })
}
