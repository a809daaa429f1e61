//! sheetstruct re-engineers flat spreadsheet models into structured form.
//!
//! It parses cell formulas, derives the structure chart implicit in the
//! dependency graph, decomposes the chart into uniquely determined
//! tree-shaped modules (shared calculated cells become modules of their
//! own), and renders each module as an indented sheet region in which a
//! value's column encodes its depth. Data-entry cells are grouped into
//! separate input modules. A built-in evaluator verifies that the
//! structured workbook computes exactly the same values as the original.

pub mod addr;
pub mod analysis;
pub mod error;
pub mod eval;
pub mod fcsv;
pub mod formula;
pub mod layout;
pub mod pipeline;
pub mod structure;
pub mod workbook;

pub use addr::{a1_to_address, address_to_a1, CellAddress};
pub use analysis::{
    build_graph, classify, find_cycles, replication_classes, CellClassification, DependencyGraph,
    ReplicationClass,
};
pub use error::{Error, Result};
pub use eval::{evaluate, evaluate_with_options, value_diff, ValueMap};
pub use fcsv::{load_workbook, save_workbook};
pub use formula::{parse_formula, FormulaAst};
pub use layout::{emit_layout, emit_overview_dot, place_and_rewrite, StructuredLayout};
pub use pipeline::{restructure, RestructureOptions, Restructured};
pub use structure::{
    derive_chart, modularize, ChartKind, ChartNode, InputGrouping, InputModule, ModuleGraph,
    ModuleTree,
};
pub use workbook::{CellContent, Workbook};
