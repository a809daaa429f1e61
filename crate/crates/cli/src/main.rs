//! Command-line front end: restructure, audit, eval, and diff.
//!
//! Exit codes: 0 success (diff: no discrepancies), 1 diff found
//! discrepancies, 2 parse/reference error, 3 cycle detected,
//! 4 semantic-preservation check failed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sheetstruct::addr::CellAddress;
use sheetstruct::analysis::{build_graph, classify, find_cycles, replication_classes};
use sheetstruct::eval::{evaluate_with_options, format_value, value_diff};
use sheetstruct::layout::emit_overview_dot;
use sheetstruct::pipeline::{restructure, RestructureOptions};
use sheetstruct::structure::InputGrouping;
use sheetstruct::workbook::{CellContent, Workbook};
use sheetstruct::Error;

#[derive(Parser)]
#[command(
    name = "sheetstruct",
    about = "Re-engineer flat spreadsheet models into structured, modular form",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Derive modules from a formula-CSV model and write the structured workbook
    Restructure {
        /// Input formula-CSV file
        input: PathBuf,
        /// Output path for the structured formula-CSV
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
        /// Also write the module-overview graph as DOT
        #[arg(long)]
        overview: Option<PathBuf>,
        /// How data-entry cells are grouped into input modules
        #[arg(long, value_enum, default_value_t = InputsArg::Single)]
        inputs: InputsArg,
        /// Treat references to empty cells as zero-valued inputs
        #[arg(long)]
        empty_as_zero: bool,
    },
    /// Report classification, terminals, shared cells, cycles, and replication classes
    Audit {
        /// Input formula-CSV file
        input: PathBuf,
        /// Report format
        #[arg(long, value_enum, default_value_t = FormatArg::Text)]
        format: FormatArg,
    },
    /// Evaluate every value cell and print address/value pairs
    Eval {
        /// Input formula-CSV file
        input: PathBuf,
    },
    /// Compare the evaluated values of two models
    Diff {
        /// Baseline formula-CSV file
        a: PathBuf,
        /// Comparison formula-CSV file; origin annotations in its comment
        /// column are used as the cell mapping when present
        b: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum InputsArg {
    Single,
    PerConsumer,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Restructure {
            input,
            output,
            overview,
            inputs,
            empty_as_zero,
        } => cmd_restructure(&input, &output, overview.as_deref(), inputs, empty_as_zero),
        Command::Audit { input, format } => cmd_audit(&input, format),
        Command::Eval { input } => cmd_eval(&input),
        Command::Diff { a, b } => cmd_diff(&a, &b),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Cycles(_) => 3,
        Error::PreservationFailed { .. } => 4,
        _ => 2,
    }
}

fn load(path: &Path) -> Result<Workbook, Error> {
    let file = std::fs::File::open(path)?;
    let name = path.to_string_lossy().into_owned();
    sheetstruct::fcsv::load_workbook(std::io::BufReader::new(file), &name)
}

fn cmd_restructure(
    input: &Path,
    output: &Path,
    overview: Option<&Path>,
    inputs: InputsArg,
    empty_as_zero: bool,
) -> Result<u8, Error> {
    let wb = load(input)?;
    let options = RestructureOptions {
        input_grouping: match inputs {
            InputsArg::Single => InputGrouping::Single,
            InputsArg::PerConsumer => InputGrouping::PerConsumer,
        },
        empty_as_zero,
    };
    let result = restructure(&wb, options)?;
    for warning in &result.module_graph.warnings {
        eprintln!("warning: {warning}");
    }
    if !result.diffs.is_empty() {
        for (cell, before, after) in &result.diffs {
            eprintln!(
                "preservation failure at {cell}: {} became {}",
                format_value(*before),
                format_value(*after)
            );
        }
        return Err(Error::PreservationFailed {
            count: result.diffs.len(),
        });
    }

    let file = std::fs::File::create(output)?;
    sheetstruct::fcsv::save_workbook(result.workbook(), std::io::BufWriter::new(file))?;
    if let Some(path) = overview {
        std::fs::write(path, emit_overview_dot(&result.module_graph))?;
    }

    let max_depth = result
        .layouts
        .iter()
        .map(|l| l.max_depth)
        .max()
        .unwrap_or(0);
    println!(
        "modules: {} calc, {} input; max depth {}",
        result.module_graph.modules.len(),
        result.module_graph.input_modules.len(),
        max_depth
    );
    for (module, layout) in result.module_graph.modules.iter().zip(&result.layouts) {
        println!(
            "module {}: {} ({} rows, depth {})",
            module.id,
            module.name,
            layout.rows.len(),
            layout.max_depth
        );
    }
    for im in &result.module_graph.input_modules {
        println!("input module {}: {} cells", im.name, im.cells.len());
    }
    Ok(0)
}

#[derive(Serialize)]
struct AuditReport {
    inputs: usize,
    calculated: usize,
    labels: usize,
    terminals: Vec<String>,
    shared: Vec<String>,
    cycles: Vec<Vec<String>>,
    replication_classes: Vec<ReplicationEntry>,
}

#[derive(Serialize)]
struct ReplicationEntry {
    normal_form: String,
    members: Vec<String>,
}

fn cmd_audit(input: &Path, format: FormatArg) -> Result<u8, Error> {
    let wb = load(input)?;
    let graph = build_graph(&wb, false)?;
    let classification = classify(&wb, &graph);
    let terminals = sheetstruct::structure::terminal_cells(&wb, &graph);
    let shared = sheetstruct::structure::shared_cells(&wb, &graph);
    let cycles = find_cycles(&graph);
    let classes = replication_classes(&wb);

    let report = AuditReport {
        inputs: classification.inputs.len(),
        calculated: classification.calculated.len(),
        labels: classification.labels.len(),
        terminals: terminals.iter().map(|a| a.to_string()).collect(),
        shared: shared.iter().map(|a| a.to_string()).collect(),
        cycles: cycles
            .iter()
            .map(|c| c.iter().map(|a| a.to_string()).collect())
            .collect(),
        replication_classes: classes
            .iter()
            .map(|c| ReplicationEntry {
                normal_form: c.normal_form.clone(),
                members: c.members.iter().map(|a| a.to_string()).collect(),
            })
            .collect(),
    };

    match format {
        FormatArg::Json => {
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("serializable")
            );
        }
        FormatArg::Text => {
            println!(
                "inputs: {}, calculated: {}, terminals: {}, shared: {}, cycles: {}, replication classes: {}",
                report.inputs,
                report.calculated,
                report.terminals.len(),
                report.shared.len(),
                report.cycles.len(),
                report.replication_classes.len()
            );
            println!("labels: {}", report.labels);
            if !report.terminals.is_empty() {
                println!("terminal cells: {}", report.terminals.join(", "));
            }
            if !report.shared.is_empty() {
                println!("shared cells: {}", report.shared.join(", "));
            }
            for cycle in &report.cycles {
                println!("cycle: {}", cycle.join(" -> "));
            }
            for class in &report.replication_classes {
                println!(
                    "replication class {}: {}",
                    class.normal_form,
                    class.members.join(", ")
                );
            }
        }
    }
    Ok(0)
}

fn cmd_eval(input: &Path) -> Result<u8, Error> {
    let wb = load(input)?;
    let values = evaluate_with_options(&wb, false)?;
    for (addr, value) in &values.values {
        println!("{addr}\t{}", format_value(*value));
    }
    Ok(0)
}

fn cmd_diff(path_a: &Path, path_b: &Path) -> Result<u8, Error> {
    let wb_a = load(path_a)?;
    let wb_b = load(path_b)?;
    let values_a = evaluate_with_options(&wb_a, false)?;
    let values_b = evaluate_with_options(&wb_b, false)?;

    // A structured workbook carries each row's origin address in its
    // comment column; use that mapping when only the second file has one.
    let ann_a = origin_annotations(&wb_a);
    let ann_b = origin_annotations(&wb_b);
    let mapping: BTreeMap<CellAddress, CellAddress> = if !ann_b.is_empty() && ann_a.is_empty() {
        ann_b
    } else {
        values_a.values.keys().map(|k| (*k, *k)).collect()
    };

    let diffs = value_diff(&values_a, &values_b, &mapping)?;
    if diffs.is_empty() {
        return Ok(0);
    }
    for (cell, va, vb) in &diffs {
        println!("{cell}\t{}\t{}", format_value(*va), format_value(*vb));
    }
    Ok(1)
}

/// Rows of a structured workbook end with a label spelling the original
/// cell address of the row's value. Collects origin -> value-cell pairs,
/// first claim winning.
fn origin_annotations(wb: &Workbook) -> BTreeMap<CellAddress, CellAddress> {
    // Per sheet row: rightmost address-shaped label and the value cells.
    type RowFacts = (Option<(u32, CellAddress)>, Vec<CellAddress>);
    let mut rows: BTreeMap<u32, RowFacts> = BTreeMap::new();
    for (addr, content) in wb.iter() {
        let entry = rows.entry(addr.row).or_default();
        match content {
            CellContent::Label(text) => {
                if let Ok(origin) = sheetstruct::addr::a1_to_address(text) {
                    // Rightmost address-shaped label in the row.
                    if text
                        .chars()
                        .all(|c| c.is_ascii_uppercase() || c.is_ascii_digit())
                    {
                        let keep = match entry.0 {
                            Some((col, _)) => addr.col > col,
                            None => true,
                        };
                        if keep {
                            entry.0 = Some((addr.col, origin));
                        }
                    }
                }
            }
            CellContent::Number(_) | CellContent::Formula { .. } => entry.1.push(addr),
        }
    }
    let mut mapping = BTreeMap::new();
    for (_, (annotation, value_cells)) in rows {
        if let (Some((ann_col, origin)), [value_cell]) = (annotation, value_cells.as_slice()) {
            if ann_col > value_cell.col {
                mapping.entry(origin).or_insert(*value_cell);
            }
        }
    }
    mapping
}
