//! Renders modules as indented sheet regions (one column per depth
//! level), rewrites every formula for its new position, assembles the
//! structured workbook, and emits the module-overview graph.

use std::collections::BTreeMap;

use crate::addr::CellAddress;
use crate::error::{Error, Result};
use crate::formula::{expand_range, CellRef, FormulaAst};
use crate::structure::{ChartKind, ChartNode, InputModule, ModuleGraph, ModuleTree};
use crate::workbook::{CellContent, Workbook};

/// What a layout row's data cell will hold.
#[derive(Debug, Clone, PartialEq)]
pub enum ValueSource {
    /// A formula, rewritten to the new addresses at placement time.
    Formula(FormulaAst),
    /// A data-entry value; the row references its input-module cell.
    InputValue(f64),
    /// A reference to another module's root, by module name.
    ModuleRefName(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutRow {
    pub label: String,
    /// 1 = module root; children sit one deeper.
    pub depth: u32,
    pub value_source: ValueSource,
    pub origin: Option<CellAddress>,
}

/// A module rendered as ordered rows in pre-order depth-first sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredLayout {
    pub module_name: String,
    pub rows: Vec<LayoutRow>,
    pub max_depth: u32,
}

/// Renders a module tree as rows, root first. Selection branches carry
/// ` [if <cond>]` / ` [else]` label suffixes; rows for the condition's
/// own precedents carry ` [condition <cond>]`.
pub fn emit_layout(module: &ModuleTree) -> StructuredLayout {
    let mut rows = Vec::new();
    emit_rows(&module.root, 1, None, &mut rows);
    let max_depth = rows.iter().map(|r| r.depth).max().unwrap_or(1);
    StructuredLayout {
        module_name: module.name.clone(),
        rows,
        max_depth,
    }
}

fn emit_rows(node: &ChartNode, depth: u32, suffix: Option<&str>, rows: &mut Vec<LayoutRow>) {
    let mut label = node.label.clone();
    if let Some(s) = suffix {
        label.push_str(s);
    }
    let value_source = match node.kind {
        ChartKind::InputLeaf => ValueSource::InputValue(node.value.expect("input leaf value")),
        ChartKind::ModuleRef => ValueSource::ModuleRefName(node.label.clone()),
        _ => ValueSource::Formula(node.formula.clone().expect("formula node AST")),
    };
    rows.push(LayoutRow {
        label,
        depth,
        value_source,
        origin: node.source,
    });
    if node.kind == ChartKind::Selection {
        let cond = node.annotation.clone().unwrap_or_default();
        emit_rows(
            &node.children[0],
            depth + 1,
            Some(&format!(" [if {cond}]")),
            rows,
        );
        emit_rows(&node.children[1], depth + 1, Some(" [else]"), rows);
        for child in &node.condition_children {
            emit_rows(
                child,
                depth + 1,
                Some(&format!(" [condition {cond}]")),
                rows,
            );
        }
    } else {
        for child in node.all_children() {
            emit_rows(child, depth + 1, None, rows);
        }
    }
}

/// The assembled structured workbook plus bookkeeping for verification.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub workbook: Workbook,
    /// Original cell -> the output data cell standing for it (first
    /// occurrence in sheet order).
    pub origin_map: BTreeMap<CellAddress, CellAddress>,
    /// Data-cell address of every layout row, parallel to the input
    /// layouts.
    pub row_positions: Vec<Vec<CellAddress>>,
    /// Data-cell address of every input-module cell.
    pub input_positions: BTreeMap<CellAddress, CellAddress>,
}

/// Stacks modules vertically in the given (topological) order with a
/// name row above each and a blank row between, then the input modules
/// as label/value pairs. Labels sit in column 1 indented two spaces per
/// level; a row's data cell sits in column 1+depth; the comment column
/// (first column right of the deepest data column) records each row's
/// origin address, or the target module name on reference rows.
pub fn place_and_rewrite(
    layouts: &[StructuredLayout],
    input_modules: &[InputModule],
    original: &Workbook,
) -> Result<Placement> {
    let mut workbook = Workbook::new(&format!("{} (structured)", original.origin_name));
    let any_inputs = input_modules.iter().any(|im| !im.cells.is_empty());
    if layouts.is_empty() && !any_inputs {
        return Ok(Placement {
            workbook,
            origin_map: BTreeMap::new(),
            row_positions: Vec::new(),
            input_positions: BTreeMap::new(),
        });
    }

    let depth_cap = layouts
        .iter()
        .map(|l| l.max_depth)
        .max()
        .unwrap_or(0)
        .max(if any_inputs { 1 } else { 0 });
    let comment_col = 2 + depth_cap;
    if comment_col > crate::addr::MAX_COLUMN {
        return Err(Error::OutOfBounds {
            text: format!("module depth {depth_cap} exceeds the column limit"),
        });
    }

    // First pass: assign sheet rows to every block.
    let mut cursor: u32 = 1;
    let mut first_block = true;
    let mut name_rows: Vec<(u32, String)> = Vec::new();
    let mut row_positions: Vec<Vec<CellAddress>> = Vec::new();
    for layout in layouts {
        if !first_block {
            cursor += 1;
        }
        first_block = false;
        name_rows.push((cursor, layout.module_name.clone()));
        cursor += 1;
        let mut positions = Vec::with_capacity(layout.rows.len());
        for row in &layout.rows {
            positions.push(CellAddress::new(1 + row.depth, cursor));
            cursor += 1;
        }
        row_positions.push(positions);
    }
    let mut input_positions: BTreeMap<CellAddress, CellAddress> = BTreeMap::new();
    let mut input_rows: Vec<(u32, CellAddress)> = Vec::new();
    for im in input_modules {
        if !first_block {
            cursor += 1;
        }
        first_block = false;
        name_rows.push((cursor, im.name.clone()));
        cursor += 1;
        for cell in &im.cells {
            let pos = CellAddress::new(2, cursor);
            input_positions.insert(*cell, pos);
            input_rows.push((cursor, *cell));
            cursor += 1;
        }
    }

    // Root row of each module, for resolving module references.
    let mut root_positions: BTreeMap<CellAddress, CellAddress> = BTreeMap::new();
    for (layout, positions) in layouts.iter().zip(&row_positions) {
        if let (Some(row), Some(pos)) = (layout.rows.first(), positions.first()) {
            if let Some(origin) = row.origin {
                root_positions.insert(origin, *pos);
            }
        }
    }

    for (row, name) in &name_rows {
        workbook.set(CellAddress::new(1, *row), CellContent::Label(name.clone()));
    }

    let mut origin_claims: Vec<(CellAddress, CellAddress)> = Vec::new();
    for (layout, positions) in layouts.iter().zip(&row_positions) {
        let scopes = RowScopes::new(&layout.rows);
        for (i, row) in layout.rows.iter().enumerate() {
            let pos = positions[i];
            let label_text = format!("{}{}", "  ".repeat(row.depth as usize - 1), row.label);
            workbook.set(CellAddress::new(1, pos.row), CellContent::Label(label_text));

            let (content, comment) = match &row.value_source {
                ValueSource::Formula(ast) => {
                    let resolve = |target: CellAddress| -> Result<CellAddress> {
                        scopes
                            .resolve(i, target, &layout.rows, positions)
                            .ok_or_else(|| internal_unresolved(target, &layout.module_name))
                    };
                    let rewritten = rewrite_ast(ast, &resolve)?;
                    let comment = row.origin.map(|o| o.to_string());
                    (formula_content(rewritten), comment)
                }
                ValueSource::InputValue(_) => {
                    let origin = row.origin.expect("input rows carry their origin");
                    let target = *input_positions
                        .get(&origin)
                        .ok_or_else(|| internal_unresolved(origin, &layout.module_name))?;
                    (ref_content(target), Some(origin.to_string()))
                }
                ValueSource::ModuleRefName(name) => {
                    let origin = row.origin.expect("module refs carry their target");
                    let target = *root_positions
                        .get(&origin)
                        .ok_or_else(|| internal_unresolved(origin, &layout.module_name))?;
                    (ref_content(target), Some(name.clone()))
                }
            };
            workbook.set(pos, content);
            if let Some(text) = comment {
                workbook.set(
                    CellAddress::new(comment_col, pos.row),
                    CellContent::Label(text),
                );
            }
            if !matches!(row.value_source, ValueSource::ModuleRefName(_)) {
                if let Some(origin) = row.origin {
                    origin_claims.push((origin, pos));
                }
            }
        }
    }

    for (sheet_row, cell) in &input_rows {
        let value = match original.get(*cell) {
            Some(CellContent::Number(v)) => *v,
            None => 0.0, // implicit zero input
            other => unreachable!("input cells hold numbers, found {other:?}"),
        };
        workbook.set(
            CellAddress::new(1, *sheet_row),
            CellContent::Label(original.display_label(*cell)),
        );
        let pos = CellAddress::new(2, *sheet_row);
        workbook.set(pos, CellContent::Number(value));
        workbook.set(
            CellAddress::new(comment_col, *sheet_row),
            CellContent::Label(cell.to_string()),
        );
        origin_claims.push((*cell, pos));
    }

    // First claim in sheet order wins.
    origin_claims.sort_by_key(|(_, pos)| *pos);
    let mut origin_map = BTreeMap::new();
    for (origin, pos) in origin_claims {
        origin_map.entry(origin).or_insert(pos);
    }

    Ok(Placement {
        workbook,
        origin_map,
        row_positions,
        input_positions,
    })
}

fn internal_unresolved(target: CellAddress, module: &str) -> Error {
    Error::FormulaSyntax {
        offset: 0,
        message: format!("internal: no row for {target} while rewriting module \"{module}\""),
    }
}

fn formula_content(ast: FormulaAst) -> CellContent {
    CellContent::Formula {
        source: ast.to_source(),
        ast,
    }
}

fn ref_content(target: CellAddress) -> CellContent {
    formula_content(FormulaAst::Ref(CellRef::relative(target)))
}

/// Row-tree navigation reconstructed from depths: row j is a child of
/// the nearest earlier row one level up.
struct RowScopes {
    parent: Vec<Option<usize>>,
    subtree_end: Vec<usize>,
}

impl RowScopes {
    fn new(rows: &[LayoutRow]) -> Self {
        let mut parent = vec![None; rows.len()];
        let mut stack: Vec<usize> = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            while let Some(&top) = stack.last() {
                if rows[top].depth >= row.depth {
                    stack.pop();
                } else {
                    break;
                }
            }
            parent[i] = stack.last().copied();
            stack.push(i);
        }
        let mut subtree_end = vec![0usize; rows.len()];
        for i in 0..rows.len() {
            let mut end = i + 1;
            while end < rows.len() && rows[end].depth > rows[i].depth {
                end += 1;
            }
            subtree_end[i] = end;
        }
        RowScopes {
            parent,
            subtree_end,
        }
    }

    /// Finds the data cell standing for `target`: the row's immediate
    /// children first (so formulas reference their own child rows), then
    /// its whole subtree, then enclosing subtrees. Dedup means a
    /// reference row's target may live under a sibling.
    fn resolve(
        &self,
        from: usize,
        target: CellAddress,
        rows: &[LayoutRow],
        positions: &[CellAddress],
    ) -> Option<CellAddress> {
        let end = self.subtree_end[from];
        for j in from + 1..end {
            if rows[j].depth == rows[from].depth + 1 && rows[j].origin == Some(target) {
                return Some(positions[j]);
            }
        }
        let mut scope = Some(from);
        while let Some(top) = scope {
            let end = self.subtree_end[top];
            for j in top..end {
                if rows[j].origin == Some(target) {
                    return Some(positions[j]);
                }
            }
            scope = self.parent[top];
        }
        None
    }
}

/// Rewrites every reference to its resolved output address. Range
/// arguments stay ranges when their members land in consecutive rows of
/// one column; otherwise they are spliced in as individual arguments, so
/// member counts (and AVERAGE semantics) are preserved.
fn rewrite_ast(
    ast: &FormulaAst,
    resolve: &impl Fn(CellAddress) -> Result<CellAddress>,
) -> Result<FormulaAst> {
    Ok(match ast {
        FormulaAst::Number(v) => FormulaAst::Number(*v),
        FormulaAst::Ref(r) => FormulaAst::Ref(CellRef::relative(resolve(r.addr)?)),
        FormulaAst::Range(..) => unreachable!("ranges appear only as call arguments"),
        FormulaAst::Unary { op, operand } => FormulaAst::Unary {
            op: *op,
            operand: Box::new(rewrite_ast(operand, resolve)?),
        },
        FormulaAst::Binary { op, left, right } => FormulaAst::Binary {
            op: *op,
            left: Box::new(rewrite_ast(left, resolve)?),
            right: Box::new(rewrite_ast(right, resolve)?),
        },
        FormulaAst::Call { func, args } => {
            let mut new_args = Vec::new();
            for arg in args {
                match arg {
                    FormulaAst::Range(s, e) => {
                        let members = expand_range(s.addr, e.addr);
                        let targets: Vec<CellAddress> =
                            members.iter().map(|m| resolve(*m)).collect::<Result<_>>()?;
                        if contiguous_column_run(&targets) {
                            new_args.push(FormulaAst::Range(
                                CellRef::relative(targets[0]),
                                CellRef::relative(*targets.last().expect("nonempty range")),
                            ));
                        } else {
                            for t in targets {
                                new_args.push(FormulaAst::Ref(CellRef::relative(t)));
                            }
                        }
                    }
                    other => new_args.push(rewrite_ast(other, resolve)?),
                }
            }
            FormulaAst::Call {
                func: *func,
                args: new_args,
            }
        }
    })
}

fn contiguous_column_run(targets: &[CellAddress]) -> bool {
    targets
        .windows(2)
        .all(|w| w[1].col == w[0].col && w[1].row == w[0].row + 1)
}

/// Deterministic DOT rendering of the module overview: one node per
/// calculation and input module, edges for module references and for
/// input consumption.
pub fn emit_overview_dot(mg: &ModuleGraph) -> String {
    if mg.modules.is_empty() && mg.input_modules.is_empty() {
        return "digraph G {}\n".to_string();
    }
    let mut out = String::from("digraph G {\n");
    for module in &mg.modules {
        out.push_str(&format!(
            "    m{} [label=\"{}\"];\n",
            module.id,
            escape_dot(&module.name)
        ));
    }
    for (idx, im) in mg.input_modules.iter().enumerate() {
        out.push_str(&format!(
            "    i{} [label=\"{}\"];\n",
            idx,
            escape_dot(&im.name)
        ));
    }
    for (from, to) in &mg.edges {
        out.push_str(&format!("    m{from} -> m{to};\n"));
    }
    for (idx, mid) in &mg.input_edges {
        out.push_str(&format!("    i{idx} -> m{mid};\n"));
    }
    out.push_str("}\n");
    out
}

fn escape_dot(text: &str) -> String {
    text.replace('\\', "\\\\").replace('"', "\\\"")
}
