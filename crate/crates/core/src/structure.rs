//! Derives structure charts from the dependency graph and reduces them to
//! tree-shaped modules.
//!
//! A formula's shape maps onto the three chart constructs: plain
//! arithmetic composition is a sequence over the cells it draws from, an
//! aggregate over a range is a repetition over the range members, and IF
//! is a selection between its two branches. Charts over a general
//! dependency graph are reduced to trees by extracting every calculated
//! cell with two or more dependents as a module of its own and leaving a
//! module reference at each use site; this extraction is what makes the
//! decomposition unique.

use std::collections::{BTreeMap, BTreeSet};

use crate::addr::CellAddress;
use crate::analysis::{find_cycles, CellClassification, DependencyGraph};
use crate::error::{Error, Result};
use crate::formula::{expand_range, CellRef, FormulaAst, Func};
use crate::workbook::{CellContent, Workbook};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartKind {
    Sequence,
    Repetition,
    Selection,
    InputLeaf,
    ModuleRef,
}

/// One block of a structure chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartNode {
    pub kind: ChartKind,
    pub label: String,
    /// The cell this node stands for; `None` for synthesized grouping
    /// nodes (embedded aggregates, constant branches, re-references).
    pub source: Option<CellAddress>,
    /// Selection condition text, e.g. `(A1>0)`.
    pub annotation: Option<String>,
    /// Selection nodes have exactly two children: the two branches.
    pub children: Vec<ChartNode>,
    /// Extra subtrees for the cells a selection condition draws from.
    pub condition_children: Vec<ChartNode>,
    /// The (sub-)formula this node computes, for later rewriting.
    pub formula: Option<FormulaAst>,
    /// Literal value for input leaves.
    pub value: Option<f64>,
}

impl ChartNode {
    fn leaf(kind: ChartKind, label: String) -> ChartNode {
        ChartNode {
            kind,
            label,
            source: None,
            annotation: None,
            children: Vec::new(),
            condition_children: Vec::new(),
            formula: None,
            value: None,
        }
    }

    /// Immediate structural children: branches, sequence members, and any
    /// condition subtrees.
    pub fn all_children(&self) -> impl Iterator<Item = &ChartNode> {
        self.children.iter().chain(self.condition_children.iter())
    }

    /// Pre-order walk over the whole subtree.
    pub fn walk(&self, visit: &mut impl FnMut(&ChartNode)) {
        visit(self);
        for child in self.all_children() {
            child.walk(visit);
        }
    }
}

/// A tree-shaped module: a chart fragment in which no node repeats.
#[derive(Debug, Clone, PartialEq)]
pub struct ModuleTree {
    pub id: usize,
    pub name: String,
    pub root_addr: CellAddress,
    pub root: ChartNode,
}

/// An unstructured group of data-entry cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputModule {
    pub name: String,
    pub cells: Vec<CellAddress>,
}

/// The decomposed model: calculation modules in topological order
/// (dependencies first), input modules, and the reference edges between
/// them.
#[derive(Debug, Clone, PartialEq)]
pub struct ModuleGraph {
    pub modules: Vec<ModuleTree>,
    pub input_modules: Vec<InputModule>,
    /// (referencing module id, referenced module id)
    pub edges: BTreeSet<(usize, usize)>,
    /// (input module index, consuming module id)
    pub input_edges: BTreeSet<(usize, usize)>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InputGrouping {
    #[default]
    Single,
    PerConsumer,
}

/// Builds one chart per terminal cell (calculated, no dependents),
/// ordered row-major. Shared substructure is duplicated at every use
/// site, exactly as drawn before modularization; use [`modularize`] for
/// the reduced form.
pub fn derive_chart(wb: &Workbook, graph: &DependencyGraph) -> Result<Vec<ChartNode>> {
    let cycles = find_cycles(graph);
    if !cycles.is_empty() {
        return Err(Error::Cycles(cycles));
    }
    let builder = NodeBuilder { wb, stop_at: None };
    Ok(terminal_cells(wb, graph)
        .into_iter()
        .map(|t| builder.cell_node(t))
        .collect())
}

/// Calculated cells with no dependents, row-major.
pub fn terminal_cells(wb: &Workbook, graph: &DependencyGraph) -> Vec<CellAddress> {
    wb.iter()
        .filter(|(addr, content)| {
            matches!(content, CellContent::Formula { .. }) && graph.dependent_count(*addr) == 0
        })
        .map(|(addr, _)| addr)
        .collect()
}

/// Calculated cells referenced by two or more distinct formulas. These
/// become module roots.
pub fn shared_cells(wb: &Workbook, graph: &DependencyGraph) -> BTreeSet<CellAddress> {
    wb.iter()
        .filter(|(addr, content)| {
            matches!(content, CellContent::Formula { .. }) && graph.dependent_count(*addr) >= 2
        })
        .map(|(addr, _)| addr)
        .collect()
}

/// Reduces the model to tree-shaped modules. Every terminal and every
/// shared calculated cell roots a module; at each use site of a shared
/// cell a module reference replaces its subtree. Module ids are assigned
/// in topological order, dependencies first.
///
/// Module bodies are built directly from the graph rather than by
/// rewriting [`derive_chart`] output, so shared substructure is never
/// materialized once per use site.
pub fn modularize(
    wb: &Workbook,
    graph: &DependencyGraph,
    classification: &CellClassification,
    grouping: InputGrouping,
) -> Result<ModuleGraph> {
    let cycles = find_cycles(graph);
    if !cycles.is_empty() {
        return Err(Error::Cycles(cycles));
    }

    let terminals = terminal_cells(wb, graph);
    let shared = shared_cells(wb, graph);
    let mut roots: Vec<CellAddress> = Vec::new();
    if let Some(order) = graph.topological_order() {
        for addr in order {
            if shared.contains(&addr) || terminals.contains(&addr) {
                roots.push(addr);
            }
        }
    }

    // Names come from root labels; collisions get a numeric suffix.
    let mut names: BTreeMap<CellAddress, String> = BTreeMap::new();
    let mut taken: BTreeMap<String, usize> = BTreeMap::new();
    let mut warnings = Vec::new();
    for root in &roots {
        let base = wb.display_label(*root);
        let count = taken.entry(base.clone()).or_insert(0);
        *count += 1;
        let name = if *count == 1 {
            base
        } else {
            let disambiguated = format!("{}_{}", base, *count);
            warnings.push(format!(
                "module name \"{base}\" already in use; renamed to \"{disambiguated}\""
            ));
            disambiguated
        };
        names.insert(*root, name);
    }

    let builder = NodeBuilder {
        wb,
        stop_at: Some((&shared, &names)),
    };
    let mut modules = Vec::new();
    for (id, root) in roots.iter().enumerate() {
        let body = builder.module_body(*root);
        modules.push(ModuleTree {
            id,
            name: names[root].clone(),
            root_addr: *root,
            root: body,
        });
    }

    // Reference edges follow the module-ref leaves left in each body.
    let id_of_root: BTreeMap<CellAddress, usize> =
        modules.iter().map(|m| (m.root_addr, m.id)).collect();
    let mut edges = BTreeSet::new();
    for module in &modules {
        module.root.walk(&mut |node| {
            if node.kind == ChartKind::ModuleRef {
                let target = node.source.expect("module refs carry their target");
                edges.insert((module.id, id_of_root[&target]));
            }
        });
    }

    // Ids are topological with dependencies first, so every reference
    // edge must point at a smaller id; this is what makes the module
    // graph a DAG, and it is asserted rather than assumed.
    for (from, to) in &edges {
        assert!(
            to < from,
            "module reference {from} -> {to} violates topological ids"
        );
    }

    let input_modules = assign_input_modules(classification, grouping, graph, &modules);
    let mut input_edges = BTreeSet::new();
    let module_of = module_membership(&modules);
    for (idx, im) in input_modules.iter().enumerate() {
        for cell in &im.cells {
            for dependent in graph.dependents(*cell) {
                if let Some(mid) = module_of.get(&dependent) {
                    input_edges.insert((idx, *mid));
                }
            }
        }
    }

    Ok(ModuleGraph {
        modules,
        input_modules,
        edges,
        input_edges,
        warnings,
    })
}

/// Maps each calculated cell to the module whose body holds it.
pub fn module_membership(modules: &[ModuleTree]) -> BTreeMap<CellAddress, usize> {
    let mut out = BTreeMap::new();
    for module in modules {
        module.root.walk(&mut |node| {
            if node.kind != ChartKind::ModuleRef && node.kind != ChartKind::InputLeaf {
                if let Some(addr) = node.source {
                    out.insert(addr, module.id);
                }
            }
        });
    }
    out
}

/// Groups data-entry cells into input modules. `Single` puts every input
/// in one "INPUTS" module, row-major. `PerConsumer` creates one module
/// per calculation module that reads inputs, each input living with its
/// topologically earliest consumer; inputs no formula reads fall back to
/// a trailing "INPUTS" module.
pub fn assign_input_modules(
    classification: &CellClassification,
    grouping: InputGrouping,
    graph: &DependencyGraph,
    modules: &[ModuleTree],
) -> Vec<InputModule> {
    let inputs: Vec<CellAddress> = classification.inputs.iter().copied().collect();
    if inputs.is_empty() {
        return Vec::new();
    }
    match grouping {
        InputGrouping::Single => vec![InputModule {
            name: "INPUTS".to_string(),
            cells: inputs,
        }],
        InputGrouping::PerConsumer => {
            let module_of = module_membership(modules);
            let mut per_module: BTreeMap<usize, Vec<CellAddress>> = BTreeMap::new();
            let mut unreferenced: Vec<CellAddress> = Vec::new();
            for input in inputs {
                let earliest = graph
                    .dependents(input)
                    .filter_map(|d| module_of.get(&d).copied())
                    .min();
                match earliest {
                    Some(mid) => per_module.entry(mid).or_default().push(input),
                    None => unreferenced.push(input),
                }
            }
            let mut out: Vec<InputModule> = per_module
                .into_iter()
                .map(|(mid, cells)| InputModule {
                    name: format!("INPUTS_{}", modules[mid].name),
                    cells,
                })
                .collect();
            if !unreferenced.is_empty() {
                out.push(InputModule {
                    name: "INPUTS".to_string(),
                    cells: unreferenced,
                });
            }
            out
        }
    }
}

/// Shared chart-node construction. With `stop_at` set, subtrees rooted at
/// shared cells collapse into module-reference leaves.
struct NodeBuilder<'a> {
    wb: &'a Workbook,
    stop_at: Option<(&'a BTreeSet<CellAddress>, &'a BTreeMap<CellAddress, String>)>,
}

impl NodeBuilder<'_> {
    /// Body for a module root: the root itself is never collapsed into a
    /// reference, even when shared.
    fn module_body(&self, root: CellAddress) -> ChartNode {
        self.expand_cell(root)
    }

    fn cell_node(&self, addr: CellAddress) -> ChartNode {
        if let Some((shared, names)) = self.stop_at {
            if shared.contains(&addr) {
                let mut node = ChartNode::leaf(ChartKind::ModuleRef, names[&addr].clone());
                node.source = Some(addr);
                return node;
            }
        }
        self.expand_cell(addr)
    }

    fn expand_cell(&self, addr: CellAddress) -> ChartNode {
        match self.wb.get(addr) {
            Some(CellContent::Number(v)) => {
                let mut node = ChartNode::leaf(ChartKind::InputLeaf, self.wb.display_label(addr));
                node.source = Some(addr);
                node.value = Some(*v);
                node
            }
            Some(CellContent::Formula { ast, .. }) => {
                let mut seen = BTreeSet::new();
                let mut node = self.expr_node(ast, &mut seen);
                node.label = self.wb.display_label(addr);
                node.source = Some(addr);
                node
            }
            None => {
                // Implicit zero input under empty-as-zero.
                let mut node = ChartNode::leaf(ChartKind::InputLeaf, self.wb.display_label(addr));
                node.source = Some(addr);
                node.value = Some(0.0);
                node
            }
            Some(CellContent::Label(_)) => {
                unreachable!("label references are rejected while building the graph")
            }
        }
    }

    /// Node for a formula or sub-formula. The caller overrides label and
    /// source for cell-rooted nodes; synthesized nodes keep the canonical
    /// expression text as their label.
    fn expr_node(&self, expr: &FormulaAst, seen: &mut BTreeSet<CellAddress>) -> ChartNode {
        let mut node = match expr {
            FormulaAst::Call { func, args }
                if func.is_aggregate()
                    && args.len() == 1
                    && matches!(args[0], FormulaAst::Range(..)) =>
            {
                let (start, end) = match &args[0] {
                    FormulaAst::Range(s, e) => (s, e),
                    _ => unreachable!(),
                };
                let children = expand_range(start.addr, end.addr)
                    .into_iter()
                    .map(|member| self.member_node(member, seen))
                    .collect();
                ChartNode {
                    kind: ChartKind::Repetition,
                    children,
                    ..ChartNode::leaf(ChartKind::Repetition, String::new())
                }
            }
            FormulaAst::Call {
                func: Func::If,
                args,
            } => {
                let condition = format!("({})", args[0].to_expr_string());
                let children = vec![
                    self.branch_node(&args[1], seen),
                    self.branch_node(&args[2], seen),
                ];
                let mut condition_children = Vec::new();
                self.components(&args[0], seen, &mut condition_children);
                ChartNode {
                    kind: ChartKind::Selection,
                    annotation: Some(condition),
                    children,
                    condition_children,
                    ..ChartNode::leaf(ChartKind::Selection, String::new())
                }
            }
            other => {
                let mut children = Vec::new();
                self.components(other, seen, &mut children);
                ChartNode {
                    kind: ChartKind::Sequence,
                    children,
                    ..ChartNode::leaf(ChartKind::Sequence, String::new())
                }
            }
        };
        node.label = expr.to_expr_string();
        node.formula = Some(expr.clone());
        node
    }

    /// Collects sequence children from an expression, in source order,
    /// one child per first mention of a cell. Embedded calls become
    /// synthesized grouping nodes with their own row.
    fn components(
        &self,
        expr: &FormulaAst,
        seen: &mut BTreeSet<CellAddress>,
        out: &mut Vec<ChartNode>,
    ) {
        match expr {
            FormulaAst::Number(_) => {}
            FormulaAst::Ref(r) => {
                if seen.insert(r.addr) {
                    out.push(self.cell_node(r.addr));
                }
            }
            FormulaAst::Range(s, e) => {
                for member in expand_range(s.addr, e.addr) {
                    if seen.insert(member) {
                        out.push(self.cell_node(member));
                    }
                }
            }
            FormulaAst::Unary { operand, .. } => self.components(operand, seen, out),
            FormulaAst::Binary { left, right, .. } => {
                self.components(left, seen, out);
                self.components(right, seen, out);
            }
            FormulaAst::Call { func, args } => {
                let range_aggregate = func.is_aggregate()
                    && args.len() == 1
                    && matches!(args[0], FormulaAst::Range(..));
                if range_aggregate || *func == Func::If {
                    out.push(self.expr_node(expr, seen));
                } else {
                    // Aggregates over explicit argument lists spread their
                    // arguments as plain sequence members.
                    for arg in args {
                        self.components(arg, seen, out);
                    }
                }
            }
        }
    }

    /// A selection branch always occupies a row. A first-mention cell
    /// reference gets the cell's subtree; anything else (constants,
    /// expressions, repeat mentions) gets a synthesized node.
    fn branch_node(&self, expr: &FormulaAst, seen: &mut BTreeSet<CellAddress>) -> ChartNode {
        if let FormulaAst::Ref(r) = expr {
            if seen.insert(r.addr) {
                return self.cell_node(r.addr);
            }
            return self.reference_node(*r);
        }
        self.expr_node(expr, seen)
    }

    /// Range member that was already mentioned elsewhere in the formula:
    /// a synthesized row referencing the cell keeps the repetition
    /// complete without repeating the subtree.
    fn member_node(&self, member: CellAddress, seen: &mut BTreeSet<CellAddress>) -> ChartNode {
        if seen.insert(member) {
            return self.cell_node(member);
        }
        self.reference_node(CellRef::relative(member))
    }

    fn reference_node(&self, r: CellRef) -> ChartNode {
        let ast = FormulaAst::Ref(CellRef::relative(r.addr));
        let mut node = ChartNode::leaf(ChartKind::Sequence, ast.to_expr_string());
        node.formula = Some(ast);
        node
    }
}
