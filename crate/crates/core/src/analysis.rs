//! Dependency graph construction, cell classification, cycle detection,
//! and replication (copy-equivalence) classes.

use std::collections::{BTreeMap, BTreeSet};

use crate::addr::CellAddress;
use crate::error::{Error, ReferenceViolation, ReferenceViolationKind, Result};
use crate::workbook::{CellContent, Workbook};

/// Directed graph over value-bearing cells; an edge runs from a precedent
/// to the formula that references it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DependencyGraph {
    pub nodes: BTreeSet<CellAddress>,
    pub edges: BTreeSet<(CellAddress, CellAddress)>,
    /// Nodes materialized for references to empty cells (empty-as-zero).
    pub implicit_zeros: BTreeSet<CellAddress>,
}

impl DependencyGraph {
    /// Distinct formula cells that reference `addr`.
    pub fn dependents(&self, addr: CellAddress) -> impl Iterator<Item = CellAddress> + '_ {
        self.edges
            .range((addr, CellAddress::new(1, 1))..)
            .take_while(move |(p, _)| *p == addr)
            .map(|(_, d)| *d)
    }

    pub fn dependent_count(&self, addr: CellAddress) -> usize {
        self.dependents(addr).count()
    }

    pub fn precedents(&self, addr: CellAddress) -> Vec<CellAddress> {
        self.edges
            .iter()
            .filter(|(_, d)| *d == addr)
            .map(|(p, _)| *p)
            .collect()
    }

    /// Kahn-style topological order, ties broken row-major. `None` when
    /// the graph has a cycle.
    pub fn topological_order(&self) -> Option<Vec<CellAddress>> {
        let mut indegree: BTreeMap<CellAddress, usize> =
            self.nodes.iter().map(|n| (*n, 0)).collect();
        let mut outgoing: BTreeMap<CellAddress, Vec<CellAddress>> = BTreeMap::new();
        for (p, d) in &self.edges {
            *indegree.get_mut(d).expect("edge endpoint in nodes") += 1;
            outgoing.entry(*p).or_default().push(*d);
        }
        let mut ready: BTreeSet<CellAddress> = indegree
            .iter()
            .filter(|(_, deg)| **deg == 0)
            .map(|(n, _)| *n)
            .collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(next) = ready.iter().next().copied() {
            ready.remove(&next);
            order.push(next);
            if let Some(outs) = outgoing.get(&next) {
                for d in outs {
                    let deg = indegree.get_mut(d).expect("edge endpoint in nodes");
                    *deg -= 1;
                    if *deg == 0 {
                        ready.insert(*d);
                    }
                }
            }
        }
        (order.len() == self.nodes.len()).then_some(order)
    }
}

/// Partition of non-empty cells into inputs (numbers), calculated cells
/// (formulas), and labels.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CellClassification {
    pub inputs: BTreeSet<CellAddress>,
    pub calculated: BTreeSet<CellAddress>,
    pub labels: BTreeSet<CellAddress>,
}

/// Formula cells identical up to translation of relative references.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplicationClass {
    pub normal_form: String,
    pub members: Vec<CellAddress>,
}

/// Builds the precedent-to-dependent graph. With `empty_as_zero`, a
/// reference to an empty cell materializes an implicit zero input node;
/// otherwise it is an error. References to label cells are always errors.
pub fn build_graph(wb: &Workbook, empty_as_zero: bool) -> Result<DependencyGraph> {
    let mut graph = DependencyGraph::default();
    let mut violations = Vec::new();

    for (addr, content) in wb.iter() {
        if content.is_value() {
            graph.nodes.insert(addr);
        }
    }
    for (addr, content) in wb.iter() {
        let ast = match content {
            CellContent::Formula { ast, .. } => ast,
            _ => continue,
        };
        for precedent in ast.precedents() {
            match wb.get(precedent) {
                Some(CellContent::Number(_)) | Some(CellContent::Formula { .. }) => {
                    graph.edges.insert((precedent, addr));
                }
                Some(CellContent::Label(_)) => violations.push(ReferenceViolation {
                    dependent: addr,
                    target: precedent,
                    kind: ReferenceViolationKind::Label,
                }),
                None if empty_as_zero => {
                    graph.nodes.insert(precedent);
                    graph.implicit_zeros.insert(precedent);
                    graph.edges.insert((precedent, addr));
                }
                None => violations.push(ReferenceViolation {
                    dependent: addr,
                    target: precedent,
                    kind: ReferenceViolationKind::Dangling,
                }),
            }
        }
    }
    if !violations.is_empty() {
        violations.sort_by_key(|v| (v.dependent, v.target));
        return Err(Error::InvalidReferences(violations));
    }
    Ok(graph)
}

/// Classifies every non-empty cell. Implicit zero nodes from the graph
/// count as inputs.
pub fn classify(wb: &Workbook, graph: &DependencyGraph) -> CellClassification {
    let mut out = CellClassification::default();
    for (addr, content) in wb.iter() {
        match content {
            CellContent::Number(_) => out.inputs.insert(addr),
            CellContent::Formula { .. } => out.calculated.insert(addr),
            CellContent::Label(_) => out.labels.insert(addr),
        };
    }
    for addr in &graph.implicit_zeros {
        out.inputs.insert(*addr);
    }
    out
}

/// Strongly connected components of size two or more, plus self-loops.
/// Components are reported in row-major order of their smallest member,
/// members listed row-major. Empty exactly when the graph is acyclic.
pub fn find_cycles(graph: &DependencyGraph) -> Vec<Vec<CellAddress>> {
    let components = strongly_connected_components(graph);
    let mut cycles: Vec<Vec<CellAddress>> = Vec::new();
    for component in components {
        let is_cycle = component.len() > 1 || graph.edges.contains(&(component[0], component[0]));
        if is_cycle {
            let mut members = component;
            members.sort();
            cycles.push(members);
        }
    }
    cycles.sort_by_key(|c| c[0]);
    cycles
}

/// Iterative Tarjan SCC over the dependency edges.
fn strongly_connected_components(graph: &DependencyGraph) -> Vec<Vec<CellAddress>> {
    let nodes: Vec<CellAddress> = graph.nodes.iter().copied().collect();
    let index_of: BTreeMap<CellAddress, usize> =
        nodes.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for (p, d) in &graph.edges {
        succ[index_of[p]].push(index_of[d]);
    }

    const UNVISITED: usize = usize::MAX;
    let mut index = vec![UNVISITED; nodes.len()];
    let mut lowlink = vec![0usize; nodes.len()];
    let mut on_stack = vec![false; nodes.len()];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0usize;
    let mut components = Vec::new();

    // (node, next successor position) frames emulate the recursion.
    let mut frames: Vec<(usize, usize)> = Vec::new();
    for start in 0..nodes.len() {
        if index[start] != UNVISITED {
            continue;
        }
        frames.push((start, 0));
        while let Some(&mut (v, ref mut si)) = frames.last_mut() {
            if *si == 0 {
                index[v] = next_index;
                lowlink[v] = next_index;
                next_index += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if let Some(&w) = succ[v].get(*si) {
                *si += 1;
                if index[w] == UNVISITED {
                    frames.push((w, 0));
                } else if on_stack[w] {
                    lowlink[v] = lowlink[v].min(index[w]);
                }
                continue;
            }
            frames.pop();
            if let Some(&(parent, _)) = frames.last() {
                lowlink[parent] = lowlink[parent].min(lowlink[v]);
            }
            if lowlink[v] == index[v] {
                let mut component = Vec::new();
                loop {
                    let w = stack.pop().expect("stack holds the component");
                    on_stack[w] = false;
                    component.push(nodes[w]);
                    if w == v {
                        break;
                    }
                }
                components.push(component);
            }
        }
    }
    components
}

/// Maximal groups (size >= 2) of formula cells sharing a relative normal
/// form at their own address. Classes are ordered by first member,
/// members row-major.
pub fn replication_classes(wb: &Workbook) -> Vec<ReplicationClass> {
    let mut by_form: BTreeMap<String, Vec<CellAddress>> = BTreeMap::new();
    for (addr, content) in wb.iter() {
        if let CellContent::Formula { ast, .. } = content {
            by_form.entry(ast.normal_form(addr)).or_default().push(addr);
        }
    }
    let mut classes: Vec<ReplicationClass> = by_form
        .into_iter()
        .filter(|(_, members)| members.len() >= 2)
        .map(|(normal_form, members)| ReplicationClass {
            normal_form,
            members,
        })
        .collect();
    classes.sort_by_key(|c| c.members[0]);
    classes
}
