//! Topological formula evaluation. This is the oracle that proves a
//! restructured workbook means the same thing as its original.

use std::collections::BTreeMap;

use crate::addr::CellAddress;
use crate::analysis::{build_graph, find_cycles};
use crate::error::{Error, Result};
use crate::formula::{expand_range, BinaryOp, FormulaAst, Func, UnaryOp};
use crate::workbook::{CellContent, Workbook};

/// Computed values for every input and calculated cell.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValueMap {
    pub values: BTreeMap<CellAddress, f64>,
}

impl ValueMap {
    pub fn get(&self, addr: CellAddress) -> Option<f64> {
        self.values.get(&addr).copied()
    }
}

/// Tolerance for calling two values equal: |a-b| <= 1e-9 * max(1, |a|).
pub const RELATIVE_TOLERANCE: f64 = 1e-9;

pub fn values_match(a: f64, b: f64) -> bool {
    (a - b).abs() <= RELATIVE_TOLERANCE * a.abs().max(1.0)
}

/// Evaluates every value-bearing cell in dependency order.
pub fn evaluate(wb: &Workbook) -> Result<ValueMap> {
    evaluate_with_options(wb, false)
}

pub fn evaluate_with_options(wb: &Workbook, empty_as_zero: bool) -> Result<ValueMap> {
    let graph = build_graph(wb, empty_as_zero)?;
    let cycles = find_cycles(&graph);
    if !cycles.is_empty() {
        return Err(Error::Cycles(cycles));
    }
    let order = graph
        .topological_order()
        .expect("acyclic graph has a topological order");

    let mut values = BTreeMap::new();
    for addr in order {
        let value = match wb.get(addr) {
            Some(CellContent::Number(v)) => *v,
            Some(CellContent::Formula { ast, .. }) => eval_expr(ast, addr, &values)?,
            Some(CellContent::Label(_)) => continue,
            None => 0.0, // implicit zero input under empty-as-zero
        };
        values.insert(addr, value);
    }
    Ok(ValueMap { values })
}

fn eval_expr(
    ast: &FormulaAst,
    at: CellAddress,
    values: &BTreeMap<CellAddress, f64>,
) -> Result<f64> {
    Ok(match ast {
        FormulaAst::Number(v) => *v,
        FormulaAst::Ref(r) => *values
            .get(&r.addr)
            .expect("topological order computes precedents first"),
        FormulaAst::Range(..) => {
            unreachable!("ranges appear only as call arguments")
        }
        FormulaAst::Unary {
            op: UnaryOp::Neg,
            operand,
        } => -eval_expr(operand, at, values)?,
        FormulaAst::Binary { op, left, right } => {
            let l = eval_expr(left, at, values)?;
            let r = eval_expr(right, at, values)?;
            match op {
                BinaryOp::Add => l + r,
                BinaryOp::Sub => l - r,
                BinaryOp::Mul => l * r,
                BinaryOp::Div => {
                    if r == 0.0 {
                        return Err(Error::DivisionByZero { addr: at });
                    }
                    l / r
                }
                BinaryOp::Eq => bool_value(l == r),
                BinaryOp::Lt => bool_value(l < r),
                BinaryOp::Gt => bool_value(l > r),
                BinaryOp::Le => bool_value(l <= r),
                BinaryOp::Ge => bool_value(l >= r),
                BinaryOp::Ne => bool_value(l != r),
            }
        }
        FormulaAst::Call {
            func: Func::If,
            args,
        } => {
            let cond = eval_expr(&args[0], at, values)?;
            if cond != 0.0 {
                eval_expr(&args[1], at, values)?
            } else {
                eval_expr(&args[2], at, values)?
            }
        }
        FormulaAst::Call { func, args } => {
            let mut scalars = Vec::new();
            for arg in args {
                match arg {
                    FormulaAst::Range(s, e) => {
                        for member in expand_range(s.addr, e.addr) {
                            scalars
                                .push(*values.get(&member).expect("range members are precedents"));
                        }
                    }
                    other => scalars.push(eval_expr(other, at, values)?),
                }
            }
            match func {
                Func::Sum => scalars.iter().sum(),
                Func::Average => {
                    if scalars.is_empty() {
                        return Err(Error::DivisionByZero { addr: at });
                    }
                    scalars.iter().sum::<f64>() / scalars.len() as f64
                }
                Func::Min => scalars.iter().copied().fold(f64::INFINITY, f64::min),
                Func::Max => scalars.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                Func::If => unreachable!("handled above"),
            }
        }
    })
}

fn bool_value(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Cells whose values differ beyond tolerance, following `mapping` from
/// addresses in `a` to addresses in `b`. Entries are (address in `a`,
/// value in `a`, value in `b`).
pub fn value_diff(
    a: &ValueMap,
    b: &ValueMap,
    mapping: &BTreeMap<CellAddress, CellAddress>,
) -> Result<Vec<(CellAddress, f64, f64)>> {
    let mut out = Vec::new();
    for (from, to) in mapping {
        let va = a.get(*from).ok_or(Error::UnmappedAddress {
            addr: *from,
            side: "left",
        })?;
        let vb = b.get(*to).ok_or(Error::UnmappedAddress {
            addr: *to,
            side: "right",
        })?;
        if !values_match(va, vb) {
            out.push((*from, va, vb));
        }
    }
    Ok(out)
}

/// Identity mapping over the full domain of `a`.
pub fn identity_mapping(a: &ValueMap) -> BTreeMap<CellAddress, CellAddress> {
    a.values.keys().map(|k| (*k, *k)).collect()
}

/// Report rendering: up to 15 significant digits, integers without a
/// decimal point.
pub fn format_value(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if v.fract() == 0.0 && v.abs() < 1e15 {
        return format!("{v:.0}");
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = 14 - magnitude;
    let rounded = if decimals > 0 {
        let scale = 10f64.powi(decimals.min(300));
        (v * scale).round() / scale
    } else {
        let scale = 10f64.powi((-decimals).min(300));
        (v / scale).round() * scale
    };
    crate::formula::format_number(rounded)
}
