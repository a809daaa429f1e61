//! Formula text handling: tokenizing, parsing, pretty-printing, precedent
//! extraction, and the relative (R1C1-offset) normal form used to detect
//! copy-equivalent formulas.

mod lexer;
mod parser;

pub use parser::parse_formula;

use crate::addr::CellAddress;

/// A cell reference as written, with optional `$` pins per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellRef {
    pub addr: CellAddress,
    pub abs_col: bool,
    pub abs_row: bool,
}

impl CellRef {
    pub fn relative(addr: CellAddress) -> Self {
        CellRef {
            addr,
            abs_col: false,
            abs_row: false,
        }
    }
}

impl std::fmt::Display for CellRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let a1 = crate::addr::address_to_a1(self.addr);
        let split = a1.find(|c: char| c.is_ascii_digit()).unwrap_or(a1.len());
        if self.abs_col {
            f.write_str("$")?;
        }
        f.write_str(&a1[..split])?;
        if self.abs_row {
            f.write_str("$")?;
        }
        f.write_str(&a1[split..])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Lt,
    Gt,
    Le,
    Ge,
    Ne,
}

impl BinaryOp {
    pub fn symbol(&self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Eq => "=",
            BinaryOp::Lt => "<",
            BinaryOp::Gt => ">",
            BinaryOp::Le => "<=",
            BinaryOp::Ge => ">=",
            BinaryOp::Ne => "<>",
        }
    }

    pub fn is_comparison(&self) -> bool {
        matches!(
            self,
            BinaryOp::Eq | BinaryOp::Lt | BinaryOp::Gt | BinaryOp::Le | BinaryOp::Ge | BinaryOp::Ne
        )
    }

    /// Binding strength: comparisons loosest, then +/-, then */.
    fn precedence(&self) -> u8 {
        match self {
            op if op.is_comparison() => 1,
            BinaryOp::Add | BinaryOp::Sub => 2,
            _ => 3,
        }
    }
}

/// The supported function set. IF takes exactly 3 arguments; the
/// aggregates take 1 or more.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sum,
    Average,
    Min,
    Max,
    If,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Func> {
        match name.to_ascii_uppercase().as_str() {
            "SUM" => Some(Func::Sum),
            "AVERAGE" => Some(Func::Average),
            "MIN" => Some(Func::Min),
            "MAX" => Some(Func::Max),
            "IF" => Some(Func::If),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Func::Sum => "SUM",
            Func::Average => "AVERAGE",
            Func::Min => "MIN",
            Func::Max => "MAX",
            Func::If => "IF",
        }
    }

    pub fn is_aggregate(&self) -> bool {
        !matches!(self, Func::If)
    }
}

/// Parse tree of a formula. Ranges appear only as direct arguments of a
/// call, normalized so the start corner is top-left.
#[derive(Debug, Clone, PartialEq)]
pub enum FormulaAst {
    Number(f64),
    Ref(CellRef),
    Range(CellRef, CellRef),
    Unary {
        op: UnaryOp,
        operand: Box<FormulaAst>,
    },
    Binary {
        op: BinaryOp,
        left: Box<FormulaAst>,
        right: Box<FormulaAst>,
    },
    Call {
        func: Func,
        args: Vec<FormulaAst>,
    },
}

/// Expands a normalized range row-major: by row, then column.
pub fn expand_range(start: CellAddress, end: CellAddress) -> Vec<CellAddress> {
    let mut out = Vec::new();
    for row in start.row..=end.row {
        for col in start.col..=end.col {
            out.push(CellAddress { col, row });
        }
    }
    out
}

impl FormulaAst {
    /// All referenced addresses in left-to-right source order, ranges
    /// expanded row-major, duplicates dropped keeping the first occurrence.
    pub fn precedents(&self) -> Vec<CellAddress> {
        let mut seen = std::collections::BTreeSet::new();
        let mut out = Vec::new();
        self.walk_refs(&mut |addr| {
            if seen.insert(addr) {
                out.push(addr);
            }
        });
        out
    }

    fn walk_refs(&self, visit: &mut impl FnMut(CellAddress)) {
        match self {
            FormulaAst::Number(_) => {}
            FormulaAst::Ref(r) => visit(r.addr),
            FormulaAst::Range(s, e) => {
                for addr in expand_range(s.addr, e.addr) {
                    visit(addr);
                }
            }
            FormulaAst::Unary { operand, .. } => operand.walk_refs(visit),
            FormulaAst::Binary { left, right, .. } => {
                left.walk_refs(visit);
                right.walk_refs(visit);
            }
            FormulaAst::Call { args, .. } => {
                for arg in args {
                    arg.walk_refs(visit);
                }
            }
        }
    }

    /// Canonical source text including the leading `=`.
    pub fn to_source(&self) -> String {
        format!("={}", self.to_expr_string())
    }

    /// Canonical expression text with minimal parenthesization.
    pub fn to_expr_string(&self) -> String {
        let mut out = String::new();
        self.print_expr(&mut out, 0);
        out
    }

    fn print_expr(&self, out: &mut String, min_prec: u8) {
        match self {
            FormulaAst::Number(v) => out.push_str(&format_number(*v)),
            FormulaAst::Ref(r) => out.push_str(&r.to_string()),
            FormulaAst::Range(s, e) => {
                out.push_str(&format!("{s}:{e}"));
            }
            FormulaAst::Unary { operand, .. } => {
                let needs_parens = min_prec > 4;
                if needs_parens {
                    out.push('(');
                }
                out.push('-');
                operand.print_expr(out, 4);
                if needs_parens {
                    out.push(')');
                }
            }
            FormulaAst::Binary { op, left, right } => {
                let prec = op.precedence();
                let needs_parens = prec < min_prec;
                if needs_parens {
                    out.push('(');
                }
                // Left-associative grammar: the right operand needs strictly
                // tighter binding; a comparison may not nest in a comparison.
                let (lmin, rmin) = if op.is_comparison() {
                    (2, 2)
                } else {
                    (prec, prec + 1)
                };
                left.print_expr(out, lmin);
                out.push_str(op.symbol());
                right.print_expr(out, rmin);
                if needs_parens {
                    out.push(')');
                }
            }
            FormulaAst::Call { func, args } => {
                out.push_str(func.name());
                out.push('(');
                for (i, arg) in args.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    arg.print_expr(out, 0);
                }
                out.push(')');
            }
        }
    }

    /// Canonical text with every reference rewritten as offsets from
    /// `origin`. Two formulas are copy-equivalent exactly when their normal
    /// forms at their own addresses match. Pinned (`$`) axes render as
    /// absolute coordinates, so pinned references never merge with moving
    /// ones. Binary operations are fully parenthesized.
    pub fn normal_form(&self, origin: CellAddress) -> String {
        let mut out = String::new();
        self.print_normal(&mut out, origin);
        out
    }

    fn print_normal(&self, out: &mut String, origin: CellAddress) {
        match self {
            FormulaAst::Number(v) => out.push_str(&format_number(*v)),
            FormulaAst::Ref(r) => out.push_str(&normal_ref(*r, origin)),
            FormulaAst::Range(s, e) => {
                out.push_str(&normal_ref(*s, origin));
                out.push(':');
                out.push_str(&normal_ref(*e, origin));
            }
            FormulaAst::Unary { operand, .. } => {
                out.push_str("(-");
                operand.print_normal(out, origin);
                out.push(')');
            }
            FormulaAst::Binary { op, left, right } => {
                out.push('(');
                left.print_normal(out, origin);
                out.push_str(op.symbol());
                right.print_normal(out, origin);
                out.push(')');
            }
            FormulaAst::Call { func, args } => {
                out.push_str(func.name());
                out.push('(');
                for (i, arg) in args.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    arg.print_normal(out, origin);
                }
                out.push(')');
            }
        }
    }

    /// Shifts every relative reference by the given delta. Pinned axes stay
    /// put. Returns `None` if any reference would leave the grid.
    pub fn translate(&self, drow: i64, dcol: i64) -> Option<FormulaAst> {
        let shift_ref = |r: &CellRef| -> Option<CellRef> {
            let addr = r.addr.offset(
                if r.abs_row { 0 } else { drow },
                if r.abs_col { 0 } else { dcol },
            )?;
            Some(CellRef { addr, ..*r })
        };
        Some(match self {
            FormulaAst::Number(v) => FormulaAst::Number(*v),
            FormulaAst::Ref(r) => FormulaAst::Ref(shift_ref(r)?),
            FormulaAst::Range(s, e) => FormulaAst::Range(shift_ref(s)?, shift_ref(e)?),
            FormulaAst::Unary { op, operand } => FormulaAst::Unary {
                op: *op,
                operand: Box::new(operand.translate(drow, dcol)?),
            },
            FormulaAst::Binary { op, left, right } => FormulaAst::Binary {
                op: *op,
                left: Box::new(left.translate(drow, dcol)?),
                right: Box::new(right.translate(drow, dcol)?),
            },
            FormulaAst::Call { func, args } => FormulaAst::Call {
                func: *func,
                args: args
                    .iter()
                    .map(|a| a.translate(drow, dcol))
                    .collect::<Option<Vec<_>>>()?,
            },
        })
    }
}

fn normal_ref(r: CellRef, origin: CellAddress) -> String {
    let row = if r.abs_row {
        format!("R{}", r.addr.row)
    } else {
        format!("R[{}]", r.addr.row as i64 - origin.row as i64)
    };
    let col = if r.abs_col {
        format!("C{}", r.addr.col)
    } else {
        format!("C[{}]", r.addr.col as i64 - origin.col as i64)
    };
    format!("{row}{col}")
}

/// Shortest exact decimal rendering; integers print without a point.
pub(crate) fn format_number(v: f64) -> String {
    format!("{v}")
}
