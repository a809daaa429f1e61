//! Recursive descent parser.
//!
//! Grammar:
//!   formula := '=' cmp
//!   cmp     := add (cmpop add)?
//!   add     := mul (('+'|'-') mul)*
//!   mul     := unary (('*'|'/') unary)*
//!   unary   := '-' unary | atom
//!   atom    := number | ref | range | call | '(' cmp ')'
//!
//! Binary operators are left-associative; a comparison cannot nest in a
//! comparison without parentheses. Range references are legal only as
//! direct arguments of a function call.

use crate::error::{Error, Result};
use crate::formula::lexer::{tokenize, Spanned, Token};
use crate::formula::{BinaryOp, CellRef, FormulaAst, Func, UnaryOp};

/// Parses formula text (which must begin with `=`) into an AST.
pub fn parse_formula(text: &str) -> Result<FormulaAst> {
    let tokens = tokenize(text)?;
    let mut parser = Parser { tokens, pos: 0 };
    if !matches!(parser.peek(), Token::Eq) {
        return Err(parser.error_here("formula must begin with '='"));
    }
    parser.pos += 1;
    let expr = parser.parse_cmp()?;
    if !matches!(parser.peek(), Token::End) {
        return Err(parser.error_here("unexpected trailing input"));
    }
    reject_range(&expr)?;
    Ok(expr.ast)
}

struct Expr {
    ast: FormulaAst,
    offset: usize,
}

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
}

/// Errors out when an expression is a bare range used outside a call.
fn reject_range(expr: &Expr) -> Result<()> {
    if matches!(expr.ast, FormulaAst::Range(..)) {
        return Err(Error::FormulaSyntax {
            offset: expr.offset,
            message: "range reference outside a function call".to_string(),
        });
    }
    Ok(())
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos].token
    }

    fn here(&self) -> usize {
        self.tokens[self.pos].offset
    }

    fn error_here(&self, message: &str) -> Error {
        Error::FormulaSyntax {
            offset: self.here(),
            message: message.to_string(),
        }
    }

    fn parse_cmp(&mut self) -> Result<Expr> {
        let left = self.parse_add()?;
        let op = match self.peek() {
            Token::Eq => BinaryOp::Eq,
            Token::Lt => BinaryOp::Lt,
            Token::Gt => BinaryOp::Gt,
            Token::Le => BinaryOp::Le,
            Token::Ge => BinaryOp::Ge,
            Token::Ne => BinaryOp::Ne,
            _ => return Ok(left),
        };
        reject_range(&left)?;
        self.pos += 1;
        let right = self.parse_add()?;
        reject_range(&right)?;
        Ok(Expr {
            offset: left.offset,
            ast: FormulaAst::Binary {
                op,
                left: Box::new(left.ast),
                right: Box::new(right.ast),
            },
        })
    }

    fn parse_add(&mut self) -> Result<Expr> {
        let mut left = self.parse_mul()?;
        loop {
            let op = match self.peek() {
                Token::Plus => BinaryOp::Add,
                Token::Minus => BinaryOp::Sub,
                _ => return Ok(left),
            };
            reject_range(&left)?;
            self.pos += 1;
            let right = self.parse_mul()?;
            reject_range(&right)?;
            left = Expr {
                offset: left.offset,
                ast: FormulaAst::Binary {
                    op,
                    left: Box::new(left.ast),
                    right: Box::new(right.ast),
                },
            };
        }
    }

    fn parse_mul(&mut self) -> Result<Expr> {
        let mut left = self.parse_unary()?;
        loop {
            let op = match self.peek() {
                Token::Star => BinaryOp::Mul,
                Token::Slash => BinaryOp::Div,
                _ => return Ok(left),
            };
            reject_range(&left)?;
            self.pos += 1;
            let right = self.parse_unary()?;
            reject_range(&right)?;
            left = Expr {
                offset: left.offset,
                ast: FormulaAst::Binary {
                    op,
                    left: Box::new(left.ast),
                    right: Box::new(right.ast),
                },
            };
        }
    }

    fn parse_unary(&mut self) -> Result<Expr> {
        if matches!(self.peek(), Token::Minus) {
            let offset = self.here();
            self.pos += 1;
            let operand = self.parse_unary()?;
            reject_range(&operand)?;
            return Ok(Expr {
                offset,
                ast: FormulaAst::Unary {
                    op: UnaryOp::Neg,
                    operand: Box::new(operand.ast),
                },
            });
        }
        self.parse_atom()
    }

    fn parse_atom(&mut self) -> Result<Expr> {
        let offset = self.here();
        match self.peek().clone() {
            Token::Number(value) => {
                self.pos += 1;
                Ok(Expr {
                    offset,
                    ast: FormulaAst::Number(value),
                })
            }
            Token::Ref(start) => {
                self.pos += 1;
                if matches!(self.peek(), Token::Colon) {
                    self.pos += 1;
                    let end = match self.peek() {
                        Token::Ref(r) => *r,
                        _ => return Err(self.error_here("expected cell reference after ':'")),
                    };
                    self.pos += 1;
                    let (start, end) = normalize_range(start, end);
                    return Ok(Expr {
                        offset,
                        ast: FormulaAst::Range(start, end),
                    });
                }
                Ok(Expr {
                    offset,
                    ast: FormulaAst::Ref(start),
                })
            }
            Token::Ident(name) => {
                self.pos += 1;
                let func = Func::from_name(&name).ok_or_else(|| Error::FormulaSyntax {
                    offset,
                    message: format!("unknown function \"{name}\""),
                })?;
                if !matches!(self.peek(), Token::LParen) {
                    return Err(self.error_here("expected '(' after function name"));
                }
                self.pos += 1;
                let mut args = Vec::new();
                loop {
                    let arg = self.parse_cmp()?;
                    args.push(arg.ast);
                    match self.peek() {
                        Token::Comma => self.pos += 1,
                        Token::RParen => {
                            self.pos += 1;
                            break;
                        }
                        _ => return Err(self.error_here("expected ',' or ')' in argument list")),
                    }
                }
                check_arity(func, args.len(), offset)?;
                if func == Func::If && args.iter().any(|a| matches!(a, FormulaAst::Range(..))) {
                    return Err(Error::FormulaSyntax {
                        offset,
                        message: "IF does not accept range arguments".to_string(),
                    });
                }
                Ok(Expr {
                    offset,
                    ast: FormulaAst::Call { func, args },
                })
            }
            Token::LParen => {
                self.pos += 1;
                let inner = self.parse_cmp()?;
                reject_range(&inner)?;
                if !matches!(self.peek(), Token::RParen) {
                    return Err(self.error_here("expected ')'"));
                }
                self.pos += 1;
                Ok(Expr {
                    offset,
                    ast: inner.ast,
                })
            }
            Token::End => Err(self.error_here("unexpected end of formula")),
            _ => Err(self.error_here("expected a value, reference, or '('")),
        }
    }
}

fn check_arity(func: Func, count: usize, offset: usize) -> Result<()> {
    let bad = |message: String| Error::FormulaSyntax { offset, message };
    match func {
        Func::If if count != 3 => Err(bad(format!("IF takes exactly 3 arguments, got {count}"))),
        f if f.is_aggregate() && count == 0 => {
            Err(bad(format!("{} requires at least 1 argument", f.name())))
        }
        _ => Ok(()),
    }
}

/// Reorders corners so the start is top-left; `$` pins travel with their
/// coordinate.
fn normalize_range(a: CellRef, b: CellRef) -> (CellRef, CellRef) {
    use crate::addr::CellAddress;
    let (col_lo, col_hi) = if a.addr.col <= b.addr.col {
        ((a.addr.col, a.abs_col), (b.addr.col, b.abs_col))
    } else {
        ((b.addr.col, b.abs_col), (a.addr.col, a.abs_col))
    };
    let (row_lo, row_hi) = if a.addr.row <= b.addr.row {
        ((a.addr.row, a.abs_row), (b.addr.row, b.abs_row))
    } else {
        ((b.addr.row, b.abs_row), (a.addr.row, a.abs_row))
    };
    (
        CellRef {
            addr: CellAddress::new(col_lo.0, row_lo.0),
            abs_col: col_lo.1,
            abs_row: row_lo.1,
        },
        CellRef {
            addr: CellAddress::new(col_hi.0, row_hi.0),
            abs_col: col_hi.1,
            abs_row: row_hi.1,
        },
    )
}
