//! Formula tokenizer. Offsets are 0-based character positions into the
//! full formula text (including the leading `=`), used in error reports.

use crate::addr::CellAddress;
use crate::error::{Error, Result};
use crate::formula::CellRef;

#[derive(Debug, Clone, PartialEq)]
pub enum Token {
    Number(f64),
    Ref(CellRef),
    /// A bare word that is not letters-then-digits, e.g. a function name.
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Eq,
    Lt,
    Gt,
    Le,
    Ge,
    Ne,
    LParen,
    RParen,
    Comma,
    Colon,
    End,
}

#[derive(Debug, Clone)]
pub struct Spanned {
    pub token: Token,
    pub offset: usize,
}

pub fn tokenize(text: &str) -> Result<Vec<Spanned>> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    let err = |offset: usize, message: String| Error::FormulaSyntax { offset, message };

    while i < bytes.len() {
        let start = i;
        let b = bytes[i];
        match b {
            b' ' | b'\t' => {
                i += 1;
                continue;
            }
            b'+' => push_simple(&mut tokens, Token::Plus, &mut i, start),
            b'-' => push_simple(&mut tokens, Token::Minus, &mut i, start),
            b'*' => push_simple(&mut tokens, Token::Star, &mut i, start),
            b'/' => push_simple(&mut tokens, Token::Slash, &mut i, start),
            b'(' => push_simple(&mut tokens, Token::LParen, &mut i, start),
            b')' => push_simple(&mut tokens, Token::RParen, &mut i, start),
            b',' => push_simple(&mut tokens, Token::Comma, &mut i, start),
            b':' => push_simple(&mut tokens, Token::Colon, &mut i, start),
            b'=' => push_simple(&mut tokens, Token::Eq, &mut i, start),
            b'<' => {
                i += 1;
                let token = match bytes.get(i) {
                    Some(b'=') => {
                        i += 1;
                        Token::Le
                    }
                    Some(b'>') => {
                        i += 1;
                        Token::Ne
                    }
                    _ => Token::Lt,
                };
                tokens.push(Spanned {
                    token,
                    offset: start,
                });
            }
            b'>' => {
                i += 1;
                let token = if bytes.get(i) == Some(&b'=') {
                    i += 1;
                    Token::Ge
                } else {
                    Token::Gt
                };
                tokens.push(Spanned {
                    token,
                    offset: start,
                });
            }
            b'0'..=b'9' | b'.' => {
                let mut j = i;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                if j == i {
                    return Err(err(start, "unexpected '.'".to_string()));
                }
                if bytes.get(j) == Some(&b'.') {
                    j += 1;
                    let frac_start = j;
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    if j == frac_start {
                        return Err(err(
                            start,
                            "digits required after decimal point".to_string(),
                        ));
                    }
                }
                let literal = &text[i..j];
                let value: f64 = literal
                    .parse()
                    .ok()
                    .filter(|v: &f64| v.is_finite())
                    .ok_or_else(|| err(start, format!("number literal \"{literal}\" overflows")))?;
                tokens.push(Spanned {
                    token: Token::Number(value),
                    offset: start,
                });
                i = j;
            }
            b'$' | b'A'..=b'Z' | b'a'..=b'z' => {
                let spanned = lex_word(text, &mut i)?;
                tokens.push(spanned);
            }
            _ => {
                let c = text[i..].chars().next().unwrap();
                return Err(err(start, format!("unexpected character '{c}'")));
            }
        }
    }
    tokens.push(Spanned {
        token: Token::End,
        offset: text.len(),
    });
    Ok(tokens)
}

fn push_simple(tokens: &mut Vec<Spanned>, token: Token, i: &mut usize, offset: usize) {
    tokens.push(Spanned { token, offset });
    *i += 1;
}

/// Lexes `$`-marked references, bare references, and identifiers. A word of
/// letters followed by digits is a cell reference; pure letters are an
/// identifier.
fn lex_word(text: &str, i: &mut usize) -> Result<Spanned> {
    let bytes = text.as_bytes();
    let start = *i;
    let err = |message: String| Error::FormulaSyntax {
        offset: start,
        message,
    };

    let abs_col = bytes[*i] == b'$';
    if abs_col {
        *i += 1;
    }
    let letters_start = *i;
    while *i < bytes.len() && bytes[*i].is_ascii_alphabetic() {
        *i += 1;
    }
    let letters = &text[letters_start..*i];
    if letters.is_empty() {
        return Err(err("'$' must be followed by a column letter".to_string()));
    }

    let abs_row = *i < bytes.len() && bytes[*i] == b'$';
    if abs_row {
        *i += 1;
    }
    let digits_start = *i;
    while *i < bytes.len() && bytes[*i].is_ascii_digit() {
        *i += 1;
    }
    let digits = &text[digits_start..*i];

    if digits.is_empty() {
        if abs_col || abs_row {
            return Err(err("absolute marker without a row number".to_string()));
        }
        return Ok(Spanned {
            token: Token::Ident(letters.to_string()),
            offset: start,
        });
    }

    let a1 = format!("{}{}", letters.to_ascii_uppercase(), digits);
    let addr: CellAddress = crate::addr::a1_to_address(&a1).map_err(|e| match e {
        Error::OutOfBounds { text } => Error::FormulaSyntax {
            offset: start,
            message: format!("reference {text} is outside the grid"),
        },
        other => other,
    })?;
    Ok(Spanned {
        token: Token::Ref(CellRef {
            addr,
            abs_col,
            abs_row,
        }),
        offset: start,
    })
}
