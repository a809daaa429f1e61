//! Formula-CSV: the RFC-4180 dialect used for input and output.
//!
//! Field semantics: a leading `=` marks a formula; text that parses as a
//! decimal (optional sign, optional comma thousands separators, optional
//! fraction) is a number; anything else non-empty is a label. Row r,
//! field c maps to cell (column c, row r). Output uses LF line endings
//! and quotes only where RFC 4180 requires it.

use std::io::{Read, Write};

use crate::addr::CellAddress;
use crate::error::{Error, Result};
use crate::workbook::{CellContent, Workbook};

/// Reads a workbook from formula-CSV bytes.
pub fn load_workbook<R: Read>(mut reader: R, origin_name: &str) -> Result<Workbook> {
    let mut raw = Vec::new();
    reader.read_to_end(&mut raw)?;
    let text = String::from_utf8(raw).map_err(|e| Error::CsvSyntax {
        line: 0,
        message: format!("input is not valid UTF-8: {e}"),
    })?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(&text);

    let mut wb = Workbook::new(origin_name);
    for (row_idx, record) in parse_records(text)?.into_iter().enumerate() {
        let row = row_idx as u32 + 1;
        for (col_idx, field) in record.into_iter().enumerate() {
            let col = col_idx as u32 + 1;
            if field.is_empty() {
                continue;
            }
            let addr = CellAddress::checked(col, row, &format!("column {col}, row {row}"))?;
            let content = classify_field(&field, addr)?;
            wb.set_checked(addr, content)?;
        }
    }
    Ok(wb)
}

/// Writes a workbook as formula-CSV. Loading the output reproduces the
/// workbook cell-for-cell.
pub fn save_workbook<W: Write>(wb: &Workbook, mut writer: W) -> Result<()> {
    let mut text = String::new();
    write_workbook_string(wb, &mut text);
    writer.write_all(text.as_bytes())?;
    Ok(())
}

/// Renders a workbook to an in-memory formula-CSV string.
pub fn write_workbook_string(wb: &Workbook, out: &mut String) {
    let max_row = wb.iter().map(|(a, _)| a.row).max().unwrap_or(0);
    for row in 1..=max_row {
        let mut fields: Vec<String> = Vec::new();
        for (addr, content) in wb.iter().filter(|(a, _)| a.row == row) {
            while fields.len() + 1 < addr.col as usize {
                fields.push(String::new());
            }
            fields.push(field_text(content));
        }
        let line: Vec<String> = fields.iter().map(|f| escape_field(f)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
}

fn field_text(content: &CellContent) -> String {
    match content {
        CellContent::Label(text) => text.clone(),
        CellContent::Number(v) => crate::formula::format_number(*v),
        CellContent::Formula { source, .. } => source.clone(),
    }
}

fn classify_field(field: &str, addr: CellAddress) -> Result<CellContent> {
    if field.starts_with('=') {
        let ast = crate::formula::parse_formula(field).map_err(|e| match e {
            Error::FormulaSyntax { offset, message } => Error::CellFormula {
                addr,
                offset,
                message,
            },
            other => other,
        })?;
        return Ok(CellContent::Formula {
            source: field.to_string(),
            ast,
        });
    }
    if let Some(value) = parse_decimal(field) {
        return Ok(CellContent::Number(value));
    }
    Ok(CellContent::Label(field.to_string()))
}

/// Strict decimal: optional sign, digits with optional comma thousands
/// separators (groups of exactly three), optional fraction. No exponent,
/// no surrounding whitespace.
pub fn parse_decimal(text: &str) -> Option<f64> {
    let rest = text.strip_prefix(['+', '-']).unwrap_or(text);
    if rest.is_empty() {
        return None;
    }
    let (int_part, frac_part) = match rest.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (rest, None),
    };
    if let Some(f) = frac_part {
        if f.is_empty() || !f.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
    }
    if int_part.is_empty() {
        return None;
    }
    let groups: Vec<&str> = int_part.split(',').collect();
    if groups.len() > 1 {
        if groups[0].is_empty() || groups[0].len() > 3 {
            return None;
        }
        if !groups[1..].iter().all(|g| g.len() == 3) {
            return None;
        }
    }
    if !groups.iter().all(|g| g.bytes().all(|b| b.is_ascii_digit())) {
        return None;
    }
    let plain: String = text.chars().filter(|c| *c != ',').collect();
    // Absurdly long digit strings overflow to infinity, which would not
    // survive a save/load round trip; treat them as labels.
    plain.parse().ok().filter(|v: &f64| v.is_finite())
}

/// RFC-4180 record parser. Accepts LF and CRLF terminators; quoted fields
/// may contain separators, quotes (doubled), and line breaks. An empty
/// line is a record with no cells, so row positions are preserved.
fn parse_records(text: &str) -> Result<Vec<Vec<String>>> {
    let mut records = Vec::new();
    let mut record: Vec<String> = Vec::new();
    let mut field = String::new();
    let mut line = 1usize;
    let mut chars = text.chars().peekable();
    // A record ends at a terminator; quote state decides whether separators
    // are literal.
    let mut in_quotes = false;
    let mut field_was_quoted = false;
    let mut any_input = false;

    while let Some(c) = chars.next() {
        any_input = true;
        if in_quotes {
            match c {
                '"' => {
                    if chars.peek() == Some(&'"') {
                        chars.next();
                        field.push('"');
                    } else {
                        in_quotes = false;
                    }
                }
                '\n' => {
                    line += 1;
                    field.push(c);
                }
                _ => field.push(c),
            }
            continue;
        }
        match c {
            '"' => {
                if field.is_empty() && !field_was_quoted {
                    in_quotes = true;
                    field_was_quoted = true;
                } else {
                    return Err(Error::CsvSyntax {
                        line,
                        message: "unexpected '\"' inside unquoted field".to_string(),
                    });
                }
            }
            ',' => {
                record.push(std::mem::take(&mut field));
                field_was_quoted = false;
            }
            '\r' => {
                if chars.peek() == Some(&'\n') {
                    continue;
                }
                field.push(c);
            }
            '\n' => {
                record.push(std::mem::take(&mut field));
                records.push(std::mem::take(&mut record));
                field_was_quoted = false;
                line += 1;
            }
            _ => field.push(c),
        }
    }
    if in_quotes {
        return Err(Error::CsvSyntax {
            line,
            message: "unbalanced quote at end of input".to_string(),
        });
    }
    // Final record without trailing newline.
    if !field.is_empty() || !record.is_empty() || (any_input && field_was_quoted) {
        record.push(field);
        records.push(record);
    }
    Ok(records)
}

fn escape_field(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') || field.contains('\r') {
        let mut out = String::with_capacity(field.len() + 2);
        out.push('"');
        for c in field.chars() {
            if c == '"' {
                out.push('"');
            }
            out.push(c);
        }
        out.push('"');
        out
    } else {
        field.to_string()
    }
}
