//! Cell addressing and A1 notation.

use crate::error::{Error, Result};

/// Largest addressable column (XFD).
pub const MAX_COLUMN: u32 = 16_384;
/// Largest addressable row.
pub const MAX_ROW: u32 = 1_048_576;

/// A 1-based grid position. Column 1 = A.
///
/// Ordering is row-major (by row, then column), which is the scan order
/// used throughout for deterministic output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CellAddress {
    pub col: u32,
    pub row: u32,
}

impl CellAddress {
    /// Builds an address, panicking on a zero coordinate. Use
    /// [`CellAddress::checked`] for untrusted input.
    pub fn new(col: u32, row: u32) -> Self {
        assert!(col >= 1 && row >= 1, "cell coordinates are 1-based");
        CellAddress { col, row }
    }

    pub fn checked(col: u32, row: u32, text: &str) -> Result<Self> {
        if col < 1 || row < 1 {
            return Err(Error::MalformedReference {
                text: text.to_string(),
                reason: "coordinates are 1-based".to_string(),
            });
        }
        if col > MAX_COLUMN || row > MAX_ROW {
            return Err(Error::OutOfBounds {
                text: text.to_string(),
            });
        }
        Ok(CellAddress { col, row })
    }

    /// Translates by a row/column delta, failing if the result leaves the grid.
    pub fn offset(&self, drow: i64, dcol: i64) -> Option<CellAddress> {
        let row = self.row as i64 + drow;
        let col = self.col as i64 + dcol;
        if row < 1 || col < 1 || row > MAX_ROW as i64 || col > MAX_COLUMN as i64 {
            return None;
        }
        Some(CellAddress {
            col: col as u32,
            row: row as u32,
        })
    }
}

impl Ord for CellAddress {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.row, self.col).cmp(&(other.row, other.col))
    }
}

impl PartialOrd for CellAddress {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl std::fmt::Display for CellAddress {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&address_to_a1(*self))
    }
}

/// Renders an address in A1 notation. Columns use bijective base-26 letters.
pub fn address_to_a1(addr: CellAddress) -> String {
    let mut letters = Vec::new();
    let mut col = addr.col;
    while col > 0 {
        let rem = (col - 1) % 26;
        letters.push(b'A' + rem as u8);
        col = (col - 1) / 26;
    }
    letters.reverse();
    let mut out = String::from_utf8(letters).expect("ASCII letters");
    out.push_str(&addr.row.to_string());
    out
}

/// Parses A1 notation. Accepts lower-case column letters; rejects
/// anything that is not letters followed by digits.
pub fn a1_to_address(text: &str) -> Result<CellAddress> {
    let malformed = |reason: &str| Error::MalformedReference {
        text: text.to_string(),
        reason: reason.to_string(),
    };
    let letters: String = text
        .chars()
        .take_while(|c| c.is_ascii_alphabetic())
        .collect();
    let digits = &text[letters.len()..];
    if letters.is_empty() {
        return Err(malformed("missing column letters"));
    }
    if digits.is_empty() {
        return Err(malformed("missing row digits"));
    }
    if !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(malformed("trailing junk after row digits"));
    }
    let mut col: u64 = 0;
    for c in letters.chars() {
        col = col * 26 + (c.to_ascii_uppercase() as u64 - 'A' as u64 + 1);
        if col > MAX_COLUMN as u64 {
            return Err(Error::OutOfBounds {
                text: text.to_string(),
            });
        }
    }
    let row: u64 = digits.parse().map_err(|_| malformed("row out of range"))?;
    if row == 0 {
        return Err(malformed("rows are 1-based"));
    }
    if row > MAX_ROW as u64 {
        return Err(Error::OutOfBounds {
            text: text.to_string(),
        });
    }
    CellAddress::checked(col as u32, row as u32, text)
}
