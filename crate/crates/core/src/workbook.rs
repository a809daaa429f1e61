//! The sparse workbook model.

use std::collections::BTreeMap;

use crate::addr::CellAddress;
use crate::error::{Error, Result};
use crate::formula::FormulaAst;

/// What a non-empty cell holds. Empty cells are represented by absence
/// from the workbook map.
#[derive(Debug, Clone, PartialEq)]
pub enum CellContent {
    Label(String),
    Number(f64),
    Formula { source: String, ast: FormulaAst },
}

impl CellContent {
    pub fn is_value(&self) -> bool {
        !matches!(self, CellContent::Label(_))
    }

    pub fn formula(source: &str) -> Result<CellContent> {
        let ast = crate::formula::parse_formula(source)?;
        Ok(CellContent::Formula {
            source: source.to_string(),
            ast,
        })
    }
}

/// A sparse grid of cells. Iteration order is row-major. Equality is
/// cell-for-cell; the origin name is bookkeeping, not content.
#[derive(Debug, Clone, Default)]
pub struct Workbook {
    cells: BTreeMap<CellAddress, CellContent>,
    pub origin_name: String,
}

impl PartialEq for Workbook {
    fn eq(&self, other: &Self) -> bool {
        self.cells == other.cells
    }
}

impl Workbook {
    pub fn new(origin_name: &str) -> Self {
        Workbook {
            cells: BTreeMap::new(),
            origin_name: origin_name.to_string(),
        }
    }

    pub fn set(&mut self, addr: CellAddress, content: CellContent) {
        self.cells.insert(addr, content);
    }

    /// Inserts after validating grid bounds; used by the loader.
    pub fn set_checked(&mut self, addr: CellAddress, content: CellContent) -> Result<()> {
        if addr.col > crate::addr::MAX_COLUMN || addr.row > crate::addr::MAX_ROW {
            return Err(Error::OutOfBounds {
                text: addr.to_string(),
            });
        }
        self.cells.insert(addr, content);
        Ok(())
    }

    pub fn get(&self, addr: CellAddress) -> Option<&CellContent> {
        self.cells.get(&addr)
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    /// Row-major iteration over non-empty cells.
    pub fn iter(&self) -> impl Iterator<Item = (CellAddress, &CellContent)> {
        self.cells.iter().map(|(a, c)| (*a, c))
    }

    /// The label text displayed for a cell: the nearest label to its left
    /// in the same row, or a synthesized `CALC_<address>` name.
    pub fn display_label(&self, addr: CellAddress) -> String {
        let row = addr.row;
        let mut best: Option<(u32, &str)> = None;
        for col in 1..addr.col {
            let probe = CellAddress { col, row };
            if let Some(CellContent::Label(text)) = self.cells.get(&probe) {
                best = Some((col, text));
            }
        }
        match best {
            Some((_, text)) => text.to_string(),
            None => format!("CALC_{addr}"),
        }
    }
}
