//! Error types shared across the toolkit.

use crate::addr::CellAddress;
use thiserror::Error;

/// A single bad reference found while building the dependency graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceViolation {
    /// The formula cell that holds the offending reference.
    pub dependent: CellAddress,
    /// The cell being referenced.
    pub target: CellAddress,
    pub kind: ReferenceViolationKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceViolationKind {
    /// The referenced cell is empty and empty-as-zero is off.
    Dangling,
    /// The referenced cell holds a label, which carries no value.
    Label,
}

impl std::fmt::Display for ReferenceViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            ReferenceViolationKind::Dangling => write!(
                f,
                "{} references empty cell {}",
                self.dependent, self.target
            ),
            ReferenceViolationKind::Label => write!(
                f,
                "{} references label cell {}",
                self.dependent, self.target
            ),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed cell reference \"{text}\": {reason}")]
    MalformedReference { text: String, reason: String },

    #[error("cell {text} is outside the grid bounds (max column 16384, max row 1048576)")]
    OutOfBounds { text: String },

    #[error("formula syntax error at offset {offset}: {message}")]
    FormulaSyntax { offset: usize, message: String },

    #[error("{addr}: formula syntax error at offset {offset}: {message}")]
    CellFormula {
        addr: CellAddress,
        offset: usize,
        message: String,
    },

    #[error("CSV syntax error on line {line}: {message}")]
    CsvSyntax { line: usize, message: String },

    #[error("invalid references:\n{}", format_violations(.0))]
    InvalidReferences(Vec<ReferenceViolation>),

    #[error("cyclic dependencies detected:\n{}", format_cycles(.0))]
    Cycles(Vec<Vec<CellAddress>>),

    #[error("{addr}: division by zero")]
    DivisionByZero { addr: CellAddress },

    #[error("diff mapping names {addr}, which is absent from the {side} value map")]
    UnmappedAddress {
        addr: CellAddress,
        side: &'static str,
    },

    #[error("semantic preservation check failed: {count} cell(s) changed value")]
    PreservationFailed { count: usize },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

fn format_violations(violations: &[ReferenceViolation]) -> String {
    violations
        .iter()
        .map(|v| format!("  {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}

fn format_cycles(cycles: &[Vec<CellAddress>]) -> String {
    cycles
        .iter()
        .map(|c| {
            let cells: Vec<String> = c.iter().map(|a| a.to_string()).collect();
            format!("  {}", cells.join(" -> "))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

pub type Result<T> = std::result::Result<T, Error>;
