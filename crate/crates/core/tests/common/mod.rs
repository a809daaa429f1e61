//! Shared fixtures and the random-model generator used by the property
//! and acceptance suites.

#![allow(dead_code)]

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use sheetstruct::addr::CellAddress;
use sheetstruct::workbook::{CellContent, Workbook};

pub fn fixture_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

pub fn load_fixture(name: &str) -> Workbook {
    let file = std::fs::File::open(fixture_path(name)).expect("fixture exists");
    sheetstruct::fcsv::load_workbook(file, name).expect("fixture parses")
}

pub fn addr(text: &str) -> CellAddress {
    sheetstruct::addr::a1_to_address(text).expect("valid address")
}

/// Cells of a random model, in generation order. Kept separate from the
/// workbook so insertion order can be shuffled.
pub struct GeneratedModel {
    pub cells: Vec<(CellAddress, CellContent)>,
}

impl GeneratedModel {
    pub fn workbook(&self, name: &str) -> Workbook {
        let mut wb = Workbook::new(name);
        for (addr, content) in &self.cells {
            wb.set(*addr, content.clone());
        }
        wb
    }

    pub fn shuffled_workbook(&self, name: &str, rng: &mut impl Rng) -> Workbook {
        let mut order: Vec<usize> = (0..self.cells.len()).collect();
        order.shuffle(rng);
        let mut wb = Workbook::new(name);
        for i in order {
            let (addr, content) = &self.cells[i];
            wb.set(*addr, content.clone());
        }
        wb
    }
}

/// Random acyclic model (≤ 100 cells): a contiguous block of inputs in
/// column A, then formulas over earlier cells mixing operators with
/// SUM/AVERAGE/MIN/MAX ranges and IF. Occasional labels in column B give
/// some formulas display names.
pub fn random_acyclic_model(seed: u64) -> GeneratedModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cells: Vec<(CellAddress, CellContent)> = Vec::new();
    let mut placed: Vec<CellAddress> = Vec::new();

    let n_inputs = rng.gen_range(2..=20usize);
    for row in 1..=n_inputs {
        let a = CellAddress::new(1, row as u32);
        cells.push((a, CellContent::Number(random_value(&mut rng))));
        placed.push(a);
    }

    let n_formulas = rng.gen_range(1..=60usize);
    let mut formula_slots = Vec::new();
    'outer: for row in 1..=20u32 {
        for col in 3..=7u32 {
            formula_slots.push(CellAddress::new(col, row));
            if formula_slots.len() == n_formulas {
                break 'outer;
            }
        }
    }
    for slot in formula_slots {
        if rng.gen_bool(0.25) {
            cells.push((
                CellAddress::new(2, slot.row),
                CellContent::Label(format!("row {} result", slot.row)),
            ));
        }
        let expr = random_expr(&mut rng, &placed, n_inputs, 0);
        let source = format!("={expr}");
        cells.push((
            slot,
            CellContent::formula(&source).expect("generated formula parses"),
        ));
        placed.push(slot);
    }
    GeneratedModel { cells }
}

/// Random model in which formulas may reference any value cell, later
/// ones included, so cycles occur. Every referenced cell exists.
pub fn random_maybe_cyclic_model(seed: u64) -> GeneratedModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cells: Vec<(CellAddress, CellContent)> = Vec::new();

    let n_inputs = rng.gen_range(2..=8usize);
    let n_formulas = rng.gen_range(2..=20usize);
    let mut all: Vec<CellAddress> = Vec::new();
    for row in 1..=n_inputs {
        all.push(CellAddress::new(1, row as u32));
    }
    for i in 0..n_formulas {
        all.push(CellAddress::new(3 + (i % 5) as u32, 1 + (i / 5) as u32));
    }
    for (i, a) in all.iter().enumerate() {
        if i < n_inputs {
            cells.push((*a, CellContent::Number(random_value(&mut rng))));
        } else {
            let lhs = all[rng.gen_range(0..all.len())];
            let rhs = all[rng.gen_range(0..all.len())];
            let op = ["+", "-", "*"][rng.gen_range(0..3)];
            let source = format!("={lhs}{op}{rhs}");
            cells.push((*a, CellContent::formula(&source).expect("parses")));
        }
    }
    GeneratedModel { cells }
}

fn random_value(rng: &mut impl Rng) -> f64 {
    if rng.gen_bool(0.2) {
        rng.gen_range(-40..=40) as f64 + 0.5
    } else {
        rng.gen_range(-50..=200) as f64
    }
}

fn random_ref(rng: &mut impl Rng, placed: &[CellAddress]) -> String {
    placed[rng.gen_range(0..placed.len())].to_string()
}

fn random_expr(
    rng: &mut impl Rng,
    placed: &[CellAddress],
    n_inputs: usize,
    depth: usize,
) -> String {
    if depth >= 3 {
        return random_atom(rng, placed);
    }
    match rng.gen_range(0..10) {
        0..=3 => {
            // operator chain over 2-3 atoms; multiplication only by a
            // small constant so long reference chains cannot overflow
            let n = rng.gen_range(2..=3);
            let mut out = random_atom(rng, placed);
            for _ in 1..n {
                if rng.gen_bool(0.25) {
                    out = format!("{out}*{}", rng.gen_range(2..=9));
                } else {
                    let op = if rng.gen_bool(0.5) { "+" } else { "-" };
                    out = format!("{out}{op}{}", random_atom(rng, placed));
                }
            }
            out
        }
        4 => {
            // division by a nonzero constant
            format!("{}/{}", random_atom(rng, placed), rng.gen_range(1..=9))
        }
        5 | 6 => {
            // aggregate over an input-column range
            let func = ["SUM", "AVERAGE", "MIN", "MAX"][rng.gen_range(0..4)];
            let lo = rng.gen_range(1..=n_inputs);
            let hi = rng.gen_range(lo..=n_inputs);
            format!("{func}(A{lo}:A{hi})")
        }
        7 => {
            // aggregate over explicit arguments
            let func = ["SUM", "MIN", "MAX"][rng.gen_range(0..3)];
            let a = random_expr(rng, placed, n_inputs, depth + 1);
            let b = random_expr(rng, placed, n_inputs, depth + 1);
            format!("{func}({a},{b})")
        }
        8 | 9 => {
            let cmp = [">", "<", ">=", "<=", "=", "<>"][rng.gen_range(0..6)];
            let cond = format!("{}{cmp}{}", random_ref(rng, placed), rng.gen_range(0..50));
            let t = random_expr(rng, placed, n_inputs, depth + 1);
            let e = random_expr(rng, placed, n_inputs, depth + 1);
            format!("IF({cond},{t},{e})")
        }
        _ => unreachable!(),
    }
}

fn random_atom(rng: &mut impl Rng, placed: &[CellAddress]) -> String {
    match rng.gen_range(0..10) {
        0..=5 => random_ref(rng, placed),
        6..=8 => rng.gen_range(0..100).to_string(),
        _ => format!("{}.5", rng.gen_range(0..40)),
    }
}
