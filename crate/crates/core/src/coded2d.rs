//! Two-sided coding for `A B`: `A` is split into row blocks and encoded with
//! the row construction, `B` into column blocks encoded with the column
//! construction, and worker `(i, j)` multiplies coded row block `i` by coded
//! column block `j`.
//!
//! For a fixed row `i` the products are linear in the coded column blocks, so
//! each row of the product grid is a 1D codeword of the column code (and each
//! column one of the row code). The decoder alternates row and column sweeps,
//! completing any line the 1D checker accepts, until the grid is full.

use std::collections::BTreeMap;

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{Block, PartitionAxis, PartitionedMatrix};
use crate::polar::{self, decodable_mask, CodeConstruction};

/// Operands with zero blocks inserted at the frozen indices.
#[derive(Debug, Clone)]
pub struct PaddedOperands {
    pub a_tilde: Vec<Block>,
    pub b_tilde: Vec<Block>,
}

impl PaddedOperands {
    pub fn new(
        a: &PartitionedMatrix,
        b: &PartitionedMatrix,
        row_c: &CodeConstruction,
        col_c: &CodeConstruction,
    ) -> Result<Self> {
        check_operands(a, b, row_c, col_c)?;
        Ok(PaddedOperands {
            a_tilde: pad(&a.blocks, row_c),
            b_tilde: pad(&b.blocks, col_c),
        })
    }
}

fn pad(blocks: &[Block], c: &CodeConstruction) -> Vec<Block> {
    let zero = Block::zeros(blocks[0].dim());
    let mut out = vec![zero; c.n_workers()];
    for (&ch, b) in c.data_set().iter().zip(blocks) {
        out[ch] = b.clone();
    }
    out
}

fn check_operands(
    a: &PartitionedMatrix,
    b: &PartitionedMatrix,
    row_c: &CodeConstruction,
    col_c: &CodeConstruction,
) -> Result<()> {
    if a.axis != PartitionAxis::Rows || b.axis != PartitionAxis::Cols {
        return Err(Error::Validation("A must be row-partitioned and B column-partitioned".into()));
    }
    if a.n_blocks() != row_c.n_data() || b.n_blocks() != col_c.n_data() {
        return Err(Error::Validation(format!(
            "block counts ({}, {}) do not match data channels ({}, {})",
            a.n_blocks(),
            b.n_blocks(),
            row_c.n_data(),
            col_c.n_data()
        )));
    }
    if a.cols != b.rows {
        return Err(Error::Shape(format!("A has {} columns, B has {} rows", a.cols, b.rows)));
    }
    Ok(())
}

/// Coded operands for the `N1 x N2` worker grid.
#[derive(Debug, Clone)]
pub struct TaskGrid {
    pub a_coded: Vec<Block>,
    pub b_coded: Vec<Block>,
    /// Shape of the uncoded product `A B`.
    pub product_shape: (usize, usize),
}

impl TaskGrid {
    pub fn n1(&self) -> usize {
        self.a_coded.len()
    }

    pub fn n2(&self) -> usize {
        self.b_coded.len()
    }

    /// Operands of worker `(i, j)`.
    pub fn task(&self, i: usize, j: usize) -> (&Block, &Block) {
        (&self.a_coded[i], &self.b_coded[j])
    }

    /// What worker `(i, j)` returns.
    pub fn compute(&self, i: usize, j: usize) -> Block {
        self.a_coded[i].dot(&self.b_coded[j])
    }
}

pub fn encode_2d(
    a: &PartitionedMatrix,
    b: &PartitionedMatrix,
    row_c: &CodeConstruction,
    col_c: &CodeConstruction,
) -> Result<TaskGrid> {
    check_operands(a, b, row_c, col_c)?;
    // Block additions do not care about orientation, so the same encoder
    // handles the column blocks of B directly.
    Ok(TaskGrid {
        a_coded: polar::encode(row_c, a)?,
        b_coded: polar::encode(col_c, b)?,
        product_shape: (a.rows, b.cols),
    })
}

/// Worker outputs of one product, with availability.
#[derive(Debug, Clone)]
pub struct ProductGrid {
    row_construction: CodeConstruction,
    col_construction: CodeConstruction,
    product_shape: (usize, usize),
    cells: Vec<Option<Block>>,
}

impl ProductGrid {
    pub fn new(row_c: CodeConstruction, col_c: CodeConstruction, product_shape: (usize, usize)) -> Self {
        let cells = vec![None; row_c.n_workers() * col_c.n_workers()];
        ProductGrid {
            row_construction: row_c,
            col_construction: col_c,
            product_shape,
            cells,
        }
    }

    pub fn n1(&self) -> usize {
        self.row_construction.n_workers()
    }

    pub fn n2(&self) -> usize {
        self.col_construction.n_workers()
    }

    pub fn row_construction(&self) -> &CodeConstruction {
        &self.row_construction
    }

    pub fn col_construction(&self) -> &CodeConstruction {
        &self.col_construction
    }

    pub fn insert(&mut self, i: usize, j: usize, block: Block) -> Result<()> {
        if i >= self.n1() || j >= self.n2() {
            return Err(Error::Validation(format!("cell ({i}, {j}) outside the grid")));
        }
        let n2 = self.n2();
        self.cells[i * n2 + j] = Some(block);
        Ok(())
    }

    pub fn cell(&self, i: usize, j: usize) -> Option<&Block> {
        self.cells[i * self.n2() + j].as_ref()
    }

    /// Row-major availability flags.
    pub fn known(&self) -> Vec<bool> {
        self.cells.iter().map(Option::is_some).collect()
    }

    pub fn missing(&self) -> usize {
        self.cells.iter().filter(|c| c.is_none()).count()
    }

    fn line(&self, line: Line) -> Vec<(usize, Block)> {
        let (n1, n2) = (self.n1(), self.n2());
        match line {
            Line::Row(i) => (0..n2).filter_map(|j| self.cells[i * n2 + j].clone().map(|b| (j, b))).collect(),
            Line::Col(j) => (0..n1).filter_map(|i| self.cells[i * n2 + j].clone().map(|b| (i, b))).collect(),
        }
    }

    /// Decodes one line and re-encodes it, filling the missing cells.
    fn complete_line(&mut self, line: Line) -> Result<()> {
        let code = match line {
            Line::Row(_) => &self.col_construction,
            Line::Col(_) => &self.row_construction,
        };
        let data = polar::decode(code, self.line(line))?;
        let full = polar::encode_blocks(code, &data)?;
        let n2 = self.n2();
        for (k, block) in full.into_iter().enumerate() {
            let idx = match line {
                Line::Row(i) => i * n2 + k,
                Line::Col(j) => k * n2 + j,
            };
            if self.cells[idx].is_none() {
                self.cells[idx] = Some(block);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum Line {
    Row(usize),
    Col(usize),
}

/// Row sweeps then column sweeps until no cell is missing. Errors if a full
/// sweep pair makes no progress.
pub fn fill_grid(grid: &mut ProductGrid) -> Result<()> {
    let (n1, n2) = (grid.n1(), grid.n2());
    while grid.missing() > 0 {
        let before = grid.missing();
        for i in 0..n1 {
            let flags: Vec<bool> = (0..n2).map(|j| grid.cell(i, j).is_some()).collect();
            if flags.contains(&false) && decodable_mask(&grid.col_construction, &flags) {
                grid.complete_line(Line::Row(i))?;
            }
        }
        for j in 0..n2 {
            let flags: Vec<bool> = (0..n1).map(|i| grid.cell(i, j).is_some()).collect();
            if flags.contains(&false) && decodable_mask(&grid.row_construction, &flags) {
                grid.complete_line(Line::Col(j))?;
            }
        }
        if grid.missing() == before {
            return Err(Error::NotDecodable(format!(
                "{} of {} product cells still missing after a full sweep",
                before,
                n1 * n2
            )));
        }
    }
    Ok(())
}

/// Recovers `A B` from the available worker outputs.
pub fn decode_2d(mut grid: ProductGrid) -> Result<Block> {
    fill_grid(&mut grid)?;
    let n1 = grid.n1();

    // Rows first: row i yields (G A~)_i B_k for every data column k.
    let mut partial: Vec<Vec<Block>> = Vec::with_capacity(n1);
    for i in 0..n1 {
        partial.push(polar::decode(&grid.col_construction, grid.line(Line::Row(i)))?);
    }
    let d2 = grid.col_construction.n_data();
    let mut products: Vec<Vec<Block>> = Vec::with_capacity(d2);
    for k in 0..d2 {
        let column: Vec<(usize, Block)> = partial.iter().enumerate().map(|(i, row)| (i, row[k].clone())).collect();
        products.push(polar::decode(&grid.row_construction, column)?);
    }

    // products[k][l] = A_l B_k
    let (h, w) = products[0][0].dim();
    let d1 = grid.row_construction.n_data();
    let mut full = Array2::<f64>::zeros((h * d1, w * d2));
    for (k, col) in products.iter().enumerate() {
        for (l, block) in col.iter().enumerate() {
            full.slice_mut(s![l * h..(l + 1) * h, k * w..(k + 1) * w]).assign(block);
        }
    }
    let (m, p) = grid.product_shape;
    Ok(full.slice(s![..m, ..p]).to_owned())
}

/// Boolean fixed point of the decoder's sweeps: true iff they fill the grid.
pub fn check_decodability_2d(known: &[bool], row_c: &CodeConstruction, col_c: &CodeConstruction) -> bool {
    let (n1, n2) = (row_c.n_workers(), col_c.n_workers());
    assert_eq!(known.len(), n1 * n2, "known mask must be N1 * N2 row-major");
    let mut known = known.to_vec();
    let mut row = vec![false; n2];
    let mut col = vec![false; n1];
    loop {
        let before = known.iter().filter(|&&k| !k).count();
        if before == 0 {
            return true;
        }
        for i in 0..n1 {
            row.copy_from_slice(&known[i * n2..(i + 1) * n2]);
            if row.contains(&false) && decodable_mask(col_c, &row) {
                known[i * n2..(i + 1) * n2].fill(true);
            }
        }
        for j in 0..n2 {
            for i in 0..n1 {
                col[i] = known[i * n2 + j];
            }
            if col.contains(&false) && decodable_mask(row_c, &col) {
                for i in 0..n1 {
                    known[i * n2 + j] = true;
                }
            }
        }
        if known.iter().filter(|&&k| !k).count() == before {
            return false;
        }
    }
}

/// Task grid manifest: constructions plus the object key of every cell payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskManifest {
    pub n1: usize,
    pub n2: usize,
    pub product_shape: (usize, usize),
    pub row_construction: CodeConstruction,
    pub col_construction: CodeConstruction,
    /// `"i,j"` to object key.
    pub cells: BTreeMap<String, String>,
}

impl TaskManifest {
    pub fn new(row_c: CodeConstruction, col_c: CodeConstruction, product_shape: (usize, usize)) -> Self {
        let (n1, n2) = (row_c.n_workers(), col_c.n_workers());
        let cells = (0..n1)
            .flat_map(|i| (0..n2).map(move |j| (format!("{i},{j}"), format!("cell_{i}_{j}.bin"))))
            .collect();
        TaskManifest {
            n1,
            n2,
            product_shape,
            row_construction: row_c,
            col_construction: col_c,
            cells,
        }
    }

    pub fn parse_cell(key: &str) -> Option<(usize, usize)> {
        let (i, j) = key.split_once(',')?;
        Some((i.trim().parse().ok()?, j.trim().parse().ok()?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn rate_half(n: usize) -> CodeConstruction {
        CodeConstruction::new(n, 0.5, n / 2).unwrap()
    }

    #[test]
    fn two_by_two_replicates_single_blocks() {
        let a = PartitionedMatrix::split_rows(&array![[1.0, 2.0]], 1).unwrap();
        let b = PartitionedMatrix::split_cols(&array![[3.0], [4.0]], 1).unwrap();
        let (rc, cc) = (rate_half(2), rate_half(2));
        let tasks = encode_2d(&a, &b, &rc, &cc).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let (x, y) = tasks.task(i, j);
                assert_eq!(x, &a.blocks[0]);
                assert_eq!(y, &b.blocks[0]);
            }
        }
    }

    #[test]
    fn padded_operands_zero_at_frozen() {
        let a = PartitionedMatrix::split_rows(&array![[1.0], [2.0]], 2).unwrap();
        let b = PartitionedMatrix::split_cols(&array![[1.0, 2.0]], 2).unwrap();
        let rc = rate_half(4);
        let p = PaddedOperands::new(&a, &b, &rc, &rc).unwrap();
        for &f in rc.frozen_set() {
            assert!(p.a_tilde[f].iter().all(|&v| v == 0.0));
            assert!(p.b_tilde[f].iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn full_grid_decodes_directly() {
        let a_full = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0], [7.0, 8.0]];
        let b_full = array![[1.0, 0.5, -1.0], [2.0, 0.0, 1.0]];
        let (rc, cc) = (rate_half(4), rate_half(2));
        let a = PartitionedMatrix::split_rows(&a_full, 2).unwrap();
        let b = PartitionedMatrix::split_cols(&b_full, 1).unwrap();
        let tasks = encode_2d(&a, &b, &rc, &cc).unwrap();
        let mut grid = ProductGrid::new(rc, cc, tasks.product_shape);
        for i in 0..4 {
            for j in 0..2 {
                grid.insert(i, j, tasks.compute(i, j)).unwrap();
            }
        }
        let got = decode_2d(grid).unwrap();
        assert_eq!(got, a_full.dot(&b_full));
    }

    #[test]
    fn stall_is_reported() {
        let (rc, cc) = (rate_half(2), rate_half(2));
        let grid = ProductGrid::new(rc, cc, (1, 1));
        assert!(matches!(decode_2d(grid), Err(Error::NotDecodable(_))));
    }

    #[test]
    fn block_count_mismatch() {
        let a = PartitionedMatrix::split_rows(&array![[1.0], [2.0]], 2).unwrap();
        let b = PartitionedMatrix::split_cols(&array![[1.0, 2.0]], 1).unwrap();
        assert!(encode_2d(&a, &b, &rate_half(2), &rate_half(2)).is_err());
    }

    #[test]
    fn manifest_cell_keys() {
        let m = TaskManifest::new(rate_half(2), rate_half(4), (3, 3));
        assert_eq!(m.cells.len(), 8);
        assert_eq!(m.cells["1,3"], "cell_1_3.bin");
        assert_eq!(TaskManifest::parse_cell("1,3"), Some((1, 3)));
        let back: TaskManifest = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
