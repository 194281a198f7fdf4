//! Dense real blocks, row/column partitioning, and the binary block format.
//!
//! A block file is a 16-byte header (`rows`, `cols` as little-endian `u64`)
//! followed by `rows * cols` little-endian `f64` values in row-major order.

use std::io::{Read, Write};

use ndarray::{concatenate, s, Array2, Axis};

use crate::error::{Error, Result};

pub type Block = Array2<f64>;

/// A dense matrix split into equally shaped row blocks (or column blocks).
///
/// `rows` and `cols` are the shape of the original, unpadded matrix. When the
/// split dimension is not divisible by the block count, the last rows (or
/// columns) are zero-padded so that every block has the same shape.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionedMatrix {
    pub rows: usize,
    pub cols: usize,
    pub axis: PartitionAxis,
    pub blocks: Vec<Block>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionAxis {
    Rows,
    Cols,
}

impl PartitionedMatrix {
    /// Splits `a` into `n_blocks` row blocks of `ceil(m / n_blocks)` rows each.
    pub fn split_rows(a: &Block, n_blocks: usize) -> Result<Self> {
        if n_blocks == 0 {
            return Err(Error::Validation("block count must be positive".into()));
        }
        let (m, n) = a.dim();
        let h = m.div_ceil(n_blocks).max(1);
        let padded = pad_to(a, h * n_blocks, n);
        let blocks = (0..n_blocks)
            .map(|i| padded.slice(s![i * h..(i + 1) * h, ..]).to_owned())
            .collect();
        Ok(Self {
            rows: m,
            cols: n,
            axis: PartitionAxis::Rows,
            blocks,
        })
    }

    /// Splits `b` into `n_blocks` column blocks of `ceil(n / n_blocks)` columns each.
    pub fn split_cols(b: &Block, n_blocks: usize) -> Result<Self> {
        let t = Self::split_rows(&b.t().to_owned(), n_blocks)?;
        Ok(Self {
            rows: t.cols,
            cols: t.rows,
            axis: PartitionAxis::Cols,
            blocks: t.blocks.into_iter().map(|blk| blk.reversed_axes()).collect(),
        })
    }

    /// Wraps already-computed blocks, e.g. decoder output.
    pub fn from_blocks(blocks: Vec<Block>, axis: PartitionAxis, rows: usize, cols: usize) -> Result<Self> {
        check_congruent(&blocks)?;
        Ok(Self {
            rows,
            cols,
            axis,
            blocks,
        })
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_shape(&self) -> (usize, usize) {
        self.blocks.first().map(|b| b.dim()).unwrap_or((0, 0))
    }

    /// Concatenates the blocks along the split axis and strips padding.
    pub fn assemble(&self) -> Block {
        let views: Vec<_> = self.blocks.iter().map(|b| b.view()).collect();
        match self.axis {
            PartitionAxis::Rows => {
                let full = concatenate(Axis(0), &views).expect("congruent blocks");
                full.slice(s![..self.rows, ..]).to_owned()
            }
            PartitionAxis::Cols => {
                let full = concatenate(Axis(1), &views).expect("congruent blocks");
                full.slice(s![.., ..self.cols]).to_owned()
            }
        }
    }
}

fn pad_to(a: &Block, rows: usize, cols: usize) -> Block {
    let (m, n) = a.dim();
    if (m, n) == (rows, cols) {
        return a.clone();
    }
    let mut out = Block::zeros((rows, cols));
    out.slice_mut(s![..m, ..n]).assign(a);
    out
}

/// Errors unless every block has the same shape.
pub fn check_congruent(blocks: &[Block]) -> Result<()> {
    if let Some(first) = blocks.first() {
        let shape = first.dim();
        if let Some((i, b)) = blocks.iter().enumerate().find(|(_, b)| b.dim() != shape) {
            return Err(Error::Shape(format!(
                "block {i} has shape {:?}, expected {:?}",
                b.dim(),
                shape
            )));
        }
    }
    Ok(())
}

/// Relative Frobenius error `||got - want|| / max(||want||, tiny)`.
pub fn relative_error(got: &Block, want: &Block) -> f64 {
    let diff = (got - want).mapv(|v| v * v).sum().sqrt();
    let norm = want.mapv(|v| v * v).sum().sqrt();
    diff / norm.max(f64::MIN_POSITIVE)
}

pub fn write_block<W: Write>(mut w: W, block: &Block) -> Result<()> {
    let (rows, cols) = block.dim();
    w.write_all(&(rows as u64).to_le_bytes())?;
    w.write_all(&(cols as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(rows * cols * 8);
    for v in block.iter() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_block<R: Read>(mut r: R) -> Result<Block> {
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let rows = u64::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let cols = u64::from_le_bytes(word) as usize;
    let len = rows
        .checked_mul(cols)
        .filter(|n| *n <= (1 << 36))
        .ok_or_else(|| Error::Validation(format!("implausible block header {rows}x{cols}")))?;
    let mut buf = vec![0u8; len * 8];
    r.read_exact(&mut buf)?;
    let data = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Block::from_shape_vec((rows, cols), data).map_err(|e| Error::Shape(e.to_string()))
}

pub fn save_block(path: &std::path::Path, block: &Block) -> Result<()> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_block(f, block)
}

pub fn load_block(path: &std::path::Path) -> Result<Block> {
    let f = std::io::BufReader::new(std::fs::File::open(path)?);
    read_block(f)
}
