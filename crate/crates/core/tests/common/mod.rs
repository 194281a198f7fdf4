#![allow(dead_code)]

use nalgebra::DMatrix;
use ndarray::Array2;
use polar_coded::polar::generator_matrix;
use polar_coded::{Block, CodeConstruction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_block<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Block {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
}

pub fn to_dmatrix(b: &Block) -> DMatrix<f64> {
    DMatrix::from_fn(b.nrows(), b.ncols(), |i, j| b[[i, j]])
}

pub fn mask(n: usize, bits: u64) -> Vec<bool> {
    (0..n).map(|i| bits >> i & 1 == 1).collect()
}

/// Rank by SVD with a relative cutoff.
pub fn rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    m.rank(1e-9 * m.norm().max(1.0))
}

/// Generator restricted to the given workers, as a dense matrix.
fn rows_of(g: &[Vec<f64>], workers: &[usize], cols: std::ops::Range<usize>) -> DMatrix<f64> {
    DMatrix::from_fn(workers.len(), cols.len(), |r, c| g[workers[r]][cols.start + c])
}

/// Successive-cancellation decodability by linear algebra: data input `i` is
/// recovered iff it is determined by the received outputs once every earlier
/// input is known.
pub fn sc_decodable_by_rank(c: &CodeConstruction, available: &[bool]) -> bool {
    let n = c.n_workers();
    let g = generator_matrix(n).unwrap();
    let workers: Vec<usize> = (0..n).filter(|&w| available[w]).collect();
    c.data_set().iter().all(|&i| {
        let with = rows_of(&g, &workers, i..n);
        let without = rows_of(&g, &workers, i + 1..n);
        rank(&with) == rank(&without) + 1
    })
}

/// Least-squares recovery of the data blocks from the available coded
/// outputs, `None` when the data columns of the generator are rank deficient.
pub fn dense_decode(c: &CodeConstruction, outputs: &[(usize, Block)]) -> Option<Vec<Block>> {
    let n = c.n_workers();
    let g = generator_matrix(n).unwrap();
    let data = c.data_set();
    let m = DMatrix::from_fn(outputs.len(), data.len(), |r, k| g[outputs[r].0][data[k]]);
    if rank(&m) < data.len() {
        return None;
    }
    let (h, w) = outputs[0].1.dim();
    let rhs = DMatrix::from_fn(outputs.len(), h * w, |r, col| outputs[r].1[[col / w, col % w]]);
    let sol = m.svd(true, true).solve(&rhs, 1e-12).ok()?;
    Some(
        (0..data.len())
            .map(|k| Array2::from_shape_fn((h, w), |(a, b)| sol[(k, a * w + b)]))
            .collect(),
    )
}
