//! Naive real-valued Reed-Solomon (Vandermonde) code: `O(n k)` block encoding
//! and `O(k^3)` decoding by Gaussian elimination.

use std::f64::consts::PI;

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};
use crate::matrix::{check_congruent, Block, PartitionedMatrix};

/// Relative pivot threshold below which the Vandermonde system is treated as singular.
const PIVOT_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct MdsCode {
    n: usize,
    k: usize,
    points: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointSet {
    /// `cos((2j + 1) pi / 2n)`.
    Chebyshev,
    /// `-1 + 2j / (n - 1)`.
    Equispaced,
}

impl MdsCode {
    pub fn new(n: usize, k: usize, points: Vec<f64>) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::Validation(format!("need 1 <= k <= n, got k={k}, n={n}")));
        }
        if points.len() != n {
            return Err(Error::Validation(format!("{} evaluation points for n={n}", points.len())));
        }
        let mut sorted = points.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) || sorted.iter().any(|p| !p.is_finite()) {
            return Err(Error::Validation("evaluation points must be distinct and finite".into()));
        }
        Ok(MdsCode { n, k, points })
    }

    pub fn with_points(n: usize, k: usize, set: PointSet) -> Result<Self> {
        let points = match set {
            PointSet::Chebyshev => (0..n)
                .map(|j| ((2 * j + 1) as f64 * PI / (2 * n) as f64).cos())
                .collect(),
            PointSet::Equispaced if n == 1 => vec![0.0],
            PointSet::Equispaced => (0..n).map(|j| -1.0 + 2.0 * j as f64 / (n - 1) as f64).collect(),
        };
        Self::new(n, k, points)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }
}

/// Output `j` is `sum_i data_i * point_j^i`.
pub fn mds_encode(data: &PartitionedMatrix, code: &MdsCode) -> Result<Vec<Block>> {
    mds_encode_blocks(&data.blocks, code)
}

pub fn mds_encode_blocks(data: &[Block], code: &MdsCode) -> Result<Vec<Block>> {
    if data.len() != code.k {
        return Err(Error::Validation(format!("{} data blocks for k={}", data.len(), code.k)));
    }
    check_congruent(data)?;
    Ok(code
        .points
        .iter()
        .map(|&x| {
            // Horner keeps this at k block updates per output.
            let mut acc = data[code.k - 1].clone();
            for block in data[..code.k - 1].iter().rev() {
                acc *= x;
                acc += block;
            }
            acc
        })
        .collect())
}

/// Solves the `k x k` Vandermonde system for the data blocks, using the
/// first `k` distinct outputs given.
pub fn mds_decode(outputs: &[(usize, Block)], code: &MdsCode) -> Result<Vec<Block>> {
    let k = code.k;
    let mut chosen: Vec<&(usize, Block)> = Vec::with_capacity(k);
    for out in outputs {
        if out.0 >= code.n {
            return Err(Error::Validation(format!("output index {} out of range", out.0)));
        }
        if !chosen.iter().any(|c| c.0 == out.0) {
            chosen.push(out);
        }
        if chosen.len() == k {
            break;
        }
    }
    if chosen.len() < k {
        return Err(Error::NotDecodable(format!("{} distinct outputs, need {k}", chosen.len())));
    }
    let blocks: Vec<Block> = chosen.iter().map(|(_, b)| b.clone()).collect();
    check_congruent(&blocks)?;
    let (rows, cols) = blocks[0].dim();

    let mut v = Array2::<f64>::zeros((k, k));
    for (r, (idx, _)) in chosen.iter().enumerate() {
        let x = code.points[*idx];
        let mut p = 1.0;
        for c in 0..k {
            v[[r, c]] = p;
            p *= x;
        }
    }
    let mut rhs = Array2::<f64>::zeros((k, rows * cols));
    for (r, b) in blocks.iter().enumerate() {
        for (dst, src) in rhs.row_mut(r).iter_mut().zip(b.iter()) {
            *dst = *src;
        }
    }
    let solution = gauss_solve(v, rhs)?;
    Ok(solution
        .axis_iter(Axis(0))
        .map(|row| Block::from_shape_vec((rows, cols), row.to_vec()).expect("flat block"))
        .collect())
}

/// Gaussian elimination with partial pivoting on a multi-column right-hand side.
fn gauss_solve(mut a: Array2<f64>, mut b: Array2<f64>) -> Result<Array2<f64>> {
    let k = a.nrows();
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    for col in 0..k {
        let (piv, piv_val) = (col..k)
            .map(|r| (r, a[[r, col]].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .expect("non-empty");
        if piv_val < PIVOT_TOL * scale {
            return Err(Error::Conditioning(format!(
                "pivot {piv_val:.3e} in column {col} of a {k}x{k} Vandermonde system"
            )));
        }
        if piv != col {
            for c in 0..k {
                a.swap([col, c], [piv, c]);
            }
            for c in 0..b.ncols() {
                b.swap([col, c], [piv, c]);
            }
        }
        let pivot_row_b = b.row(col).to_owned();
        for r in col + 1..k {
            let f = a[[r, col]] / a[[col, col]];
            if f == 0.0 {
                continue;
            }
            for c in col..k {
                a[[r, c]] -= f * a[[col, c]];
            }
            b.row_mut(r).scaled_add(-f, &pivot_row_b);
        }
    }
    for col in (0..k).rev() {
        let mut row = b.row(col).to_owned();
        for c in col + 1..k {
            row.scaled_add(-a[[col, c]], &b.row(c));
        }
        row /= a[[col, col]];
        b.row_mut(col).assign(&row);
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn single_block_is_replicated() {
        let code = MdsCode::with_points(3, 1, PointSet::Chebyshev).unwrap();
        let u = array![[1.0, 2.0]];
        let out = mds_encode_blocks(&[u.clone()], &code).unwrap();
        assert!(out.iter().all(|b| *b == u));
        assert_eq!(mds_decode(&[(2, u.clone())], &code).unwrap(), vec![u]);
    }

    #[test]
    fn two_block_evaluation_and_solve() {
        let code = MdsCode::new(3, 2, vec![0.0, 1.0, 2.0]).unwrap();
        let u = array![[1.0, -1.0]];
        let v = array![[0.5, 3.0]];
        let out = mds_encode_blocks(&[u.clone(), v.clone()], &code).unwrap();
        assert_eq!(out, vec![u.clone(), &u + &v, &u + &(&v * 2.0)]);
        let back = mds_decode(&[(1, out[1].clone()), (2, out[2].clone())], &code).unwrap();
        assert!((&back[0] - &u).iter().all(|d| d.abs() < 1e-14));
        assert!((&back[1] - &v).iter().all(|d| d.abs() < 1e-14));
    }

    #[test]
    fn validation() {
        assert!(MdsCode::new(3, 2, vec![0.0, 1.0, 1.0]).is_err());
        assert!(MdsCode::new(3, 4, vec![0.0, 1.0, 2.0]).is_err());
        let code = MdsCode::new(3, 2, vec![0.0, 1.0, 2.0]).unwrap();
        let err = mds_decode(&[(1, array![[1.0]]), (1, array![[1.0]])], &code).unwrap_err();
        assert!(matches!(err, Error::NotDecodable(_)));
    }

    #[test]
    fn chebyshev_points_are_distinct_in_range() {
        let code = MdsCode::with_points(64, 32, PointSet::Chebyshev).unwrap();
        assert!(code.points().iter().all(|p| p.abs() < 1.0));
    }
}
