//! Characterization of 2x2 polarizing kernels over the reals.
//!
//! With `[v1, v2] = K [u1, u2]`, a kernel is polarizing when `u1` is available
//! once both outputs have arrived and `u2` is available, given `u1`, from
//! whichever output arrives first.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};

/// Entries `|x| < ZERO_TOL` count as zero and `|det| < ZERO_TOL` as singular.
pub const ZERO_TOL: f64 = 1e-12;

/// F2, the kernel used by the encoder.
pub const F2: Kernel2x2 = Kernel2x2 {
    entries: [[1.0, 1.0], [0.0, 1.0]],
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel2x2 {
    pub entries: [[f64; 2]; 2],
}

impl Kernel2x2 {
    pub fn new(k11: f64, k12: f64, k21: f64, k22: f64) -> Self {
        Kernel2x2 {
            entries: [[k11, k12], [k21, k22]],
        }
    }

    pub fn det(&self) -> f64 {
        let [[a, b], [c, d]] = self.entries;
        a * d - b * c
    }

    fn apply(&self, u: [f64; 2]) -> [f64; 2] {
        let [[a, b], [c, d]] = self.entries;
        [a * u[0] + b * u[1], c * u[0] + d * u[1]]
    }
}

fn is_zero(x: f64) -> bool {
    x.abs() < ZERO_TOL
}

/// Both second-column entries nonzero and the kernel invertible.
pub fn is_polarizing(kernel: &Kernel2x2) -> bool {
    let [[_, k12], [_, k22]] = kernel.entries;
    kernel.entries.iter().flatten().all(|x| x.is_finite())
        && !is_zero(k12)
        && !is_zero(k22)
        && !is_zero(kernel.det())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct EncodeCost {
    pub additions: usize,
    pub multiplications: usize,
}

/// Operations needed to evaluate `v = K u` once: each row with `k` nonzero
/// terms costs `k - 1` additions, and every nonzero entry other than `±1`
/// costs a multiplication.
pub fn encode_cost(kernel: &Kernel2x2) -> Result<EncodeCost> {
    if !is_polarizing(kernel) {
        return Err(Error::Validation(format!("kernel {:?} is not polarizing", kernel.entries)));
    }
    let mut cost = EncodeCost {
        additions: 0,
        multiplications: 0,
    };
    for row in kernel.entries {
        let nonzero: Vec<f64> = row.into_iter().filter(|&x| !is_zero(x)).collect();
        cost.additions += nonzero.len().saturating_sub(1);
        cost.multiplications += nonzero.iter().filter(|x| !is_zero(x.abs() - 1.0)).count();
    }
    Ok(cost)
}

/// Recovers `u1` from both outputs, if the outputs determine it.
fn recover_first(kernel: &Kernel2x2, v: [f64; 2]) -> Option<f64> {
    let [[a, b], [c, d]] = kernel.entries;
    let det = kernel.det();
    if !is_zero(det) {
        return Some((d * v[0] - b * v[1]) / det);
    }
    // A row with no u2 term pins u1 on its own.
    [(a, b, v[0]), (c, d, v[1])]
        .into_iter()
        .find(|&(k1, k2, _)| !is_zero(k1) && is_zero(k2))
        .map(|(k1, _, vi)| vi / k1)
}

/// Recovers `u2` from one output `row` given `u1`.
fn recover_second(kernel: &Kernel2x2, row: usize, vi: f64, u1: f64) -> Option<f64> {
    let [k1, k2] = kernel.entries[row];
    (!is_zero(k2)).then(|| (vi - k1 * u1) / k2)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-8 * (1.0 + b.abs())
}

/// Monte Carlo witness of the polarizing property.
///
/// Each trial draws random inputs and i.i.d. exponential run times for the two
/// outputs, then checks that `u1` is recovered exactly at `max(T1, T2)` and
/// `u2` at `min(T1, T2)` from the first output to arrive. Returns true iff
/// every trial succeeds.
pub fn check_polarizing_by_simulation(kernel: &Kernel2x2, trials: usize, seed: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials).all(|_| {
        let u: [f64; 2] = [rng.sample(StandardNormal), rng.sample(StandardNormal)];
        let t: [f64; 2] = [Exp1.sample(&mut rng), Exp1.sample(&mut rng)];
        let v = kernel.apply(u);
        if !v.iter().all(|x| x.is_finite()) {
            return false;
        }
        let first = if t[0] <= t[1] { 0 } else { 1 };
        let Some(u1) = recover_first(kernel, v) else {
            return false;
        };
        let Some(u2) = recover_second(kernel, first, v[first], u1) else {
            return false;
        };
        close(u1, u[0]) && close(u2, u[1])
    })
}
