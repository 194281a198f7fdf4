//! Least-squares gradient descent, `x <- x - mu (A^T A x - A^T y)`, with the
//! `A^T A x` product computed on the worker pool each iteration.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::matrix::Block;
use crate::polar::CodeConstruction;
use crate::sim::{run_uncoded_matvec, CodedMatvec, MatvecRun, PoolConfig, RuntimeModel};

pub const POWER_ITERATIONS: usize = 50;
/// Residual growth over its running minimum that counts as divergence.
pub const DIVERGENCE_FACTOR: f64 = 10.0;

#[derive(Debug, Clone)]
pub struct LeastSquaresProblem {
    pub a: Block,
    pub y: Block,
    /// Defaults to `1 / ||A^T A||_2` when `None`.
    pub mu: Option<f64>,
    pub iterations: usize,
    pub gram: Option<Block>,
    pub aty: Option<Block>,
}

impl LeastSquaresProblem {
    pub fn new(a: Block, y: Block, iterations: usize) -> Result<Self> {
        let p = LeastSquaresProblem {
            a,
            y,
            mu: None,
            iterations,
            gram: None,
            aty: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_mu(mut self, mu: f64) -> Result<Self> {
        self.mu = Some(mu);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let (m, n) = self.a.dim();
        if self.y.nrows() != m {
            return Err(Error::Shape(format!("A is {m}x{n} but y has {} rows", self.y.nrows())));
        }
        if let Some(mu) = self.mu {
            if !(mu > 0.0 && mu.is_finite()) {
                return Err(Error::Validation(format!("step size must be positive, got {mu}")));
            }
        }
        if let Some(g) = &self.gram {
            if g.dim() != (n, n) {
                return Err(Error::Shape(format!("A^T A should be {n}x{n}, got {:?}", g.dim())));
            }
        }
        if let Some(v) = &self.aty {
            if v.dim() != (n, self.y.ncols()) {
                return Err(Error::Shape(format!("A^T y should be {n}x{}, got {:?}", self.y.ncols(), v.dim())));
            }
        }
        if self.a.iter().chain(self.y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite entries in A or y".into()));
        }
        Ok(())
    }

    pub fn gram(&self) -> Block {
        self.gram.clone().unwrap_or_else(|| self.a.t().dot(&self.a))
    }

    pub fn aty(&self) -> Block {
        self.aty.clone().unwrap_or_else(|| self.a.t().dot(&self.y))
    }
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration from the all-ones vector.
pub fn spectral_norm_estimate(m: &Block, iterations: usize) -> f64 {
    let n = m.nrows();
    let mut v = Block::ones((n, 1)) / (n as f64).sqrt();
    let mut lambda = 0.0;
    for _ in 0..iterations {
        let w = m.dot(&v);
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = norm;
        v = w / norm;
    }
    lambda
}

/// Frobenius norm of `A x - y`.
pub fn residual(a: &Block, x: &Block, y: &Block) -> f64 {
    let r = a.dot(x) - y;
    r.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub enum GdScheme {
    Coded(CodeConstruction),
    /// `A^T A` split over this many workers; every iteration waits for all.
    Uncoded { n_workers: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GdIteration {
    pub iter: usize,
    /// Virtual time at the end of this iteration, summed over iterations.
    pub virtual_time_s: f64,
    /// Virtual time this iteration's product took.
    pub step_time_s: f64,
    pub residual: f64,
    pub worker_seconds: f64,
    /// Sum of the iterate's entries.
    pub checksum: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GdTrace {
    pub mu: f64,
    pub iterations: Vec<GdIteration>,
}

impl GdTrace {
    /// CSV with header `iter,virtual_time_s,residual,worker_seconds`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "iter,virtual_time_s,residual,worker_seconds")?;
        for it in &self.iterations {
            writeln!(w, "{},{},{},{}", it.iter, it.virtual_time_s, it.residual, it.worker_seconds)?;
        }
        Ok(())
    }

    /// Reads `(iter, virtual_time_s, residual, worker_seconds)` rows back,
    /// skipping `#` comments.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Vec<(usize, f64, f64, f64)>> {
        let mut rows = Vec::new();
        let mut header_seen = false;
        for line in r.lines() {
            let line = line?;
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            if !header_seen {
                if line.trim() != "iter,virtual_time_s,residual,worker_seconds" {
                    return Err(Error::Validation(format!("bad trace header {line:?}")));
                }
                header_seen = true;
                continue;
            }
            let bad = || Error::Validation(format!("bad trace row {line:?}"));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(bad());
            }
            rows.push((
                f[0].parse().map_err(|_| bad())?,
                f[1].parse().map_err(|_| bad())?,
                f[2].parse().map_err(|_| bad())?,
                f[3].parse().map_err(|_| bad())?,
            ));
        }
        Ok(rows)
    }
}

/// Runs `problem.iterations` steps from `x = 0`. Iteration `t` samples worker
/// times with seed `config.seed + t`, so a coded and an uncoded solve with the
/// same config see the same worker times.
pub fn gd_solve(
    problem: &LeastSquaresProblem,
    scheme: &GdScheme,
    config: &PoolConfig,
    model: &RuntimeModel,
) -> Result<(GdTrace, Block)> {
    problem.validate()?;
    let gram = problem.gram();
    let aty = problem.aty();
    let mu = match problem.mu {
        Some(mu) => mu,
        None => {
            let lambda = spectral_norm_estimate(&gram, POWER_ITERATIONS);
            if lambda == 0.0 {
                return Err(Error::Validation("A^T A is zero; no step size to pick".into()));
            }
            1.0 / lambda
        }
    };
    let coded = match scheme {
        GdScheme::Coded(c) => Some(CodedMatvec::new(&gram, c)?),
        GdScheme::Uncoded { n_workers } => {
            if *n_workers == 0 {
                return Err(Error::Validation("uncoded scheme needs at least one worker".into()));
            }
            None
        }
    };

    let mut x = Block::zeros((problem.a.ncols(), problem.y.ncols()));
    let mut clock = 0.0;
    let mut best = f64::INFINITY;
    let mut trace = GdTrace {
        mu,
        iterations: Vec::with_capacity(problem.iterations),
    };
    for t in 0..problem.iterations {
        let cfg = config.with_seed(config.seed.wrapping_add(t as u64));
        let run: MatvecRun = match (&coded, scheme) {
            (Some(cm), _) => cm.run(&x, &cfg, model)?,
            (None, GdScheme::Uncoded { n_workers }) => run_uncoded_matvec(&gram, &x, *n_workers, &cfg, model)?,
            (None, GdScheme::Coded(_)) => unreachable!(),
        };
        x.scaled_add(-mu, &(run.result - &aty));
        clock += run.completion_time;
        let r = residual(&problem.a, &x, &problem.y);
        if !r.is_finite() || r > DIVERGENCE_FACTOR * best {
            return Err(Error::Divergence(format!(
                "residual {r:.3e} at iteration {t} exceeds {DIVERGENCE_FACTOR}x its minimum {best:.3e}; \
                 step size mu = {mu:.3e} is probably too large"
            )));
        }
        best = best.min(r);
        trace.iterations.push(GdIteration {
            iter: t,
            virtual_time_s: clock,
            step_time_s: run.completion_time,
            residual: r,
            worker_seconds: run.worker_seconds,
            checksum: x.sum(),
        });
    }
    Ok((trace, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn identity_converges_in_one_step() {
        let y = array![[1.0, -2.0], [3.0, 0.5], [0.0, 4.0], [2.0, 2.0]];
        let p = LeastSquaresProblem::new(Array2::eye(4), y.clone(), 1).unwrap().with_mu(1.0).unwrap();
        let c = CodeConstruction::from_rate(4, 0.5).unwrap();
        let (trace, x) = gd_solve(&p, &GdScheme::Coded(c), &PoolConfig::default(), &RuntimeModel::default()).unwrap();
        assert!((x - &y).iter().all(|d| d.abs() < 1e-12));
        assert!(trace.iterations[0].residual < 1e-12);
    }

    #[test]
    fn residual_values() {
        let a = array![[1.0, 0.0], [0.0, 2.0]];
        let y = array![[3.0], [4.0]];
        assert_eq!(residual(&a, &Array2::zeros((2, 1)), &y), 5.0);
        assert!(residual(&a, &array![[3.0], [2.0]], &y) < 1e-12);
    }

    #[test]
    fn power_iteration_finds_top_eigenvalue() {
        let m = array![[4.0, 1.0], [1.0, 3.0]];
        let want = (7.0 + 5f64.sqrt()) / 2.0;
        assert!((spectral_norm_estimate(&m, 50) - want).abs() < 1e-9);
    }

    #[test]
    fn oversized_step_diverges() {
        let a = array![[2.0, 0.0], [0.0, 1.0]];
        let p = LeastSquaresProblem::new(a, array![[1.0], [1.0]], 50).unwrap().with_mu(2.0).unwrap();
        let err = gd_solve(&p, &GdScheme::Uncoded { n_workers: 2 }, &PoolConfig::default(), &RuntimeModel::default())
            .unwrap_err();
        assert!(matches!(err, Error::Divergence(ref m) if m.contains("mu")));
    }

    #[test]
    fn bad_shapes_rejected() {
        assert!(LeastSquaresProblem::new(Array2::zeros((3, 2)), Array2::zeros((2, 1)), 1).is_err());
        let p = LeastSquaresProblem::new(Array2::eye(2), Array2::zeros((2, 1)), 1).unwrap();
        assert!(p.with_mu(-1.0).is_err());
    }
}
