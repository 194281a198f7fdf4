use rand::Rng;

use crate::error::{Error, Result};
use crate::polar::{is_upper, log2_exact, partner};

/// Right-continuous step CDF over a finite set of support points.
///
/// Built from samples the steps are uniform; transformed CDFs keep the same
/// support with reweighted steps.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    points: Vec<f64>,
    levels: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() || samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::Validation("CDF needs at least one finite sample".into()));
        }
        let mut points = samples.to_vec();
        points.sort_by(f64::total_cmp);
        let n = points.len() as f64;
        let levels = (1..=points.len()).map(|i| i as f64 / n).collect();
        Ok(EmpiricalCdf { points, levels })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Cumulative mass at each support point.
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self.points.partition_point(|&p| p <= t) {
            0 => 0.0,
            i => self.levels[i - 1],
        }
    }

    /// Smallest support point whose cumulative mass reaches `q`.
    pub fn quantile(&self, q: f64) -> f64 {
        let i = self.levels.partition_point(|&l| l < q).min(self.points.len() - 1);
        self.points[i]
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }

    /// Applies `g` to the cumulative levels. `g` must be nondecreasing with
    /// `g(0) = 0` and `g(1) = 1`.
    pub fn map_levels(&self, g: impl Fn(f64) -> f64) -> Self {
        EmpiricalCdf {
            points: self.points.clone(),
            levels: self.levels.iter().map(|&l| g(l)).collect(),
        }
    }

    /// Sup-norm distance to a continuous reference CDF, checking both sides of
    /// every jump.
    pub fn sup_distance_to(&self, reference: impl Fn(f64) -> f64) -> f64 {
        let mut below = 0.0;
        let mut worst: f64 = 0.0;
        for (&p, &l) in self.points.iter().zip(&self.levels) {
            let r = reference(p);
            worst = worst.max((below - r).abs()).max((l - r).abs());
            below = l;
        }
        worst
    }

    /// Kolmogorov-Smirnov distance between two step CDFs.
    pub fn ks_distance(&self, other: &EmpiricalCdf) -> f64 {
        self.points
            .iter()
            .chain(&other.points)
            .map(|&t| (self.eval(t) - other.eval(t)).abs())
            .fold(0.0, f64::max)
    }
}

/// Splits `base` into `n` channel CDFs along the encoder's wiring.
///
/// At each level a pair of i.i.d. channels with CDF `F` becomes a slow channel
/// (`max(T1, T2)`, CDF `F^2`) on the upper row and a fast one (`min(T1, T2)`,
/// CDF `2F - F^2`) on the lower row. Output is in channel order.
pub fn polarize_cdf(base: &EmpiricalCdf, n: usize) -> Result<Vec<EmpiricalCdf>> {
    if n == 1 {
        return Ok(vec![base.clone()]);
    }
    let levels = log2_exact(n)?;
    let mut channels: Vec<Vec<f64>> = vec![base.levels.clone(); n];
    for level in (0..levels).rev() {
        for i in (0..n).filter(|&i| is_upper(i, level)) {
            let p = partner(i, level);
            for k in 0..base.points.len() {
                let (a, b) = (channels[i][k], channels[p][k]);
                channels[i][k] = a * b;
                channels[p][k] = a + b - a * b;
            }
        }
    }
    Ok(channels
        .into_iter()
        .map(|levels| EmpiricalCdf {
            points: base.points.clone(),
            levels,
        })
        .collect())
}
