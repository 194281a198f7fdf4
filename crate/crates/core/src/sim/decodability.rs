use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::RuntimeModel;
use crate::baselines::{robust_soliton, lt_peelable, LtCode};
use crate::coded2d::check_decodability_2d;
use crate::error::{Error, Result};
use crate::partial::PartialPlan;
use crate::polar::{decodable_mask, CodeConstruction};

/// A coding scheme as seen by the decodability simulator: N workers and a
/// rule saying which sets of arrived outputs suffice.
#[derive(Debug, Clone)]
pub enum Scheme {
    Polar(CodeConstruction),
    /// Any `k` of `n`.
    Mds { n: usize, k: usize },
    /// One LT symbol per worker over `n_input` sources, robust soliton
    /// `(c, delta)`. Each trial draws a fresh code seed.
    Lt { n: usize, n_input: usize, c: f64, delta: f64 },
    /// Product code; worker `(i, j)` has index `i * N2 + j`.
    Polar2d { row: CodeConstruction, col: CodeConstruction },
    /// Any `threshold` of the `n` product tasks.
    Mds2d { n: usize, threshold: usize },
    /// Independent sub-codes; worker indices run through the sub-codes in order.
    PolarPartial(PartialPlan),
}

impl Scheme {
    pub fn n_workers(&self) -> usize {
        match self {
            Scheme::Polar(c) => c.n_workers(),
            Scheme::Mds { n, .. } | Scheme::Lt { n, .. } | Scheme::Mds2d { n, .. } => *n,
            Scheme::Polar2d { row, col } => row.n_workers() * col.n_workers(),
            Scheme::PolarPartial(plan) => plan.n_workers(),
        }
    }

    /// Fewest outputs that could ever be accepted.
    fn min_outputs(&self) -> usize {
        match self {
            Scheme::Polar(c) => c.n_data(),
            Scheme::Mds { k, .. } => *k,
            Scheme::Lt { n_input, .. } => *n_input,
            Scheme::Polar2d { row, col } => row.n_data() * col.n_data(),
            Scheme::Mds2d { threshold, .. } => *threshold,
            Scheme::PolarPartial(plan) => plan.sub_constructions.iter().map(|c| c.n_data()).sum(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Scheme::Mds { n, k } if *k == 0 || k > n => {
                Err(Error::Validation(format!("MDS needs 1 <= k <= n, got k={k}, n={n}")))
            }
            Scheme::Mds2d { n, threshold } if *threshold == 0 || threshold > n => Err(Error::Validation(format!(
                "threshold {threshold} out of range for {n} tasks"
            ))),
            Scheme::Lt { n, n_input, c, delta } => {
                robust_soliton(*n_input, *c, *delta)?;
                if *n == 0 {
                    return Err(Error::Validation("LT needs at least one worker".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Per-trial acceptance rule.
enum Checker<'a> {
    Scheme(&'a Scheme),
    Lt { lists: Vec<Vec<usize>>, n_input: usize },
}

impl Checker<'_> {
    fn accepts(&self, flags: &[bool]) -> bool {
        match self {
            Checker::Lt { lists, n_input } => {
                let got: Vec<&[usize]> = lists
                    .iter()
                    .zip(flags)
                    .filter(|(_, &f)| f)
                    .map(|(l, _)| l.as_slice())
                    .collect();
                lt_peelable(&got, *n_input)
            }
            Checker::Scheme(scheme) => match scheme {
                Scheme::Polar(c) => decodable_mask(c, flags),
                Scheme::Mds { k, .. } => flags.iter().filter(|&&f| f).count() >= *k,
                Scheme::Mds2d { threshold, .. } => flags.iter().filter(|&&f| f).count() >= *threshold,
                Scheme::Polar2d { row, col } => check_decodability_2d(flags, row, col),
                Scheme::PolarPartial(plan) => {
                    let mut offset = 0;
                    plan.sub_constructions.iter().all(|c| {
                        let n = c.n_workers();
                        let ok = decodable_mask(c, &flags[offset..offset + n]);
                        offset += n;
                        ok
                    })
                }
                Scheme::Lt { .. } => unreachable!("LT trials carry their own checker"),
            },
        }
    }
}

/// Earliest arrival time at which the outputs received so far are accepted,
/// `+inf` if even every arrival together is not enough.
///
/// Acceptance is monotone in the received set, so the first accepting prefix
/// of the arrival order is found by bisection.
fn first_accepting(arrivals: &[f64], min_outputs: usize, accepts: impl Fn(&[bool]) -> bool) -> f64 {
    let mut order: Vec<usize> = (0..arrivals.len()).filter(|&w| arrivals[w].is_finite()).collect();
    order.sort_by(|&a, &b| arrivals[a].total_cmp(&arrivals[b]).then(a.cmp(&b)));
    if order.len() < min_outputs.max(1) {
        return f64::INFINITY;
    }
    let prefix_ok = |len: usize| {
        let mut flags = vec![false; arrivals.len()];
        for &w in &order[..len] {
            flags[w] = true;
        }
        accepts(&flags)
    };
    if !prefix_ok(order.len()) {
        return f64::INFINITY;
    }
    // Invariant: prefix `hi` accepted, prefix `lo - 1` rejected (or below the minimum).
    let (mut lo, mut hi) = (min_outputs.max(1), order.len());
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if prefix_ok(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    arrivals[order[hi - 1]]
}

/// First time the scheme accepts the outputs that arrived by then, given one
/// arrival time per worker (`+inf` for outputs that never arrive). For LT the
/// code seed is `lt_seed`.
pub fn first_decodable_time(scheme: &Scheme, arrivals: &[f64], lt_seed: u64) -> Result<f64> {
    scheme.validate()?;
    if arrivals.len() != scheme.n_workers() {
        return Err(Error::Validation(format!(
            "{} arrival times for {} workers",
            arrivals.len(),
            scheme.n_workers()
        )));
    }
    let checker = match scheme {
        Scheme::Lt { n, n_input, c, delta } => {
            let code = LtCode::new(*n_input, robust_soliton(*n_input, *c, *delta)?, lt_seed)?;
            Checker::Lt {
                lists: (0..*n as u64).map(|s| code.neighbors(s)).collect(),
                n_input: *n_input,
            }
        }
        other => Checker::Scheme(other),
    };
    Ok(first_accepting(arrivals, scheme.min_outputs(), |f| checker.accepts(f)))
}

/// Decodability time of `trials` independent runs.
///
/// Worker times for trial `t` come from one ChaCha stream seeded by `seed` and
/// consumed identically for every scheme of the same size, so schemes compared
/// under the same seed see the same worker times. LT code seeds come from a
/// separate stream.
pub fn simulate_decodability_time(
    scheme: &Scheme,
    model: &RuntimeModel,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if trials == 0 {
        return Err(Error::Validation("trials must be at least 1".into()));
    }
    scheme.validate()?;
    let n = scheme.n_workers();
    let mut time_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut code_rng = ChaCha8Rng::seed_from_u64(seed);
    code_rng.set_stream(1);
    (0..trials)
        .map(|_| {
            let arrivals: Vec<f64> = model.sample_all(n, &mut time_rng).iter().map(|o| o.arrival()).collect();
            let lt_seed = code_rng.random::<u64>();
            first_decodable_time(scheme, &arrivals, lt_seed)
        })
        .collect()
}
