//! LT fountain code with a robust soliton degree distribution and a peeling
//! decoder.
//!
//! Symbol `s` of a code with seed `seed` draws its degree and neighbors from a
//! ChaCha stream keyed by `(seed, s)`, so a neighbor list can be re-derived from
//! the symbol header alone.

use std::collections::VecDeque;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::{check_congruent, Block, PartitionedMatrix};

pub const DEFAULT_C: f64 = 0.03;
pub const DEFAULT_DELTA: f64 = 0.5;

/// Robust soliton distribution over degrees `1..=n_input`; entry `d - 1` is the
/// mass of degree `d`.
///
/// `R = c ln(n/delta) sqrt(n)`; the spike sits at `ceil(n/R)`, clamped to `n`.
/// The spike mass `R ln(R/delta) / n` is floored at zero when `R < delta`.
pub fn robust_soliton(n_input: usize, c: f64, delta: f64) -> Result<Vec<f64>> {
    if n_input < 2 {
        return Err(Error::Validation(format!("robust soliton needs n >= 2, got {n_input}")));
    }
    if !(c > 0.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Validation(format!("need c > 0 and 0 < delta < 1, got c={c}, delta={delta}")));
    }
    let n = n_input as f64;
    let r = c * (n / delta).ln() * n.sqrt();
    let spike = ((n / r).ceil() as usize).clamp(1, n_input);

    let mut mass: Vec<f64> = (1..=n_input)
        .map(|d| if d == 1 { 1.0 / n } else { 1.0 / (d * (d - 1)) as f64 })
        .collect();
    for d in 1..spike {
        mass[d - 1] += r / (d as f64 * n);
    }
    mass[spike - 1] += (r * (r / delta).ln() / n).max(0.0);

    let total: f64 = mass.iter().sum();
    mass.iter_mut().for_each(|m| *m /= total);
    Ok(mass)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LtCode {
    n_input: usize,
    degree_distribution: Vec<f64>,
    seed: u64,
}

impl LtCode {
    pub fn new(n_input: usize, degree_distribution: Vec<f64>, seed: u64) -> Result<Self> {
        if degree_distribution.len() != n_input || n_input == 0 {
            return Err(Error::Validation(format!(
                "{} degree masses for {n_input} inputs",
                degree_distribution.len()
            )));
        }
        if degree_distribution.iter().any(|m| !(*m >= 0.0)) {
            return Err(Error::Validation("negative degree mass".into()));
        }
        let total: f64 = degree_distribution.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!("degree distribution sums to {total}")));
        }
        Ok(LtCode {
            n_input,
            degree_distribution,
            seed,
        })
    }

    /// Robust soliton code with the default `c` and `delta`.
    pub fn robust(n_input: usize, seed: u64) -> Result<Self> {
        Self::new(n_input, robust_soliton(n_input, DEFAULT_C, DEFAULT_DELTA)?, seed)
    }

    pub fn n_input(&self) -> usize {
        self.n_input
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn degree_distribution(&self) -> &[f64] {
        &self.degree_distribution
    }

    /// Sorted source indices combined into symbol `index`.
    pub fn neighbors(&self, index: u64) -> Vec<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        let degrees = WeightedIndex::new(&self.degree_distribution).expect("validated distribution");
        let d = degrees.sample(&mut rng) + 1;
        let mut picked = sample(&mut rng, self.n_input, d).into_vec();
        picked.sort_unstable();
        picked
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LtSymbol {
    pub seed: u64,
    pub index: u64,
    pub neighbors: Vec<usize>,
    pub block: Block,
}

/// First `count` coded symbols: each is the sum of its neighbor source blocks.
pub fn lt_encode_stream(data: &PartitionedMatrix, code: &LtCode, count: usize) -> Result<Vec<LtSymbol>> {
    lt_encode_blocks(&data.blocks, code, count)
}

pub fn lt_encode_blocks(data: &[Block], code: &LtCode, count: usize) -> Result<Vec<LtSymbol>> {
    if data.len() != code.n_input {
        return Err(Error::Validation(format!("{} blocks for {} LT inputs", data.len(), code.n_input)));
    }
    check_congruent(data)?;
    Ok((0..count as u64)
        .map(|index| {
            let neighbors = code.neighbors(index);
            let mut block = data[neighbors[0]].clone();
            for &s in &neighbors[1..] {
                block += &data[s];
            }
            LtSymbol {
                seed: code.seed,
                index,
                neighbors,
                block,
            }
        })
        .collect())
}

/// Peeling over neighbor lists only. Returns the recovery order of sources
/// (with the resolving symbol), or `None` once the ripple empties early.
fn peel_schedule(neighbor_lists: &[&[usize]], n_input: usize) -> Option<Vec<(usize, usize)>> {
    let mut containing: Vec<Vec<usize>> = vec![Vec::new(); n_input];
    let mut degree: Vec<usize> = Vec::with_capacity(neighbor_lists.len());
    for (s, nb) in neighbor_lists.iter().enumerate() {
        for &src in nb.iter() {
            containing[src].push(s);
        }
        degree.push(nb.len());
    }
    let mut recovered = vec![false; n_input];
    let mut ripple: VecDeque<usize> = (0..neighbor_lists.len()).filter(|&s| degree[s] == 1).collect();
    let mut order = Vec::with_capacity(n_input);
    let mut used = vec![false; neighbor_lists.len()];

    while let Some(s) = ripple.pop_front() {
        if used[s] || degree[s] != 1 {
            continue;
        }
        used[s] = true;
        let Some(&src) = neighbor_lists[s].iter().find(|&&src| !recovered[src]) else {
            continue;
        };
        recovered[src] = true;
        order.push((src, s));
        for &other in &containing[src] {
            if !used[other] {
                degree[other] -= 1;
                if degree[other] == 1 {
                    ripple.push_back(other);
                }
            }
        }
        if order.len() == n_input {
            return Some(order);
        }
    }
    None
}

/// True iff peeling recovers all `n_input` sources from these neighbor lists.
pub fn lt_peelable(neighbor_lists: &[&[usize]], n_input: usize) -> bool {
    peel_schedule(neighbor_lists, n_input).is_some()
}

/// Peeling decoder. `None` when the ripple empties before every source is
/// recovered.
pub fn lt_peel_decode(symbols: &[LtSymbol], n_input: usize) -> Option<Vec<Block>> {
    let lists: Vec<&[usize]> = symbols.iter().map(|s| s.neighbors.as_slice()).collect();
    if lists.iter().flat_map(|l| l.iter()).any(|&src| src >= n_input) {
        return None;
    }
    let order = peel_schedule(&lists, n_input)?;

    // Replay the schedule on data: a resolving symbol's value minus its other,
    // already recovered, neighbors.
    let mut sources: Vec<Option<Block>> = vec![None; n_input];
    for (src, s) in order {
        let mut block = symbols[s].block.clone();
        for &other in &symbols[s].neighbors {
            if other != src {
                block -= sources[other].as_ref().expect("recovered earlier in schedule");
            }
        }
        sources[src] = Some(block);
    }
    sources.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn soliton_support_and_normalization() {
        let two = robust_soliton(2, DEFAULT_C, DEFAULT_DELTA).unwrap();
        assert_eq!(two.len(), 2);
        assert!((two.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for n in [3, 8, 16, 40, 64, 512, 4096] {
            for (c, delta) in [(0.03, 0.5), (0.1, 0.05), (0.5, 0.01)] {
                let m = robust_soliton(n, c, delta).unwrap();
                assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(m.iter().all(|&v| v >= 0.0));
            }
        }
        assert!(robust_soliton(1, 0.03, 0.5).is_err());
        assert!(robust_soliton(8, 0.0, 0.5).is_err());
        assert!(robust_soliton(8, 0.03, 1.0).is_err());
    }

    #[test]
    fn neighbors_are_reproducible() {
        let code = LtCode::robust(16, 42).unwrap();
        for s in 0..50 {
            let a = code.neighbors(s);
            assert_eq!(a, code.neighbors(s));
            assert!(!a.is_empty() && a.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn degree_one_symbol_copies_source() {
        let code = LtCode::new(3, vec![1.0, 0.0, 0.0], 7).unwrap();
        let data = vec![array![[1.0]], array![[2.0]], array![[3.0]]];
        for sym in lt_encode_blocks(&data, &code, 10).unwrap() {
            assert_eq!(sym.neighbors.len(), 1);
            assert_eq!(sym.block, data[sym.neighbors[0]]);
        }
    }

    #[test]
    fn singletons_decode_immediately() {
        let data = vec![array![[1.0]], array![[2.0]]];
        let symbols: Vec<LtSymbol> = data
            .iter()
            .enumerate()
            .map(|(i, b)| LtSymbol {
                seed: 0,
                index: i as u64,
                neighbors: vec![i],
                block: b.clone(),
            })
            .collect();
        assert_eq!(lt_peel_decode(&symbols, 2).unwrap(), data);
    }

    #[test]
    fn stalled_ripple_fails() {
        let sym = LtSymbol {
            seed: 0,
            index: 0,
            neighbors: vec![0, 1],
            block: array![[3.0]],
        };
        assert!(lt_peel_decode(&[sym.clone(), sym], 2).is_none());
    }

    #[test]
    fn chain_peels() {
        // {0}, {0,1}, {1,2}
        let data = [1.5, -2.0, 4.0];
        let mk = |i: u64, nb: Vec<usize>| LtSymbol {
            seed: 0,
            index: i,
            block: array![[nb.iter().map(|&s| data[s]).sum::<f64>()]],
            neighbors: nb,
        };
        let got = lt_peel_decode(&[mk(0, vec![1, 2]), mk(1, vec![0, 1]), mk(2, vec![0])], 3).unwrap();
        let vals: Vec<f64> = got.iter().map(|b| b[[0, 0]]).collect();
        assert_eq!(vals, data);
    }
}
