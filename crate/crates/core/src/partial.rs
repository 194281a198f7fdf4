//! Partial construction: one task split into `p` independent polar codes over
//! contiguous row ranges of `A`, trading straggler resilience for cheaper
//! encoding and decoding.

use std::collections::HashMap;
use std::ops::Range;
use std::path::PathBuf;

use ndarray::{concatenate, s, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{load_block, Block, PartitionAxis, PartitionedMatrix};
use crate::polar::{self, generator_matrix, CodeConstruction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialPlan {
    pub p: usize,
    pub sub_constructions: Vec<CodeConstruction>,
    pub row_ranges: Vec<Range<usize>>,
}

impl PartialPlan {
    /// Checks that the row ranges tile `[0, m)` in order and line up with the
    /// sub-constructions.
    pub fn validate(&self, m: usize) -> Result<()> {
        if self.p == 0 || self.sub_constructions.len() != self.p || self.row_ranges.len() != self.p {
            return Err(Error::Validation(format!(
                "plan with p={} has {} constructions and {} row ranges",
                self.p,
                self.sub_constructions.len(),
                self.row_ranges.len()
            )));
        }
        let mut next = 0;
        for r in &self.row_ranges {
            if r.start != next || r.end <= r.start {
                return Err(Error::Validation(format!("row ranges do not partition [0, {m})")));
            }
            next = r.end;
        }
        if next != m {
            return Err(Error::Validation(format!("row ranges cover [0, {next}), expected [0, {m})")));
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.row_ranges.last().map_or(0, |r| r.end)
    }

    pub fn n_workers(&self) -> usize {
        self.sub_constructions.iter().map(|c| c.n_workers()).sum()
    }

    /// Offset of sub-code `s` in the global worker numbering.
    pub fn worker_offset(&self, s: usize) -> usize {
        self.sub_constructions[..s].iter().map(|c| c.n_workers()).sum()
    }

    /// `(sub-code, local worker)` of global worker `w`.
    pub fn locate_worker(&self, w: usize) -> Option<(usize, usize)> {
        let mut offset = 0;
        for (s, c) in self.sub_constructions.iter().enumerate() {
            if w < offset + c.n_workers() {
                return Some((s, w - offset));
            }
            offset += c.n_workers();
        }
        None
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let plan: PartialPlan = serde_json::from_str(s)?;
        plan.validate(plan.rows())?;
        Ok(plan)
    }
}

/// Splits `m` rows into `p` contiguous near-equal ranges, each coded with the
/// same `(n_per, epsilon)` construction.
pub fn plan_partial(m: usize, p: usize, n_per: usize, epsilon: f64) -> Result<PartialPlan> {
    if p == 0 {
        return Err(Error::Validation("p must be at least 1".into()));
    }
    if m < p {
        return Err(Error::Validation(format!("cannot split {m} rows into {p} sub-codes")));
    }
    let c = CodeConstruction::from_rate(n_per, epsilon)?;
    let (base, extra) = (m / p, m % p);
    let mut start = 0;
    let row_ranges = (0..p)
        .map(|s| {
            let len = base + usize::from(s < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect();
    Ok(PartialPlan {
        p,
        sub_constructions: vec![c; p],
        row_ranges,
    })
}

/// Heterogeneous plan: one sub-code per `(N, n_data)` pair, rows split in
/// proportion to `n_data` (largest remainder, ties to the earlier sub-code).
pub fn plan_heterogeneous(m: usize, sizes: &[(usize, usize)], epsilon: f64) -> Result<PartialPlan> {
    if sizes.is_empty() {
        return Err(Error::Validation("need at least one sub-code".into()));
    }
    let subs = sizes
        .iter()
        .map(|&(n, k)| CodeConstruction::new(n, epsilon, k))
        .collect::<Result<Vec<_>>>()?;
    let total: usize = sizes.iter().map(|s| s.1).sum();
    let mut lens: Vec<usize> = sizes.iter().map(|s| m * s.1 / total).collect();
    let mut rem: Vec<(usize, usize)> = sizes.iter().enumerate().map(|(i, s)| ((m * s.1) % total, i)).collect();
    rem.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let short = m - lens.iter().sum::<usize>();
    for &(_, i) in rem.iter().take(short) {
        lens[i] += 1;
    }
    if lens.contains(&0) {
        return Err(Error::Validation(format!("{m} rows leave an empty sub-code")));
    }
    let mut start = 0;
    let row_ranges = lens
        .iter()
        .map(|&len| {
            let r = start..start + len;
            start += len;
            r
        })
        .collect();
    Ok(PartialPlan {
        p: sizes.len(),
        sub_constructions: subs,
        row_ranges,
    })
}

/// Coded blocks of every sub-code, in sub-code order.
pub fn encode_partial(a: &Block, plan: &PartialPlan) -> Result<Vec<Vec<Block>>> {
    plan.validate(a.nrows())?;
    plan.row_ranges
        .par_iter()
        .zip(&plan.sub_constructions)
        .map(|(r, c)| {
            let sub = a.slice(s![r.clone(), ..]).to_owned();
            polar::encode(c, &PartitionedMatrix::split_rows(&sub, c.n_data())?)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct PartialOutcome {
    pub result: Block,
    /// Decoder block operations summed over sub-codes.
    pub decode_ops: usize,
}

/// Encodes each row range of `A` with its sub-code, multiplies by `x`, keeps
/// the outputs listed in `available[s]` for sub-code `s`, decodes each sub-code
/// independently and stacks the results.
pub fn encode_decode_partial(
    a: &Block,
    x: &Block,
    plan: &PartialPlan,
    available: &[Vec<usize>],
) -> Result<PartialOutcome> {
    if available.len() != plan.p {
        return Err(Error::Validation(format!("{} availability lists for p={}", available.len(), plan.p)));
    }
    if a.ncols() != x.nrows() {
        return Err(Error::Shape(format!("A has {} columns, x has {} rows", a.ncols(), x.nrows())));
    }
    let coded = encode_partial(a, plan)?;
    let parts: Vec<(Block, usize)> = (0..plan.p)
        .into_par_iter()
        .map(|s| {
            let c = &plan.sub_constructions[s];
            let outputs = available[s]
                .iter()
                .map(|&w| {
                    coded[s]
                        .get(w)
                        .map(|b| (w, b.dot(x)))
                        .ok_or_else(|| Error::Validation(format!("worker {w} out of range")))
                })
                .collect::<Result<Vec<_>>>()
                .and_then(|outputs| polar::decode_with_stats(c, outputs))
                .and_then(|(blocks, stats)| {
                    let rows = plan.row_ranges[s].len();
                    let out = PartitionedMatrix::from_blocks(blocks, PartitionAxis::Rows, rows, x.ncols())?;
                    Ok((out.assemble(), stats.block_ops))
                });
            outputs.map_err(|e| Error::Subcode {
                index: s,
                source: Box::new(e),
            })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<_>>()?;

    let views: Vec<_> = parts.iter().map(|(b, _)| b.view()).collect();
    Ok(PartialOutcome {
        result: concatenate(Axis(0), &views).map_err(|e| Error::Shape(e.to_string()))?,
        decode_ops: parts.iter().map(|(_, ops)| ops).sum(),
    })
}

/// Key-value access to raw (uncoded) data blocks.
pub trait BlockLocator {
    fn fetch(&self, key: &str) -> Result<Block>;
}

/// Key of raw data block `j` of sub-code `s`.
pub fn raw_block_key(sub: usize, j: usize) -> String {
    format!("s{sub}/raw_{j}.bin")
}

#[derive(Debug, Clone, Default)]
pub struct MemoryStore {
    blocks: HashMap<String, Block>,
}

impl MemoryStore {
    pub fn insert(&mut self, key: impl Into<String>, block: Block) {
        self.blocks.insert(key.into(), block);
    }

    /// Stores the raw data blocks of every sub-code under [`raw_block_key`].
    pub fn from_plan(a: &Block, plan: &PartialPlan) -> Result<Self> {
        plan.validate(a.nrows())?;
        let mut store = MemoryStore::default();
        for (s, (r, c)) in plan.row_ranges.iter().zip(&plan.sub_constructions).enumerate() {
            let sub = a.slice(s![r.clone(), ..]).to_owned();
            for (j, b) in PartitionedMatrix::split_rows(&sub, c.n_data())?.blocks.into_iter().enumerate() {
                store.insert(raw_block_key(s, j), b);
            }
        }
        Ok(store)
    }
}

impl BlockLocator for MemoryStore {
    fn fetch(&self, key: &str) -> Result<Block> {
        self.blocks
            .get(key)
            .cloned()
            .ok_or_else(|| Error::Fetch(format!("no block under {key:?}")))
    }
}

/// Blocks stored as files in the binary block format under a root directory.
#[derive(Debug, Clone)]
pub struct FsStore {
    pub root: PathBuf,
}

impl BlockLocator for FsStore {
    fn fetch(&self, key: &str) -> Result<Block> {
        let path = self.root.join(key);
        load_block(&path).map_err(|e| Error::Fetch(format!("{}: {e}", path.display())))
    }
}

/// Worker-side encoding: global worker `worker` sums the raw blocks its
/// generator row selects, fetching only those. A row that touches only frozen
/// inputs yields a zero block of shape `zero_shape`.
pub fn in_memory_encode_task(
    worker: usize,
    plan: &PartialPlan,
    locator: &dyn BlockLocator,
    zero_shape: (usize, usize),
) -> Result<Block> {
    let (s, local) = plan
        .locate_worker(worker)
        .ok_or_else(|| Error::Validation(format!("worker {worker} out of range")))?;
    let c = &plan.sub_constructions[s];
    let g = generator_matrix(c.n_workers())?;
    let mut acc = Block::zeros(zero_shape);
    for (j, &ch) in c.data_set().iter().enumerate() {
        let coeff = g[local][ch];
        if coeff != 0.0 {
            let b = locator.fetch(&raw_block_key(s, j))?;
            if b.dim() != zero_shape {
                return Err(Error::Shape(format!("fetched {:?}, expected {zero_shape:?}", b.dim())));
            }
            acc.scaled_add(coeff, &b);
        }
    }
    Ok(acc)
}
