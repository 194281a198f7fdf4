use std::cell::RefCell;
use std::rc::Rc;

use super::{is_upper, partner, CodeConstruction};
use crate::error::{Error, Result};
use crate::matrix::{Block, PartitionedMatrix, PartitionAxis};

/// Values the sequential decoder can carry through the node grid.
///
/// Blocks carry real data; `()` carries availability only, which is how the
/// decodability checker runs the same recursion without touching data.
pub trait NodeValue: Clone {
    fn sum(a: &Self, b: &Self) -> Self;
    fn diff(a: &Self, b: &Self) -> Self;
}

impl NodeValue for Block {
    fn sum(a: &Self, b: &Self) -> Self {
        a + b
    }

    fn diff(a: &Self, b: &Self) -> Self {
        a - b
    }
}

impl NodeValue for () {
    fn sum(_: &Self, _: &Self) -> Self {}

    fn diff(_: &Self, _: &Self) -> Self {}
}

/// Availability flags of the `N` worker outputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndicatorVector(pub Vec<bool>);

impl IndicatorVector {
    pub fn from_available(n: usize, available: impl IntoIterator<Item = usize>) -> Self {
        let mut flags = vec![false; n];
        for i in available {
            flags[i] = true;
        }
        IndicatorVector(flags)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&f| f).count()
    }
}

/// The `N x (log2 N + 1)` lattice of optional node values for one decoding session.
#[derive(Debug, Clone)]
pub struct NodeGrid<T> {
    n: usize,
    last: u32,
    values: Vec<Option<T>>,
    resolutions: usize,
    /// Forward-propagation candidates not yet reached by the sweep, as
    /// levels bucketed by row.
    pending: Vec<Vec<u32>>,
    /// Candidates at rows the sweep has passed, as rows bucketed by level.
    ready: Vec<Vec<usize>>,
    /// Rows below this have had their pending candidates moved to `ready`.
    swept: usize,
}

impl<T: NodeValue> NodeGrid<T> {
    /// Places the received outputs on the worker level and `zero` on every
    /// frozen input.
    pub fn new(
        construction: &CodeConstruction,
        outputs: impl IntoIterator<Item = (usize, T)>,
        zero: T,
    ) -> Result<Self> {
        let n = construction.n_workers();
        let last = construction.levels();
        let mut grid = NodeGrid {
            n,
            last,
            values: vec![None; n * (last as usize + 1)],
            resolutions: 0,
            pending: vec![Vec::new(); n],
            ready: vec![Vec::new(); last as usize + 1],
            swept: 0,
        };
        for (w, v) in outputs {
            if w >= n {
                return Err(Error::Validation(format!("worker index {w} out of range for N={n}")));
            }
            let slot = grid.slot(w, last);
            if grid.values[slot].replace(v).is_some() {
                return Err(Error::Validation(format!("duplicate output for worker {w}")));
            }
        }
        for &f in construction.frozen_set() {
            grid.set(f, 0, zero.clone());
        }
        Ok(grid)
    }

    #[inline]
    fn slot(&self, node: usize, level: u32) -> usize {
        level as usize * self.n + node
    }

    pub fn known(&self, node: usize, level: u32) -> bool {
        self.values[self.slot(node, level)].is_some()
    }

    pub fn value(&self, node: usize, level: u32) -> Option<&T> {
        self.values[self.slot(node, level)].as_ref()
    }

    /// Number of nodes below the worker level that have been resolved,
    /// counting frozen inputs. After a full decode this is `N * log2 N`.
    pub fn resolutions(&self) -> usize {
        self.resolutions
    }

    fn get(&self, node: usize, level: u32) -> &T {
        self.values[self.slot(node, level)].as_ref().expect("known node")
    }

    fn set(&mut self, node: usize, level: u32, v: T) {
        let slot = self.slot(node, level);
        debug_assert!(self.values[slot].is_none());
        if level < self.last {
            self.resolutions += 1;
            // The node feeds its own row one level up and, from a lower row,
            // the upper partner as well.
            self.enqueue(node, level + 1);
            if !is_upper(node, level) {
                self.enqueue(partner(node, level), level + 1);
            }
        }
        self.values[slot] = Some(v);
    }

    fn enqueue(&mut self, row: usize, level: u32) {
        if row < self.swept {
            self.ready[level as usize].push(row);
        } else {
            self.pending[row].push(level);
        }
    }

    /// Tries to resolve node `(node, level)` from the levels to its right.
    ///
    /// An upper node needs both children (`u1 = v1 - v2`). A lower node needs
    /// its own child (`u2 = v2`) or the upper child together with the already
    /// resolved upper partner (`u2 = v1 - u1`).
    pub fn decode_recursive(&mut self, node: usize, level: u32) -> bool {
        if level == self.last {
            return self.known(node, level);
        }
        if self.known(node, level) {
            return true;
        }
        let pair = partner(node, level);
        let own_child = self.decode_recursive(node, level + 1);
        let pair_child = self.decode_recursive(pair, level + 1);

        if is_upper(node, level) {
            if own_child && pair_child {
                let v = T::diff(self.get(node, level + 1), self.get(pair, level + 1));
                self.set(node, level, v);
                return true;
            }
        } else if own_child {
            let v = self.get(node, level + 1).clone();
            self.set(node, level, v);
            return true;
        } else if pair_child && self.known(pair, level) {
            let v = T::diff(self.get(pair, level + 1), self.get(pair, level));
            self.set(node, level, v);
            return true;
        }
        false
    }

    /// Re-encodes rows `0..=upto` left to right, filling every node whose
    /// inputs are known.
    ///
    /// Only nodes next to a node resolved since they were last examined can
    /// change, so those are tracked instead of rescanning every row.
    pub fn forward_prop(&mut self, upto: usize) {
        let end = (upto + 1).min(self.n);
        for row in self.swept..end {
            for level in std::mem::take(&mut self.pending[row]) {
                self.ready[level as usize].push(row);
            }
        }
        self.swept = self.swept.max(end);
        for level in 1..=self.last {
            let prev = level - 1;
            let mut later = Vec::new();
            // Filling a node only enqueues candidates one level up, so this
            // level's list is complete once taken.
            for l in std::mem::take(&mut self.ready[level as usize]) {
                if l > upto {
                    later.push(l);
                    continue;
                }
                if self.known(l, level) || !self.known(l, prev) {
                    continue;
                }
                if is_upper(l, prev) {
                    let pair = partner(l, prev);
                    if self.known(pair, prev) {
                        let v = T::sum(self.get(l, prev), self.get(pair, prev));
                        self.set(l, level, v);
                    }
                } else {
                    let v = self.get(l, prev).clone();
                    self.set(l, level, v);
                }
            }
            self.ready[level as usize].extend(later);
        }
    }

    /// Resolves the inputs in order `0..N`, forward propagating after every
    /// odd row. Returns the data-channel values, or `None` at the first data
    /// channel that cannot be resolved.
    pub fn run_sequential(&mut self, construction: &CodeConstruction) -> Option<Vec<T>> {
        let mut data = Vec::with_capacity(construction.n_data());
        for i in 0..self.n {
            if !self.decode_recursive(i, 0) {
                return None;
            }
            if !construction.is_frozen(i) {
                data.push(self.get(i, 0).clone());
            }
            if i % 2 == 1 {
                self.forward_prop(i);
            }
        }
        Some(data)
    }
}

/// True iff the sequential decoder recovers every data channel from the
/// outputs flagged in `indicators`.
pub fn check_decodability(indicators: &IndicatorVector, construction: &CodeConstruction) -> Result<bool> {
    if indicators.len() != construction.n_workers() {
        return Err(Error::Validation(format!(
            "{} indicators for N={}",
            indicators.len(),
            construction.n_workers()
        )));
    }
    Ok(decodable_mask(construction, &indicators.0))
}

pub(crate) fn decodable_mask(construction: &CodeConstruction, flags: &[bool]) -> bool {
    if flags.iter().filter(|&&f| f).count() < construction.n_data() {
        return false;
    }
    let outputs = flags.iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| (i, ()));
    NodeGrid::new(construction, outputs, ())
        .expect("indices in range")
        .run_sequential(construction)
        .is_some()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DecodeStats {
    /// Node resolutions below the worker level (one block add, subtract,
    /// copy or zero-fill each).
    pub block_ops: usize,
}

fn prepare(construction: &CodeConstruction, outputs: &[(usize, Block)]) -> Result<(usize, usize)> {
    let shape = outputs
        .first()
        .map(|(_, b)| b.dim())
        .ok_or_else(|| Error::NotDecodable("no outputs available".into()))?;
    if let Some((i, (_, b))) = outputs.iter().enumerate().find(|(_, (_, b))| b.dim() != shape) {
        return Err(Error::Shape(format!("block {i} has shape {:?}, expected {shape:?}", b.dim())));
    }
    if let Some((w, _)) = outputs.iter().find(|(w, _)| *w >= construction.n_workers()) {
        return Err(Error::Validation(format!("worker index {w} out of range")));
    }
    Ok(shape)
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Sum(u32, u32),
    Diff(u32, u32),
}

/// Stand-in node value that records block arithmetic on a shared tape
/// instead of performing it. Ids below `leaves` name the received outputs and
/// the zero block; op `j` on the tape produces id `leaves + j`. Copies share
/// the id, so pass-through nodes cost nothing.
#[derive(Clone)]
struct Sym {
    id: u32,
    leaves: u32,
    tape: Rc<RefCell<Vec<Op>>>,
}

impl Sym {
    fn record(a: &Self, op: Op) -> Self {
        let mut tape = a.tape.borrow_mut();
        tape.push(op);
        Sym {
            id: a.leaves + tape.len() as u32 - 1,
            leaves: a.leaves,
            tape: Rc::clone(&a.tape),
        }
    }
}

impl NodeValue for Sym {
    fn sum(a: &Self, b: &Self) -> Self {
        Sym::record(a, Op::Sum(a.id, b.id))
    }

    fn diff(a: &Self, b: &Self) -> Self {
        Sym::record(a, Op::Diff(a.id, b.id))
    }
}

/// Result of playing a tape: op results live in reused arena slots.
struct Played {
    arena: Vec<f64>,
    /// Arena slot of each op result that is still held at the end.
    slot: Vec<u32>,
}

/// Plays the tape. Each result takes a free arena slot and gives it back
/// after its last use; results in `keep` are never released.
fn execute(ops: &[Op], leaves: &[&[f64]], len: usize, keep: &[u32]) -> Played {
    const FOREVER: usize = usize::MAX;
    let base = leaves.len();
    // last_use[j]: index of the last op reading result j (itself if unread).
    let mut last_use: Vec<usize> = (0..ops.len()).collect();
    for (j, op) in ops.iter().enumerate() {
        let (Op::Sum(a, b) | Op::Diff(a, b)) = *op;
        for id in [a as usize, b as usize] {
            if id >= base {
                last_use[id - base] = j;
            }
        }
    }
    for &id in keep {
        if id as usize >= base {
            last_use[id as usize - base] = FOREVER;
        }
    }

    let mut arena: Vec<f64> = Vec::new();
    let mut slot = vec![u32::MAX; ops.len()];
    let mut free: Vec<u32> = Vec::new();
    for (j, op) in ops.iter().enumerate() {
        let dst = free.pop().unwrap_or_else(|| {
            arena.resize(arena.len() + len, 0.0);
            (arena.len() / len - 1) as u32
        });
        slot[j] = dst;
        let (Op::Sum(a, b) | Op::Diff(a, b)) = *op;
        {
            let d = dst as usize;
            let (lo, hi) = arena.split_at_mut(d * len);
            let (out, hi) = hi.split_at_mut(len);
            let get = |id: u32| -> &[f64] {
                let id = id as usize;
                if id < base {
                    return leaves[id];
                }
                let s = slot[id - base] as usize;
                if s < d {
                    &lo[s * len..][..len]
                } else {
                    &hi[(s - d - 1) * len..][..len]
                }
            };
            let (x, y) = (get(a), get(b));
            match *op {
                Op::Sum(..) => out.iter_mut().zip(x).zip(y).for_each(|((o, p), q)| *o = p + q),
                Op::Diff(..) => out.iter_mut().zip(x).zip(y).for_each(|((o, p), q)| *o = p - q),
            }
        }
        for id in [a as usize, b as usize, base + j] {
            if id >= base && last_use[id - base] == j {
                last_use[id - base] = FOREVER;
                free.push(slot[id - base]);
            }
        }
    }
    Played { arena, slot }
}

/// Plans the decode symbolically, then runs the recorded arithmetic.
/// `Ok(None)` when some data channel cannot be resolved.
fn decode_blocks(
    construction: &CodeConstruction,
    outputs: Vec<(usize, Block)>,
) -> Result<Option<(Vec<Block>, DecodeStats)>> {
    let shape = prepare(construction, &outputs)?;
    let leaves = outputs.len() as u32 + 1;
    let tape = Rc::new(RefCell::new(Vec::new()));
    let sym = |id| Sym {
        id,
        leaves,
        tape: Rc::clone(&tape),
    };
    let mut grid = NodeGrid::new(
        construction,
        outputs.iter().enumerate().map(|(i, (w, _))| (*w, sym(i as u32))),
        sym(leaves - 1),
    )?;
    let Some(data) = grid.run_sequential(construction) else {
        return Ok(None);
    };
    let block_ops = grid.resolutions();
    drop(grid);

    let len = shape.0 * shape.1;
    let dense: Vec<_> = outputs.iter().map(|(_, b)| b.as_standard_layout()).collect();
    let zero = vec![0.0; len];
    let mut leaf_slices: Vec<&[f64]> = dense.iter().map(|b| b.as_slice().expect("standard layout")).collect();
    leaf_slices.push(&zero);
    let ops = tape.borrow();
    let keep: Vec<u32> = data.iter().map(|v| v.id).collect();
    let played = execute(&ops, &leaf_slices, len, &keep);
    let slice = |id: u32| -> &[f64] {
        let id = id as usize;
        if id < leaf_slices.len() {
            leaf_slices[id]
        } else {
            &played.arena[played.slot[id - leaf_slices.len()] as usize * len..][..len]
        }
    };
    let blocks = data
        .iter()
        .map(|v| Block::from_shape_vec(shape, slice(v.id).to_vec()).expect("block length matches shape"))
        .collect();
    Ok(Some((blocks, DecodeStats { block_ops })))
}

/// Runs the data decoder without a separate decodability check. `Ok(None)`
/// means some data channel could not be resolved.
pub fn try_decode(construction: &CodeConstruction, outputs: Vec<(usize, Block)>) -> Result<Option<Vec<Block>>> {
    Ok(decode_blocks(construction, outputs)?.map(|(d, _)| d))
}

/// Recovers the `n_data` data blocks (in data-channel order) from the
/// available `(worker, block)` outputs.
pub fn decode(construction: &CodeConstruction, outputs: Vec<(usize, Block)>) -> Result<Vec<Block>> {
    decode_with_stats(construction, outputs).map(|(d, _)| d)
}

pub fn decode_with_stats(
    construction: &CodeConstruction,
    outputs: Vec<(usize, Block)>,
) -> Result<(Vec<Block>, DecodeStats)> {
    let received = outputs.len();
    decode_blocks(construction, outputs)?.ok_or_else(|| {
        Error::NotDecodable(format!(
            "{received} of {} outputs do not determine the data",
            construction.n_workers()
        ))
    })
}

/// Decodes worker outputs of `A x` and stacks the data blocks back into the
/// `m`-row product, dropping any padding rows.
pub fn decode_matvec(construction: &CodeConstruction, outputs: Vec<(usize, Block)>, m: usize) -> Result<Block> {
    let blocks = decode(construction, outputs)?;
    let cols = blocks[0].ncols();
    Ok(PartitionedMatrix::from_blocks(blocks, PartitionAxis::Rows, m, cols)?.assemble())
}
