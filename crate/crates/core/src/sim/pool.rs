use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use crossbeam_channel::unbounded;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{EventKind, RuntimeModel, TaskStatus, Timeline, WorkerOutcome};
use crate::error::{Error, Result};
use crate::matrix::{Block, PartitionAxis, PartitionedMatrix};
use crate::polar::{self, decodable_mask, CodeConstruction};

/// Virtual seconds charged per block operation of the decoder.
pub const DEFAULT_DECODE_COST_S: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PoolMode {
    /// Outcomes are processed in virtual-time order; nothing sleeps.
    Virtual,
    /// Workers sleep `delay * time_scale` wall seconds and the collector sees
    /// results in real arrival order.
    Live { time_scale: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolConfig {
    pub threads: usize,
    pub mode: PoolMode,
    pub decode_cost_per_op: f64,
    pub seed: u64,
}

impl Default for PoolConfig {
    fn default() -> Self {
        PoolConfig {
            threads: 4,
            mode: PoolMode::Virtual,
            decode_cost_per_op: DEFAULT_DECODE_COST_S,
            seed: 0,
        }
    }
}

impl PoolConfig {
    pub fn with_seed(&self, seed: u64) -> Self {
        PoolConfig { seed, ..self.clone() }
    }
}

/// What a worker hands back to the collector. `block` is present iff the
/// status is `Done`.
#[derive(Debug, Clone)]
pub struct TaskResult {
    pub worker_id: usize,
    pub block: Option<Block>,
    pub finish_time: f64,
    pub status: TaskStatus,
}

#[derive(Debug, Clone)]
pub struct MatvecRun {
    pub result: Block,
    pub timeline: Timeline,
    /// First instant the collected set was decodable.
    pub decodable_time: f64,
    /// Decodable time plus the virtual decode time.
    pub completion_time: f64,
    pub decode_ops: usize,
    pub collected: usize,
    /// Sum over workers of the time each ran before finishing or being cancelled.
    pub worker_seconds: f64,
}

/// `A` split into row blocks and encoded once; each run multiplies by a new `x`.
#[derive(Debug, Clone)]
pub struct CodedMatvec {
    construction: CodeConstruction,
    coded: Vec<Block>,
    rows: usize,
    cols: usize,
}

impl CodedMatvec {
    pub fn new(a: &Block, construction: &CodeConstruction) -> Result<Self> {
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("A has non-finite entries".into()));
        }
        let split = PartitionedMatrix::split_rows(a, construction.n_data())?;
        Ok(CodedMatvec {
            construction: construction.clone(),
            coded: polar::encode(construction, &split)?,
            rows: a.nrows(),
            cols: a.ncols(),
        })
    }

    pub fn construction(&self) -> &CodeConstruction {
        &self.construction
    }

    pub fn coded_blocks(&self) -> &[Block] {
        &self.coded
    }

    /// One coded run of `A x` on the local pool.
    pub fn run(&self, x: &Block, config: &PoolConfig, model: &RuntimeModel) -> Result<MatvecRun> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let outcomes = model.sample_all(self.construction.n_workers(), &mut rng);
        self.run_with_outcomes(x, config, model, &outcomes)
    }

    /// Like [`CodedMatvec::run`] but with the worker outcomes given instead of
    /// sampled; `model` only supplies the timeout.
    pub fn run_with_outcomes(
        &self,
        x: &Block,
        config: &PoolConfig,
        model: &RuntimeModel,
        outcomes: &[WorkerOutcome],
    ) -> Result<MatvecRun> {
        let n = self.construction.n_workers();
        if outcomes.len() != n {
            return Err(Error::Validation(format!("{} outcomes for {n} workers", outcomes.len())));
        }
        if x.nrows() != self.cols {
            return Err(Error::Shape(format!("A has {} columns, x has {} rows", self.cols, x.nrows())));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("x has non-finite entries".into()));
        }
        let c = &self.construction;
        let collected = execute(&self.coded, x, outcomes, config, model, |flags| decodable_mask(c, flags))?;

        let Collected {
            mut timeline,
            outputs,
            accepted_at,
        } = collected;
        let Some(t_dec) = accepted_at else {
            return Err(Error::Timeout {
                collected: outputs.len(),
                n_workers: n,
                timeline: Box::new(timeline),
            });
        };
        let n_collected = outputs.len();
        let (blocks, stats) = polar::decode_with_stats(c, outputs)?;
        let t_end = t_dec + stats.block_ops as f64 * config.decode_cost_per_op;
        timeline.push(EventKind::DecodeStart, None, t_dec);
        timeline.push(EventKind::DecodeEnd, None, t_end);
        let result = PartitionedMatrix::from_blocks(blocks, PartitionAxis::Rows, self.rows, x.ncols())?.assemble();
        Ok(MatvecRun {
            result,
            timeline,
            decodable_time: t_dec,
            completion_time: t_end,
            decode_ops: stats.block_ops,
            collected: n_collected,
            worker_seconds: worker_seconds(outcomes, model, t_dec),
        })
    }
}

/// Encodes `A`, runs `A x` on the local pool and decodes at the first
/// decodable set of arrivals.
pub fn run_coded_matvec(
    a: &Block,
    x: &Block,
    construction: &CodeConstruction,
    config: &PoolConfig,
    model: &RuntimeModel,
) -> Result<MatvecRun> {
    CodedMatvec::new(a, construction)?.run(x, config, model)
}

/// Uncoded baseline: `A` split over `n_workers` and the master waits for all.
pub fn run_uncoded_matvec(
    a: &Block,
    x: &Block,
    n_workers: usize,
    config: &PoolConfig,
    model: &RuntimeModel,
) -> Result<MatvecRun> {
    if a.ncols() != x.nrows() {
        return Err(Error::Shape(format!("A has {} columns, x has {} rows", a.ncols(), x.nrows())));
    }
    let split = PartitionedMatrix::split_rows(a, n_workers)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let outcomes = model.sample_all(n_workers, &mut rng);
    let Collected {
        timeline,
        outputs,
        accepted_at,
    } = execute(&split.blocks, x, &outcomes, config, model, |flags| flags.iter().all(|&f| f))?;
    let Some(t_done) = accepted_at else {
        return Err(Error::Timeout {
            collected: outputs.len(),
            n_workers,
            timeline: Box::new(timeline),
        });
    };
    let mut blocks: Vec<(usize, Block)> = outputs;
    blocks.sort_by_key(|(w, _)| *w);
    let blocks = blocks.into_iter().map(|(_, b)| b).collect();
    let result = PartitionedMatrix::from_blocks(blocks, PartitionAxis::Rows, a.nrows(), x.ncols())?.assemble();
    Ok(MatvecRun {
        result,
        timeline,
        decodable_time: t_done,
        completion_time: t_done,
        decode_ops: 0,
        collected: n_workers,
        worker_seconds: worker_seconds(&outcomes, model, t_done),
    })
}

fn worker_seconds(outcomes: &[WorkerOutcome], model: &RuntimeModel, stop: f64) -> f64 {
    outcomes.iter().map(|o| o.time.min(model.timeout_s).min(stop)).sum()
}

struct Collected {
    timeline: Timeline,
    outputs: Vec<(usize, Block)>,
    accepted_at: Option<f64>,
}

/// Runs one task per block on a thread pool and feeds results to a single
/// collector, which checks `accepts` after every arrival and cancels the
/// remaining tasks once it holds.
fn execute(
    blocks: &[Block],
    x: &Block,
    outcomes: &[WorkerOutcome],
    config: &PoolConfig,
    model: &RuntimeModel,
    accepts: impl Fn(&[bool]) -> bool,
) -> Result<Collected> {
    let n = blocks.len();
    let threads = config.threads.clamp(1, n.max(1));
    let cancel = AtomicBool::new(false);
    let (task_tx, task_rx) = unbounded::<usize>();
    let (res_tx, res_rx) = unbounded::<TaskResult>();

    let mut timeline = Timeline::default();
    for w in 0..n {
        timeline.push(EventKind::Start, Some(w), 0.0);
    }
    for w in 0..n {
        task_tx.send(w).expect("receiver alive");
    }
    drop(task_tx);

    let live_start = Instant::now();
    std::thread::scope(|scope| {
        for _ in 0..threads {
            let (task_rx, res_tx, cancel) = (task_rx.clone(), res_tx.clone(), &cancel);
            scope.spawn(move || {
                for w in task_rx.iter() {
                    let outcome = outcomes[w];
                    let finish_time = match outcome.status {
                        TaskStatus::TimedOut => model.timeout_s,
                        _ => outcome.time,
                    };
                    if let PoolMode::Live { time_scale } = config.mode {
                        let due = live_start + Duration::from_secs_f64((finish_time * time_scale).max(0.0));
                        while !cancel.load(Ordering::Relaxed) && Instant::now() < due {
                            std::thread::sleep((due - Instant::now()).min(Duration::from_millis(5)));
                        }
                    }
                    let block = if outcome.status == TaskStatus::Done && !cancel.load(Ordering::Relaxed) {
                        Some(blocks[w].dot(x))
                    } else {
                        None
                    };
                    let status = if outcome.status == TaskStatus::Done && block.is_none() {
                        // Cancelled before it ran; the collector no longer cares.
                        TaskStatus::Crashed
                    } else {
                        outcome.status
                    };
                    let result = TaskResult {
                        worker_id: w,
                        block,
                        finish_time,
                        status,
                    };
                    if res_tx.send(result).is_err() {
                        return;
                    }
                }
            });
        }
        drop(res_tx);

        let mut flags = vec![false; n];
        let mut outputs = Vec::new();
        let mut accepted_at = None;
        let mut handle = |r: TaskResult, timeline: &mut Timeline| {
            match r.status {
                TaskStatus::Done => timeline.push(EventKind::Finish, Some(r.worker_id), r.finish_time),
                TaskStatus::Crashed => timeline.push(EventKind::Crashed, Some(r.worker_id), r.finish_time),
                TaskStatus::TimedOut => timeline.push(EventKind::TimedOut, Some(r.worker_id), r.finish_time),
            }
            if let Some(block) = r.block {
                timeline.push(EventKind::Collected, Some(r.worker_id), r.finish_time);
                flags[r.worker_id] = true;
                outputs.push((r.worker_id, block));
                if accepts(&flags) {
                    timeline.push(EventKind::Decodable, None, r.finish_time);
                    return Some(r.finish_time);
                }
            }
            None
        };

        match config.mode {
            PoolMode::Live { .. } => {
                for r in res_rx.iter() {
                    if let Some(t) = handle(r, &mut timeline) {
                        accepted_at = Some(t);
                        break;
                    }
                }
            }
            PoolMode::Virtual => {
                // Replay results in (finish time, worker) order regardless of
                // when the threads deliver them.
                let mut order: Vec<usize> = (0..n).collect();
                let key = |w: usize| match outcomes[w].status {
                    TaskStatus::TimedOut => model.timeout_s,
                    _ => outcomes[w].time,
                };
                order.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));
                let mut pending: BTreeMap<usize, TaskResult> = BTreeMap::new();
                'outer: for &next in &order {
                    while !pending.contains_key(&next) {
                        match res_rx.recv() {
                            Ok(r) => {
                                pending.insert(r.worker_id, r);
                            }
                            Err(_) => break 'outer,
                        }
                    }
                    let r = pending.remove(&next).expect("just received");
                    if let Some(t) = handle(r, &mut timeline) {
                        accepted_at = Some(t);
                        break;
                    }
                }
            }
        }
        cancel.store(true, Ordering::Relaxed);
        drop(res_rx);
        Ok(Collected {
            timeline,
            outputs,
            accepted_at,
        })
    })
}
