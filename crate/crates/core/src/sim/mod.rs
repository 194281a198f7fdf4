//! Run-time models, CDF polarization, decodability-time Monte Carlo and a
//! local worker pool that stands in for a serverless platform.
//!
//! All timestamps are virtual seconds drawn from a [`RuntimeModel`]; the pool
//! only sleeps in its opt-in live mode.

mod cdf;
mod decodability;
mod pool;
mod report;
mod runtime;

pub use cdf::{polarize_cdf, EmpiricalCdf};
pub use decodability::{first_decodable_time, simulate_decodability_time, Scheme};
pub use pool::{
    run_coded_matvec, run_uncoded_matvec, CodedMatvec, MatvecRun, PoolConfig, PoolMode, TaskResult,
    DEFAULT_DECODE_COST_S,
};
pub use report::{read_times_csv, write_times_csv};
pub use runtime::{
    load_samples, DelayDistribution, DistributionKind, RuntimeModel, RuntimeModelConfig, TaskStatus,
    WorkerOutcome, DEFAULT_RATE, DEFAULT_SHIFT_S, DEFAULT_TIMEOUT_S,
};

use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Start,
    Finish,
    Crashed,
    TimedOut,
    Collected,
    Decodable,
    DecodeStart,
    DecodeEnd,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Start => "start",
            EventKind::Finish => "finish",
            EventKind::Crashed => "crashed",
            EventKind::TimedOut => "timed_out",
            EventKind::Collected => "collected",
            EventKind::Decodable => "decodable",
            EventKind::DecodeStart => "decode_start",
            EventKind::DecodeEnd => "decode_end",
        }
    }
}

impl FromStr for EventKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "start" => EventKind::Start,
            "finish" => EventKind::Finish,
            "crashed" => EventKind::Crashed,
            "timed_out" => EventKind::TimedOut,
            "collected" => EventKind::Collected,
            "decodable" => EventKind::Decodable,
            "decode_start" => EventKind::DecodeStart,
            "decode_end" => EventKind::DecodeEnd,
            other => return Err(Error::Validation(format!("unknown event {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub kind: EventKind,
    /// `None` for run-level events (decodable, decode start/end).
    pub worker: Option<usize>,
    pub t: f64,
}

/// Ordered record of one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Timeline {
    pub events: Vec<Event>,
}

impl Timeline {
    pub fn push(&mut self, kind: EventKind, worker: Option<usize>, t: f64) {
        self.events.push(Event { kind, worker, t });
    }

    pub fn first(&self, kind: EventKind) -> Option<&Event> {
        self.events.iter().find(|e| e.kind == kind)
    }

    pub fn of_kind(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    /// CSV with header `event,worker,t`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "event,worker,t")?;
        for e in &self.events {
            let worker = e.worker.map(|x| x.to_string()).unwrap_or_default();
            writeln!(w, "{},{},{}", e.kind.as_str(), worker, e.t)?;
        }
        Ok(())
    }

    /// Inverse of [`Timeline::write_csv`]; skips `#` comment lines.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut timeline = Timeline::default();
        let mut header_seen = false;
        for line in r.lines() {
            let line = line?;
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            if !header_seen {
                if line.trim() != "event,worker,t" {
                    return Err(Error::Validation(format!("bad timeline header {line:?}")));
                }
                header_seen = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let [kind, worker, t] = fields[..] else {
                return Err(Error::Validation(format!("bad timeline row {line:?}")));
            };
            let worker = if worker.is_empty() {
                None
            } else {
                Some(worker.parse().map_err(|_| Error::Validation(format!("bad worker in {line:?}")))?)
            };
            let t = t.parse().map_err(|_| Error::Validation(format!("bad time in {line:?}")))?;
            timeline.push(kind.parse()?, worker, t);
        }
        Ok(timeline)
    }
}
