//! Distributed edge learning workload: workers cycling through download,
//! compute and upload under a synchronization scheme, and the efficiency and
//! fairness metrics computed over a run.

mod metrics;
mod worker;

pub use metrics::{
    aggregate_utility, max_min_check, max_min_reference, metrics_csv, proportional_fairness_check,
    throughput_fluctuation, unfairness, LinkNetwork, RunMetrics, METRICS_HEADER,
};
pub use worker::{barrier_check, FlowRecord, IterationRecord, Phase, Worker, WorkerAction, WorkerEvent};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum WorkloadError {
    #[error("need at least 2 workers, got {0}")]
    TooFewWorkers(usize),
    #[error("reference rate of worker {0} is not positive")]
    ZeroReferenceRate(usize),
    #[error("rate of worker {0} is not positive")]
    NonPositiveRate(usize),
    #[error("series of length {0} is too short")]
    ShortSeries(usize),
    #[error("expected {expected} entries, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("link {link} carries {load} over its capacity {capacity}")]
    Infeasible { link: usize, load: f64, capacity: f64 },
    #[error("worker {id} cannot handle {event:?} while {phase:?}")]
    UnexpectedEvent { id: usize, phase: Phase, event: WorkerEvent },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ParallelismScheme {
    Bsp,
    Ssp { staleness: u32 },
    Tap,
}

impl ParallelismScheme {
    pub fn name(&self) -> String {
        match self {
            Self::Bsp => "bsp".into(),
            Self::Ssp { staleness } => format!("ssp{staleness}"),
            Self::Tap => "tap".into(),
        }
    }
}

impl std::fmt::Display for ParallelismScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.name())
    }
}
