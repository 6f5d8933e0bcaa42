//! Sender-side TCP/MPTCP state: per-subflow windows and loss detection,
//! coupled increase, rate-proportional scheduling, CUBIC for single-path
//! competitors, and the enforcement hook used by the learned outer loop.

mod connection;
mod cubic;
mod lia;
mod subflow;

pub use connection::{AckOutcome, Controller, MptcpConnection};
pub use cubic::{cubic_k, CubicState, BETA_CUBIC, C_CUBIC};
pub use lia::{apportion, compute_schedule, lia_alpha, lia_increase, Schedule};
pub use subflow::{AckResult, RateEstimator, SlotCounters, SubflowState, SubflowTotals, DUP_THRESHOLD, MIN_RTO};

use thiserror::Error;

/// Minimum congestion window, packets.
pub const W_MIN: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransportError {
    #[error("schedule has no entries")]
    EmptySchedule,
    #[error("schedule {0:?} is not a probability vector")]
    InvalidSchedule(Vec<f64>),
    #[error("no subflows")]
    EmptySubflows,
    #[error("expected {expected} entries, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("rtt {0} is not positive")]
    NonPositiveRtt(f64),
    #[error("no subflow {0}")]
    NoSuchSubflow(usize),
    #[error("all windows are zero")]
    ZeroWindows,
    #[error("two subflows of one connection on path {0}")]
    DuplicatePath(usize),
    #[error("{0:?} cannot drive {1} subflows")]
    ControllerArity(Controller, usize),
    #[error("{0:?} does not accept enforcement")]
    NotEnforceable(Controller),
    #[error("enforced window {0} is not finite")]
    NonFiniteWindow(f64),
}
