//! Learned outer control loop: per-slot observations, the actor/critic/
//! representation networks, exploration noise, replay memory, training, and
//! enforcement of windows and schedule onto a connection.

mod daemon;
mod networks;
mod noise;
mod observation;
mod replay;

pub use daemon::{
    enforce_action, training_log_csv, AgentConfig, AgentStats, ConnectionAgent, DrlAgent, EpisodeRecord, TickOutcome,
    TRAINING_LOG_HEADER,
};
pub use networks::{AcrConfig, AcrNetworks, TrainStats, MAX_SUBFLOWS};
pub use noise::OuNoise;
pub use observation::{
    compute_reward, observe, slot_rates, SubflowObservation, CWND_SCALE, OBS_DIM, RATE_SCALE, RTT_SCALE, THETA_FLOOR,
};
pub use replay::{ReplayBuffer, Transition};

use thiserror::Error;

use crate::nn::NnError;
use crate::transport::TransportError;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("no subflow observations")]
    EmptyObservation,
    #[error("{0} subflows is outside 1..={max}", max = MAX_SUBFLOWS)]
    TooManySubflows(usize),
    #[error("expected {expected} action entries, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("replay holds {have} transitions, need {need}")]
    ReplayUnderfull { have: usize, need: usize },
    #[error("training diverged: {0}")]
    Diverged(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}
