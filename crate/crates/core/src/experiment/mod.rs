//! Scenario files, the simulation runner, canned experiments and agent
//! training.

mod plot;
mod presets;
mod runner;
mod scenario;
mod training;

pub use runner::{
    run_scenario, series_csv, AgentPool, AgentUsage, PacketStats, RunOptions, RunOutput, SeriesRow, Simulation,
    SERIES_HEADER,
};
pub use plot::{line_plot_svg, PlotSeries};
pub use presets::{
    del_scenario, exp1_scenario, run_preset, PresetOptions, PresetResult, PresetRun, CAPACITY_SWEEP, COMPARED, DEL_WORKERS,
    EXP8_HEADER, EXP8_PROXY_FILE, PRESETS,
};
pub use training::{moving_average, train_agent, training_scenario, TrainOptions, TrainingRun};
pub use scenario::{
    AgentMode, AgentSpec, CompetitorGroup, PathSpec, Scenario, SquareWave, TrafficPattern, WorkerGroup,
};

use thiserror::Error;

use crate::agent::AgentError;
use crate::sim::SimError;
use crate::transport::{Controller, TransportError};
use crate::workload::WorkloadError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{path}: {message}")]
    Config { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: String, message: String },
}

/// Policy weights shipped with the crate, from `hmptcp train --sessions 3`
/// with the default seed.
pub fn bundled_checkpoint(c: Controller) -> Option<&'static [u8]> {
    match c {
        Controller::Hybrid => Some(include_bytes!("../../assets/hybrid.ckpt")),
        Controller::DrlOnly => Some(include_bytes!("../../assets/drl_only.ckpt")),
        _ => None,
    }
}
