use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{ParallelismScheme, WorkloadError};
use crate::sim::{stream_rng, streams};
use crate::transport::MptcpConnection;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Idle,
    Downloading,
    Computing,
    Uploading,
    Waiting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkerEvent {
    Start,
    DownloadDone,
    ComputeDone,
    UploadDone,
    Released,
}

/// What the simulation must do after a worker step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WorkerAction {
    /// A transfer of this many bytes was queued on the worker's connection.
    Transfer { bytes: u64 },
    /// Fire `ComputeDone` after this many seconds.
    Compute { duration: f64 },
    /// The worker reached the barrier; run `barrier_check`.
    Barrier,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowRecord {
    pub arrival: f64,
    pub departure: Option<f64>,
    pub bytes: u64,
}

/// One completed iteration, from the start of its download to the release
/// that starts the next one (barrier waiting included).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub start: f64,
    pub download: f64,
    pub compute: f64,
    pub upload: f64,
    pub end: f64,
}

impl IterationRecord {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn waiting(&self) -> f64 {
        self.duration() - self.download - self.compute - self.upload
    }
}

#[derive(Debug, Clone)]
pub struct Worker {
    pub id: usize,
    pub connection: MptcpConnection,
    pub phase: Phase,
    pub model_size: u64,
    pub compute_mean: f64,
    pub compute_jitter: f64,
    /// Completed uploads.
    pub iterations: u64,
    pub current_flow: Option<FlowRecord>,
    pub flows: Vec<FlowRecord>,
    pub records: Vec<IterationRecord>,
    /// Times at which uploads completed.
    pub completions: Vec<f64>,
    iter_start: f64,
    phase_start: f64,
    phases: [f64; 3],
    rng: ChaCha8Rng,
}

impl Worker {
    pub fn new(id: usize, connection: MptcpConnection, model_size: u64, compute_mean: f64, compute_jitter: f64, seed: u64) -> Self {
        Self {
            id,
            connection,
            phase: Phase::Idle,
            model_size,
            compute_mean,
            compute_jitter,
            iterations: 0,
            current_flow: None,
            flows: Vec::new(),
            records: Vec::new(),
            completions: Vec::new(),
            iter_start: 0.0,
            phase_start: 0.0,
            phases: [0.0; 3],
            rng: stream_rng(seed, streams::COMPUTE_BASE + id as u64),
        }
    }

    fn begin_transfer(&mut self, now: f64) -> WorkerAction {
        self.connection.start_transfer(self.model_size);
        self.current_flow = Some(FlowRecord {
            arrival: now,
            departure: None,
            bytes: self.model_size,
        });
        self.phase_start = now;
        WorkerAction::Transfer { bytes: self.model_size }
    }

    fn end_transfer(&mut self, now: f64) -> f64 {
        if let Some(mut f) = self.current_flow.take() {
            f.departure = Some(now);
            self.flows.push(f);
        }
        now - self.phase_start
    }

    /// Advances the phase machine on `event` at time `now`.
    pub fn step(&mut self, event: WorkerEvent, now: f64) -> Result<WorkerAction, WorkloadError> {
        use Phase::*;
        use WorkerEvent::*;
        match (self.phase, event) {
            (Idle, Start) | (Waiting, Released) => {
                if self.phase == Waiting {
                    let [download, compute, upload] = self.phases;
                    self.records.push(IterationRecord {
                        start: self.iter_start,
                        download,
                        compute,
                        upload,
                        end: now,
                    });
                }
                self.iter_start = now;
                self.phase = Downloading;
                Ok(self.begin_transfer(now))
            }
            (Downloading, DownloadDone) => {
                self.phases[0] = self.end_transfer(now);
                self.phase = Computing;
                self.phase_start = now;
                let j = self.compute_jitter;
                let duration = self.compute_mean * (1.0 + self.rng.gen_range(-j..=j));
                Ok(WorkerAction::Compute { duration })
            }
            (Computing, ComputeDone) => {
                self.phases[1] = now - self.phase_start;
                self.phase = Uploading;
                Ok(self.begin_transfer(now))
            }
            (Uploading, UploadDone) => {
                self.phases[2] = self.end_transfer(now);
                self.iterations += 1;
                self.completions.push(now);
                self.phase = Waiting;
                Ok(WorkerAction::Barrier)
            }
            (phase, event) => Err(WorkloadError::UnexpectedEvent { id: self.id, phase, event }),
        }
    }

    /// Mean duration of the iterations finished by `horizon`. Without one,
    /// the time from the first iteration's start to `horizon`.
    pub fn mean_iteration_time(&self, horizon: f64) -> f64 {
        let done: Vec<f64> = self.records.iter().filter(|r| r.end <= horizon).map(IterationRecord::duration).collect();
        if done.is_empty() {
            let start = self.records.first().map_or(self.iter_start, |r| r.start);
            return horizon - start;
        }
        done.iter().sum::<f64>() / done.len() as f64
    }

    /// Uploads completed by `horizon`.
    pub fn iterations_by(&self, horizon: f64) -> u64 {
        self.completions.iter().filter(|&&t| t <= horizon).count() as u64
    }
}

/// Ids of the waiting workers that may begin their next iteration.
pub fn barrier_check(scheme: ParallelismScheme, workers: &[Worker]) -> Vec<usize> {
    let waiting = workers.iter().filter(|w| w.phase == Phase::Waiting);
    match scheme {
        ParallelismScheme::Bsp => {
            if workers.iter().all(|w| w.phase == Phase::Waiting) {
                workers.iter().map(|w| w.id).collect()
            } else {
                Vec::new()
            }
        }
        ParallelismScheme::Ssp { staleness } => {
            let min = workers.iter().map(|w| w.iterations).min().unwrap_or(0);
            waiting
                .filter(|w| w.iterations + 1 - min <= u64::from(staleness))
                .map(|w| w.id)
                .collect()
        }
        ParallelismScheme::Tap => waiting.map(|w| w.id).collect(),
    }
}
