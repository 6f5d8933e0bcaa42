//! Scenario files: a TOML document describing paths, DEL workers, competing
//! single-path flows, the synchronization scheme and the agent. The schema is
//! documented in `docs/scenario.md`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::agent::AgentConfig;
use crate::sim::{CapacityTrace, PathConfig, DEFAULT_PACKET_SIZE};
use crate::transport::Controller;
use crate::workload::ParallelismScheme;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SquareWave {
    pub high_mbps: f64,
    pub low_mbps: f64,
    pub half_period_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSpec {
    /// Constant capacity. Exactly one of `capacity_mbps`, `trace` and
    /// `square_wave` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity_mbps: Option<f64>,
    /// Capacity trace file (`time_s,capacity_mbps` lines), relative to the
    /// scenario file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub square_wave: Option<SquareWave>,
    /// Round-trip propagation delay; each direction gets half.
    pub rtt_ms: f64,
    #[serde(default)]
    pub loss: f64,
    #[serde(default = "default_buffer")]
    pub buffer: usize,
}

fn default_buffer() -> usize {
    100
}

impl PathSpec {
    pub fn constant(capacity_mbps: f64, rtt_ms: f64, loss: f64, buffer: usize) -> Self {
        Self {
            capacity_mbps: Some(capacity_mbps),
            trace: None,
            square_wave: None,
            rtt_ms,
            loss,
            buffer,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum TrafficPattern {
    /// Always backlogged.
    Bulk,
    /// Backlogged for `on_s`, silent for `off_s`, repeating from time zero.
    OnOff { on_s: f64, off_s: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkerGroup {
    #[serde(default = "one")]
    pub count: usize,
    pub controller: Controller,
    pub paths: Vec<usize>,
    /// Model size before scaling, megabytes.
    #[serde(default = "default_model_mb")]
    pub model_size_mb: f64,
    #[serde(default = "default_compute_mean")]
    pub compute_mean_s: f64,
    #[serde(default = "default_jitter")]
    pub compute_jitter: f64,
    /// A plain backlogged flow instead of a DEL worker.
    #[serde(default)]
    pub bulk: bool,
}

fn one() -> usize {
    1
}
fn default_model_mb() -> f64 {
    600.0
}
fn default_compute_mean() -> f64 {
    0.5
}
fn default_jitter() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompetitorGroup {
    #[serde(default = "one")]
    pub count: usize,
    pub path: usize,
    #[serde(default = "bulk_pattern")]
    pub pattern: TrafficPattern,
}

fn bulk_pattern() -> TrafficPattern {
    TrafficPattern::Bulk
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentMode {
    /// Frozen policy, no exploration.
    Infer,
    /// Exploration and online training.
    Train,
    /// Zero action every slot.
    Null,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentSpec {
    pub mode: AgentMode,
    /// Checkpoints for the two agent-driven controllers. Without one, the
    /// bundled policy is used.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hybrid_checkpoint: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drl_only_checkpoint: Option<PathBuf>,
    pub slot_s: f64,
    pub kappa: f64,
    pub batch_size: usize,
    /// Connection-slots of experience per training session.
    pub session_samples: u64,
    /// One policy for all connections of a controller instead of one agent
    /// per connection.
    pub shared: bool,
    pub gate_threshold: f64,
    pub reward_scale: f64,
}

impl Default for AgentSpec {
    fn default() -> Self {
        let base = AgentConfig::default();
        Self {
            mode: AgentMode::Infer,
            hybrid_checkpoint: None,
            drl_only_checkpoint: None,
            slot_s: 0.1,
            kappa: base.kappa,
            batch_size: base.acr.batch_size,
            session_samples: 30_000,
            shared: false,
            gate_threshold: base.gate_threshold,
            reward_scale: 0.1,
        }
    }
}

impl AgentSpec {
    pub fn agent_config(&self) -> AgentConfig {
        let mut c = AgentConfig {
            kappa: self.kappa,
            gate_threshold: self.gate_threshold,
            reward_scale: self.reward_scale,
            ..AgentConfig::default()
        };
        c.acr.batch_size = self.batch_size;
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_name")]
    pub name: String,
    pub duration: f64,
    #[serde(default)]
    pub seed: u64,
    /// Multiplier on model sizes (0.01 turns 600 MB into 6 MB).
    #[serde(default = "unit")]
    pub scale: f64,
    #[serde(default = "default_packet_size")]
    pub packet_size: u32,
    /// Window over which iterations are counted; defaults to `duration`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default = "default_scheme")]
    pub scheme: ParallelismScheme,
    pub paths: Vec<PathSpec>,
    #[serde(default)]
    pub workers: Vec<WorkerGroup>,
    #[serde(default)]
    pub competitors: Vec<CompetitorGroup>,
    #[serde(default)]
    pub agent: AgentSpec,
}

fn default_name() -> String {
    "scenario".into()
}
fn unit() -> f64 {
    1.0
}
fn default_packet_size() -> u32 {
    DEFAULT_PACKET_SIZE
}
fn default_scheme() -> ParallelismScheme {
    ParallelismScheme::Tap
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> ExperimentError {
    ExperimentError::Config {
        path: path.into(),
        message: message.into(),
    }
}

fn positive(path: &str, v: f64) -> Result<(), ExperimentError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(path, format!("must be positive, got {v}")))
    }
}

impl Scenario {
    /// Parses and validates a scenario document.
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        let de = toml::Deserializer::new(text);
        let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            invalid(path, inner.message().to_string())
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut s = Self::from_toml(&text)?;
        if let Some(dir) = path.parent() {
            s.resolve_relative(dir);
        }
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Makes trace and checkpoint paths relative to `dir` absolute.
    pub fn resolve_relative(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        for p in &mut self.paths {
            if let Some(t) = &mut p.trace {
                fix(t);
            }
        }
        if let Some(c) = &mut self.agent.hybrid_checkpoint {
            fix(c);
        }
        if let Some(c) = &mut self.agent.drl_only_checkpoint {
            fix(c);
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        positive("duration", self.duration)?;
        positive("scale", self.scale)?;
        if self.packet_size == 0 {
            return Err(invalid("packet_size", "must be positive"));
        }
        if let Some(h) = self.horizon {
            positive("horizon", h)?;
            if h > self.duration {
                return Err(invalid("horizon", format!("{h} exceeds duration {}", self.duration)));
            }
        }
        if let ParallelismScheme::Ssp { staleness: 0 } = self.scheme {
            return Err(invalid("scheme.staleness", "must be at least 1"));
        }
        if self.paths.is_empty() {
            return Err(invalid("paths", "at least one path is required"));
        }
        for (i, p) in self.paths.iter().enumerate() {
            let at = |f: &str| format!("paths[{i}].{f}");
            let given = [p.capacity_mbps.is_some(), p.trace.is_some(), p.square_wave.is_some()];
            if given.iter().filter(|&&g| g).count() != 1 {
                return Err(invalid(
                    format!("paths[{i}]"),
                    "exactly one of capacity_mbps, trace, square_wave is required",
                ));
            }
            if let Some(c) = p.capacity_mbps {
                positive(&at("capacity_mbps"), c)?;
            }
            if let Some(w) = &p.square_wave {
                positive(&at("square_wave.high_mbps"), w.high_mbps)?;
                positive(&at("square_wave.low_mbps"), w.low_mbps)?;
                positive(&at("square_wave.half_period_s"), w.half_period_s)?;
            }
            if !(p.rtt_ms >= 0.0 && p.rtt_ms.is_finite()) {
                return Err(invalid(at("rtt_ms"), format!("must be >= 0, got {}", p.rtt_ms)));
            }
            if !(0.0..=1.0).contains(&p.loss) {
                return Err(invalid(at("loss"), format!("must be in [0, 1], got {}", p.loss)));
            }
            if p.buffer == 0 {
                return Err(invalid(at("buffer"), "must be at least 1"));
            }
        }
        let n_paths = self.paths.len();
        let mut flows = 0;
        for (g, w) in self.workers.iter().enumerate() {
            let at = |f: &str| format!("workers[{g}].{f}");
            if w.count == 0 {
                return Err(invalid(at("count"), "must be at least 1"));
            }
            if w.paths.is_empty() {
                return Err(invalid(at("paths"), "every worker needs at least one path"));
            }
            if w.paths.len() > crate::agent::MAX_SUBFLOWS {
                return Err(invalid(
                    at("paths"),
                    format!("at most {} subflows per connection", crate::agent::MAX_SUBFLOWS),
                ));
            }
            for (k, &p) in w.paths.iter().enumerate() {
                if p >= n_paths {
                    return Err(invalid(format!("workers[{g}].paths[{k}]"), format!("path {p} does not exist")));
                }
                if w.paths[..k].contains(&p) {
                    return Err(invalid(format!("workers[{g}].paths[{k}]"), format!("path {p} listed twice")));
                }
            }
            if w.controller == Controller::Cubic && w.paths.len() != 1 {
                return Err(invalid(at("controller"), "cubic flows are single-path"));
            }
            if !w.bulk {
                positive(&at("model_size_mb"), w.model_size_mb)?;
            }
            if !(w.compute_mean_s >= 0.0) {
                return Err(invalid(at("compute_mean_s"), "must be >= 0"));
            }
            if !(0.0..1.0).contains(&w.compute_jitter) {
                return Err(invalid(at("compute_jitter"), "must be in [0, 1)"));
            }
            flows += w.count;
        }
        for (g, c) in self.competitors.iter().enumerate() {
            if c.path >= n_paths {
                return Err(invalid(format!("competitors[{g}].path"), format!("path {} does not exist", c.path)));
            }
            if let TrafficPattern::OnOff { on_s, off_s } = c.pattern {
                positive(&format!("competitors[{g}].pattern.on_s"), on_s)?;
                positive(&format!("competitors[{g}].pattern.off_s"), off_s)?;
            }
            flows += c.count;
        }
        if flows == 0 {
            return Err(invalid("workers", "scenario has no flows"));
        }
        positive("agent.slot_s", self.agent.slot_s)?;
        positive("agent.kappa", self.agent.kappa)?;
        if self.agent.batch_size == 0 {
            return Err(invalid("agent.batch_size", "must be at least 1"));
        }
        positive("agent.reward_scale", self.agent.reward_scale)?;
        if !(self.agent.gate_threshold >= 0.0) {
            return Err(invalid("agent.gate_threshold", "must be >= 0"));
        }
        Ok(())
    }

    /// Values outside the emulation ranges used for training: link
    /// capacity 4 to 128 Mbps, round trip 3 to 300 ms, buffer 20 to 500
    /// packets. These are allowed, only reported.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (i, p) in self.paths.iter().enumerate() {
            let mut caps: Vec<f64> = Vec::new();
            if let Some(c) = p.capacity_mbps {
                caps.push(c);
            }
            if let Some(w) = &p.square_wave {
                caps.extend([w.high_mbps, w.low_mbps]);
            }
            for c in caps {
                if !(4.0..=128.0).contains(&c) {
                    out.push(format!("paths[{i}]: capacity {c} Mbps outside 4..128"));
                }
            }
            if !(3.0..=300.0).contains(&p.rtt_ms) {
                out.push(format!("paths[{i}].rtt_ms: {} outside 3..300", p.rtt_ms));
            }
            if !(20..=500).contains(&p.buffer) {
                out.push(format!("paths[{i}].buffer: {} outside 20..500", p.buffer));
            }
        }
        out
    }

    pub fn horizon(&self) -> f64 {
        self.horizon.unwrap_or(self.duration)
    }

    /// Builds the path configurations, loading trace files.
    pub fn path_configs(&self) -> Result<Vec<PathConfig>, ExperimentError> {
        self.paths
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let capacity = if let Some(c) = p.capacity_mbps {
                    CapacityTrace::constant(c * 1e6)
                } else if let Some(w) = &p.square_wave {
                    CapacityTrace::square_wave(w.high_mbps * 1e6, w.low_mbps * 1e6, w.half_period_s, self.duration)?
                } else {
                    let file = p.trace.as_ref().expect("validated");
                    CapacityTrace::load(file).map_err(|e| invalid(format!("paths[{i}].trace"), e.to_string()))?
                };
                let cfg = PathConfig {
                    capacity,
                    prop_delay: p.rtt_ms / 2000.0,
                    loss_prob: p.loss,
                    queue_limit: p.buffer,
                };
                cfg.validate()?;
                Ok(cfg)
            })
            .collect()
    }
}
