//! The event loop tying paths, connections, DEL workers, competing flows and
//! agents together.

use std::fmt::Write as _;
use std::time::Duration;

use super::scenario::{AgentMode, Scenario, TrafficPattern};
use super::{bundled_checkpoint, ExperimentError};
use crate::agent::{compute_reward, enforce_action, AcrNetworks, AgentStats, ConnectionAgent, DrlAgent};
use crate::sim::{stream_rng, streams, EnqueueOutcome, EventQueue, PathState};
use crate::transport::{Controller, MptcpConnection, SlotCounters};
use crate::workload::{
    aggregate_utility, barrier_check, throughput_fluctuation, unfairness, RunMetrics, Worker, WorkerAction, WorkerEvent,
};

/// Initial smoothed RTT before the first sample.
const INITIAL_RTT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Event {
    /// The ACK for a data packet returns to the sender.
    Ack {
        conn: usize,
        sub: u32,
        seq: u64,
        delivered_at: f64,
    },
    Rto {
        conn: usize,
    },
    Slot {
        index: u64,
    },
    ComputeDone {
        worker: usize,
    },
    Toggle {
        competitor: usize,
    },
}

/// One policy per agent-driven controller.
#[derive(Debug, Clone, Default)]
pub struct AgentPool {
    pub hybrid: Option<DrlAgent>,
    pub drl_only: Option<DrlAgent>,
}

impl AgentPool {
    pub fn get(&self, c: Controller) -> Option<&DrlAgent> {
        match c {
            Controller::Hybrid => self.hybrid.as_ref(),
            Controller::DrlOnly => self.drl_only.as_ref(),
            _ => None,
        }
    }

    fn slot_mut(&mut self, c: Controller) -> &mut Option<DrlAgent> {
        match c {
            Controller::Hybrid => &mut self.hybrid,
            _ => &mut self.drl_only,
        }
    }

    /// Policies for every agent-driven controller in `scenario`: the
    /// configured checkpoint, else the bundled one, else a freshly
    /// initialised network (reported in `warnings`).
    pub fn for_scenario(scenario: &Scenario, warnings: &mut Vec<String>) -> Result<Self, ExperimentError> {
        let spec = &scenario.agent;
        let config = spec.agent_config();
        let mut pool = Self::default();
        for c in [Controller::Hybrid, Controller::DrlOnly] {
            if !scenario.workers.iter().any(|w| w.controller == c) {
                continue;
            }
            let file = match c {
                Controller::Hybrid => &spec.hybrid_checkpoint,
                _ => &spec.drl_only_checkpoint,
            };
            let nets = if let Some(path) = file {
                AcrNetworks::load(config.acr.clone(), path).map_err(|e| ExperimentError::Checkpoint {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })?
            } else if let Some(bytes) = bundled_checkpoint(c) {
                AcrNetworks::from_bytes(config.acr.clone(), bytes).map_err(|e| ExperimentError::Checkpoint {
                    path: format!("bundled {c}"),
                    message: e.to_string(),
                })?
            } else {
                warnings.push(format!("no checkpoint for {c}: using an untrained policy"));
                AcrNetworks::new(config.acr.clone(), scenario.seed)
            };
            *pool.slot_mut(c) = Some(DrlAgent::with_networks(nets, config.clone(), scenario.seed));
        }
        Ok(pool)
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Record every send, drop and ACK.
    pub packet_log: bool,
    /// Policies to use instead of loading them; returned in the output.
    pub agents: Option<AgentPool>,
    /// Stop at the first slot boundary after the agents have seen this many
    /// connection-slots, counted over their lifetime.
    pub sample_budget: Option<u64>,
}

/// One time-series sample: a subflow over one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRow {
    pub t: f64,
    pub flow: u32,
    pub subflow: u32,
    pub rate_pps: f64,
    pub cwnd: f64,
    pub rtt: f64,
}

pub const SERIES_HEADER: &str = "t_s,flow_id,subflow_id,rate_pps,cwnd_pkts,rtt_s";

pub fn series_csv(rows: &[SeriesRow]) -> String {
    let mut out = String::with_capacity(rows.len() * 40);
    out.push_str(SERIES_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{:.3},{},{},{:.3},{:.4},{:.6}", r.t, r.flow, r.subflow, r.rate_pps, r.cwnd, r.rtt);
    }
    out
}

/// Fate of every data packet sent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PacketStats {
    pub sent: u64,
    pub dropped_random: u64,
    pub dropped_queue: u64,
    /// Reached the receiver by the end of the run.
    pub delivered: u64,
    /// Still queued or propagating at the end.
    pub in_network: u64,
}

/// Agent activity for one controller.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AgentUsage {
    pub ticks: u64,
    pub acted: u64,
    pub train_steps: u64,
    pub stored: u64,
    /// Wall-clock time spent in agent inference, enforcement and training.
    pub compute: Duration,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: RunMetrics,
    pub series: Vec<SeriesRow>,
    /// Delivered packets/s of each connection, per slot. Workers first, then
    /// competitors.
    pub flow_rates: Vec<Vec<f64>>,
    /// Per-slot reward of each worker connection while active.
    pub slot_rewards: Vec<Vec<f64>>,
    pub packet_log: Option<String>,
    pub packets: PacketStats,
    /// Policies after the run, labelled by controller (and flow when not
    /// shared).
    pub agents: Vec<(String, DrlAgent)>,
    pub pool: AgentPool,
    pub usage: Vec<(Controller, AgentUsage)>,
    pub end_time: f64,
    pub events: u64,
    pub warnings: Vec<String>,
}

impl RunOutput {
    pub fn series_csv(&self) -> String {
        series_csv(&self.series)
    }

    pub fn usage_of(&self, c: Controller) -> AgentUsage {
        self.usage.iter().find(|(k, _)| *k == c).map(|(_, u)| *u).unwrap_or_default()
    }
}

struct Network {
    paths: Vec<PathState>,
    queue: EventQueue<Event>,
    log: Option<String>,
    packets: PacketStats,
}

impl Network {
    fn dispatch(&mut self, id: usize, conn: &mut MptcpConnection, rto_at: &mut Option<f64>, now: f64) -> Result<(), ExperimentError> {
        for p in conn.dispatch(now) {
            let path = conn.subflows[p.subflow_id as usize].path;
            self.packets.sent += 1;
            let outcome = self.paths[path].enqueue(&p, now);
            let kind = match outcome {
                EnqueueOutcome::Enqueued { delivered_at, .. } => {
                    let back = self.paths[path].config.prop_delay;
                    self.queue.schedule(
                        Event::Ack {
                            conn: id,
                            sub: p.subflow_id,
                            seq: p.seq,
                            delivered_at,
                        },
                        delivered_at + back,
                    )?;
                    "tx"
                }
                EnqueueOutcome::DroppedRandomLoss => {
                    self.packets.dropped_random += 1;
                    "loss"
                }
                EnqueueOutcome::DroppedQueueFull => {
                    self.packets.dropped_queue += 1;
                    "drop"
                }
            };
            if let Some(log) = &mut self.log {
                let _ = writeln!(log, "{now},{},{},{},{kind}", p.flow_id, p.subflow_id, p.seq);
            }
        }
        if let Some((_, deadline)) = conn.next_rto() {
            if rto_at.map_or(true, |t| deadline < t) {
                self.queue.schedule(Event::Rto { conn: id }, deadline.max(now))?;
                *rto_at = Some(deadline);
            }
        }
        Ok(())
    }
}

struct AgentSlot {
    agent: usize,
    state: ConnectionAgent,
}

/// A scenario being simulated.
pub struct Simulation {
    scenario: Scenario,
    mode: AgentMode,
    slot: f64,
    net: Network,
    workers: Vec<Worker>,
    bulk: Vec<bool>,
    competitors: Vec<MptcpConnection>,
    patterns: Vec<TrafficPattern>,
    rto_at: Vec<Option<f64>>,
    agents: Vec<DrlAgent>,
    labels: Vec<String>,
    shared: bool,
    agent_of: Vec<Option<AgentSlot>>,
    counters: Vec<Vec<SlotCounters>>,
    prev_active: Vec<bool>,
    flow_rates: Vec<Vec<f64>>,
    slot_rewards: Vec<Vec<f64>>,
    active_runs: Vec<Vec<Vec<f64>>>,
    series: Vec<SeriesRow>,
    sample_budget: Option<u64>,
    events: u64,
    warnings: Vec<String>,
}

impl Simulation {
    pub fn new(scenario: &Scenario, options: RunOptions) -> Result<Self, ExperimentError> {
        scenario.validate()?;
        let mut warnings = scenario.warnings();
        let pool = match options.agents {
            Some(p) => p,
            None => AgentPool::for_scenario(scenario, &mut warnings)?,
        };
        let seed = scenario.seed;
        let paths = scenario
            .path_configs()?
            .into_iter()
            .enumerate()
            .map(|(i, cfg)| PathState::new(cfg, stream_rng(seed, streams::PATH_BASE + i as u64)))
            .collect();

        let mut workers = Vec::new();
        let mut bulk = Vec::new();
        for g in &scenario.workers {
            for _ in 0..g.count {
                let id = workers.len();
                let mut conn = MptcpConnection::new(id as u32, g.controller, &g.paths, INITIAL_RTT)?;
                conn.packet_size = scenario.packet_size;
                let bytes = (g.model_size_mb * 1e6 * scenario.scale).round().max(1.0) as u64;
                workers.push(Worker::new(id, conn, bytes, g.compute_mean_s, g.compute_jitter, seed));
                bulk.push(g.bulk);
            }
        }
        let mut competitors = Vec::new();
        let mut patterns = Vec::new();
        for g in &scenario.competitors {
            for _ in 0..g.count {
                let id = (workers.len() + competitors.len()) as u32;
                let mut conn = MptcpConnection::new(id, Controller::Cubic, &[g.path], INITIAL_RTT)?;
                conn.packet_size = scenario.packet_size;
                competitors.push(conn);
                patterns.push(g.pattern);
            }
        }

        let mode = scenario.agent.mode;
        let shared = scenario.agent.shared;
        let mut agents = Vec::new();
        let mut labels = Vec::new();
        let mut agent_of: Vec<Option<AgentSlot>> = Vec::new();
        let config = scenario.agent.agent_config();
        let mut pool = pool;
        for w in &workers {
            let c = w.connection.controller;
            if !c.is_agent_driven() {
                agent_of.push(None);
                continue;
            }
            let index = if mode == AgentMode::Null {
                0
            } else {
                let found = labels.iter().position(|l| *l == c.to_string());
                match (shared, found) {
                    (true, Some(i)) => i,
                    _ => {
                        let missing = || ExperimentError::Checkpoint {
                            path: c.to_string(),
                            message: "no policy supplied".into(),
                        };
                        let mut a = if shared {
                            pool.slot_mut(c).take().ok_or_else(missing)?
                        } else {
                            pool.get(c).ok_or_else(missing)?.clone()
                        };
                        a.training = mode == AgentMode::Train;
                        a.explore = mode == AgentMode::Train;
                        if !shared {
                            a.reseed_replay(seed, w.id as u64);
                            a.stats = AgentStats::default();
                        }
                        agents.push(a);
                        labels.push(if shared { c.to_string() } else { format!("{c}_flow{}", w.id) });
                        agents.len() - 1
                    }
                }
            };
            agent_of.push(Some(AgentSlot {
                agent: index,
                state: ConnectionAgent::new(&config, seed, w.id as u32),
            }));
        }
        if !shared {
            // Unshared runs hand their per-flow clones back; the pool keeps
            // the originals.
            for c in [Controller::Hybrid, Controller::DrlOnly] {
                if let Some(a) = pool.slot_mut(c).take() {
                    if !labels.iter().any(|l| l.starts_with(c.name())) {
                        agents.push(a);
                        labels.push(format!("{c}_unused"));
                    }
                }
            }
        }

        let n = workers.len() + competitors.len();
        Ok(Self {
            mode,
            slot: scenario.agent.slot_s,
            net: Network {
                paths,
                queue: EventQueue::new(),
                log: options.packet_log.then(String::new),
                packets: PacketStats::default(),
            },
            bulk,
            competitors,
            patterns,
            rto_at: vec![None; n],
            agents,
            labels,
            shared,
            agent_of,
            counters: vec![Vec::new(); n],
            prev_active: vec![false; n],
            flow_rates: vec![Vec::new(); n],
            slot_rewards: vec![Vec::new(); workers.len()],
            active_runs: vec![vec![Vec::new()]; workers.len()],
            series: Vec::new(),
            sample_budget: options.sample_budget,
            events: 0,
            warnings,
            workers,
            scenario: scenario.clone(),
        })
    }

    fn n_conns(&self) -> usize {
        self.workers.len() + self.competitors.len()
    }

    fn conn_mut(&mut self, id: usize) -> &mut MptcpConnection {
        let w = self.workers.len();
        if id < w {
            &mut self.workers[id].connection
        } else {
            &mut self.competitors[id - w]
        }
    }

    fn dispatch(&mut self, id: usize, now: f64) -> Result<(), ExperimentError> {
        let w = self.workers.len();
        let conn = if id < w {
            &mut self.workers[id].connection
        } else {
            &mut self.competitors[id - w]
        };
        self.net.dispatch(id, conn, &mut self.rto_at[id], now)
    }

    fn worker_event(&mut self, id: usize, event: WorkerEvent, now: f64) -> Result<(), ExperimentError> {
        match self.workers[id].step(event, now)? {
            WorkerAction::Transfer { .. } => self.dispatch(id, now)?,
            WorkerAction::Compute { duration } => self.net.queue.schedule(Event::ComputeDone { worker: id }, now + duration)?,
            WorkerAction::Barrier => {
                for r in barrier_check(self.scenario.scheme, &self.workers) {
                    self.workers[r].step(WorkerEvent::Released, now)?;
                    self.dispatch(r, now)?;
                }
            }
        }
        Ok(())
    }

    fn experienced(&self) -> u64 {
        self.agents.iter().map(|a| a.stats.ticks).sum()
    }

    fn on_slot(&mut self, index: u64, now: f64) -> Result<bool, ExperimentError> {
        let n_workers = self.workers.len();
        for id in 0..self.n_conns() {
            let slot = self.slot;
            let conn = self.conn_mut(id);
            let counters: Vec<SlotCounters> = conn.subflows.iter_mut().map(|s| s.take_slot()).collect();
            let mut total = 0.0;
            let mut rates = Vec::with_capacity(counters.len());
            let mut rows = Vec::with_capacity(counters.len());
            for (k, (c, s)) in counters.iter().zip(&conn.subflows).enumerate() {
                let rate = c.delivered as f64 / slot;
                total += rate;
                rates.push(rate);
                rows.push(SeriesRow {
                    t: now,
                    flow: conn.id,
                    subflow: k as u32,
                    rate_pps: rate,
                    cwnd: s.cwnd,
                    rtt: s.srtt,
                });
            }
            let active = conn.is_active();
            conn.refresh_schedule()?;
            self.series.extend(rows);
            self.flow_rates[id].push(total);
            if id < n_workers {
                if self.prev_active[id] {
                    self.slot_rewards[id].push(compute_reward(&rates));
                }
                let runs = &mut self.active_runs[id];
                if self.prev_active[id] && active {
                    runs.last_mut().expect("non-empty").push(total);
                } else if !runs.last().expect("non-empty").is_empty() {
                    runs.push(Vec::new());
                }
            }
            self.prev_active[id] = active;
            self.counters[id] = counters;
        }

        let kappa = self.scenario.agent.kappa;
        for id in 0..n_workers {
            let Some(slot) = self.agent_of[id].as_mut() else {
                continue;
            };
            let conn = &mut self.workers[id].connection;
            if !conn.is_active() {
                slot.state.on_idle();
                continue;
            }
            match self.mode {
                AgentMode::Null => {
                    let zeros = vec![0.0; conn.len()];
                    enforce_action(conn, &zeros, kappa, now)?;
                }
                AgentMode::Infer | AgentMode::Train => {
                    self.agents[slot.agent].tick(&mut slot.state, conn, &self.counters[id], self.slot, now)?;
                }
            }
        }
        for a in &mut self.agents {
            a.learn()?;
        }
        for id in 0..self.n_conns() {
            self.dispatch(id, now)?;
        }
        let budget_hit = self.sample_budget.is_some_and(|b| self.experienced() >= b);
        let next = (index + 1) as f64 * self.slot;
        if !budget_hit && next <= self.scenario.duration {
            self.net.queue.schedule(Event::Slot { index: index + 1 }, next)?;
        }
        Ok(budget_hit)
    }

    fn start(&mut self) -> Result<(), ExperimentError> {
        for id in 0..self.workers.len() {
            if self.bulk[id] {
                self.workers[id].connection.set_bulk(true);
                self.dispatch(id, 0.0)?;
            } else {
                self.worker_event(id, WorkerEvent::Start, 0.0)?;
            }
        }
        let w = self.workers.len();
        for k in 0..self.competitors.len() {
            self.competitors[k].set_bulk(true);
            if let TrafficPattern::OnOff { on_s, .. } = self.patterns[k] {
                self.net.queue.schedule(Event::Toggle { competitor: k }, on_s)?;
            }
            self.dispatch(w + k, 0.0)?;
        }
        self.prev_active = (0..self.n_conns()).map(|id| self.conn_mut(id).is_active()).collect();
        self.net.queue.schedule(Event::Slot { index: 1 }, self.slot)?;
        Ok(())
    }

    fn handle(&mut self, now: f64, event: Event) -> Result<bool, ExperimentError> {
        match event {
            Event::Ack { conn, sub, seq, .. } => {
                self.net.packets.delivered += 1;
                let out = self.conn_mut(conn).on_ack(sub as usize, seq, now);
                if let Some(log) = &mut self.net.log {
                    let _ = writeln!(log, "{now},{conn},{sub},{seq},ack");
                }
                if out.transfer_complete && conn < self.workers.len() && !self.bulk[conn] {
                    let event = match self.workers[conn].phase {
                        crate::workload::Phase::Downloading => WorkerEvent::DownloadDone,
                        _ => WorkerEvent::UploadDone,
                    };
                    self.worker_event(conn, event, now)?;
                }
                self.dispatch(conn, now)?;
            }
            Event::Rto { conn } => {
                if self.rto_at[conn].is_some_and(|t| now >= t) {
                    self.rto_at[conn] = None;
                }
                let c = self.conn_mut(conn);
                for i in 0..c.len() {
                    c.on_rto(i, now);
                }
                self.dispatch(conn, now)?;
            }
            Event::Slot { index } => return self.on_slot(index, now),
            Event::ComputeDone { worker } => self.worker_event(worker, WorkerEvent::ComputeDone, now)?,
            Event::Toggle { competitor } => {
                let TrafficPattern::OnOff { on_s, off_s } = self.patterns[competitor] else {
                    return Ok(false);
                };
                let id = self.workers.len() + competitor;
                let conn = &mut self.competitors[competitor];
                let turning_on = !conn.is_bulk();
                conn.set_bulk(turning_on);
                let next = now + if turning_on { on_s } else { off_s };
                self.net.queue.schedule(Event::Toggle { competitor }, next)?;
                self.dispatch(id, now)?;
            }
        }
        Ok(false)
    }

    /// Runs to the scenario's end (or the sample budget) and summarises.
    pub fn run(mut self) -> Result<RunOutput, ExperimentError> {
        self.start()?;
        let end = self.scenario.duration;
        let mut stop_at = end;
        while let Some(t) = self.net.queue.peek_time() {
            if t > end {
                break;
            }
            let (now, event) = self.net.queue.pop().expect("peeked");
            self.events += 1;
            if self.handle(now, event)? {
                stop_at = now;
                break;
            }
        }
        self.finish(stop_at)
    }

    fn finish(self, end: f64) -> Result<RunOutput, ExperimentError> {
        let mut packets = self.net.packets;
        for (_, e) in self.net.queue.pending() {
            if let Event::Ack { delivered_at, .. } = e {
                if *delivered_at <= end {
                    packets.delivered += 1;
                } else {
                    packets.in_network += 1;
                }
            }
        }

        let horizon = self.scenario.horizon().min(end);
        let metrics = self.metrics(horizon, end)?;
        let mut usage: Vec<(Controller, AgentUsage)> = Vec::new();
        for (a, label) in self.agents.iter().zip(&self.labels) {
            let c = if label.starts_with(Controller::Hybrid.name()) {
                Controller::Hybrid
            } else {
                Controller::DrlOnly
            };
            let u = match usage.iter_mut().find(|(k, _)| *k == c) {
                Some((_, u)) => u,
                None => {
                    usage.push((c, AgentUsage::default()));
                    &mut usage.last_mut().expect("just pushed").1
                }
            };
            u.ticks += a.stats.ticks;
            u.acted += a.stats.acted;
            u.train_steps += a.stats.train_steps;
            u.stored += a.replay.pushed();
            u.compute += a.stats.compute;
        }
        let mut pool = AgentPool::default();
        if self.shared {
            for (a, label) in self.agents.iter().zip(&self.labels) {
                let c = if label == Controller::Hybrid.name() { Controller::Hybrid } else { Controller::DrlOnly };
                *pool.slot_mut(c) = Some(a.clone());
            }
        }
        let agents = self.labels.into_iter().zip(self.agents).collect();
        Ok(RunOutput {
            metrics,
            series: self.series,
            flow_rates: self.flow_rates,
            slot_rewards: self.slot_rewards,
            packet_log: self.net.log,
            packets,
            agents,
            pool,
            usage,
            end_time: end,
            events: self.events,
            warnings: self.warnings,
        })
    }

    fn metrics(&self, horizon: f64, end: f64) -> Result<RunMetrics, ExperimentError> {
        let del: Vec<usize> = (0..self.workers.len()).filter(|&i| !self.bulk[i]).collect();
        let controllers: Vec<Controller> = self.workers.iter().map(|w| w.connection.controller).collect();
        let controller = match controllers.first() {
            Some(c) if controllers.iter().all(|x| x == c) => c.to_string(),
            Some(_) => "mixed".into(),
            None => "none".into(),
        };
        let mean_rate = |id: usize| {
            let r = &self.flow_rates[id];
            if r.is_empty() {
                0.0
            } else {
                r.iter().sum::<f64>() / r.len() as f64
            }
        };
        let iteration_times: Vec<f64> = del.iter().map(|&i| self.workers[i].mean_iteration_time(horizon)).collect();
        let iterations: Vec<u64> = del.iter().map(|&i| self.workers[i].iterations_by(horizon)).collect();
        let mean_iteration_time = if iteration_times.is_empty() {
            0.0
        } else {
            iteration_times.iter().sum::<f64>() / iteration_times.len() as f64
        };
        let unfair = if iterations.len() >= 2 { unfairness(&iterations)? } else { 0.0 };

        let straggler = if del.is_empty() {
            (0..self.workers.len())
                .min_by(|&a, &b| mean_rate(a).total_cmp(&mean_rate(b)))
                .unwrap_or(0)
        } else {
            let mut best = 0;
            for k in 1..del.len() {
                let worse = iterations[k] < iterations[best]
                    || iterations[k] == iterations[best] && iteration_times[k] > iteration_times[best];
                if worse {
                    best = k;
                }
            }
            del[best]
        };
        let straggler_throughput = self.flow_rates.get(straggler).cloned().unwrap_or_default();
        let straggler_mean_throughput = if self.workers.is_empty() { 0.0 } else { mean_rate(straggler) };

        let mut flucts = Vec::new();
        for runs in &self.active_runs {
            let pairs: usize = runs.iter().map(|r| r.len().saturating_sub(1)).sum();
            if pairs == 0 {
                continue;
            }
            let total: f64 = runs
                .iter()
                .filter(|r| r.len() >= 2)
                .map(|r| throughput_fluctuation(r).map(|f| f * (r.len() - 1) as f64))
                .sum::<Result<f64, _>>()?;
            flucts.push(total / pairs as f64);
        }
        let throughput_fluctuation = if flucts.is_empty() {
            0.0
        } else {
            flucts.iter().sum::<f64>() / flucts.len() as f64
        };
        let rates: Vec<f64> = (0..self.workers.len()).map(|i| mean_rate(i).max(crate::agent::THETA_FLOOR)).collect();
        let aggregate = if rates.is_empty() { 0.0 } else { aggregate_utility(&rates)? };
        let rewards: Vec<f64> = self.slot_rewards.iter().flatten().copied().collect();
        let learning_score = (!rewards.is_empty()).then(|| rewards.iter().sum::<f64>() / rewards.len() as f64);
        let _ = end;
        Ok(RunMetrics {
            scheme: self.scenario.scheme.name(),
            controller,
            seed: self.scenario.seed,
            iteration_times,
            mean_iteration_time,
            iterations,
            unfairness: unfair,
            throughput_fluctuation,
            straggler,
            straggler_throughput,
            straggler_mean_throughput,
            aggregate_utility: aggregate,
            learning_score,
        })
    }
}

/// Simulates `scenario` with default options.
pub fn run_scenario(scenario: &Scenario) -> Result<RunOutput, ExperimentError> {
    Simulation::new(scenario, RunOptions::default())?.run()
}
