use std::time::{Duration, Instant};

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::networks::{AcrConfig, AcrNetworks, TrainStats, MAX_SUBFLOWS};
use super::noise::OuNoise;
use super::observation::{compute_reward, observe, slot_rates, OBS_DIM};
use super::replay::{ReplayBuffer, Transition};
use super::AgentError;
use crate::sim::{stream_rng, streams};
use crate::transport::{compute_schedule, MptcpConnection, Schedule, SlotCounters};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub acr: AcrConfig,
    /// Window-scaling exponent gain: an action `a` scales a window by
    /// `2^(kappa * a)`.
    pub kappa: f64,
    pub ou_theta: f64,
    pub ou_sigma: f64,
    /// Multiplier applied to rewards before they enter the replay buffer.
    pub reward_scale: f64,
    /// Relative change in any subflow's delivered rate, or absolute change
    /// in any schedule share, that wakes the agent of a connection with an
    /// inner loop. Zero wakes it every slot.
    pub gate_threshold: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            acr: AcrConfig::default(),
            kappa: 1.0,
            ou_theta: 0.15,
            ou_sigma: 0.2,
            reward_scale: 1.0,
            gate_threshold: 0.1,
        }
    }
}

/// `w_i * 2^(kappa a_i)` clamped to the connection's enforcement range, with
/// the schedule derived from the enforced windows; both are applied to the
/// connection.
pub fn enforce_action(conn: &mut MptcpConnection, action: &[f64], kappa: f64, now: f64) -> Result<(Vec<f64>, Schedule), AgentError> {
    if action.len() != conn.len() {
        return Err(AgentError::DimensionMismatch {
            expected: conn.len(),
            got: action.len(),
        });
    }
    let windows: Vec<f64> = action
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let (lo, hi) = conn.enforcement_bounds(i, now);
            (conn.subflows[i].cwnd * (kappa * a).exp2()).clamp(lo, hi)
        })
        .collect();
    let schedule = compute_schedule(&windows, &conn.rtts())?;
    conn.apply_enforcement(&windows, schedule.clone(), now)?;
    Ok((windows, schedule))
}

/// Per-connection agent state: exploration noise, the pending (state,
/// action) awaiting its reward, and the wake-up reference.
#[derive(Debug, Clone)]
pub struct ConnectionAgent {
    pub noise: OuNoise,
    pending: Option<(Vec<[f64; OBS_DIM]>, Vec<f64>)>,
    prev_cwnd: Vec<f64>,
    gate_ref: Option<(Vec<f64>, Vec<f64>)>,
    /// Sum and count of slot rewards since the last `take_episode`.
    reward_sum: f64,
    reward_slots: u64,
}

impl ConnectionAgent {
    pub fn new(config: &AgentConfig, seed: u64, conn_id: u32) -> Self {
        Self {
            noise: OuNoise::new(
                MAX_SUBFLOWS,
                config.ou_theta,
                config.ou_sigma,
                stream_rng(seed, streams::NOISE_BASE + u64::from(conn_id)),
            ),
            pending: None,
            prev_cwnd: Vec::new(),
            gate_ref: None,
            reward_sum: 0.0,
            reward_slots: 0,
        }
    }

    /// Forgets the pending step; called when the connection goes idle so no
    /// transition spans the gap.
    pub fn on_idle(&mut self) {
        self.pending = None;
        self.gate_ref = None;
        self.prev_cwnd.clear();
    }

    pub fn has_pending(&self) -> bool {
        self.pending.is_some()
    }

    /// Mean slot reward since the last call, and the number of slots.
    pub fn take_episode(&mut self) -> (f64, u64) {
        let n = self.reward_slots;
        let mean = if n == 0 { 0.0 } else { self.reward_sum / n as f64 };
        self.reward_sum = 0.0;
        self.reward_slots = 0;
        (mean, n)
    }

    fn gate_open(&self, rates: &[f64], schedule: &[f64], threshold: f64) -> bool {
        let Some((ref_rates, ref_sched)) = &self.gate_ref else {
            return true;
        };
        if threshold <= 0.0 || ref_rates.len() != rates.len() {
            return true;
        }
        let rate_change = rates.iter().zip(ref_rates).any(|(&r, &q)| (r - q).abs() > threshold * r.max(q).max(1.0));
        let sched_change = schedule.iter().zip(ref_sched).any(|(h, g)| (h - g).abs() > threshold);
        rate_change || sched_change
    }
}

/// What one daemon tick did.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TickOutcome {
    pub reward: f64,
    /// The agent ran (observe, act, enforce) this slot.
    pub acted: bool,
    pub action: Option<Vec<f64>>,
    pub stored: bool,
    pub trained: Option<TrainStats>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AgentStats {
    pub ticks: u64,
    pub acted: u64,
    pub train_steps: u64,
    pub last_critic_loss: f64,
    /// Wall-clock time spent inside acting ticks (inference, enforcement,
    /// training).
    pub compute: Duration,
}

/// Networks, replay memory and training switches shared by the connections
/// it controls.
#[derive(Debug, Clone)]
pub struct DrlAgent {
    pub config: AgentConfig,
    pub nets: AcrNetworks,
    pub replay: ReplayBuffer,
    pub training: bool,
    pub explore: bool,
    pub stats: AgentStats,
    rng: ChaCha8Rng,
    /// A transition was stored since the last `learn`.
    fresh: bool,
}

impl DrlAgent {
    pub fn new(config: AgentConfig, seed: u64) -> Self {
        Self::with_networks(AcrNetworks::new(config.acr.clone(), seed), config, seed)
    }

    pub fn with_networks(nets: AcrNetworks, config: AgentConfig, seed: u64) -> Self {
        Self {
            replay: ReplayBuffer::new(config.acr.replay_capacity),
            nets,
            config,
            training: false,
            explore: false,
            stats: AgentStats::default(),
            rng: stream_rng(seed, streams::REPLAY_BASE),
            fresh: false,
        }
    }

    /// Gives this agent its own minibatch sampling stream, so per-flow clones
    /// do not draw identical minibatches.
    pub fn reseed_replay(&mut self, seed: u64, offset: u64) {
        self.rng = stream_rng(seed, streams::REPLAY_BASE + 1 + offset);
    }

    /// Action for `n` subflows from final state `f`, with OU noise added and
    /// clipped to `[-1, 1]` when exploring.
    pub fn act(&self, f: &[f64], n: usize, noise: &mut OuNoise) -> Result<Vec<f64>, AgentError> {
        let mut a = self.nets.greedy_action(f, n)?;
        if self.explore {
            let x = noise.step();
            for (ai, xi) in a.iter_mut().zip(x) {
                *ai = (*ai + xi).clamp(-1.0, 1.0);
            }
        }
        Ok(a)
    }

    /// One train step and soft update, if training is on, the replay holds a
    /// minibatch and a transition arrived since the previous call. Connections
    /// sharing this agent tick first; the runner then calls this once per
    /// slot.
    pub fn learn(&mut self) -> Result<Option<TrainStats>, AgentError> {
        if !(self.training && self.fresh && self.replay.len() >= self.nets.config.batch_size) {
            return Ok(None);
        }
        self.fresh = false;
        let started = Instant::now();
        let stats = self.nets.train_step(&self.replay, &mut self.rng)?;
        self.nets.soft_update();
        self.stats.train_steps += 1;
        self.stats.last_critic_loss = stats.critic_loss;
        self.stats.compute += started.elapsed();
        Ok(Some(stats))
    }

    /// `tick` followed by `learn`, for an agent that controls one
    /// connection.
    pub fn daemon_tick(
        &mut self,
        ca: &mut ConnectionAgent,
        conn: &mut MptcpConnection,
        slots: &[SlotCounters],
        slot_len: f64,
        now: f64,
    ) -> Result<TickOutcome, AgentError> {
        let mut out = self.tick(ca, conn, slots, slot_len, now)?;
        out.trained = self.learn()?;
        Ok(out)
    }

    /// One decision slot for `conn`. `slots` are the per-subflow counters of
    /// the slot that just ended. The connection's schedule must already be
    /// refreshed for this boundary.
    pub fn tick(
        &mut self,
        ca: &mut ConnectionAgent,
        conn: &mut MptcpConnection,
        slots: &[SlotCounters],
        slot_len: f64,
        now: f64,
    ) -> Result<TickOutcome, AgentError> {
        self.stats.ticks += 1;
        let rates = slot_rates(slots, slot_len);
        let reward = compute_reward(&rates);
        ca.reward_sum += reward;
        ca.reward_slots += 1;
        let mut out = TickOutcome {
            reward,
            ..TickOutcome::default()
        };
        let threshold = if conn.controller.has_inner_loop() {
            self.config.gate_threshold
        } else {
            0.0
        };
        if !ca.gate_open(&rates, conn.schedule.probs(), threshold) {
            ca.prev_cwnd = conn.windows();
            return Ok(out);
        }

        let started = Instant::now();
        let obs = observe(conn, slots, slot_len, &ca.prev_cwnd);
        let state: Vec<[f64; OBS_DIM]> = obs.iter().map(|o| o.normalized()).collect();
        if state.iter().flatten().any(|v| !v.is_finite()) {
            return Err(AgentError::Diverged("non-finite observation".into()));
        }
        let f = self.nets.final_state(&state)?;
        let action = self.act(&f, conn.len(), &mut ca.noise)?;
        enforce_action(conn, &action, self.config.kappa, now)?;
        ca.gate_ref = Some((rates, conn.schedule.probs().to_vec()));
        ca.prev_cwnd = conn.windows();

        if let Some((prev_state, prev_action)) = ca.pending.take() {
            self.replay.push(Transition {
                state: prev_state,
                action: prev_action,
                reward: reward * self.config.reward_scale,
                next_state: state.clone(),
            });
            out.stored = true;
        }
        ca.pending = Some((state, action.clone()));

        self.fresh |= out.stored;
        self.stats.acted += 1;
        self.stats.compute += started.elapsed();
        out.acted = true;
        out.action = Some(action);
        Ok(out)
    }
}

/// One row of the training log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRecord {
    pub episode: u64,
    pub steps: u64,
    pub mean_reward: f64,
    pub critic_loss: f64,
}

pub const TRAINING_LOG_HEADER: &str = "episode,steps,mean_reward,critic_loss";

pub fn training_log_csv(records: &[EpisodeRecord]) -> String {
    let mut out = String::from(TRAINING_LOG_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!("{},{},{:.6},{:.6}\n", r.episode, r.steps, r.mean_reward, r.critic_loss));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::Controller;

    fn small_config() -> AgentConfig {
        AgentConfig {
            acr: AcrConfig {
                hidden: 16,
                batch_size: 2,
                ..AcrConfig::default()
            },
            gate_threshold: 0.0,
            ..AgentConfig::default()
        }
    }

    fn hybrid() -> MptcpConnection {
        let mut c = MptcpConnection::new(0, Controller::Hybrid, &[0, 1], 0.1).unwrap();
        for s in &mut c.subflows {
            s.cwnd = 16.0;
        }
        c.refresh_schedule().unwrap();
        c
    }

    #[test]
    fn neutral_action_is_identity() {
        let mut c = hybrid();
        let before = (c.windows(), c.schedule.clone());
        let (w, h) = enforce_action(&mut c, &[0.0, 0.0], 1.0, 0.0).unwrap();
        assert_eq!(w, before.0);
        assert_eq!(h, before.1);
        assert_eq!(c.windows(), before.0);
    }

    #[test]
    fn scaling_and_schedule() {
        let mut c = hybrid();
        // Give the estimator enough delivered rate that 32 is under the cap.
        for s in &mut c.subflows {
            for k in 0..200 {
                let seq = s.on_send(1500, k as f64 * 0.001, false);
                s.on_ack(seq, k as f64 * 0.001 + 0.1);
            }
            s.cwnd = 16.0;
        }
        let now = 0.3;
        let (w, h) = enforce_action(&mut c, &[-1.0, 1.0], 1.0, now).unwrap();
        assert_eq!(w, vec![8.0, 32.0]);
        assert!((h.probs()[0] - 0.2).abs() < 1e-12);
        assert!((h.probs()[1] - 0.8).abs() < 1e-12);
        assert!(enforce_action(&mut c, &[0.0], 1.0, now).is_err());
    }

    #[test]
    fn clipped_exploration() {
        let agent = DrlAgent::new(small_config(), 1);
        let mut noise = OuNoise::new(MAX_SUBFLOWS, 0.15, 0.0, stream_rng(0, 0));
        noise.state = vec![0.3 / 0.85; MAX_SUBFLOWS];
        let mut explorer = agent.clone();
        explorer.explore = true;
        let f = vec![0.0; 16];
        let greedy = agent.act(&f, 2, &mut noise.clone()).unwrap();
        let noisy = explorer.act(&f, 2, &mut noise).unwrap();
        for (g, n) in greedy.iter().zip(&noisy) {
            assert!((n - (g + 0.3).min(1.0)).abs() < 1e-12);
        }
        // Greedy ignores the noise entirely; zero-sigma exploration adds only
        // the decaying state.
        let mut quiet = OuNoise::new(MAX_SUBFLOWS, 0.15, 0.0, stream_rng(0, 0));
        assert_eq!(explorer.act(&f, 2, &mut quiet).unwrap(), greedy);
    }

    #[test]
    fn transitions_start_on_second_tick() {
        let cfg = small_config();
        let mut agent = DrlAgent::new(cfg.clone(), 2);
        let mut ca = ConnectionAgent::new(&cfg, 2, 0);
        let mut c = hybrid();
        let slots = [SlotCounters { sent: 10, delivered: 10 }; 2];
        let first = agent.tick(&mut ca, &mut c, &slots, 0.1, 0.1).unwrap();
        assert!(first.acted && !first.stored);
        assert_eq!(agent.replay.len(), 0);
        c.refresh_schedule().unwrap();
        let second = agent.tick(&mut ca, &mut c, &slots, 0.1, 0.2).unwrap();
        assert!(second.stored);
        assert_eq!(agent.replay.len(), 1);
        let t = agent.replay.get(0).unwrap();
        assert!((t.reward - 2.0 * 100f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn training_waits_for_a_minibatch() {
        let cfg = small_config();
        let mut agent = DrlAgent::new(cfg.clone(), 5);
        agent.training = true;
        let mut ca = ConnectionAgent::new(&cfg, 5, 0);
        let mut c = hybrid();
        let slots = [SlotCounters { sent: 10, delivered: 9 }; 2];
        let trained: Vec<bool> = (1..=4)
            .map(|k| {
                c.refresh_schedule().unwrap();
                agent.daemon_tick(&mut ca, &mut c, &slots, 0.1, 0.1 * k as f64).unwrap().trained.is_some()
            })
            .collect();
        assert_eq!(trained, vec![false, false, true, true]);
        assert_eq!(agent.stats.train_steps, 2);
        assert!(agent.learn().unwrap().is_none());
    }

    #[test]
    fn frozen_policy_is_deterministic() {
        let cfg = small_config();
        let run = || {
            let mut agent = DrlAgent::new(cfg.clone(), 3);
            let mut ca = ConnectionAgent::new(&cfg, 3, 0);
            let mut c = hybrid();
            let mut actions = Vec::new();
            for k in 1..6 {
                let slots = [SlotCounters { sent: 5 * k, delivered: 4 * k }; 2];
                c.refresh_schedule().unwrap();
                actions.push(agent.tick(&mut ca, &mut c, &slots, 0.1, 0.1 * k as f64).unwrap().action);
            }
            actions
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn gate_skips_unchanged_slots() {
        let cfg = AgentConfig {
            gate_threshold: 0.1,
            ..small_config()
        };
        let mut agent = DrlAgent::new(cfg.clone(), 4);
        let mut ca = ConnectionAgent::new(&cfg, 4, 0);
        let mut c = hybrid();
        let slots = [SlotCounters { sent: 10, delivered: 10 }; 2];
        assert!(agent.tick(&mut ca, &mut c, &slots, 0.1, 0.1).unwrap().acted);
        c.refresh_schedule().unwrap();
        let h = c.schedule.clone();
        // Same rates; schedule forced back to the reference.
        c.schedule = h;
        let skipped = agent.tick(&mut ca, &mut c, &slots, 0.1, 0.2).unwrap();
        assert_eq!(skipped.acted, ca.gate_ref.as_ref().unwrap().1 != c.schedule.probs());
        let changed = [SlotCounters { sent: 30, delivered: 30 }; 2];
        assert!(agent.tick(&mut ca, &mut c, &changed, 0.1, 0.3).unwrap().acted);

        // Agent-only connections act every slot.
        let mut d = MptcpConnection::new(1, Controller::DrlOnly, &[0], 0.1).unwrap();
        let mut cd = ConnectionAgent::new(&cfg, 4, 1);
        for k in 1..4 {
            let s = [SlotCounters { sent: 10, delivered: 10 }];
            assert!(agent.tick(&mut cd, &mut d, &s, 0.1, 0.1 * k as f64).unwrap().acted);
        }
    }

    #[test]
    fn training_log_format() {
        let csv = training_log_csv(&[EpisodeRecord {
            episode: 1,
            steps: 600,
            mean_reward: 12.5,
            critic_loss: 0.25,
        }]);
        assert_eq!(csv, "episode,steps,mean_reward,critic_loss\n1,600,12.500000,0.250000\n");
    }
}
