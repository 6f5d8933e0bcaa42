//! Agent training over randomized scenarios drawn from the emulation ranges:
//! capacity 4 to 128 Mbps, RTT 3 to 300 ms, buffer 20 to 500 packets.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::runner::{AgentPool, RunOptions, Simulation};
use super::scenario::{AgentMode, AgentSpec, CompetitorGroup, PathSpec, Scenario, SquareWave, TrafficPattern, WorkerGroup};
use super::ExperimentError;
use crate::agent::{AgentConfig, DrlAgent, EpisodeRecord};
use crate::sim::{stream_rng, streams};
use crate::transport::Controller;
use crate::workload::ParallelismScheme;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub sessions: u32,
    pub seed: u64,
    /// Connection-slots of experience per session. Gated slots count, so
    /// every controller sees the same episodes.
    pub session_samples: u64,
    pub episode_s: f64,
    /// Connections feeding one shared agent in each episode.
    pub actors: usize,
    /// Moving-average window of the learning curve, in episodes.
    pub smoothing: usize,
    pub agent: AgentSpec,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            sessions: 3,
            seed: 7,
            session_samples: 30_000,
            episode_s: 60.0,
            actors: 3,
            smoothing: 5,
            agent: AgentSpec {
                mode: AgentMode::Train,
                shared: true,
                ..AgentSpec::default()
            },
        }
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

/// Episode `episode` of session `session`: `actors` backlogged connections
/// over private paths, two per connection half the time and one or three
/// otherwise. Each connection's first path carries a CUBIC flow with
/// probability 1/2; its last path, when it has more than one, follows a
/// square wave with probability 1/2. The same (seed, session, episode) always
/// gives the same scenario, whatever the controller.
pub fn training_scenario(options: &TrainOptions, controller: Controller, session: u32, episode: u32) -> Scenario {
    let stream = streams::SCENARIO + (u64::from(session) << 20) + u64::from(episode);
    let mut rng = stream_rng(options.seed, stream);
    let mut paths = Vec::new();
    let mut workers = Vec::new();
    let mut competitors = Vec::new();
    for _ in 0..options.actors {
        let a = paths.len();
        let n = match rng.gen_range(0..4) {
            0 => 1,
            3 => 3,
            _ => 2,
        };
        for k in 0..n {
            let capacity = log_uniform(&mut rng, 4.0, 128.0);
            let rtt = log_uniform(&mut rng, 3.0, 300.0);
            let buffer = log_uniform(&mut rng, 20.0, 500.0).round() as usize;
            let loss = rng.gen_range(0.0..0.03);
            let mut p = PathSpec::constant(capacity, rtt, loss, buffer);
            let wave = rng.gen_bool(0.5);
            if k > 0 && k == n - 1 && wave {
                p.capacity_mbps = None;
                p.square_wave = Some(SquareWave {
                    high_mbps: capacity,
                    low_mbps: (capacity / 3.0).max(4.0),
                    half_period_s: rng.gen_range(5.0..15.0),
                });
            }
            paths.push(p);
        }
        if rng.gen_bool(0.5) {
            competitors.push(CompetitorGroup {
                count: 1,
                path: a,
                pattern: TrafficPattern::Bulk,
            });
        }
        workers.push(WorkerGroup {
            count: 1,
            controller,
            paths: (a..a + n).collect(),
            model_size_mb: 600.0,
            compute_mean_s: 0.5,
            compute_jitter: 0.1,
            bulk: true,
        });
    }
    Scenario {
        name: format!("train_s{session}_e{episode}"),
        duration: options.episode_s,
        seed: options.seed.wrapping_add(stream),
        scale: 1.0,
        packet_size: 1500,
        horizon: None,
        scheme: ParallelismScheme::Tap,
        paths,
        workers,
        competitors,
        agent: options.agent.clone(),
    }
}

/// Learning curve: trailing moving average over `window` episodes.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(1);
    (0..values.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(w);
            values[lo..=i].iter().sum::<f64>() / (i + 1 - lo) as f64
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct TrainingRun {
    pub controller: Controller,
    pub agent: DrlAgent,
    pub log: Vec<EpisodeRecord>,
    /// Session of each logged episode.
    pub sessions: Vec<u32>,
    pub curve: Vec<f64>,
}

impl TrainingRun {
    /// Last point of the learning curve.
    pub fn final_score(&self) -> f64 {
        self.curve.last().copied().unwrap_or(f64::NAN)
    }

    /// `episode,session,steps,mean_reward,critic_loss,learning_score`.
    pub fn curve_csv(&self) -> String {
        let mut s = String::from("episode,session,steps,mean_reward,critic_loss,learning_score\n");
        for ((r, session), score) in self.log.iter().zip(&self.sessions).zip(&self.curve) {
            s.push_str(&format!(
                "{},{},{},{:.6},{:.6},{:.6}\n",
                r.episode, session, r.steps, r.mean_reward, r.critic_loss, score
            ));
        }
        s
    }
}

/// Trains one shared agent for `controller` over `options.sessions`
/// sessions of `options.session_samples` connection-slots each. Sessions
/// continue the same agent on fresh scenario streams. `progress` is called
/// after every episode.
pub fn train_agent(
    controller: Controller,
    options: &TrainOptions,
    mut progress: impl FnMut(&EpisodeRecord),
) -> Result<TrainingRun, ExperimentError> {
    if !controller.is_agent_driven() {
        return Err(ExperimentError::Config {
            path: "controller".into(),
            message: format!("{controller} has no agent to train"),
        });
    }
    let mut spec = options.agent.clone();
    spec.mode = AgentMode::Train;
    spec.shared = true;
    let config: AgentConfig = spec.agent_config();
    let mut agent = DrlAgent::new(config, options.seed);
    agent.training = true;
    agent.explore = true;
    let mut log = Vec::new();
    let mut sessions = Vec::new();
    let mut rewards = Vec::new();
    let mut episode = 0u64;
    for session in 0..options.sessions {
        let start = agent.stats.ticks;
        let mut k = 0u32;
        while agent.stats.ticks - start < options.session_samples {
            let mut scenario = training_scenario(options, controller, session, k);
            scenario.agent = spec.clone();
            let mut pool = AgentPool::default();
            match controller {
                Controller::Hybrid => pool.hybrid = Some(agent),
                _ => pool.drl_only = Some(agent),
            }
            let run = RunOptions {
                agents: Some(pool),
                sample_budget: Some(start + options.session_samples),
                ..RunOptions::default()
            };
            let out = Simulation::new(&scenario, run)?.run()?;
            agent = out
                .agents
                .into_iter()
                .next()
                .map(|(_, a)| a)
                .ok_or_else(|| ExperimentError::Checkpoint {
                    path: controller.to_string(),
                    message: "agent lost during episode".into(),
                })?;
            if !agent.nets.all_finite() {
                return Err(crate::agent::AgentError::Diverged(format!("session {session} episode {k}")).into());
            }
            let reward = out.metrics.learning_score.unwrap_or(f64::NAN);
            let record = EpisodeRecord {
                episode,
                steps: agent.stats.train_steps,
                mean_reward: reward,
                critic_loss: agent.stats.last_critic_loss,
            };
            progress(&record);
            log.push(record);
            sessions.push(session);
            rewards.push(reward);
            episode += 1;
            k += 1;
        }
    }
    agent.training = false;
    agent.explore = false;
    let curve = moving_average(&rewards, options.smoothing);
    Ok(TrainingRun {
        controller,
        agent,
        log,
        sessions,
        curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::run_scenario;

    fn small() -> TrainOptions {
        let mut o = TrainOptions {
            sessions: 1,
            session_samples: 120,
            episode_s: 5.0,
            ..TrainOptions::default()
        };
        o.agent.batch_size = 8;
        o
    }

    #[test]
    fn moving_average_is_trailing() {
        assert_eq!(moving_average(&[1.0, 3.0, 5.0, 7.0], 2), vec![1.0, 2.0, 4.0, 6.0]);
        assert_eq!(moving_average(&[], 3), Vec::<f64>::new());
    }

    #[test]
    fn scenarios_stay_in_range_and_match_across_controllers() {
        let o = TrainOptions::default();
        for e in 0..50 {
            let h = training_scenario(&o, Controller::Hybrid, 1, e);
            let d = training_scenario(&o, Controller::DrlOnly, 1, e);
            assert_eq!(h.paths, d.paths);
            assert_eq!(h.competitors, d.competitors);
            assert!(h.warnings().is_empty(), "{:?}", h.warnings());
            h.validate().unwrap();
        }
        assert_ne!(training_scenario(&o, Controller::Hybrid, 0, 0).paths, training_scenario(&o, Controller::Hybrid, 1, 0).paths);
    }

    #[test]
    fn training_is_deterministic_and_fills_the_budget() {
        let o = small();
        let a = train_agent(Controller::Hybrid, &o, |_| {}).unwrap();
        let b = train_agent(Controller::Hybrid, &o, |_| {}).unwrap();
        assert_eq!(a.curve, b.curve);
        assert!(a.agent.stats.ticks >= 120);
        assert!(a.agent.stats.train_steps > 0);
        assert_eq!(a.agent.nets.to_bytes(), b.agent.nets.to_bytes());
    }

    #[test]
    fn null_agent_scores_like_lia() {
        let o = TrainOptions::default();
        let mut hybrid = training_scenario(&o, Controller::Hybrid, 0, 3);
        hybrid.duration = 10.0;
        hybrid.agent.mode = AgentMode::Null;
        let mut lia = training_scenario(&o, Controller::Lia, 0, 3);
        lia.duration = 10.0;
        let h = run_scenario(&hybrid).unwrap().metrics.learning_score.unwrap();
        let l = run_scenario(&lia).unwrap().metrics.learning_score.unwrap();
        assert_eq!(h, l);
    }
}
