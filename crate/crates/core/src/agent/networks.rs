
use ndarray::{s, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::observation::OBS_DIM;
use super::replay::{ReplayBuffer, Transition};
use super::AgentError;
use crate::nn::{copy_params, param_distance, soft_update, Activation, Adam, CheckpointSection, Lstm, Mlp, Module};
use crate::sim::{stream_rng, streams};

/// Widest action vector; connections with fewer subflows use a prefix and
/// the critic sees zeros in the remaining slots.
pub const MAX_SUBFLOWS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcrConfig {
    pub hidden: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Learning rate of the representation network.
    pub repr_lr: f64,
    pub gamma: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub replay_capacity: usize,
}

impl Default for AcrConfig {
    fn default() -> Self {
        Self {
            hidden: 128,
            actor_lr: 0.0009,
            critic_lr: 0.009,
            repr_lr: 0.0009,
            gamma: 0.97,
            tau: 0.005,
            batch_size: 32,
            replay_capacity: 2024,
        }
    }
}

/// Diagnostics from one training step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TrainStats {
    pub critic_loss: f64,
    pub mean_q: f64,
}

/// Representation (LSTM), actor, and critic, with target copies and one
/// optimizer per online network.
#[derive(Debug, Clone)]
pub struct AcrNetworks {
    pub config: AcrConfig,
    pub repr: Lstm,
    pub actor: Mlp,
    pub critic: Mlp,
    pub repr_target: Lstm,
    pub actor_target: Mlp,
    pub critic_target: Mlp,
    pub opt_repr: Adam,
    pub opt_actor: Adam,
    pub opt_critic: Adam,
}

/// Stacks state sequences into per-step `[batch, OBS_DIM]` matrices, zero
/// padded past each sequence's end, plus the sequence lengths.
fn seq_batch(states: &[&[[f64; OBS_DIM]]]) -> (Vec<Array2<f64>>, Vec<usize>) {
    let lens: Vec<usize> = states.iter().map(|s| s.len()).collect();
    let max = lens.iter().copied().max().unwrap_or(0);
    let xs = (0..max)
        .map(|t| Array2::from_shape_fn((states.len(), OBS_DIM), |(b, k)| states[b].get(t).map_or(0.0, |o| o[k])))
        .collect();
    (xs, lens)
}

fn concat(f: &Array2<f64>, a: &Array2<f64>) -> Array2<f64> {
    ndarray::concatenate(Axis(1), &[f.view(), a.view()]).expect("same batch size")
}

/// Zeroes the action columns at and beyond each row's subflow count.
fn mask_actions(a: &mut Array2<f64>, counts: &[usize]) {
    for (mut row, &n) in a.rows_mut().into_iter().zip(counts) {
        row.slice_mut(s![n..]).fill(0.0);
    }
}

impl AcrNetworks {
    pub fn new(config: AcrConfig, seed: u64) -> Self {
        let mut rng = stream_rng(seed, streams::AGENT_INIT);
        let h = config.hidden;
        let repr = Lstm::new(OBS_DIM, h, &mut rng);
        let actor = Mlp::new(&[h, h, h, MAX_SUBFLOWS], &[Activation::Relu, Activation::Relu, Activation::Tanh], &mut rng);
        let critic = Mlp::new(
            &[h + MAX_SUBFLOWS, h, h, 1],
            &[Activation::Relu, Activation::Relu, Activation::Linear],
            &mut rng,
        );
        Self {
            opt_repr: Adam::new(config.repr_lr),
            opt_actor: Adam::new(config.actor_lr),
            opt_critic: Adam::new(config.critic_lr),
            repr_target: repr.clone(),
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            repr,
            actor,
            critic,
            config,
        }
    }

    /// Final LSTM state for one connection's observations (online network).
    pub fn final_state(&self, obs: &[[f64; OBS_DIM]]) -> Result<Vec<f64>, AgentError> {
        if obs.is_empty() {
            return Err(AgentError::EmptyObservation);
        }
        let (xs, _) = seq_batch(&[obs]);
        Ok(self.repr.infer(&xs)?.into_raw_vec())
    }

    /// Greedy actor output for `n` subflows.
    pub fn greedy_action(&self, f: &[f64], n: usize) -> Result<Vec<f64>, AgentError> {
        if n == 0 || n > MAX_SUBFLOWS {
            return Err(AgentError::TooManySubflows(n));
        }
        let x = Array2::from_shape_vec((1, f.len()), f.to_vec()).map_err(|_| AgentError::EmptyObservation)?;
        let out = self.actor.infer(&x)?;
        Ok(out.row(0).iter().take(n).copied().collect())
    }

    pub fn all_finite(&self) -> bool {
        self.repr.all_finite()
            && self.actor.all_finite()
            && self.critic.all_finite()
            && self.repr_target.all_finite()
            && self.actor_target.all_finite()
            && self.critic_target.all_finite()
    }

    /// Soft target update with the configured coefficient.
    pub fn soft_update(&mut self) {
        let tau = self.config.tau;
        soft_update(&mut self.repr_target, &self.repr, tau);
        soft_update(&mut self.actor_target, &self.actor, tau);
        soft_update(&mut self.critic_target, &self.critic, tau);
    }

    /// Sets every target network equal to its online network.
    pub fn sync_targets(&mut self) {
        copy_params(&mut self.repr_target, &self.repr);
        copy_params(&mut self.actor_target, &self.actor);
        copy_params(&mut self.critic_target, &self.critic);
    }

    /// Euclidean distance between online and target parameters, over all
    /// three networks.
    pub fn target_gap(&self) -> f64 {
        let a = param_distance(&self.repr, &self.repr_target);
        let b = param_distance(&self.actor, &self.actor_target);
        let c = param_distance(&self.critic, &self.critic_target);
        (a * a + b * b + c * c).sqrt()
    }

    /// Critic target `r + gamma * Q'(f', mu'(f'))` for each transition.
    pub fn td_targets(&self, batch: &[&Transition]) -> Result<Vec<f64>, AgentError> {
        let gamma = self.config.gamma;
        let mut y: Vec<f64> = batch.iter().map(|t| t.reward).collect();
        if gamma == 0.0 {
            return Ok(y);
        }
        let states: Vec<&[[f64; OBS_DIM]]> = batch.iter().map(|t| t.next_state.as_slice()).collect();
        let (xs, lens) = seq_batch(&states);
        let f = self.repr_target.infer_padded(&xs, &lens)?;
        let mut a = self.actor_target.infer(&f)?;
        mask_actions(&mut a, &lens);
        let q = self.critic_target.infer(&concat(&f, &a))?;
        for (yi, qi) in y.iter_mut().zip(q.column(0)) {
            *yi += gamma * qi;
        }
        Ok(y)
    }

    /// One critic step followed by one actor and one representation step on
    /// the transitions `batch`.
    pub fn train_on(&mut self, batch: &[&Transition]) -> Result<TrainStats, AgentError> {
        let k = batch.len();
        if k == 0 {
            return Err(AgentError::ReplayUnderfull { have: 0, need: 1 });
        }
        for t in batch {
            if t.state.is_empty() || t.next_state.is_empty() {
                return Err(AgentError::EmptyObservation);
            }
            if t.action.len() != t.state.len() || t.action.len() > MAX_SUBFLOWS {
                return Err(AgentError::DimensionMismatch {
                    expected: t.state.len(),
                    got: t.action.len(),
                });
            }
        }
        let y = self.td_targets(batch)?;
        let scale = 1.0 / k as f64;
        let states: Vec<&[[f64; OBS_DIM]]> = batch.iter().map(|t| t.state.as_slice()).collect();
        let (xs, counts) = seq_batch(&states);
        self.repr.zero_grad();
        self.actor.zero_grad();
        self.critic.zero_grad();
        // The critic step leaves the representation untouched, so one
        // recorded pass serves both updates.
        let f = self.repr.forward_padded(&xs, &counts)?;

        // Critic regression on stored actions.
        let mut stats = TrainStats::default();
        let stored = Array2::from_shape_fn((k, MAX_SUBFLOWS), |(r, c)| batch[r].action.get(c).copied().unwrap_or(0.0));
        let q = self.critic.forward(&concat(&f, &stored))?;
        let mut dq = Array2::zeros((k, 1));
        for r in 0..k {
            let err = q[[r, 0]] - y[r];
            stats.critic_loss += err * err * scale;
            stats.mean_q += q[[r, 0]] * scale;
            dq[[r, 0]] = 2.0 * err * scale;
        }
        self.critic.backward(&dq)?;
        self.opt_critic.step(&mut self.critic)?;

        // Policy gradient: ascend Q(f, mu(f)) through the actor and on into
        // the representation network.
        self.critic.zero_grad();
        let mut a = self.actor.forward(&f)?;
        mask_actions(&mut a, &counts);
        self.critic.forward(&concat(&f, &a))?;
        let d_in = self.critic.backward(&Array2::from_elem((k, 1), -scale))?;
        let mut da = d_in.slice(s![.., self.config.hidden..]).to_owned();
        mask_actions(&mut da, &counts);
        let df = self.actor.backward(&da)?;
        self.repr.backward(&df)?;
        self.critic.zero_grad();
        self.opt_actor.step(&mut self.actor)?;
        self.opt_repr.step(&mut self.repr)?;

        if !(self.repr.all_finite() && self.actor.all_finite() && self.critic.all_finite()) {
            return Err(AgentError::Diverged(format!(
                "non-finite parameter after step {} (critic loss {})",
                self.opt_critic.step_count, stats.critic_loss
            )));
        }
        Ok(stats)
    }

    /// Samples `batch_size` transitions uniformly and trains on them.
    pub fn train_step<R: Rng>(&mut self, replay: &ReplayBuffer, rng: &mut R) -> Result<TrainStats, AgentError> {
        let k = self.config.batch_size;
        if replay.len() < k {
            return Err(AgentError::ReplayUnderfull { have: replay.len(), need: k });
        }
        let batch = replay.sample(rng, k);
        self.train_on(&batch)
    }

    const SECTIONS: [&'static str; 6] = ["repr", "actor", "critic", "repr_target", "actor_target", "critic_target"];

    pub fn checkpoint_sections(&self) -> Vec<CheckpointSection> {
        let mods: [&dyn Module; 6] = [
            &self.repr,
            &self.actor,
            &self.critic,
            &self.repr_target,
            &self.actor_target,
            &self.critic_target,
        ];
        Self::SECTIONS.iter().zip(mods).map(|(n, m)| CheckpointSection::capture(n, m)).collect()
    }

    pub fn restore_sections(&mut self, sections: &[CheckpointSection]) -> Result<(), AgentError> {
        let mods: [&mut dyn Module; 6] = [
            &mut self.repr,
            &mut self.actor,
            &mut self.critic,
            &mut self.repr_target,
            &mut self.actor_target,
            &mut self.critic_target,
        ];
        for (name, m) in Self::SECTIONS.iter().zip(mods) {
            let sec = sections
                .iter()
                .find(|s| s.name == *name)
                .ok_or_else(|| AgentError::Checkpoint(format!("missing section {name:?}")))?;
            sec.restore(m)?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        crate::nn::write_checkpoint(&mut buf, &self.checkpoint_sections()).expect("writing to memory");
        buf
    }

    /// Builds networks with `config` and loads parameters from checkpoint
    /// bytes.
    pub fn from_bytes(config: AcrConfig, bytes: &[u8]) -> Result<Self, AgentError> {
        let sections = crate::nn::read_checkpoint(&mut &bytes[..])?;
        let mut nets = Self::new(config, 0);
        nets.restore_sections(&sections)?;
        Ok(nets)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), AgentError> {
        std::fs::write(path, self.to_bytes()).map_err(|e| AgentError::Checkpoint(format!("{}: {e}", path.display())))
    }

    pub fn load(config: AcrConfig, path: &std::path::Path) -> Result<Self, AgentError> {
        let bytes = std::fs::read(path).map_err(|e| AgentError::Checkpoint(format!("{}: {e}", path.display())))?;
        Self::from_bytes(config, &bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Module;

    fn small(gamma: f64) -> AcrConfig {
        AcrConfig {
            hidden: 16,
            gamma,
            ..AcrConfig::default()
        }
    }

    fn obs(v: f64) -> [f64; OBS_DIM] {
        [v, 0.5 * v, 0.3, -0.1, 0.5, 0.0]
    }

    #[test]
    fn zero_representation_gives_zero_state() {
        let mut nets = AcrNetworks::new(small(0.97), 1);
        nets.repr.visit_mut(&mut |_, p| p.fill(0.0));
        let f = nets.final_state(&[obs(1.0), obs(-2.0)]).unwrap();
        assert!(f.iter().all(|&v| v == 0.0));
        assert!(nets.final_state(&[]).is_err());
    }

    #[test]
    fn final_state_depends_on_order_and_count() {
        let nets = AcrNetworks::new(small(0.97), 2);
        let a = nets.final_state(&[obs(1.0), obs(-1.0)]).unwrap();
        let b = nets.final_state(&[obs(-1.0), obs(1.0)]).unwrap();
        let one = nets.final_state(&[obs(1.0)]).unwrap();
        let two = nets.final_state(&[obs(1.0), obs(1.0)]).unwrap();
        assert_ne!(a, b);
        assert_ne!(one, two);
        assert_eq!(one.len(), two.len());
    }

    #[test]
    fn greedy_action_is_deterministic_and_bounded() {
        let nets = AcrNetworks::new(small(0.97), 3);
        let f = nets.final_state(&[obs(0.7), obs(0.1)]).unwrap();
        let a = nets.greedy_action(&f, 2).unwrap();
        assert_eq!(a, nets.greedy_action(&f, 2).unwrap());
        assert_eq!(a.len(), 2);
        assert!(a.iter().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn myopic_target_is_reward() {
        let nets = AcrNetworks::new(small(0.0), 4);
        let t = Transition {
            state: vec![obs(1.0)],
            action: vec![0.3],
            reward: -1.25,
            next_state: vec![obs(2.0)],
        };
        assert_eq!(nets.td_targets(&[&t]).unwrap(), vec![-1.25]);
    }

    #[test]
    fn zero_td_error_leaves_critic_unchanged() {
        let mut nets = AcrNetworks::new(small(0.9), 5);
        let s = vec![obs(0.4)];
        let a = vec![0.2];
        // Reward chosen so that y equals Q(s, a) exactly.
        let f = nets.final_state(&s).unwrap();
        let fa: Vec<f64> = f.iter().copied().chain([0.2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).collect();
        let q = nets.critic.infer(&Array2::from_shape_vec((1, fa.len()), fa).unwrap()).unwrap()[[0, 0]];
        let t0 = Transition {
            state: s.clone(),
            action: a.clone(),
            reward: 0.0,
            next_state: s.clone(),
        };
        let next = nets.td_targets(&[&t0]).unwrap()[0];
        let t = Transition { reward: q - next, ..t0 };
        let before = nets.critic.flat_params();
        let stats = nets.train_on(&[&t]).unwrap();
        assert!(stats.critic_loss < 1e-20);
        let after = nets.critic.flat_params();
        let moved = before.iter().zip(&after).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(moved < 1e-9, "{moved}");
    }

    #[test]
    fn soft_update_geometry() {
        let mut nets = AcrNetworks::new(small(0.97), 6);
        nets.actor_target.visit_mut(&mut |_, p| p.fill(0.0));
        nets.repr_target.visit_mut(&mut |_, p| p.fill(0.0));
        nets.critic_target.visit_mut(&mut |_, p| p.fill(0.0));
        let g0 = nets.target_gap();
        for _ in 0..460 {
            nets.soft_update();
        }
        let ratio = nets.target_gap() / g0;
        let expected = 0.995f64.powi(460);
        assert!(((ratio - expected) / expected).abs() < 1e-9);
        assert!((expected - 0.0997).abs() < 1e-4);
    }

    #[test]
    fn checkpoint_round_trip() {
        let nets = AcrNetworks::new(small(0.97), 7);
        let back = AcrNetworks::from_bytes(small(0.97), &nets.to_bytes()).unwrap();
        assert_eq!(nets.actor.flat_params(), back.actor.flat_params());
        assert_eq!(nets.repr_target.flat_params(), back.repr_target.flat_params());
        assert!(AcrNetworks::from_bytes(AcrConfig::default(), &nets.to_bytes()).is_err());
    }

    #[test]
    fn mixed_lengths_in_one_batch() {
        let mut nets = AcrNetworks::new(small(0.97), 8);
        let t1 = Transition {
            state: vec![obs(0.1)],
            action: vec![0.5],
            reward: 1.0,
            next_state: vec![obs(0.2), obs(0.3)],
        };
        let t2 = Transition {
            state: vec![obs(0.1), obs(0.4), obs(0.0)],
            action: vec![0.5, -0.2, 0.1],
            reward: 2.0,
            next_state: vec![obs(0.2)],
        };
        let stats = nets.train_on(&[&t1, &t2, &t1]).unwrap();
        assert!(stats.critic_loss.is_finite());
        assert!(nets.all_finite());
        let bad = Transition {
            action: vec![0.0; 2],
            ..t1.clone()
        };
        assert!(nets.train_on(&[&bad]).is_err());
    }

    #[test]
    fn one_step_bandit_converges() {
        use crate::agent::ReplayBuffer;
        use crate::sim::stream_rng;
        use rand::Rng;
        // Single state, reward -(a - 0.5)^2, no bootstrapping: the optimal
        // deterministic policy is a = 0.5.
        let mut nets = AcrNetworks::new(
            AcrConfig {
                hidden: 32,
                batch_size: 32,
                ..small(0.0)
            },
            9,
        );
        let s = vec![obs(0.3)];
        let mut replay = ReplayBuffer::new(2024);
        let mut rng = stream_rng(9, 1);
        for _ in 0..2000 {
            let a: f64 = rng.gen_range(-1.0..1.0);
            replay.push(Transition {
                state: s.clone(),
                action: vec![a],
                reward: -(a - 0.5) * (a - 0.5),
                next_state: s.clone(),
            });
        }
        for _ in 0..2000 {
            nets.train_step(&replay, &mut rng).unwrap();
            nets.soft_update();
        }
        let f = nets.final_state(&s).unwrap();
        let a = nets.greedy_action(&f, 1).unwrap()[0];
        assert!((a - 0.5).abs() < 0.1, "{a}");
    }
}
