//! Fixtures shared by the benchmarks.

use rand::Rng;

use hmptcp_core::agent::{ReplayBuffer, Transition, OBS_DIM};
use hmptcp_core::experiment::{del_scenario, exp1_scenario, Scenario};
use hmptcp_core::sim::stream_rng;
use hmptcp_core::transport::Controller;
use hmptcp_core::workload::ParallelismScheme;

/// A transition over `n` subflows with features in [-1, 1].
pub fn random_transition<R: Rng>(rng: &mut R, n: usize) -> Transition {
    let obs = |rng: &mut R| (0..n).map(|_| std::array::from_fn::<f64, OBS_DIM, _>(|_| rng.gen_range(-1.0..1.0))).collect();
    Transition {
        state: obs(rng),
        action: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        reward: rng.gen_range(0.0..2.0),
        next_state: obs(rng),
    }
}

/// A full replay buffer of mixed one- to four-subflow transitions.
pub fn filled_replay(seed: u64, capacity: usize) -> ReplayBuffer {
    let mut rng = stream_rng(seed, 0);
    let mut replay = ReplayBuffer::new(capacity);
    for k in 0..capacity {
        replay.push(random_transition(&mut rng, 1 + k % 4));
    }
    replay
}

/// The square-wave scenario shortened to `duration` seconds.
pub fn short_exp1(controller: Controller, duration: f64) -> Scenario {
    let mut s = exp1_scenario(controller, 1);
    s.duration = duration;
    s
}

/// The six-worker DEL scenario shortened to `duration` seconds.
pub fn short_del(controller: Controller, duration: f64) -> Scenario {
    let mut s = del_scenario(controller, 20.0, 1, ParallelismScheme::Tap, 1, 0.01);
    s.duration = duration;
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_well_formed() {
        let r = filled_replay(1, 16);
        assert_eq!(r.len(), 16);
        assert!((0..16).all(|i| r.get(i).unwrap().state.len() == r.get(i).unwrap().action.len()));
        short_exp1(Controller::Lia, 1.0).validate().unwrap();
        short_del(Controller::Hybrid, 1.0).validate().unwrap();
    }
}
