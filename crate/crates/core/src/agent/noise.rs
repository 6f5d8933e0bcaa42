use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Ornstein-Uhlenbeck process, one independent coordinate per action
/// dimension, advanced with unit time step.
#[derive(Debug, Clone)]
pub struct OuNoise {
    pub theta: f64,
    pub mu: f64,
    pub sigma: f64,
    pub dt: f64,
    pub state: Vec<f64>,
    rng: ChaCha8Rng,
}

impl OuNoise {
    pub fn new(dims: usize, theta: f64, sigma: f64, rng: ChaCha8Rng) -> Self {
        Self {
            theta,
            mu: 0.0,
            sigma,
            dt: 1.0,
            state: vec![0.0; dims],
            rng,
        }
    }

    /// `x <- x + theta (mu - x) dt + sigma sqrt(dt) N(0,1)`; returns the new
    /// state.
    pub fn step(&mut self) -> &[f64] {
        let sq = self.dt.sqrt();
        for x in &mut self.state {
            let n: f64 = self.rng.sample(StandardNormal);
            *x += self.theta * (self.mu - *x) * self.dt + self.sigma * sq * n;
        }
        &self.state
    }

    pub fn reset(&mut self) {
        self.state.iter_mut().for_each(|x| *x = self.mu);
    }
}
