//! CUBIC window growth for single-path competitor flows.

use super::W_MIN;

pub const C_CUBIC: f64 = 0.4;
pub const BETA_CUBIC: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicState {
    pub w_max: f64,
    pub epoch_start: Option<f64>,
    pub k: f64,
}

impl Default for CubicState {
    fn default() -> Self {
        Self {
            w_max: 0.0,
            epoch_start: None,
            k: 0.0,
        }
    }
}

/// Time for the cubic curve to climb back to `w_max` after a reduction to
/// `BETA_CUBIC * w_max`.
pub fn cubic_k(w_max: f64) -> f64 {
    (w_max * (1.0 - BETA_CUBIC) / C_CUBIC).cbrt()
}

impl CubicState {
    /// `W(t) = C (t - epoch - K)^3 + w_max`, floored at the minimum window.
    pub fn window_at(&self, t: f64) -> f64 {
        let epoch = self.epoch_start.unwrap_or(t);
        let dt = t - epoch - self.k;
        (C_CUBIC * dt * dt * dt + self.w_max).max(W_MIN)
    }

    /// Starts a growth epoch if none is running. Without a prior loss the
    /// curve starts at its plateau from the current window.
    pub fn ensure_epoch(&mut self, now: f64, cwnd: f64) {
        if self.epoch_start.is_none() {
            self.epoch_start = Some(now);
            if self.w_max <= cwnd {
                self.w_max = cwnd;
                self.k = 0.0;
            } else {
                self.k = ((self.w_max - cwnd) / C_CUBIC).cbrt();
            }
        }
    }

    /// Per-ACK update; returns the new window.
    pub fn on_ack(&mut self, now: f64, srtt: f64, cwnd: f64) -> f64 {
        self.ensure_epoch(now, cwnd);
        let target = self.window_at(now + srtt);
        if target > cwnd {
            cwnd + (target - cwnd) / cwnd
        } else {
            cwnd + 0.01 / cwnd
        }
    }

    /// Multiplicative decrease; returns the new window.
    pub fn on_loss(&mut self, now: f64, cwnd: f64) -> f64 {
        self.w_max = cwnd;
        self.k = cubic_k(cwnd);
        self.epoch_start = Some(now);
        (BETA_CUBIC * cwnd).max(W_MIN)
    }
}
