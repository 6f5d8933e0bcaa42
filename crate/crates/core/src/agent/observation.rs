use crate::transport::{MptcpConnection, SlotCounters};

/// Number of features per subflow.
pub const OBS_DIM: usize = 6;

/// Fixed feature scales: rates in packets/s, times in seconds, windows in
/// packets.
pub const RATE_SCALE: f64 = 1e4;
pub const RTT_SCALE: f64 = 0.3;
pub const CWND_SCALE: f64 = 100.0;

/// Floor applied to slot rates before taking the log, packets/s.
pub const THETA_FLOOR: f64 = 1e-3;

/// What the agent sees of one subflow over the slot that just ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubflowObservation {
    pub sending_rate: f64,
    pub throughput: f64,
    pub rtt: f64,
    pub cwnd_delta: f64,
    pub schedule_share: f64,
    pub rtt_diff: f64,
}

impl SubflowObservation {
    pub fn normalized(&self) -> [f64; OBS_DIM] {
        [
            self.sending_rate / RATE_SCALE,
            self.throughput / RATE_SCALE,
            self.rtt / RTT_SCALE,
            self.cwnd_delta / CWND_SCALE,
            self.schedule_share,
            self.rtt_diff / RTT_SCALE,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.normalized().iter().all(|v| v.is_finite())
    }
}

/// Builds one observation per subflow from the slot counters `slots`
/// (packets sent/delivered during the slot), the slot length, and the
/// windows at the start of the slot.
pub fn observe(conn: &MptcpConnection, slots: &[SlotCounters], slot_len: f64, prev_cwnd: &[f64]) -> Vec<SubflowObservation> {
    let min_rtt = conn.subflows.iter().map(|s| s.srtt).fold(f64::INFINITY, f64::min);
    conn.subflows
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let slot = slots.get(i).copied().unwrap_or_default();
            SubflowObservation {
                sending_rate: slot.sent as f64 / slot_len,
                throughput: slot.delivered as f64 / slot_len,
                rtt: s.srtt,
                cwnd_delta: prev_cwnd.get(i).map_or(0.0, |p| s.cwnd - p),
                schedule_share: conn.schedule.probs()[i].clamp(0.0, 1.0),
                rtt_diff: s.srtt - min_rtt,
            }
        })
        .collect()
}

/// Slot reward: sum over subflows of `ln(max(theta_i, THETA_FLOOR))`, with
/// `theta_i` the delivered rate in packets/s.
pub fn compute_reward(rates: &[f64]) -> f64 {
    rates.iter().map(|&r| r.max(THETA_FLOOR).ln()).sum()
}

/// Delivered rates (packets/s) from slot counters.
pub fn slot_rates(slots: &[SlotCounters], slot_len: f64) -> Vec<f64> {
    slots.iter().map(|s| s.delivered as f64 / slot_len).collect()
}
