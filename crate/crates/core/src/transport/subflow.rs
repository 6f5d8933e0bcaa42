use std::collections::VecDeque;

use super::{CubicState, W_MIN};

/// Packet-count threshold for declaring a hole lost: a packet is lost once a
/// packet sent three sequence numbers later has been acknowledged. On a FIFO
/// path this is the per-packet-ACK form of the triple-duplicate-ACK rule.
pub const DUP_THRESHOLD: u64 = 3;
pub const MIN_RTO: f64 = 1.0;
const SRTT_GAIN: f64 = 0.125;

/// Exponential-kernel estimate of an event rate with time constant `tau`.
/// Each event contributes `1/tau`, decaying as `exp(-dt/tau)`; a steady
/// stream of `r` events/s converges to `r`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RateEstimator {
    value: f64,
    last: f64,
}

impl RateEstimator {
    pub fn on_event(&mut self, now: f64, tau: f64) {
        self.value = self.value_at(now, tau) + 1.0 / tau;
        self.last = now;
    }

    pub fn value_at(&self, now: f64, tau: f64) -> f64 {
        if self.value == 0.0 {
            return 0.0;
        }
        self.value * (-(now - self.last).max(0.0) / tau).exp()
    }
}

#[derive(Debug, Clone, Copy)]
struct Outstanding {
    seq: u64,
    size: u32,
    sent_at: f64,
    acked: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SlotCounters {
    pub sent: u64,
    pub delivered: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SubflowTotals {
    pub sent: u64,
    pub delivered: u64,
    pub lost: u64,
    pub retransmitted: u64,
    pub delivered_bytes: u64,
}

/// What an ACK did to a subflow.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AckResult {
    /// Bytes newly acknowledged (0 for a stale ACK of a packet already
    /// declared lost).
    pub acked_bytes: u32,
    /// Packets declared lost by this ACK.
    pub lost: u32,
    /// Send time of the most recent packet declared lost.
    pub latest_lost_sent_at: f64,
}

/// Per-path sender state inside a connection.
#[derive(Debug, Clone)]
pub struct SubflowState {
    pub path: usize,
    pub cwnd: f64,
    pub srtt: f64,
    pub min_rtt: f64,
    has_rtt: bool,
    pub rate: RateEstimator,
    pub next_seq: u64,
    pub highest_acked: Option<u64>,
    outstanding: VecDeque<Outstanding>,
    in_flight: usize,
    retx: VecDeque<u32>,
    /// Send time boundary of the current recovery episode: losses of packets
    /// sent before it do not reduce the window again.
    pub recovery_start: f64,
    pub cubic: CubicState,
    pub slot: SlotCounters,
    pub totals: SubflowTotals,
}

impl SubflowState {
    pub fn new(path: usize, initial_rtt: f64) -> Self {
        Self {
            path,
            cwnd: W_MIN,
            srtt: initial_rtt,
            min_rtt: f64::INFINITY,
            has_rtt: false,
            rate: RateEstimator::default(),
            next_seq: 0,
            highest_acked: None,
            outstanding: VecDeque::new(),
            in_flight: 0,
            retx: VecDeque::new(),
            recovery_start: f64::NEG_INFINITY,
            cubic: CubicState::default(),
            slot: SlotCounters::default(),
            totals: SubflowTotals::default(),
        }
    }

    pub fn has_rtt_sample(&self) -> bool {
        self.has_rtt
    }

    pub fn in_flight(&self) -> usize {
        self.in_flight
    }

    /// Packets the window still allows, `ceil(cwnd) - in_flight`.
    pub fn window_space(&self) -> usize {
        (self.cwnd.ceil() as usize).saturating_sub(self.in_flight)
    }

    pub fn retx_pending(&self) -> usize {
        self.retx.len()
    }

    pub fn pop_retx(&mut self) -> Option<u32> {
        self.retx.pop_front()
    }

    pub fn rto(&self) -> f64 {
        MIN_RTO.max(4.0 * self.srtt)
    }

    /// Deadline of the retransmission timer, if anything is outstanding.
    pub fn rto_deadline(&self) -> Option<f64> {
        self.outstanding
            .iter()
            .find(|o| !o.acked)
            .map(|o| o.sent_at + self.rto())
    }

    /// Delivery-rate estimate (packets/s) at `now`.
    pub fn delivery_rate(&self, now: f64) -> f64 {
        self.rate.value_at(now, self.srtt)
    }

    /// Records a transmission and returns its sequence number.
    pub fn on_send(&mut self, size: u32, now: f64, retransmission: bool) -> u64 {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.outstanding.push_back(Outstanding {
            seq,
            size,
            sent_at: now,
            acked: false,
        });
        self.in_flight += 1;
        self.slot.sent += 1;
        self.totals.sent += 1;
        if retransmission {
            self.totals.retransmitted += 1;
        }
        debug_assert!(self.in_flight <= self.cwnd.ceil() as usize);
        seq
    }

    fn rtt_sample(&mut self, sample: f64) {
        if self.has_rtt {
            self.srtt += SRTT_GAIN * (sample - self.srtt);
        } else {
            self.srtt = sample;
            self.has_rtt = true;
        }
        self.min_rtt = self.min_rtt.min(sample);
    }

    fn declare_lost(&mut self, o: Outstanding, result: &mut AckResult) {
        self.in_flight -= 1;
        self.retx.push_back(o.size);
        self.totals.lost += 1;
        if result.lost == 0 || o.sent_at > result.latest_lost_sent_at {
            result.latest_lost_sent_at = o.sent_at;
        }
        result.lost += 1;
    }

    /// Processes the acknowledgement of packet `seq` arriving at `now`.
    pub fn on_ack(&mut self, seq: u64, now: f64) -> AckResult {
        let mut result = AckResult::default();
        let Ok(idx) = self.outstanding.binary_search_by_key(&seq, |o| o.seq) else {
            return result;
        };
        let entry = &mut self.outstanding[idx];
        if entry.acked {
            return result;
        }
        entry.acked = true;
        let (size, sent_at) = (entry.size, entry.sent_at);
        self.in_flight -= 1;
        self.rtt_sample(now - sent_at);
        self.rate.on_event(now, self.srtt);
        self.slot.delivered += 1;
        self.totals.delivered += 1;
        self.totals.delivered_bytes += u64::from(size);
        result.acked_bytes = size;
        self.highest_acked = Some(self.highest_acked.map_or(seq, |h| h.max(seq)));

        let highest = self.highest_acked.unwrap_or(0);
        while let Some(front) = self.outstanding.front().copied() {
            if front.acked {
                self.outstanding.pop_front();
            } else if front.seq + DUP_THRESHOLD <= highest {
                self.outstanding.pop_front();
                self.declare_lost(front, &mut result);
            } else {
                break;
            }
        }
        result
    }

    /// Fires the retransmission timer if it has expired: every unacked
    /// packet is declared lost.
    pub fn on_rto(&mut self, now: f64) -> AckResult {
        let mut result = AckResult::default();
        match self.rto_deadline() {
            Some(deadline) if now >= deadline => {}
            _ => return result,
        }
        while let Some(o) = self.outstanding.pop_front() {
            if !o.acked {
                self.declare_lost(o, &mut result);
            }
        }
        result
    }

    pub fn take_slot(&mut self) -> SlotCounters {
        std::mem::take(&mut self.slot)
    }
}
