use serde::{Deserialize, Serialize};

use super::lia::{apportion, compute_schedule, Schedule};
use super::subflow::{AckResult, SubflowState};
use super::{TransportError, W_MIN};
use crate::sim::{Packet, DEFAULT_PACKET_SIZE};

/// Congestion controller driving a connection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Controller {
    /// Coupled linked-increase multipath control.
    Lia,
    /// LIA inner loop with windows and schedule periodically reset by an agent.
    Hybrid,
    /// Agent-only ablation: windows are held at the enforced values between
    /// slots, with no per-ACK growth and no loss reaction.
    DrlOnly,
    /// Single-path CUBIC, used for competing traffic.
    Cubic,
}

impl Controller {
    pub fn name(self) -> &'static str {
        match self {
            Controller::Lia => "lia",
            Controller::Hybrid => "hybrid",
            Controller::DrlOnly => "drl_only",
            Controller::Cubic => "cubic",
        }
    }

    /// Whether an agent sets this controller's windows at slot boundaries.
    pub fn is_agent_driven(self) -> bool {
        matches!(self, Controller::Hybrid | Controller::DrlOnly)
    }

    /// Whether windows evolve per ACK and per loss between slots.
    pub fn has_inner_loop(self) -> bool {
        !matches!(self, Controller::DrlOnly)
    }
}

impl std::fmt::Display for Controller {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Connection-level view of one processed ACK.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AckOutcome {
    pub acked_bytes: u32,
    pub lost: u32,
    /// The ACK completed the current finite transfer.
    pub transfer_complete: bool,
}

/// A (possibly multipath) sender. Subflow `i` runs over `subflows[i].path`.
#[derive(Debug, Clone)]
pub struct MptcpConnection {
    pub id: u32,
    pub controller: Controller,
    pub subflows: Vec<SubflowState>,
    pub schedule: Schedule,
    /// Windows most recently enforced by the agent, if any.
    pub enforced: Option<Vec<f64>>,
    pub packet_size: u32,
    bulk: bool,
    /// Bytes of the current transfer not yet handed to a subflow.
    unsent: u64,
    /// Bytes of the current transfer not yet acknowledged.
    unacked: u64,
}

impl MptcpConnection {
    pub fn new(id: u32, controller: Controller, paths: &[usize], initial_rtt: f64) -> Result<Self, TransportError> {
        if paths.is_empty() {
            return Err(TransportError::EmptySubflows);
        }
        for (k, p) in paths.iter().enumerate() {
            if paths[..k].contains(p) {
                return Err(TransportError::DuplicatePath(*p));
            }
        }
        if controller == Controller::Cubic && paths.len() != 1 {
            return Err(TransportError::ControllerArity(controller, paths.len()));
        }
        if !(initial_rtt > 0.0) {
            return Err(TransportError::NonPositiveRtt(initial_rtt));
        }
        Ok(Self {
            id,
            controller,
            subflows: paths.iter().map(|&p| SubflowState::new(p, initial_rtt)).collect(),
            schedule: Schedule::uniform(paths.len()),
            enforced: None,
            packet_size: DEFAULT_PACKET_SIZE,
            bulk: false,
            unsent: 0,
            unacked: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.subflows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subflows.is_empty()
    }

    /// Makes the connection an infinite backlog source.
    pub fn set_bulk(&mut self, bulk: bool) {
        self.bulk = bulk;
    }

    pub fn is_bulk(&self) -> bool {
        self.bulk
    }

    /// Queues `bytes` more application data.
    pub fn start_transfer(&mut self, bytes: u64) {
        self.unsent += bytes;
        self.unacked += bytes;
    }

    /// Bytes of the current transfer still unacknowledged.
    pub fn app_queue(&self) -> u64 {
        self.unacked
    }

    /// Whether the connection has anything to send or in flight.
    pub fn is_active(&self) -> bool {
        self.bulk || self.unacked > 0
    }

    pub fn windows(&self) -> Vec<f64> {
        self.subflows.iter().map(|s| s.cwnd).collect()
    }

    pub fn rtts(&self) -> Vec<f64> {
        self.subflows.iter().map(|s| s.srtt).collect()
    }

    /// Aggregate window-implied rate `sum_i w_i / rtt_i`, packets/s.
    pub fn window_rate(&self) -> f64 {
        self.subflows.iter().map(|s| s.cwnd / s.srtt).sum()
    }

    /// Per-ACK coupled increase on subflow `i`: `min(1/w_i, alpha)`, with
    /// alpha computed over every subflow of the connection.
    pub fn lia_on_ack(&mut self, i: usize) {
        let mut best = f64::NEG_INFINITY;
        let mut total = 0.0;
        for s in &self.subflows {
            best = best.max(s.cwnd / (s.srtt * s.srtt));
            total += s.cwnd / s.srtt;
        }
        let alpha = best / (total * total);
        let s = &mut self.subflows[i];
        s.cwnd += (1.0 / s.cwnd).min(alpha);
    }

    /// Multiplicative decrease on subflow `i` and start of a new recovery
    /// episode. Agent-only connections keep their enforced window.
    pub fn on_loss(&mut self, i: usize, now: f64) {
        let s = &mut self.subflows[i];
        s.recovery_start = now;
        match self.controller {
            Controller::Lia | Controller::Hybrid => s.cwnd = (s.cwnd / 2.0).max(W_MIN),
            Controller::Cubic => s.cwnd = s.cubic.on_loss(now, s.cwnd),
            Controller::DrlOnly => {}
        }
    }

    fn react_to_losses(&mut self, i: usize, r: &AckResult, now: f64) {
        // One reduction per episode: only a loss of a packet sent after the
        // last reduction starts a new one.
        if r.lost > 0 && r.latest_lost_sent_at >= self.subflows[i].recovery_start {
            self.on_loss(i, now);
        }
    }

    /// Processes the ACK of packet `seq` on subflow `i`.
    pub fn on_ack(&mut self, i: usize, seq: u64, now: f64) -> AckOutcome {
        let r = self.subflows[i].on_ack(seq, now);
        let mut out = AckOutcome {
            acked_bytes: r.acked_bytes,
            lost: r.lost,
            transfer_complete: false,
        };
        if r.acked_bytes > 0 {
            match self.controller {
                Controller::Lia | Controller::Hybrid => self.lia_on_ack(i),
                Controller::Cubic => {
                    let s = &mut self.subflows[i];
                    s.cwnd = s.cubic.on_ack(now, s.srtt, s.cwnd);
                }
                Controller::DrlOnly => {}
            }
            if !self.bulk && self.unacked > 0 {
                self.unacked = self.unacked.saturating_sub(u64::from(r.acked_bytes));
                out.transfer_complete = self.unacked == 0;
            }
        }
        self.react_to_losses(i, &r, now);
        out
    }

    /// Fires subflow `i`'s retransmission timer if due; returns the number
    /// of packets declared lost.
    pub fn on_rto(&mut self, i: usize, now: f64) -> u32 {
        let r = self.subflows[i].on_rto(now);
        self.react_to_losses(i, &r, now);
        r.lost
    }

    /// Earliest pending retransmission deadline over all subflows.
    pub fn next_rto(&self) -> Option<(usize, f64)> {
        self.subflows
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.rto_deadline().map(|d| (i, d)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Sends everything the windows allow: queued retransmissions first on
    /// their own subflow, then new data apportioned by the schedule.
    pub fn dispatch(&mut self, now: f64) -> Vec<Packet> {
        let mut out = Vec::new();
        for (i, s) in self.subflows.iter_mut().enumerate() {
            while s.window_space() > 0 && s.retx_pending() > 0 {
                let size = s.pop_retx().unwrap_or(self.packet_size);
                let seq = s.on_send(size, now, true);
                out.push(Packet::data(self.id, i as u32, seq, size, now));
            }
        }
        let caps: Vec<usize> = self.subflows.iter().map(|s| s.window_space()).collect();
        let room: usize = caps.iter().sum();
        let wanted = if self.bulk {
            room
        } else {
            self.unsent.div_ceil(u64::from(self.packet_size)) as usize
        };
        let batch = room.min(wanted);
        if batch == 0 {
            return out;
        }
        let alloc = apportion(batch, self.schedule.probs(), &caps);
        for (i, &count) in alloc.iter().enumerate() {
            for _ in 0..count {
                let size = if self.bulk {
                    self.packet_size
                } else {
                    let size = self.unsent.min(u64::from(self.packet_size)) as u32;
                    self.unsent -= u64::from(size);
                    size
                };
                let seq = self.subflows[i].on_send(size, now, false);
                out.push(Packet::data(self.id, i as u32, seq, size, now));
            }
        }
        out
    }

    /// Recomputes the rate-proportional schedule from the current windows.
    pub fn refresh_schedule(&mut self) -> Result<(), TransportError> {
        if self.controller != Controller::Cubic {
            self.schedule = compute_schedule(&self.windows(), &self.rtts())?;
        }
        Ok(())
    }

    /// Upper bound on an agent-set window: four bandwidth-delay products,
    /// from the delivery-rate estimate and the minimum observed RTT.
    pub fn window_cap(&self, i: usize, now: f64) -> f64 {
        let s = &self.subflows[i];
        let rtt = if s.min_rtt.is_finite() { s.min_rtt } else { s.srtt };
        (4.0 * s.delivery_rate(now) * rtt).max(4.0 * W_MIN)
    }

    /// Clamp range for an enforced window on subflow `i`. The upper end never
    /// lies below the current window, so re-enforcing the current windows is
    /// an exact no-op.
    pub fn enforcement_bounds(&self, i: usize, now: f64) -> (f64, f64) {
        (W_MIN, self.window_cap(i, now).max(self.subflows[i].cwnd))
    }

    /// Adopts agent-chosen windows and schedule.
    pub fn apply_enforcement(&mut self, windows: &[f64], schedule: Schedule, now: f64) -> Result<(), TransportError> {
        if !self.controller.is_agent_driven() {
            return Err(TransportError::NotEnforceable(self.controller));
        }
        let n = self.subflows.len();
        if windows.len() != n {
            return Err(TransportError::DimensionMismatch {
                expected: n,
                got: windows.len(),
            });
        }
        if schedule.len() != n {
            return Err(TransportError::DimensionMismatch {
                expected: n,
                got: schedule.len(),
            });
        }
        if let Some(&bad) = windows.iter().find(|w| !w.is_finite()) {
            return Err(TransportError::NonFiniteWindow(bad));
        }
        let bounds: Vec<(f64, f64)> = (0..n).map(|i| self.enforcement_bounds(i, now)).collect();
        for ((s, &w), (lo, hi)) in self.subflows.iter_mut().zip(windows).zip(bounds) {
            s.cwnd = w.clamp(lo, hi);
        }
        self.enforced = Some(self.windows());
        self.schedule = schedule;
        Ok(())
    }
}
