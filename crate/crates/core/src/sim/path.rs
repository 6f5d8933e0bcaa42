use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CapacityTrace, SimError, SimTime};

pub const DEFAULT_PACKET_SIZE: u32 = 1500;

/// Static description of one network path: a bottleneck link with a
/// drop-tail buffer, wire loss, and propagation delay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathConfig {
    pub capacity: CapacityTrace,
    /// One-way propagation delay, seconds.
    pub prop_delay: f64,
    /// Bernoulli wire-loss probability applied before queueing.
    pub loss_prob: f64,
    /// Buffer size in packets, including the packet being serialized.
    pub queue_limit: usize,
}

impl PathConfig {
    pub fn constant(mbps: f64, prop_delay: f64, loss_prob: f64, queue_limit: usize) -> Self {
        Self {
            capacity: CapacityTrace::constant(mbps * 1e6),
            prop_delay,
            loss_prob,
            queue_limit,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(0.0..=1.0).contains(&self.loss_prob) {
            return Err(SimError::InvalidPath(format!("loss_prob {} outside [0,1]", self.loss_prob)));
        }
        if self.queue_limit < 1 {
            return Err(SimError::InvalidPath("queue_limit must be at least 1".into()));
        }
        if !(self.prop_delay >= 0.0) || !self.prop_delay.is_finite() {
            return Err(SimError::InvalidPath(format!("prop_delay {} must be >= 0", self.prop_delay)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Packet {
    pub flow_id: u32,
    pub subflow_id: u32,
    pub seq: u64,
    pub size: u32,
    pub sent_at_bits: u64,
    pub is_ack: bool,
}

impl Packet {
    pub fn data(flow_id: u32, subflow_id: u32, seq: u64, size: u32, sent_at: SimTime) -> Self {
        Self {
            flow_id,
            subflow_id,
            seq,
            size,
            sent_at_bits: sent_at.to_bits(),
            is_ack: false,
        }
    }

    pub fn sent_at(&self) -> SimTime {
        f64::from_bits(self.sent_at_bits)
    }

    /// The acknowledgement for this data packet; it shares the packet's
    /// `(flow_id, subflow_id, seq)`.
    pub fn ack(&self) -> Self {
        Self { is_ack: true, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnqueueOutcome {
    Enqueued {
        /// Time the last bit leaves the bottleneck.
        tx_done: SimTime,
        /// Arrival at the far end, `tx_done + prop_delay`.
        delivered_at: SimTime,
    },
    DroppedQueueFull,
    DroppedRandomLoss,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PathCounters {
    pub offered: u64,
    pub enqueued: u64,
    pub dropped_random: u64,
    pub dropped_queue: u64,
}

/// Runtime state of a path. Departure times are fixed at enqueue time, so the
/// queue only needs the completion instants of packets still in the buffer.
pub struct PathState {
    pub config: PathConfig,
    queue: VecDeque<SimTime>,
    busy_until: SimTime,
    rng: ChaCha8Rng,
    counters: PathCounters,
}

impl PathState {
    pub fn new(config: PathConfig, rng: ChaCha8Rng) -> Self {
        Self {
            config,
            queue: VecDeque::new(),
            busy_until: 0.0,
            rng,
            counters: PathCounters::default(),
        }
    }

    fn drain_completed(&mut self, at: SimTime) {
        while self.queue.front().is_some_and(|&done| done <= at) {
            self.queue.pop_front();
        }
    }

    /// Packets in the buffer (waiting or in service) at time `at`.
    pub fn occupancy(&mut self, at: SimTime) -> usize {
        self.drain_completed(at);
        self.queue.len()
    }

    pub fn counters(&self) -> PathCounters {
        self.counters
    }

    pub fn busy_until(&self) -> SimTime {
        self.busy_until
    }

    pub fn capacity_at(&self, t: SimTime) -> f64 {
        self.config.capacity.capacity_at(t)
    }

    /// Offers a packet to the path at time `at`.
    ///
    /// Wire loss is drawn first (exactly one draw per offered packet); a
    /// surviving packet is dropped if the buffer is full, otherwise it is
    /// serialized at the capacity in effect when its transmission starts.
    pub fn enqueue(&mut self, packet: &Packet, at: SimTime) -> EnqueueOutcome {
        self.counters.offered += 1;
        let draw: f64 = self.rng.gen();
        if draw < self.config.loss_prob {
            self.counters.dropped_random += 1;
            return EnqueueOutcome::DroppedRandomLoss;
        }
        self.drain_completed(at);
        if self.queue.len() >= self.config.queue_limit {
            self.counters.dropped_queue += 1;
            return EnqueueOutcome::DroppedQueueFull;
        }
        let start = self.busy_until.max(at);
        let tx_done = start + f64::from(packet.size) * 8.0 / self.capacity_at(start);
        self.busy_until = tx_done;
        self.queue.push_back(tx_done);
        self.counters.enqueued += 1;
        debug_assert!(self.queue.len() <= self.config.queue_limit);
        EnqueueOutcome::Enqueued {
            tx_done,
            delivered_at: tx_done + self.config.prop_delay,
        }
    }
}
