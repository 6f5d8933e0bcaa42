//! Coupled (linked-increase) window arithmetic and rate-proportional schedules.

use super::TransportError;

/// Probability vector giving each subflow's share of outgoing packets.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule(Vec<f64>);

impl Schedule {
    pub const TOLERANCE: f64 = 1e-9;

    pub fn new(probs: Vec<f64>) -> Result<Self, TransportError> {
        if probs.is_empty() {
            return Err(TransportError::EmptySchedule);
        }
        let sum: f64 = probs.iter().sum();
        if probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) || (sum - 1.0).abs() > Self::TOLERANCE {
            return Err(TransportError::InvalidSchedule(probs));
        }
        Ok(Self(probs))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn check_inputs(windows: &[f64], rtts: &[f64]) -> Result<(), TransportError> {
    if windows.is_empty() {
        return Err(TransportError::EmptySubflows);
    }
    if windows.len() != rtts.len() {
        return Err(TransportError::DimensionMismatch {
            expected: windows.len(),
            got: rtts.len(),
        });
    }
    if let Some(&bad) = rtts.iter().find(|r| !(**r > 0.0)) {
        return Err(TransportError::NonPositiveRtt(bad));
    }
    Ok(())
}

/// Increase cap `max_j(w_j / rtt_j^2) / (sum_j w_j / rtt_j)^2`.
///
/// With a single subflow this is exactly `1 / w`.
pub fn lia_alpha(windows: &[f64], rtts: &[f64]) -> Result<f64, TransportError> {
    check_inputs(windows, rtts)?;
    let mut best = f64::NEG_INFINITY;
    let mut total_rate = 0.0;
    for (&w, &rtt) in windows.iter().zip(rtts) {
        best = best.max(w / (rtt * rtt));
        total_rate += w / rtt;
    }
    Ok(best / (total_rate * total_rate))
}

/// Per-ACK window increment on subflow `i`: `min(1/w_i, alpha)`.
pub fn lia_increase(windows: &[f64], rtts: &[f64], i: usize) -> Result<f64, TransportError> {
    let alpha = lia_alpha(windows, rtts)?;
    let w = *windows.get(i).ok_or(TransportError::NoSuchSubflow(i))?;
    Ok((1.0 / w).min(alpha))
}

/// Schedule proportional to each subflow's window-implied rate `w_i / rtt_i`.
pub fn compute_schedule(windows: &[f64], rtts: &[f64]) -> Result<Schedule, TransportError> {
    check_inputs(windows, rtts)?;
    let rates: Vec<f64> = windows.iter().zip(rtts).map(|(w, r)| w / r).collect();
    let total: f64 = rates.iter().sum();
    if !(total > 0.0) {
        return Err(TransportError::ZeroWindows);
    }
    let mut probs: Vec<f64> = rates.iter().map(|r| r / total).collect();
    // Renormalize away accumulated rounding so the sum invariant is tight.
    let s: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= s);
    Schedule::new(probs)
}

/// Largest-remainder apportionment of `batch` packets in proportion to
/// `weights`, respecting per-subflow `caps`.
///
/// Packets that would exceed a cap are re-assigned to other subflows with a
/// positive weight and spare room, heaviest weight first. Subflows with zero
/// weight never receive packets.
pub fn apportion(batch: usize, weights: &[f64], caps: &[usize]) -> Vec<usize> {
    let n = weights.len();
    let mut alloc = vec![0usize; n];
    if n == 0 || batch == 0 {
        return alloc;
    }
    let total_w: f64 = weights.iter().sum();
    if !(total_w > 0.0) {
        return alloc;
    }
    let quotas: Vec<f64> = weights.iter().map(|w| batch as f64 * w / total_w).collect();
    let mut assigned = 0;
    for (a, q) in alloc.iter_mut().zip(&quotas) {
        *a = q.floor() as usize;
        assigned += *a;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(batch.saturating_sub(assigned)) {
        alloc[i] += 1;
    }

    let mut overflow = 0;
    for i in 0..n {
        if alloc[i] > caps[i] {
            overflow += alloc[i] - caps[i];
            alloc[i] = caps[i];
        }
    }
    if overflow > 0 {
        let mut by_weight: Vec<usize> = (0..n).filter(|&i| weights[i] > 0.0).collect();
        by_weight.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
        for i in by_weight {
            let room = caps[i] - alloc[i];
            let take = room.min(overflow);
            alloc[i] += take;
            overflow -= take;
            if overflow == 0 {
                break;
            }
        }
    }
    alloc
}
