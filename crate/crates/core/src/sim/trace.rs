//! Piecewise-constant link capacity traces.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SimError;

/// Right-continuous step function of link capacity over time.
///
/// Breakpoints are `(time_s, bits_per_second)`; the first breakpoint is at
/// time zero and timestamps strictly increase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct CapacityTrace {
    points: Vec<(f64, f64)>,
}

impl CapacityTrace {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, SimError> {
        let bad = |reason: &str| SimError::InvalidTrace(reason.to_string());
        let Some(first) = points.first() else {
            return Err(bad("trace has no breakpoints"));
        };
        if first.0 != 0.0 {
            return Err(bad("first breakpoint must be at time 0"));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(bad("breakpoint times must strictly increase"));
            }
        }
        if points.iter().any(|&(t, c)| !t.is_finite() || !(c > 0.0) || !c.is_finite()) {
            return Err(bad("capacities must be positive and finite"));
        }
        Ok(Self { points })
    }

    pub fn constant(bits_per_second: f64) -> Self {
        Self::new(vec![(0.0, bits_per_second)]).expect("constant capacity must be positive")
    }

    /// Square wave alternating between `high` and `low` every `half_period`
    /// seconds, starting high, covering `[0, duration]`.
    pub fn square_wave(high: f64, low: f64, half_period: f64, duration: f64) -> Result<Self, SimError> {
        if !(half_period > 0.0) {
            return Err(SimError::InvalidTrace("half period must be positive".into()));
        }
        let mut points = Vec::new();
        let mut t = 0.0;
        let mut k = 0usize;
        while t < duration || k == 0 {
            points.push((t, if k % 2 == 0 { high } else { low }));
            k += 1;
            t = k as f64 * half_period;
        }
        Self::new(points)
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Capacity in bits/s in effect at `t` (last breakpoint with time <= t).
    pub fn capacity_at(&self, t: f64) -> f64 {
        let idx = self.points.partition_point(|&(bt, _)| bt <= t);
        self.points[idx.saturating_sub(1)].1
    }

    /// Times (excluding zero) at which capacity changes.
    pub fn step_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().skip(1).map(|p| p.0)
    }

    /// Parses the `time_s,capacity_mbps` text format. Blank lines and `#`
    /// comments are ignored; capacities are converted to bits/s.
    pub fn parse(text: &str) -> Result<Self, SimError> {
        let mut points = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = || SimError::TraceParse {
                line: lineno + 1,
                content: raw.to_string(),
            };
            let (t, c) = line.split_once(',').ok_or_else(err)?;
            let t: f64 = t.trim().parse().map_err(|_| err())?;
            let c: f64 = c.trim().parse().map_err(|_| err())?;
            points.push((t, c * 1e6));
        }
        Self::new(points)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# time_s,capacity_mbps\n");
        for (t, c) in &self.points {
            out.push_str(&format!("{},{}\n", t, c / 1e6));
        }
        out
    }
}

impl TryFrom<Vec<(f64, f64)>> for CapacityTrace {
    type Error = SimError;

    fn try_from(points: Vec<(f64, f64)>) -> Result<Self, Self::Error> {
        Self::new(points)
    }
}

impl From<CapacityTrace> for Vec<(f64, f64)> {
    fn from(trace: CapacityTrace) -> Self {
        trace.points
    }
}
