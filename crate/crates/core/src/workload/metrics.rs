use super::WorkloadError;

/// Population standard deviation of per-worker completed iterations.
pub fn unfairness(iterations: &[u64]) -> Result<f64, WorkloadError> {
    if iterations.len() < 2 {
        return Err(WorkloadError::TooFewWorkers(iterations.len()));
    }
    let n = iterations.len() as f64;
    let mean = iterations.iter().sum::<u64>() as f64 / n;
    let var = iterations.iter().map(|&i| (i as f64 - mean).powi(2)).sum::<f64>() / n;
    Ok(var.sqrt())
}

/// Whether `reference` is at least as good as `candidate` in the
/// proportional-fairness sense: `sum_u (x_u - r_u) / r_u <= 0`.
pub fn proportional_fairness_check(candidate: &[f64], reference: &[f64]) -> Result<bool, WorkloadError> {
    if candidate.len() != reference.len() {
        return Err(WorkloadError::DimensionMismatch {
            expected: reference.len(),
            got: candidate.len(),
        });
    }
    if let Some(u) = reference.iter().position(|&r| r <= 0.0) {
        return Err(WorkloadError::ZeroReferenceRate(u));
    }
    let sum: f64 = candidate.iter().zip(reference).map(|(x, r)| (x - r) / r).sum();
    Ok(sum <= 1e-9)
}

/// Links with capacities and the links each flow crosses.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkNetwork {
    pub capacities: Vec<f64>,
    pub routes: Vec<Vec<usize>>,
}

impl LinkNetwork {
    pub fn single_link(capacity: f64, flows: usize) -> Self {
        Self {
            capacities: vec![capacity],
            routes: vec![vec![0]; flows],
        }
    }

    /// Every flow on its own link.
    pub fn disjoint(capacities: &[f64]) -> Self {
        Self {
            capacities: capacities.to_vec(),
            routes: (0..capacities.len()).map(|l| vec![l]).collect(),
        }
    }

    fn tolerance(&self) -> f64 {
        1e-6 * self.capacities.iter().copied().fold(0.0, f64::max)
    }

    fn loads(&self, rates: &[f64]) -> Vec<f64> {
        let mut load = vec![0.0; self.capacities.len()];
        for (route, r) in self.routes.iter().zip(rates) {
            for &l in route {
                load[l] += r;
            }
        }
        load
    }

    pub fn check_feasible(&self, rates: &[f64]) -> Result<(), WorkloadError> {
        if rates.len() != self.routes.len() {
            return Err(WorkloadError::DimensionMismatch {
                expected: self.routes.len(),
                got: rates.len(),
            });
        }
        if let Some(u) = rates.iter().position(|&r| r < 0.0) {
            return Err(WorkloadError::NonPositiveRate(u));
        }
        let tol = self.tolerance();
        for (link, (&load, &capacity)) in self.loads(rates).iter().zip(&self.capacities).enumerate() {
            if load > capacity + tol {
                return Err(WorkloadError::Infeasible { link, load, capacity });
            }
        }
        Ok(())
    }
}

/// The max-min fair allocation, by progressive filling.
pub fn max_min_reference(net: &LinkNetwork) -> Result<Vec<f64>, WorkloadError> {
    if let Some(u) = net.routes.iter().position(|r| r.is_empty() || r.iter().any(|&l| l >= net.capacities.len())) {
        return Err(WorkloadError::DimensionMismatch {
            expected: net.capacities.len(),
            got: net.routes[u].len(),
        });
    }
    let n = net.routes.len();
    let mut rates = vec![0.0; n];
    let mut frozen = vec![false; n];
    let tol = net.tolerance() * 1e-3;
    while frozen.iter().any(|f| !f) {
        let load = net.loads(&rates);
        let mut step = f64::INFINITY;
        for (l, &cap) in net.capacities.iter().enumerate() {
            let active = (0..n).filter(|&u| !frozen[u] && net.routes[u].contains(&l)).count();
            if active > 0 {
                step = step.min((cap - load[l]) / active as f64);
            }
        }
        for u in 0..n {
            if !frozen[u] {
                rates[u] += step.max(0.0);
            }
        }
        let load = net.loads(&rates);
        for u in 0..n {
            if net.routes[u].iter().any(|&l| load[l] >= net.capacities[l] - tol) {
                frozen[u] = true;
            }
        }
    }
    Ok(rates)
}

/// Whether `allocation` is max-min fair on `net`.
pub fn max_min_check(allocation: &[f64], net: &LinkNetwork) -> Result<bool, WorkloadError> {
    net.check_feasible(allocation)?;
    let reference = max_min_reference(net)?;
    let tol = net.tolerance();
    Ok(allocation.iter().zip(&reference).all(|(a, r)| (a - r).abs() <= tol))
}

/// Sum of log utilities.
pub fn aggregate_utility(rates: &[f64]) -> Result<f64, WorkloadError> {
    if let Some(u) = rates.iter().position(|&r| r <= 0.0 || r.is_nan()) {
        return Err(WorkloadError::NonPositiveRate(u));
    }
    Ok(rates.iter().map(|r| r.ln()).sum())
}

/// Mean absolute change between consecutive samples.
pub fn throughput_fluctuation(series: &[f64]) -> Result<f64, WorkloadError> {
    if series.len() < 2 {
        return Err(WorkloadError::ShortSeries(series.len()));
    }
    let total: f64 = series.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    Ok(total / (series.len() - 1) as f64)
}

/// Summary of one run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunMetrics {
    pub scheme: String,
    pub controller: String,
    pub seed: u64,
    /// Per-worker mean iteration time, seconds.
    pub iteration_times: Vec<f64>,
    pub mean_iteration_time: f64,
    /// Completed iterations per worker.
    pub iterations: Vec<u64>,
    pub unfairness: f64,
    /// Mean over workers of each flow's per-slot throughput fluctuation,
    /// packets/s.
    pub throughput_fluctuation: f64,
    /// Index of the worker with the fewest iterations (ties: slowest mean
    /// iteration, then lowest index).
    pub straggler: usize,
    pub straggler_throughput: Vec<f64>,
    pub straggler_mean_throughput: f64,
    pub aggregate_utility: f64,
    /// Mean slot reward of agent-driven connections, when any ran.
    pub learning_score: Option<f64>,
}

pub const METRICS_HEADER: &str =
    "scheme,controller,seed,mean_iter_time_s,unfairness_iters,mean_fluct_pps,straggler_mean_tput_pps,aggregate_utility";

pub fn metrics_csv(rows: &[RunMetrics]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for m in rows {
        out.push_str(&format!(
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            m.scheme,
            m.controller,
            m.seed,
            m.mean_iteration_time,
            m.unfairness,
            m.throughput_fluctuation,
            m.straggler_mean_throughput,
            m.aggregate_utility
        ));
    }
    out
}
