//! Edge CPU scheduling.
//!
//! Maximizes `Σ_k τ f_k Q^r_k / J^c_k` subject to `f_k ≥ 0`,
//! `f_k ≤ Q^r_k J^c_k / τ` (no more than what empties the queue) and
//! `Σ f_k ≤ f_max`. The problem is a fractional knapsack, so serving devices
//! in decreasing order of `Q^r / J^c` until the budget runs out is optimal.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpuDemand {
    pub backlog: u64,
    /// J^c, cycles per pattern.
    pub classify_cycles: f64,
}

impl CpuDemand {
    fn ratio(&self) -> f64 {
        self.backlog as f64 / self.classify_cycles
    }

    /// Frequency that classifies the whole backlog within one slot.
    pub fn drain_freq(&self, tau: f64) -> f64 {
        self.backlog as f64 * self.classify_cycles / tau
    }
}

/// Greedy allocation; ties in `Q^r / J^c` go to the lower device index.
pub fn schedule_cpu(demands: &[CpuDemand], max_freq: f64, tau: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..demands.len()).collect();
    // Stable sort keeps index order among equal ratios.
    order.sort_by(|&a, &b| demands[b].ratio().total_cmp(&demands[a].ratio()));
    let mut freqs = vec![0.0; demands.len()];
    let mut remaining = max_freq;
    for k in order {
        if remaining <= 0.0 {
            break;
        }
        let give = demands[k].drain_freq(tau).min(remaining);
        freqs[k] = give;
        remaining -= give;
    }
    freqs
}

/// `Σ_k τ f_k Q^r_k / J^c_k`.
pub fn cpu_objective(demands: &[CpuDemand], freqs: &[f64], tau: f64) -> f64 {
    demands
        .iter()
        .zip(freqs)
        .map(|(d, f)| tau * f * d.ratio())
        .sum()
}
