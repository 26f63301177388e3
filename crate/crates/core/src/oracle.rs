//! Brute-force cross-checks of the per-slot solvers.
//!
//! The radio solver is compared with a dense grid over every level and
//! `grid_points` rates per level; the CPU scheduler with random feasible
//! allocations and, for up to three devices, with exhaustive enumeration of
//! the vertices of its feasible polytope. The solvers under test are passed
//! in, so a deliberately broken one can be checked to fail.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::Scenario;
use crate::solver::{
    cpu_objective, radio_objective, rate_range, schedule_cpu, solve_radio, solve_rate_for_level,
    stationarity_residual, CpuDemand, RadioSolution, RadioSubproblemInput,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub seed: u64,
    pub radio_instances: usize,
    /// Rates per level in the grid oracle.
    pub grid_points: usize,
    pub cpu_instances: usize,
    /// Random feasible allocations per scheduler instance.
    pub random_allocations: usize,
    pub max_devices: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            seed: 7,
            radio_instances: 1_000,
            grid_points: 10_000,
            cpu_instances: 1_000,
            random_allocations: 100_000,
            max_devices: 6,
        }
    }
}

/// Relative slack of the radio solver against the grid optimum.
pub const RADIO_GRID_TOL: f64 = 1e-6;
/// Bound on `|g(R*)| / (|g(R_min)| + |g(R_max)|)` at interior optima.
pub const STATIONARITY_TOL: f64 = 1e-6;
/// Rounding slack when comparing scheduler objectives.
pub const CPU_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub instances: usize,
    pub failures: usize,
    /// Worst relative shortfall of the solver against the oracle. Negative
    /// when the solver beat the oracle everywhere.
    pub max_rel_gap: f64,
    pub tolerance: f64,
}

impl CheckResult {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            instances: 0,
            failures: 0,
            max_rel_gap: f64::NEG_INFINITY,
            tolerance,
        }
    }

    fn record(&mut self, gap: f64) {
        self.instances += 1;
        // NaN gaps count as failures.
        if gap.is_nan() || gap > self.tolerance {
            self.failures += 1;
        }
        if gap > self.max_rel_gap || gap.is_nan() {
            self.max_rel_gap = gap;
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub checks: Vec<CheckResult>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<28} {:>9} {:>9} {:>14} {:>10}  result",
            "check", "instances", "failures", "max_rel_gap", "tolerance"
        )?;
        for c in &self.checks {
            writeln!(
                f,
                "{:<28} {:>9} {:>9} {:>14.6e} {:>10.1e}  {}",
                c.name,
                c.instances,
                c.failures,
                c.max_rel_gap,
                c.tolerance,
                if c.passed() { "PASS" } else { "FAIL" }
            )?;
        }
        Ok(())
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

/// Random radio subproblem on the parameters of a reference device, with
/// log-uniform backlogs, virtual queue, channel gain and V.
pub fn random_radio_input<'a>(scenario: &'a Scenario, rng: &mut ChaCha8Rng) -> RadioSubproblemInput<'a> {
    let dev = &scenario.devices[rng.random_range(0..scenario.devices.len())];
    let qu = log_uniform(rng, 1.0, 1e3).round() as u64;
    let qr = if rng.random::<f64>() < 0.1 { 0 } else { log_uniform(rng, 1.0, 1e3).round() as u64 };
    let z = if rng.random::<f64>() < 0.1 { 0.0 } else { log_uniform(rng, 1e-2, 1e3) };
    let gain = log_uniform(rng, 1e-12, 1e-7);
    let mut input = RadioSubproblemInput::new(&scenario.system, dev, qu, qr, z, gain);
    input.penalty_weight = log_uniform(rng, 1e2, 1e8);
    input.cap_rate_to_backlog = rng.random::<f64>() < 0.8;
    input
}

/// Smallest objective over the null decision and `points` evenly spaced
/// rates in every feasible level's range.
pub fn grid_radio_optimum(input: &RadioSubproblemInput, points: usize) -> f64 {
    let mut best = 0.0f64;
    for level in input.profile.levels() {
        let b = rate_range(level, input);
        if !b.feasible() {
            continue;
        }
        for i in 0..points {
            let r = if points == 1 {
                b.min
            } else {
                b.min + (b.max - b.min) * i as f64 / (points - 1) as f64
            };
            best = best.min(radio_objective(level, r, input));
        }
    }
    best
}

fn rel_gap(value: f64, reference: f64) -> f64 {
    let scale = reference.abs().max(value.abs()).max(f64::MIN_POSITIVE);
    (value - reference) / scale
}

/// Random feasible CPU instances: backlogs 0..=200 (some idle), J^c and the
/// budget log-uniform.
fn random_cpu_instance(rng: &mut ChaCha8Rng, max_devices: usize) -> (Vec<CpuDemand>, f64) {
    let k = rng.random_range(1..=max_devices);
    let demands = (0..k)
        .map(|_| CpuDemand {
            backlog: if rng.random::<f64>() < 0.15 { 0 } else { rng.random_range(1..=200) },
            classify_cycles: log_uniform(rng, 1e6, 1e8),
        })
        .collect();
    (demands, log_uniform(rng, 1e9, 1e11))
}

fn random_allocation(rng: &mut ChaCha8Rng, caps: &[f64], budget: f64) -> Vec<f64> {
    let mut f: Vec<f64> = caps.iter().map(|&c| rng.random::<f64>() * c).collect();
    let total: f64 = f.iter().sum();
    if total > budget {
        let s = budget / total;
        f.iter_mut().for_each(|x| *x *= s);
    }
    f
}

/// Best objective over the vertices of `{0 ≤ f ≤ cap, Σ f ≤ budget}`: every
/// coordinate at 0 or its cap except at most one that takes the leftover
/// budget.
pub fn vertex_cpu_optimum(demands: &[CpuDemand], budget: f64, tau: f64) -> f64 {
    let k = demands.len();
    let caps: Vec<f64> = demands.iter().map(|d| d.drain_freq(tau)).collect();
    let mut best = 0.0f64;
    for mask in 0..(1usize << k) {
        // `free` = k means no free coordinate.
        for free in 0..=k {
            if free < k && mask & (1 << free) != 0 {
                continue;
            }
            let mut f: Vec<f64> = (0..k)
                .map(|i| if mask & (1 << i) != 0 { caps[i] } else { 0.0 })
                .collect();
            let used: f64 = f.iter().sum();
            if used > budget {
                continue;
            }
            if free < k {
                let rest = budget - used;
                if rest > caps[free] {
                    continue;
                }
                f[free] = rest;
            }
            best = best.max(cpu_objective(demands, &f, tau));
        }
    }
    best
}

/// Runs every check against the given solvers.
pub fn run_oracle_with<R, C>(opts: &OracleOptions, radio: R, cpu: C) -> OracleReport
where
    R: Fn(&RadioSubproblemInput) -> RadioSolution,
    C: Fn(&[CpuDemand], f64, f64) -> Vec<f64>,
{
    let scenario = Scenario::reference();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut grid = CheckResult::new("radio_vs_grid", RADIO_GRID_TOL);
    let mut stationarity = CheckResult::new("radio_stationarity", STATIONARITY_TOL);
    let mut consistency = CheckResult::new("radio_reported_objective", 1e-12);
    for _ in 0..opts.radio_instances {
        let input = random_radio_input(&scenario, &mut rng);
        let sol = radio(&input);
        let realized = match sol.choice {
            Some(c) => {
                let level = &input.profile.levels()[c.level];
                let b = rate_range(level, &input);
                if c.rate < b.min || c.rate > b.max {
                    f64::INFINITY
                } else {
                    radio_objective(level, c.rate, &input)
                }
            }
            None => 0.0,
        };
        consistency.record(rel_gap(sol.objective, realized).abs());
        grid.record(rel_gap(realized, grid_radio_optimum(&input, opts.grid_points)));

        for level in input.profile.levels() {
            let b = rate_range(level, &input);
            let Some(r) = solve_rate_for_level(level, &input) else {
                continue;
            };
            if r <= b.min || r >= b.max {
                continue;
            }
            let scale = stationarity_residual(b.min, level, &input).abs()
                + stationarity_residual(b.max, level, &input).abs();
            stationarity.record(stationarity_residual(r, level, &input).abs() / scale);
        }
    }

    let tau = scenario.system.tau();
    let mut random = CheckResult::new("cpu_vs_random_allocations", CPU_TOL);
    let mut vertices = CheckResult::new("cpu_vs_vertex_enumeration", CPU_TOL);
    for _ in 0..opts.cpu_instances {
        let (demands, budget) = random_cpu_instance(&mut rng, opts.max_devices);
        let freqs = cpu(&demands, budget, tau);
        let caps: Vec<f64> = demands.iter().map(|d| d.drain_freq(tau)).collect();
        let feasible = freqs.len() == demands.len()
            && freqs.iter().zip(&caps).all(|(&f, &c)| f >= 0.0 && f <= c)
            && freqs.iter().sum::<f64>() <= budget * (1.0 + CPU_TOL);
        let greedy = if feasible {
            cpu_objective(&demands, &freqs, tau)
        } else {
            f64::NEG_INFINITY
        };
        let mut best_random = 0.0f64;
        for _ in 0..opts.random_allocations {
            let f = random_allocation(&mut rng, &caps, budget);
            best_random = best_random.max(cpu_objective(&demands, &f, tau));
        }
        random.record(rel_gap(best_random, greedy));
        if demands.len() <= 3 {
            vertices.record(rel_gap(vertex_cpu_optimum(&demands, budget, tau), greedy).abs());
        }
    }

    OracleReport {
        checks: vec![grid, stationarity, consistency, random, vertices],
    }
}

/// Runs every check against the library solvers.
pub fn run_oracle(opts: &OracleOptions) -> OracleReport {
    run_oracle_with(opts, solve_radio, schedule_cpu)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> OracleOptions {
        OracleOptions {
            radio_instances: 40,
            grid_points: 500,
            cpu_instances: 40,
            random_allocations: 500,
            ..OracleOptions::default()
        }
    }

    #[test]
    fn library_solvers_pass() {
        let report = run_oracle(&small());
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn always_idle_radio_is_caught() {
        let report = run_oracle_with(&small(), |_| RadioSolution::NULL, schedule_cpu);
        assert!(!report.passed());
        assert!(!report.checks[0].passed());
    }

    #[test]
    fn uniform_cpu_split_is_caught() {
        let split = |d: &[CpuDemand], budget: f64, tau: f64| {
            d.iter().map(|x| x.drain_freq(tau).min(budget / d.len() as f64)).collect()
        };
        let report = run_oracle_with(&small(), solve_radio, split);
        assert!(!report.checks[3].passed() || !report.checks[4].passed());
    }

    #[test]
    fn vertex_optimum_of_two_devices() {
        let d = [
            CpuDemand { backlog: 5, classify_cycles: 1e7 },
            CpuDemand { backlog: 10, classify_cycles: 1e7 },
        ];
        // Greedy trace: 4e9 to the second device, 2e9 to the first.
        let expected = 0.025 * (4e9 * 10.0 + 2e9 * 5.0) / 1e7;
        assert!((vertex_cpu_optimum(&d, 1e10, 0.025) - expected).abs() < 1e-9);
    }
}
