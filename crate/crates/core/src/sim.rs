//! Slot loop, full runs and V sweeps.
//!
//! One slot proceeds as follows, all decisions using start-of-slot state:
//!
//! 1. observe the channel gain and the arrival count of every device;
//! 2. solve the radio subproblem of every device on `(Q^u, Q^r, Z)`;
//! 3. count transmitted patterns with the exact floor and charge energies;
//! 4. move the transmitted patterns out of the local queue (tagged with the
//!    chosen level) and enqueue the new arrivals;
//! 5. split the edge CPU on the start-of-slot remote backlogs, classify and
//!    enqueue the patterns that just arrived over the uplink;
//! 6. realize entropy and correctness for the classified patterns;
//! 7. update the virtual queues;
//! 8. record metrics.

use rayon::prelude::*;
use serde::Serialize;

use crate::config::Scenario;
use crate::error::Result;
use crate::inference;
use crate::physics::{self, patterns_classified, patterns_tx};
use crate::queueing::{
    lyapunov_value, stability_diagnostic, LocalQueue, RemoteQueue, RunningAverages, Stability,
    VirtualQueue,
};
use crate::solver::{schedule_cpu, solve_radio, CpuDemand, RadioSubproblemInput};
use crate::stochastic::{self, Purpose, RngStream};

/// Random context seen by one device in one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceObservation {
    pub gain: f64,
    pub arrivals: u64,
}

/// One device's decisions and observables in one slot. Queue values are
/// start-of-slot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviceSlot {
    pub device: usize,
    pub local_backlog: u64,
    pub remote_backlog: u64,
    pub virtual_queue: f64,
    pub gain: f64,
    pub arrivals: u64,
    /// `level_id` of the chosen encoding; `None` for the null decision.
    pub level: Option<u32>,
    pub rate: f64,
    pub tx_power: f64,
    pub local_freq: f64,
    pub remote_freq: f64,
    pub encode_energy: f64,
    pub tx_energy: f64,
    /// N^u = floor(τ_u R / n).
    pub tx_patterns: u64,
    /// min(N^u, Q^u).
    pub departed: u64,
    /// N^c = floor(τ f^r / J^c).
    pub classify_capacity: u64,
    pub classified: u64,
    pub classified_entropy_mean: Option<f64>,
    /// Mean entropy of everything classified so far.
    pub running_entropy: Option<f64>,
    pub running_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotMetrics {
    pub slot: u64,
    /// Lyapunov function of the start-of-slot state.
    pub lyapunov: f64,
    pub devices: Vec<DeviceSlot>,
}

#[derive(Debug, Clone)]
struct DeviceState {
    local: LocalQueue,
    remote: RemoteQueue,
    z: VirtualQueue,
    mean_gain: f64,
    channel: RngStream,
    arrivals: RngStream,
    entropy: RngStream,
    correctness: RngStream,
    averages: RunningAverages,
    entropy_total: f64,
    correct_total: u64,
    classified_total: u64,
    arrived_total: u64,
    local_series: Vec<f64>,
    remote_series: Vec<f64>,
    z_series: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Simulator {
    scenario: Scenario,
    slot: u64,
    devices: Vec<DeviceState>,
}

impl Simulator {
    pub fn new(scenario: Scenario) -> Result<Self> {
        scenario.validate()?;
        let seed = scenario.system.rng_seed;
        let fc = scenario.system.carrier_freq_ghz();
        let horizon = scenario.system.horizon;
        let devices = scenario
            .devices
            .iter()
            .enumerate()
            .map(|(k, dev)| {
                Ok(DeviceState {
                    local: LocalQueue::default(),
                    remote: RemoteQueue::default(),
                    z: VirtualQueue::default(),
                    mean_gain: stochastic::mean_gain(dev.distance, fc)?,
                    channel: RngStream::new(seed, k, Purpose::Channel),
                    arrivals: RngStream::new(seed, k, Purpose::Arrivals),
                    entropy: RngStream::new(seed, k, Purpose::Entropy),
                    correctness: RngStream::new(seed, k, Purpose::Correctness),
                    averages: RunningAverages::default(),
                    entropy_total: 0.0,
                    correct_total: 0,
                    classified_total: 0,
                    arrived_total: 0,
                    local_series: Vec::with_capacity(horizon),
                    remote_series: Vec::with_capacity(horizon),
                    z_series: Vec::with_capacity(horizon),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            scenario,
            slot: 0,
            devices,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    /// Index of the next slot to simulate.
    pub fn slot(&self) -> u64 {
        self.slot
    }

    pub fn local_backlog(&self, k: usize) -> u64 {
        self.devices[k].local.backlog()
    }

    pub fn remote_backlog(&self, k: usize) -> u64 {
        self.devices[k].remote.backlog()
    }

    pub fn virtual_queue(&self, k: usize) -> f64 {
        self.devices[k].z.value()
    }

    pub fn local_queue(&self, k: usize) -> &LocalQueue {
        &self.devices[k].local
    }

    pub fn remote_queue(&self, k: usize) -> &RemoteQueue {
        &self.devices[k].remote
    }

    /// Patterns that have arrived at device `k` so far.
    pub fn arrived_total(&self, k: usize) -> u64 {
        self.devices[k].arrived_total
    }

    pub fn classified_total(&self, k: usize) -> u64 {
        self.devices[k].classified_total
    }

    /// Draws this slot's channel gains and arrivals.
    pub fn observe(&mut self) -> Vec<DeviceObservation> {
        self.scenario
            .devices
            .iter()
            .zip(&mut self.devices)
            .map(|(cfg, st)| DeviceObservation {
                gain: stochastic::sample_channel(st.mean_gain, &mut st.channel),
                arrivals: stochastic::sample_arrivals(cfg.arrival_rate, &mut st.arrivals),
            })
            .collect()
    }

    pub fn step(&mut self) -> SlotMetrics {
        let obs = self.observe();
        self.step_with(&obs)
    }

    /// Advances one slot under the given observations.
    ///
    /// # Panics
    ///
    /// If `observations` does not have one entry per device.
    pub fn step_with(&mut self, observations: &[DeviceObservation]) -> SlotMetrics {
        assert_eq!(observations.len(), self.devices.len(), "one observation per device");
        let t = self.slot;
        let sys = &self.scenario.system;
        let (tau, tau_e, tau_u) = (sys.tau(), sys.encode_time(), sys.uplink_time());
        let n0 = sys.noise_psd_eff();
        let post_warmup = t >= sys.warmup_slots as u64;

        let lyapunov = lyapunov_value(
            self.devices
                .iter()
                .map(|d| (d.local.backlog() as f64, d.remote.backlog() as f64, d.z.value())),
        );

        let decisions: Vec<_> = self
            .scenario
            .devices
            .iter()
            .zip(&self.devices)
            .zip(observations)
            .map(|((cfg, st), obs)| {
                let input = RadioSubproblemInput::new(
                    sys,
                    cfg,
                    st.local.backlog(),
                    st.remote.backlog(),
                    st.z.value(),
                    obs.gain,
                );
                solve_radio(&input)
            })
            .collect();

        let demands: Vec<CpuDemand> = self
            .scenario
            .devices
            .iter()
            .zip(&self.devices)
            .map(|(cfg, st)| CpuDemand {
                backlog: st.remote.backlog(),
                classify_cycles: cfg.classify_cycles,
            })
            .collect();
        let remote_freqs = schedule_cpu(&demands, sys.mec_max_freq, tau);

        let mut rows = Vec::with_capacity(self.devices.len());
        for (k, (cfg, st)) in self.scenario.devices.iter().zip(&mut self.devices).enumerate() {
            let obs = observations[k];
            let start_local = st.local.backlog();
            let start_remote = st.remote.backlog();
            let start_z = st.z.value();

            let (level, rate, tx_patterns) = match decisions[k].choice {
                Some(c) => {
                    let bits = cfg.profile.levels()[c.level].bits();
                    (Some(c.level), c.rate, patterns_tx(c.rate, bits, tau_u))
                }
                None => (None, 0.0, 0),
            };
            let (tx_power, local_freq, encode_energy, tx_energy) = match level {
                Some(idx) => {
                    let bits = cfg.profile.levels()[idx].bits();
                    let p = physics::power_from_rate_unchecked(rate, obs.gain, cfg.bandwidth, n0);
                    let f = physics::local_freq(rate, bits, tau_u, tau_e, cfg.encode_cycles);
                    (p, f, tau_e * cfg.kappa * f * f * f, tau_u * p)
                }
                None => (0.0, 0.0, 0.0, 0.0),
            };

            let mut departed = st.local.update(tx_patterns, obs.arrivals, t);
            for r in &mut departed {
                r.level = level;
            }
            let departed_count = departed.len() as u64;
            st.arrived_total += obs.arrivals;

            let f_r = remote_freqs[k];
            let capacity = patterns_classified(f_r, cfg.classify_cycles, tau);
            let classified = st.remote.update(capacity, departed);

            let mut entropies = Vec::with_capacity(classified.len());
            for rec in &classified {
                let idx = rec.level.expect("remote records carry a level");
                let h = inference::realize_entropy(
                    &cfg.profile,
                    idx,
                    sys.entropy_noise_std,
                    &mut st.entropy,
                )
                .expect("level index comes from the profile");
                let correct = inference::realize_correctness(&cfg.profile, idx, &mut st.correctness)
                    .expect("level index comes from the profile");
                st.entropy_total += h;
                st.correct_total += u64::from(correct);
                st.classified_total += 1;
                if post_warmup {
                    st.averages.record_classified(h, correct, t - rec.arrival_slot);
                }
                entropies.push(h);
            }
            st.z.update(entropies.iter().copied(), cfg.entropy_threshold, sys.vq_step);

            if post_warmup {
                st.averages.record_slot(
                    start_local,
                    start_remote,
                    obs.arrivals,
                    encode_energy,
                    tx_energy,
                );
            }
            st.local_series.push(start_local as f64);
            st.remote_series.push(start_remote as f64);
            st.z_series.push(start_z);

            let ratio = |num: f64, den: u64| (den > 0).then(|| num / den as f64);
            rows.push(DeviceSlot {
                device: k,
                local_backlog: start_local,
                remote_backlog: start_remote,
                virtual_queue: start_z,
                gain: obs.gain,
                arrivals: obs.arrivals,
                level: level.map(|i| cfg.profile.levels()[i].level_id),
                rate,
                tx_power,
                local_freq,
                remote_freq: f_r,
                encode_energy,
                tx_energy,
                tx_patterns,
                departed: departed_count,
                classify_capacity: capacity,
                classified: entropies.len() as u64,
                classified_entropy_mean: ratio(entropies.iter().sum(), entropies.len() as u64),
                running_entropy: ratio(st.entropy_total, st.classified_total),
                running_accuracy: ratio(st.correct_total as f64, st.classified_total),
            });
        }
        self.slot += 1;
        SlotMetrics {
            slot: t,
            lyapunov,
            devices: rows,
        }
    }

    /// Per-device post-warmup summaries of the slots simulated so far.
    pub fn summaries(&self) -> Vec<DeviceSummary> {
        let sys = &self.scenario.system;
        let warmup = sys.warmup_slots;
        let slots = self.slot.max(1) as f64;
        self.scenario
            .devices
            .iter()
            .zip(&self.devices)
            .map(|(cfg, st)| {
                let a = &st.averages;
                let diag = |series: &[f64], threshold| {
                    stability_diagnostic(series, warmup, threshold).ok()
                };
                DeviceSummary {
                    device: cfg.id,
                    entropy_threshold: cfg.entropy_threshold,
                    distance: cfg.distance,
                    mean_energy: a.mean_encode_energy() + a.mean_tx_energy(),
                    mean_encode_energy: a.mean_encode_energy(),
                    mean_tx_energy: a.mean_tx_energy(),
                    mean_local_backlog: a.mean_local_backlog(),
                    mean_remote_backlog: a.mean_remote_backlog(),
                    mean_arrivals: a.mean_arrivals(),
                    little_delay: a.little_delay(sys.tau()),
                    empirical_delay: a.mean_delay_slots().map(|d| d * sys.tau()),
                    mean_entropy: a.mean_entropy(),
                    accuracy: a.accuracy(),
                    classified: a.classified(),
                    final_virtual_queue: st.z.value(),
                    virtual_queue_rate: st.z.value() / slots,
                    local_stability: diag(&st.local_series, sys.stability_slope_q),
                    remote_stability: diag(&st.remote_series, sys.stability_slope_q),
                    virtual_stability: diag(&st.z_series, sys.stability_slope_z),
                }
            })
            .collect()
    }
}

/// Post-warmup per-device results. Energies are per slot (J), delays in
/// seconds, backlogs in patterns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviceSummary {
    pub device: usize,
    pub entropy_threshold: f64,
    pub distance: f64,
    pub mean_energy: f64,
    pub mean_encode_energy: f64,
    pub mean_tx_energy: f64,
    pub mean_local_backlog: f64,
    pub mean_remote_backlog: f64,
    pub mean_arrivals: f64,
    pub little_delay: Option<f64>,
    pub empirical_delay: Option<f64>,
    pub mean_entropy: Option<f64>,
    pub accuracy: Option<f64>,
    pub classified: u64,
    pub final_virtual_queue: f64,
    /// Z_T / T.
    pub virtual_queue_rate: f64,
    /// `None` when the run is too short for the diagnostic.
    pub local_stability: Option<Stability>,
    pub remote_stability: Option<Stability>,
    pub virtual_stability: Option<Stability>,
}

impl DeviceSummary {
    pub fn any_drifting(&self) -> bool {
        [self.local_stability, self.remote_stability, self.virtual_stability]
            .iter()
            .flatten()
            .any(Stability::is_drifting)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunResult {
    pub scenario: Scenario,
    pub seed: u64,
    /// One entry per slot; empty when the trace was not recorded.
    pub trace: Vec<SlotMetrics>,
    pub summaries: Vec<DeviceSummary>,
}

fn simulate(scenario: &Scenario, keep_trace: bool) -> Result<RunResult> {
    let mut sim = Simulator::new(scenario.clone())?;
    let horizon = scenario.system.horizon;
    let mut trace = Vec::with_capacity(if keep_trace { horizon } else { 0 });
    for _ in 0..horizon {
        let m = sim.step();
        if keep_trace {
            trace.push(m);
        }
    }
    Ok(RunResult {
        scenario: scenario.clone(),
        seed: scenario.system.rng_seed,
        trace,
        summaries: sim.summaries(),
    })
}

/// Runs the scenario for its full horizon from empty queues, keeping the
/// per-slot trace.
pub fn run(scenario: &Scenario) -> Result<RunResult> {
    simulate(scenario, true)
}

/// Like [`run`] without keeping the trace.
pub fn run_summary(scenario: &Scenario) -> Result<RunResult> {
    simulate(scenario, false)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub penalty_weight: f64,
    pub seed: u64,
    pub summaries: Vec<DeviceSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
}

/// Seed of sweep point `index` when common random numbers are off.
pub fn point_seed(base: u64, index: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = base.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One independent run per V. With common random numbers every point sees
/// the same channel and arrival sequences. Points may run in parallel; the
/// result is identical either way.
pub fn sweep(scenario: &Scenario, grid: &[f64]) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(crate::Error::InvalidArgument("empty V grid".into()));
    }
    let crn = scenario.sweep.common_random_numbers;
    let point = |(i, &v): (usize, &f64)| -> Result<SweepPoint> {
        let mut sc = scenario.clone();
        sc.system.penalty_weight = v;
        if !crn {
            // Placement stays put; only the slot-level streams change.
            sc.system.rng_seed = point_seed(scenario.system.rng_seed, i);
        }
        let res = run_summary(&sc)?;
        Ok(SweepPoint {
            penalty_weight: v,
            seed: sc.system.rng_seed,
            summaries: res.summaries,
        })
    };
    let points = if scenario.sweep.parallel {
        grid.par_iter().enumerate().map(point).collect::<Result<Vec<_>>>()?
    } else {
        grid.iter().enumerate().map(point).collect::<Result<Vec<_>>>()?
    };
    Ok(SweepResult { points })
}

/// Logarithmic grid of `points` values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..points)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (points - 1) as f64))
        .collect()
}

/// Slots in the pilot run used to scale the automatic V grid.
pub const PILOT_SLOTS: usize = 2_000;

/// Automatic V grid.
///
/// A pilot run with energy ignored (V = 0) measures the total arrival rate
/// Ā (patterns per slot) and the total energy Ē (J per slot) spent when
/// every device transmits as fast as its queues allow. `V_ref = Ā / Ē` is
/// the weight at which one slot of that energy costs as much as one slot of
/// backlog growth. The grid starts one decade below `V_ref`, where queues
/// dominate and energy sits at its pilot level, and spans `sweep.decades`
/// decades towards the regime where energy has reached its floor and only
/// delay keeps growing.
pub fn auto_v_grid(scenario: &Scenario) -> Result<Vec<f64>> {
    let mut pilot = scenario.clone();
    pilot.system.penalty_weight = 0.0;
    pilot.system.horizon = PILOT_SLOTS.min(scenario.system.horizon);
    pilot.system.warmup_slots = pilot.system.horizon / 10;
    let res = run_summary(&pilot)?;
    let arrivals: f64 = res.summaries.iter().map(|s| s.mean_arrivals).sum();
    let energy: f64 = res.summaries.iter().map(|s| s.mean_energy).sum();
    if !(arrivals > 0.0 && energy > 0.0) {
        return Err(crate::Error::config(
            "cannot scale the V grid: the pilot run saw no traffic; set sweep.v_grid",
        ));
    }
    let v_ref = arrivals / energy;
    let lo = v_ref / 10.0;
    Ok(log_grid(lo, lo * 10f64.powf(scenario.sweep.decades), scenario.sweep.points))
}

/// The configured grid if present, else [`auto_v_grid`].
pub fn v_grid(scenario: &Scenario) -> Result<Vec<f64>> {
    match &scenario.sweep.v_grid {
        Some(g) => Ok(g.clone()),
        None => auto_v_grid(scenario),
    }
}
