//! Scenario configuration.
//!
//! Everything is stored in SI units (W, J, Hz, s, bit, nat). Files are TOML
//! with four groups: `[system]`, `[solver]`, `[device_defaults]` plus
//! `[[devices]]`, and `[sweep]`. Physical quantities accept unit suffixes,
//! see [`crate::units`]. Any device field may be given per device or once in
//! `[device_defaults]`; whatever is missing in both falls back to
//! [`DeviceDefaults::reference`].

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::EncodingProfile;
use crate::stochastic;
use crate::units::{Dimension, Quantity};

/// System-wide physical, timing and control parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemConfig {
    /// τ, seconds.
    pub slot_duration: f64,
    /// τ_e / τ, in (0, 1).
    pub encode_fraction: f64,
    pub total_bandwidth: f64,
    /// N0 before the receiver noise figure, W/Hz.
    pub noise_psd: f64,
    pub noise_figure_db: f64,
    pub carrier_freq: f64,
    /// f_r^max, cycles/s.
    pub mec_max_freq: f64,
    pub cell_radius: f64,
    /// V.
    pub penalty_weight: f64,
    /// ε_z.
    pub vq_step: f64,
    pub horizon: usize,
    pub warmup_slots: usize,
    pub rng_seed: u64,
    pub cap_rate_to_backlog: bool,
    pub quantize_rate_to_patterns: bool,
    /// Spread of the realized per-pattern entropy around the profile value.
    pub entropy_noise_std: f64,
    /// Least-squares slope (per slot) above which a physical queue is
    /// reported as drifting.
    pub stability_slope_q: f64,
    pub stability_slope_z: f64,
}

impl SystemConfig {
    pub fn reference() -> Self {
        Self {
            slot_duration: 0.025,
            encode_fraction: 0.5,
            total_bandwidth: 100e6,
            noise_psd: crate::units::dbm_to_watts(-174.0),
            noise_figure_db: 5.0,
            carrier_freq: 3.5e9,
            mec_max_freq: 10e9,
            cell_radius: 100.0,
            penalty_weight: DEFAULT_PENALTY_WEIGHT,
            vq_step: DEFAULT_VQ_STEP,
            horizon: 10_000,
            warmup_slots: 1_000,
            rng_seed: 1,
            cap_rate_to_backlog: true,
            quantize_rate_to_patterns: false,
            entropy_noise_std: 0.0,
            stability_slope_q: 1e-2,
            stability_slope_z: 1e-2,
        }
    }

    pub fn tau(&self) -> f64 {
        self.slot_duration
    }

    /// τ_e.
    pub fn encode_time(&self) -> f64 {
        self.encode_fraction * self.slot_duration
    }

    /// τ_u = τ − τ_e.
    pub fn uplink_time(&self) -> f64 {
        self.slot_duration - self.encode_time()
    }

    /// Receiver noise PSD including the noise figure, W/Hz.
    pub fn noise_psd_eff(&self) -> f64 {
        self.noise_psd * 10f64.powf(self.noise_figure_db / 10.0)
    }

    pub fn carrier_freq_ghz(&self) -> f64 {
        self.carrier_freq / 1e9
    }
}

pub const DEFAULT_PENALTY_WEIGHT: f64 = 1e5;
pub const DEFAULT_VQ_STEP: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviceConfig {
    pub id: usize,
    /// Distance to the access point, m.
    pub distance: f64,
    /// True when `distance` was drawn from the placement stream.
    pub random_placement: bool,
    /// P^u, W.
    pub max_tx_power: f64,
    /// f^{l,max}, cycles/s.
    pub max_local_freq: f64,
    /// κ, such that κ·f³ is in watts.
    pub kappa: f64,
    /// J^e, cycles per pattern.
    pub encode_cycles: f64,
    /// J^c, cycles per pattern.
    pub classify_cycles: f64,
    /// Mean arrivals per slot.
    pub arrival_rate: f64,
    /// H^th, nats.
    pub entropy_threshold: f64,
    pub bandwidth: f64,
    #[serde(skip)]
    pub profile: Arc<EncodingProfile>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    /// Explicit V grid; when absent the grid is auto-scaled.
    pub v_grid: Option<Vec<f64>>,
    pub points: usize,
    /// Span of the auto-scaled grid in decades.
    pub decades: f64,
    pub common_random_numbers: bool,
    pub parallel: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            v_grid: None,
            points: 12,
            decades: 3.0,
            common_random_numbers: true,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub system: SystemConfig,
    pub devices: Vec<DeviceConfig>,
    pub sweep: SweepConfig,
}

/// Entropy threshold as written in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Threshold {
    Value(f64),
    /// `"tightest"` (entropy of the largest encoding) or `"loosest"`
    /// (entropy of the smallest encoding).
    Named(String),
}

impl Threshold {
    fn resolve(&self, profile: &EncodingProfile) -> Result<f64> {
        match self {
            Threshold::Value(v) => Ok(*v),
            Threshold::Named(s) => match s.as_str() {
                "tightest" => Ok(profile.min_level_entropy()),
                "loosest" => Ok(profile.max_level_entropy()),
                other => Err(Error::config(format!(
                    "entropy_threshold `{other}`: expected a number, \"tightest\" or \"loosest\""
                ))),
            },
        }
    }
}

/// Per-device fields as they appear in a file; every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceDefaults {
    pub distance: Option<Quantity>,
    pub max_tx_power: Option<Quantity>,
    pub max_local_freq: Option<Quantity>,
    pub kappa: Option<f64>,
    pub encode_cycles: Option<f64>,
    pub classify_cycles: Option<f64>,
    pub arrival_rate: Option<f64>,
    pub entropy_threshold: Option<Threshold>,
    pub bandwidth: Option<Quantity>,
    pub profile: Option<PathBuf>,
}

impl DeviceDefaults {
    /// Built-in device parameters. `distance`, `bandwidth`, `profile` and
    /// `entropy_threshold` are left open: missing distance means uniform
    /// placement in the cell, missing bandwidth an equal share, missing
    /// profile the shipped default.
    pub fn reference() -> Self {
        Self {
            distance: None,
            max_tx_power: Some("20 dBm".into()),
            max_local_freq: Some("1 GHz".into()),
            kappa: Some(1e-27),
            encode_cycles: Some(5e5),
            classify_cycles: Some(1e7),
            arrival_rate: Some(2.0),
            entropy_threshold: None,
            bandwidth: None,
            profile: None,
        }
    }

    fn or(self, fallback: &DeviceDefaults) -> DeviceDefaults {
        DeviceDefaults {
            distance: self.distance.or_else(|| fallback.distance.clone()),
            max_tx_power: self.max_tx_power.or_else(|| fallback.max_tx_power.clone()),
            max_local_freq: self.max_local_freq.or_else(|| fallback.max_local_freq.clone()),
            kappa: self.kappa.or(fallback.kappa),
            encode_cycles: self.encode_cycles.or(fallback.encode_cycles),
            classify_cycles: self.classify_cycles.or(fallback.classify_cycles),
            arrival_rate: self.arrival_rate.or(fallback.arrival_rate),
            entropy_threshold: self
                .entropy_threshold
                .or_else(|| fallback.entropy_threshold.clone()),
            bandwidth: self.bandwidth.or_else(|| fallback.bandwidth.clone()),
            profile: self.profile.or_else(|| fallback.profile.clone()),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    slot_duration: Option<Quantity>,
    encode_fraction: Option<f64>,
    total_bandwidth: Option<Quantity>,
    noise_psd: Option<Quantity>,
    noise_figure: Option<Quantity>,
    carrier_freq: Option<Quantity>,
    mec_max_freq: Option<Quantity>,
    cell_radius: Option<Quantity>,
    horizon: Option<usize>,
    warmup_slots: Option<usize>,
    seed: Option<u64>,
    stability_slope_q: Option<f64>,
    stability_slope_z: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    penalty_weight: Option<f64>,
    vq_step: Option<f64>,
    cap_rate_to_backlog: Option<bool>,
    quantize_rate_to_patterns: Option<bool>,
    entropy_noise_std: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    v_grid: Option<Vec<f64>>,
    points: Option<usize>,
    decades: Option<f64>,
    common_random_numbers: Option<bool>,
    parallel: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    #[serde(default)]
    system: RawSystem,
    #[serde(default)]
    solver: RawSolver,
    #[serde(default)]
    device_defaults: DeviceDefaults,
    #[serde(default)]
    devices: Vec<DeviceDefaults>,
    #[serde(default)]
    sweep: RawSweep,
}

fn quantity(q: &Option<Quantity>, dim: Dimension, default: f64) -> Result<f64> {
    q.as_ref().map_or(Ok(default), |q| q.to_si(dim))
}

impl Scenario {
    /// Six devices, 25 ms slots split evenly, 100 MHz shared equally, 20 dBm,
    /// N0 = −174 dBm/Hz with a 5 dB noise figure, κ = 1e-27, J^e = 5e5,
    /// J^c = 1e7, Poisson(2) arrivals, a 10 GHz edge CPU. Thresholds are the
    /// tightest profile entropy, 0.3, 0.4, 0.5, 0.6 and the loosest one. All
    /// devices sit at the same distance so that per-device differences come
    /// from the thresholds alone.
    pub fn reference() -> Self {
        let system = SystemConfig::reference();
        let mut defaults = DeviceDefaults::reference();
        defaults.distance = Some(Quantity::Number(REFERENCE_DISTANCE));
        let thresholds = [
            Threshold::Named("tightest".into()),
            Threshold::Value(0.3),
            Threshold::Value(0.4),
            Threshold::Value(0.5),
            Threshold::Value(0.6),
            Threshold::Named("loosest".into()),
        ];
        let devices = thresholds
            .into_iter()
            .map(|t| DeviceDefaults {
                entropy_threshold: Some(t),
                ..Default::default()
            })
            .collect::<Vec<_>>();
        Self::assemble(system, &defaults, devices, SweepConfig::default(), None)
            .expect("reference scenario is valid")
    }

    pub fn from_toml_str(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let raw: RawScenario =
            toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        let reference = SystemConfig::reference();
        let s = &raw.system;
        let horizon = s.horizon.unwrap_or(reference.horizon);
        let system = SystemConfig {
            slot_duration: quantity(&s.slot_duration, Dimension::Time, reference.slot_duration)?,
            encode_fraction: s.encode_fraction.unwrap_or(reference.encode_fraction),
            total_bandwidth: quantity(
                &s.total_bandwidth,
                Dimension::Frequency,
                reference.total_bandwidth,
            )?,
            noise_psd: quantity(&s.noise_psd, Dimension::NoisePsd, reference.noise_psd)?,
            noise_figure_db: quantity(
                &s.noise_figure,
                Dimension::Decibel,
                reference.noise_figure_db,
            )?,
            carrier_freq: quantity(&s.carrier_freq, Dimension::Frequency, reference.carrier_freq)?,
            mec_max_freq: quantity(&s.mec_max_freq, Dimension::Frequency, reference.mec_max_freq)?,
            cell_radius: quantity(&s.cell_radius, Dimension::Length, reference.cell_radius)?,
            penalty_weight: raw.solver.penalty_weight.unwrap_or(reference.penalty_weight),
            vq_step: raw.solver.vq_step.unwrap_or(reference.vq_step),
            horizon,
            warmup_slots: s.warmup_slots.unwrap_or(horizon / 10),
            rng_seed: s.seed.unwrap_or(reference.rng_seed),
            cap_rate_to_backlog: raw
                .solver
                .cap_rate_to_backlog
                .unwrap_or(reference.cap_rate_to_backlog),
            quantize_rate_to_patterns: raw
                .solver
                .quantize_rate_to_patterns
                .unwrap_or(reference.quantize_rate_to_patterns),
            entropy_noise_std: raw
                .solver
                .entropy_noise_std
                .unwrap_or(reference.entropy_noise_std),
            stability_slope_q: s.stability_slope_q.unwrap_or(reference.stability_slope_q),
            stability_slope_z: s.stability_slope_z.unwrap_or(reference.stability_slope_z),
        };
        let d = SweepConfig::default();
        let sweep = SweepConfig {
            v_grid: raw.sweep.v_grid,
            points: raw.sweep.points.unwrap_or(d.points),
            decades: raw.sweep.decades.unwrap_or(d.decades),
            common_random_numbers: raw
                .sweep
                .common_random_numbers
                .unwrap_or(d.common_random_numbers),
            parallel: raw.sweep.parallel.unwrap_or(d.parallel),
        };
        Self::assemble(system, &raw.device_defaults, raw.devices, sweep, base_dir)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Read {
            path: path.to_owned(),
            source,
        })?;
        Self::from_toml_str(&text, path.parent())
    }

    fn assemble(
        system: SystemConfig,
        file_defaults: &DeviceDefaults,
        devices: Vec<DeviceDefaults>,
        sweep: SweepConfig,
        base_dir: Option<&Path>,
    ) -> Result<Self> {
        if devices.is_empty() {
            return Err(Error::config("at least one [[devices]] entry is required"));
        }
        let count = devices.len();
        let defaults = file_defaults.clone().or(&DeviceDefaults::reference());
        let mut profiles: HashMap<Option<PathBuf>, Arc<EncodingProfile>> = HashMap::new();
        let mut resolved = Vec::with_capacity(count);
        for (id, raw) in devices.into_iter().enumerate() {
            let raw = raw.or(&defaults);
            let profile = match profiles.get(&raw.profile) {
                Some(p) => Arc::clone(p),
                None => {
                    let p = Arc::new(match &raw.profile {
                        None => EncodingProfile::default_profile(),
                        Some(path) => {
                            let full = match base_dir {
                                Some(dir) if path.is_relative() => dir.join(path),
                                _ => path.clone(),
                            };
                            EncodingProfile::load(&full)?
                        }
                    });
                    profiles.insert(raw.profile.clone(), Arc::clone(&p));
                    p
                }
            };
            let threshold = raw
                .entropy_threshold
                .as_ref()
                .ok_or_else(|| Error::config(format!("device {id}: entropy_threshold is required")))?
                .resolve(&profile)?;
            let required = |name: &str, v: Option<f64>| {
                v.ok_or_else(|| Error::config(format!("device {id}: `{name}` is missing")))
            };
            resolved.push(DeviceConfig {
                id,
                distance: quantity(&raw.distance, Dimension::Length, f64::NAN)?,
                random_placement: raw.distance.is_none(),
                max_tx_power: quantity(&raw.max_tx_power, Dimension::Power, f64::NAN)?,
                max_local_freq: quantity(&raw.max_local_freq, Dimension::Frequency, f64::NAN)?,
                kappa: required("kappa", raw.kappa)?,
                encode_cycles: required("encode_cycles", raw.encode_cycles)?,
                classify_cycles: required("classify_cycles", raw.classify_cycles)?,
                arrival_rate: required("arrival_rate", raw.arrival_rate)?,
                entropy_threshold: threshold,
                bandwidth: quantity(
                    &raw.bandwidth,
                    Dimension::Frequency,
                    system.total_bandwidth / count as f64,
                )?,
                profile,
            });
        }
        let mut scenario = Scenario {
            system,
            devices: resolved,
            sweep,
        };
        scenario.place_devices();
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn num_devices(&self) -> usize {
        self.devices.len()
    }

    /// Changes the root seed; randomly placed devices are placed again.
    pub fn set_seed(&mut self, seed: u64) {
        self.system.rng_seed = seed;
        self.place_devices();
    }

    fn place_devices(&mut self) {
        let count = self.devices.len();
        let distances =
            stochastic::placement_distances(self.system.rng_seed, count, self.system.cell_radius);
        for (dev, d) in self.devices.iter_mut().zip(distances) {
            if dev.random_placement {
                dev.distance = d;
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.system;
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(format!("`{name}` must be positive and finite, got {v}")))
            }
        };
        positive("slot_duration", s.slot_duration)?;
        if !(s.encode_fraction > 0.0 && s.encode_fraction < 1.0) {
            return Err(Error::config("`encode_fraction` must lie in (0, 1)"));
        }
        positive("total_bandwidth", s.total_bandwidth)?;
        positive("noise_psd", s.noise_psd)?;
        if !s.noise_figure_db.is_finite() {
            return Err(Error::config("`noise_figure` must be finite"));
        }
        positive("carrier_freq", s.carrier_freq)?;
        positive("mec_max_freq", s.mec_max_freq)?;
        positive("cell_radius", s.cell_radius)?;
        positive("vq_step", s.vq_step)?;
        if !(s.penalty_weight.is_finite() && s.penalty_weight >= 0.0) {
            return Err(Error::config("`penalty_weight` must be finite and non-negative"));
        }
        if !(s.entropy_noise_std.is_finite() && s.entropy_noise_std >= 0.0) {
            return Err(Error::config("`entropy_noise_std` must be finite and non-negative"));
        }
        if s.horizon == 0 {
            return Err(Error::config("`horizon` must be at least one slot"));
        }
        if s.warmup_slots >= s.horizon {
            return Err(Error::config("`warmup_slots` must be smaller than `horizon`"));
        }
        let mut bandwidth = 0.0;
        for d in &self.devices {
            let id = d.id;
            let check = |name: &str, v: f64| {
                positive(name, v).map_err(|e| Error::config(format!("device {id}: {e}")))
            };
            check("distance", d.distance)?;
            check("max_tx_power", d.max_tx_power)?;
            check("max_local_freq", d.max_local_freq)?;
            check("kappa", d.kappa)?;
            check("encode_cycles", d.encode_cycles)?;
            check("classify_cycles", d.classify_cycles)?;
            check("bandwidth", d.bandwidth)?;
            if !(d.arrival_rate.is_finite() && d.arrival_rate >= 0.0) {
                return Err(Error::config(format!("device {id}: `arrival_rate` must be non-negative")));
            }
            let max = d.profile.max_entropy();
            if !(d.entropy_threshold > 0.0 && d.entropy_threshold <= max) {
                return Err(Error::config(format!(
                    "device {id}: entropy_threshold {} outside (0, ln L = {max}]",
                    d.entropy_threshold
                )));
            }
            bandwidth += d.bandwidth;
        }
        if bandwidth > s.total_bandwidth * (1.0 + 1e-12) {
            return Err(Error::config(format!(
                "device bandwidths sum to {bandwidth} Hz, above total_bandwidth {} Hz",
                s.total_bandwidth
            )));
        }
        let sw = &self.sweep;
        if let Some(grid) = &sw.v_grid {
            if grid.is_empty() || grid.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::config("sweep.v_grid must be non-empty with finite V ≥ 0"));
            }
        }
        if sw.points == 0 || !(sw.decades.is_finite() && sw.decades > 0.0) {
            return Err(Error::config("sweep.points and sweep.decades must be positive"));
        }
        Ok(())
    }
}

/// Common device distance of [`Scenario::reference`], m.
pub const REFERENCE_DISTANCE: f64 = 50.0;
