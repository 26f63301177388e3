//! Encoding level and uplink rate selection for one device.
//!
//! For a level with `n` bits per pattern and the continuous pattern count
//! `τ_u R / n`, the per-slot objective is
//!
//! ```text
//! O(R) = V (E^u(R) + E^e(R)) + (Q^r − Q^u) τ_u R / n + ε_z Z (φ(n) − H^th) τ_u R / n
//! ```
//!
//! which is convex in R. Its derivative
//!
//! ```text
//! g(R) = 3 V τ_e κ (τ_u J^e / (τ_e n))^3 R^2
//!      + (V τ_u N0 ln2 / h) exp(R ln2 / B)
//!      + (Q^r − Q^u + ε_z Z (φ(n) − H^th)) τ_u / n
//! ```
//!
//! is strictly increasing, so the constrained minimizer over `[R_min, R_max]`
//! is either a bound or the unique root of `g`, found by bisection. The level
//! is picked by exhaustive search, including the null decision (no encoding,
//! no transmission) whose objective is zero.

use std::f64::consts::LN_2;

use crate::config::{DeviceConfig, SystemConfig};
use crate::physics::{floor_count, RateBounds};
use crate::profile::{EncodingLevel, EncodingProfile};

/// Bisection stops once the bracket is this narrow relative to its upper end.
pub const BISECTION_REL_TOL: f64 = 1e-9;
pub const BISECTION_MAX_ITER: usize = 200;
/// Objectives (and energies) this close, relative, are treated as tied.
const TIE_REL_TOL: f64 = 1e-12;

/// Everything one device's subproblem depends on in the current slot.
#[derive(Debug, Clone, Copy)]
pub struct RadioSubproblemInput<'a> {
    pub local_backlog: f64,
    pub remote_backlog: f64,
    pub virtual_queue: f64,
    /// Current linear channel power gain.
    pub gain: f64,
    pub penalty_weight: f64,
    pub vq_step: f64,
    pub entropy_threshold: f64,
    pub bandwidth: f64,
    pub noise_psd_eff: f64,
    pub encode_time: f64,
    pub uplink_time: f64,
    pub kappa: f64,
    pub encode_cycles: f64,
    pub max_tx_power: f64,
    pub max_local_freq: f64,
    /// Never pay for more pattern slots than the local backlog holds.
    pub cap_rate_to_backlog: bool,
    /// Snap the rate down to a whole number of patterns.
    pub quantize_rate_to_patterns: bool,
    pub profile: &'a EncodingProfile,
}

impl<'a> RadioSubproblemInput<'a> {
    pub fn new(
        sys: &SystemConfig,
        dev: &'a DeviceConfig,
        local_backlog: u64,
        remote_backlog: u64,
        virtual_queue: f64,
        gain: f64,
    ) -> Self {
        Self {
            local_backlog: local_backlog as f64,
            remote_backlog: remote_backlog as f64,
            virtual_queue,
            gain,
            penalty_weight: sys.penalty_weight,
            vq_step: sys.vq_step,
            entropy_threshold: dev.entropy_threshold,
            bandwidth: dev.bandwidth,
            noise_psd_eff: sys.noise_psd_eff(),
            encode_time: sys.encode_time(),
            uplink_time: sys.uplink_time(),
            kappa: dev.kappa,
            encode_cycles: dev.encode_cycles,
            max_tx_power: dev.max_tx_power,
            max_local_freq: dev.max_local_freq,
            cap_rate_to_backlog: sys.cap_rate_to_backlog,
            quantize_rate_to_patterns: sys.quantize_rate_to_patterns,
            profile: dev.profile.as_ref(),
        }
    }

    /// `τ_u J^e / (τ_e n)`: local frequency per unit rate.
    fn freq_per_rate(&self, bits: f64) -> f64 {
        self.uplink_time * self.encode_cycles / (self.encode_time * bits)
    }

    fn encode_energy(&self, bits: f64, rate: f64) -> f64 {
        let f = self.freq_per_rate(bits) * rate;
        self.encode_time * self.kappa * f * f * f
    }

    fn tx_energy(&self, rate: f64) -> f64 {
        self.uplink_time * (self.noise_psd_eff * self.bandwidth / self.gain)
            * (rate * LN_2 / self.bandwidth).exp_m1()
    }

    /// Device energy `E^e + E^u` at this rate, J.
    pub fn energy(&self, level: &EncodingLevel, rate: f64) -> f64 {
        self.encode_energy(level.bits(), rate) + self.tx_energy(rate)
    }

    /// Weight of the continuous pattern count `τ_u R / n` in the objective.
    fn queue_weight(&self, level: &EncodingLevel) -> f64 {
        self.remote_backlog - self.local_backlog
            + self.vq_step * self.virtual_queue * (level.entropy - self.entropy_threshold)
    }
}

/// Objective of the radio subproblem at `(level, rate)`.
pub fn radio_objective(level: &EncodingLevel, rate: f64, input: &RadioSubproblemInput) -> f64 {
    let patterns = input.uplink_time * rate / level.bits();
    input.penalty_weight * input.energy(level, rate) + input.queue_weight(level) * patterns
}

/// `dO/dR` at `rate` for `level`.
pub fn stationarity_residual(rate: f64, level: &EncodingLevel, input: &RadioSubproblemInput) -> f64 {
    let c = input.freq_per_rate(level.bits());
    let v = input.penalty_weight;
    3.0 * v * input.encode_time * input.kappa * c * c * c * rate * rate
        + v * input.uplink_time * input.noise_psd_eff * LN_2 / input.gain
            * (rate * LN_2 / input.bandwidth).exp()
        + input.queue_weight(level) * input.uplink_time / level.bits()
}

/// Admissible rates for `level`: the physical bounds, further capped at the
/// backlog when `cap_rate_to_backlog` is set.
pub fn rate_range(level: &EncodingLevel, input: &RadioSubproblemInput) -> RateBounds {
    let bits = level.bits();
    let b = input.bandwidth;
    let encode_limit =
        input.encode_time * bits * input.max_local_freq / (input.uplink_time * input.encode_cycles);
    let radio_limit =
        b * (input.gain * input.max_tx_power / (input.noise_psd_eff * b)).ln_1p() / LN_2;
    let mut max = encode_limit.min(radio_limit);
    if input.cap_rate_to_backlog {
        max = max.min(input.local_backlog * bits / input.uplink_time);
    }
    RateBounds {
        min: bits / input.uplink_time,
        max,
    }
}

/// Minimizer of the objective over the admissible rates of `level`, or `None`
/// when the range is empty.
pub fn solve_rate_for_level(level: &EncodingLevel, input: &RadioSubproblemInput) -> Option<f64> {
    let bounds = rate_range(level, input);
    if !bounds.feasible() {
        return None;
    }
    let g = |r| stationarity_residual(r, level, input);
    let (mut lo, mut hi) = (bounds.min, bounds.max);
    if g(lo) >= 0.0 {
        return Some(lo);
    }
    if g(hi) <= 0.0 {
        return Some(hi);
    }
    for _ in 0..BISECTION_MAX_ITER {
        if hi - lo <= BISECTION_REL_TOL * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm == 0.0 {
            return Some(mid);
        }
        if gm > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioChoice {
    /// Index into the device profile.
    pub level: usize,
    pub rate: f64,
    /// `E^e + E^u` at `rate`, J.
    pub energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioSolution {
    /// `None` is the null decision: nothing is encoded or sent.
    pub choice: Option<RadioChoice>,
    pub objective: f64,
}

impl RadioSolution {
    pub const NULL: RadioSolution = RadioSolution {
        choice: None,
        objective: 0.0,
    };
}

fn tied(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_REL_TOL * a.abs().max(b.abs())
}

/// Whether `(obj, energy, bits)` beats the incumbent: lower objective, then
/// lower energy, then more bits. The null decision has energy 0 and 0 bits.
fn better(obj: f64, energy: f64, bits: f64, best: (f64, f64, f64)) -> bool {
    let (b_obj, b_energy, b_bits) = best;
    if !tied(obj, b_obj) {
        return obj < b_obj;
    }
    if !tied(energy, b_energy) {
        return energy < b_energy;
    }
    bits > b_bits
}

/// Exhaustive search over the null decision and every feasible level.
///
/// An empty local queue short-circuits to the null decision: transmitting
/// would spend energy without moving any pattern.
pub fn solve_radio(input: &RadioSubproblemInput) -> RadioSolution {
    if input.local_backlog <= 0.0 {
        return RadioSolution::NULL;
    }
    let mut best = RadioSolution::NULL;
    let mut key = (0.0, 0.0, 0.0);
    for (index, level) in input.profile.levels().iter().enumerate() {
        let Some(mut rate) = solve_rate_for_level(level, input) else {
            continue;
        };
        if input.quantize_rate_to_patterns {
            let bits = level.bits();
            let whole = floor_count(input.uplink_time * rate / bits) as f64;
            rate = (whole * bits / input.uplink_time).max(bits / input.uplink_time);
        }
        let objective = radio_objective(level, rate, input);
        let energy = input.energy(level, rate);
        if better(objective, energy, level.bits(), key) {
            key = (objective, energy, level.bits());
            best = RadioSolution {
                choice: Some(RadioChoice {
                    level: index,
                    rate,
                    energy,
                }),
                objective,
            };
        }
    }
    best
}
