//! Closed-form link, computation and energy relations.
//!
//! Within a slot of length τ a device spends τ_e encoding and τ_u
//! transmitting. Encoding and transmission are coupled so that the number of
//! patterns encoded equals the number transmitted, which ties the local CPU
//! frequency linearly to the uplink rate:
//!
//! ```text
//! R      = B log2(1 + h p / (N0 B))
//! N^u    = floor(τ_u R / n) = floor(τ_e f^l / J^e)   with f^l = τ_u R J^e / (τ_e n)
//! N^c    = floor(τ f^r / J^c)
//! E^e    = τ_e κ (f^l)^3
//! E^u    = τ_u p = τ_u (N0 B / h) (2^(R/B) − 1)
//! ```
//!
//! `N0` here is always the effective PSD including the receiver noise figure.

use std::f64::consts::LN_2;

use crate::config::{DeviceConfig, SystemConfig};
use crate::error::{finite, Error, Result};

/// `floor(x)` for a non-negative count. Values within 1e-12 (relative) of an
/// integer count as that integer, so algebraically exact quotients such as
/// `τ (Q J / τ) / J` do not lose a pattern to rounding.
pub fn floor_count(x: f64) -> u64 {
    if x.is_nan() || x <= 0.0 {
        return 0;
    }
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-12 * nearest.max(1.0) {
        nearest as u64
    } else {
        x.floor() as u64
    }
}

/// Uplink rate in bit/s for transmit power `p` (W), linear channel gain `h`,
/// bandwidth `b` (Hz) and effective noise PSD `n0` (W/Hz).
pub fn rate_from_power(p: f64, h: f64, b: f64, n0: f64) -> Result<f64> {
    let (p, h, b, n0) = (finite("p", p)?, finite("h", h)?, finite("b", b)?, finite("n0", n0)?);
    if p < 0.0 || h <= 0.0 || b <= 0.0 || n0 <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "rate_from_power needs p ≥ 0 and h, b, n0 > 0 (p={p}, h={h}, b={b}, n0={n0})"
        )));
    }
    Ok(b * (h * p / (n0 * b)).ln_1p() / LN_2)
}

/// Transmit power (W) needed for rate `r`; exact inverse of [`rate_from_power`].
pub fn power_from_rate(r: f64, h: f64, b: f64, n0: f64) -> Result<f64> {
    let (r, h, b, n0) = (finite("r", r)?, finite("h", h)?, finite("b", b)?, finite("n0", n0)?);
    if r < 0.0 || h <= 0.0 || b <= 0.0 || n0 <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "power_from_rate needs r ≥ 0 and h, b, n0 > 0 (r={r}, h={h}, b={b}, n0={n0})"
        )));
    }
    Ok(power_from_rate_unchecked(r, h, b, n0))
}

#[inline]
pub(crate) fn power_from_rate_unchecked(r: f64, h: f64, b: f64, n0: f64) -> f64 {
    (n0 * b / h) * (r * LN_2 / b).exp_m1()
}

/// Local CPU frequency that encodes exactly the patterns sent at rate `r`.
pub fn local_freq_from_rate(r: f64, bits: f64, sys: &SystemConfig, dev: &DeviceConfig) -> Result<f64> {
    let (r, bits) = (finite("r", r)?, finite("n", bits)?);
    if bits <= 0.0 {
        return Err(Error::InvalidArgument(
            "local_freq_from_rate needs n > 0; the null decision has no frequency".into(),
        ));
    }
    if r < 0.0 {
        return Err(Error::InvalidArgument(format!("negative rate {r}")));
    }
    Ok(local_freq(r, bits, sys.uplink_time(), sys.encode_time(), dev.encode_cycles))
}

#[inline]
pub(crate) fn local_freq(r: f64, bits: f64, tau_u: f64, tau_e: f64, encode_cycles: f64) -> f64 {
    tau_u * r * encode_cycles / (tau_e * bits)
}

/// Patterns transmitted in a slot, `floor(τ_u R / n)`.
pub fn patterns_tx(r: f64, bits: f64, tau_u: f64) -> u64 {
    if bits <= 0.0 {
        return 0;
    }
    floor_count(tau_u * r / bits)
}

/// Patterns classified in a slot, `floor(τ f_r / J_c)`.
pub fn patterns_classified(f_r: f64, classify_cycles: f64, tau: f64) -> u64 {
    floor_count(tau * f_r / classify_cycles)
}

/// Encoding energy `τ_e κ (f^l)^3` for rate `r` at `bits` per pattern, J.
/// Zero for the null decision (`bits == 0`).
pub fn encode_energy(r: f64, bits: f64, sys: &SystemConfig, dev: &DeviceConfig) -> f64 {
    if bits <= 0.0 {
        return 0.0;
    }
    let tau_e = sys.encode_time();
    let f = local_freq(r, bits, sys.uplink_time(), tau_e, dev.encode_cycles);
    tau_e * dev.kappa * f * f * f
}

/// Transmission energy `τ_u p(R)`, J.
pub fn tx_energy(r: f64, h: f64, sys: &SystemConfig, dev: &DeviceConfig) -> f64 {
    sys.uplink_time() * power_from_rate_unchecked(r, h, dev.bandwidth, sys.noise_psd_eff())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBounds {
    /// One pattern per slot, `n / τ_u`.
    pub min: f64,
    /// Tighter of the encoding-CPU and the max-power limits.
    pub max: f64,
}

impl RateBounds {
    pub fn feasible(&self) -> bool {
        self.min <= self.max
    }
}

/// Physical rate range for encoding level `bits` on channel `h`. An empty
/// range (`min > max`) means the level cannot carry a pattern this slot.
pub fn rate_bounds(bits: f64, h: f64, sys: &SystemConfig, dev: &DeviceConfig) -> RateBounds {
    let tau_u = sys.uplink_time();
    let tau_e = sys.encode_time();
    let encode_limit = tau_e * bits * dev.max_local_freq / (tau_u * dev.encode_cycles);
    let b = dev.bandwidth;
    let radio_limit = b * (h * dev.max_tx_power / (sys.noise_psd_eff() * b)).ln_1p() / LN_2;
    RateBounds {
        min: bits / tau_u,
        max: encode_limit.min(radio_limit),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Scenario;

    fn reference() -> (SystemConfig, DeviceConfig) {
        let sc = Scenario::reference();
        (sc.system, sc.devices[0].clone())
    }

    #[test]
    fn unit_snr_gives_bandwidth() {
        let (b, n0, h) = (1e6, 1e-20, 1e-10);
        let p = n0 * b / h;
        let r = rate_from_power(p, h, b, n0).unwrap();
        assert!((r - 1e6).abs() < 1e-6);
        assert_eq!(rate_from_power(0.0, h, b, n0).unwrap(), 0.0);
        assert!(rate_from_power(f64::NAN, h, b, n0).is_err());
        assert!(rate_from_power(1.0, f64::INFINITY, b, n0).is_err());
    }

    #[test]
    fn inverse_at_simple_points() {
        let (b, n0, h) = (2e6, 3e-20, 4e-11);
        assert_eq!(power_from_rate(0.0, h, b, n0).unwrap(), 0.0);
        let p = power_from_rate(b, h, b, n0).unwrap();
        assert!((p - n0 * b / h).abs() <= 1e-14 * p);
    }

    #[test]
    fn local_frequency_matches_direct_evaluation() {
        let (sys, mut dev) = reference();
        dev.encode_cycles = 5e5;
        let f = local_freq_from_rate(8e8, 4e5, &sys, &dev).unwrap();
        assert!((f - 1e9).abs() < 1e-3);
        assert_eq!(local_freq_from_rate(0.0, 4e5, &sys, &dev).unwrap(), 0.0);
        assert!(local_freq_from_rate(1.0, 0.0, &sys, &dev).is_err());
    }

    #[test]
    fn pattern_counts() {
        assert_eq!(patterns_tx(8e6, 1e5, 0.0125), 1);
        assert_eq!(patterns_tx(3.3e7, 4e5, 0.0125), 1);
        assert_eq!(patterns_tx(3.19e7, 4e5, 0.0125), 0);
        assert_eq!(patterns_classified(0.0, 1e7, 0.025), 0);
        assert_eq!(patterns_classified(1e10, 1e7, 0.025), 25);
        assert_eq!(patterns_classified(4e9, 1e7, 0.025), 10);
    }

    #[test]
    fn encode_energy_reference_value() {
        let (sys, dev) = reference();
        assert_eq!(encode_energy(0.0, 4e5, &sys, &dev), 0.0);
        let e = encode_energy(8e8, 4e5, &sys, &dev);
        assert!((e - 0.0125).abs() <= 1e-12 * 0.0125, "{e}");
        let e2 = encode_energy(1.6e9, 4e5, &sys, &dev);
        assert!((e2 / e - 8.0).abs() < 1e-12);
        assert_eq!(encode_energy(1.0, 0.0, &sys, &dev), 0.0);
    }

    #[test]
    fn tx_energy_simple_points() {
        let (sys, dev) = reference();
        let h = 1e-9;
        assert_eq!(tx_energy(0.0, h, &sys, &dev), 0.0);
        let e = tx_energy(dev.bandwidth, h, &sys, &dev);
        let expected = sys.uplink_time() * sys.noise_psd_eff() * dev.bandwidth / h;
        assert!((e - expected).abs() <= 1e-13 * expected);
    }

    #[test]
    fn bounds() {
        let (sys, mut dev) = reference();
        dev.max_local_freq = 1e9;
        let rb = rate_bounds(4e5, 1e3, &sys, &dev);
        assert!((rb.min - 3.2e7).abs() < 1e-6);
        // h = 1e3 makes the radio limit enormous; the encoder binds.
        assert!((rb.max - 8e8).abs() < 1e-3);
        let deep_fade = rate_bounds(4e5, 1e-30, &sys, &dev);
        assert!(!deep_fade.feasible());
    }

    #[test]
    fn floor_count_snaps_exact_quotients() {
        assert_eq!(floor_count(2.9999999999999996), 3);
        assert_eq!(floor_count(2.5), 2);
        assert_eq!(floor_count(-1.0), 0);
        assert_eq!(floor_count(f64::NAN), 0);
    }
}
