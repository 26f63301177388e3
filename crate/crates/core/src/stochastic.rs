//! Seeded random context: channel gains, pattern arrivals, device placement.
//!
//! Every random sequence comes from a ChaCha8 generator keyed by the root
//! seed, with the 64-bit ChaCha stream id selecting the substream:
//!
//! ```text
//! stream id = (device_index << 8) | purpose       purpose: 0 channel
//!                                                          1 arrivals
//!                                                          2 entropy noise
//!                                                          3 correctness
//! stream id = u64::MAX                            device placement
//! ```
//!
//! Distinct stream ids give independent keystreams, so (seed, stream id,
//! draw index) fully determines every value and the channel/arrival
//! sequences of a run do not depend on the decisions taken in it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    Channel = 0,
    Arrivals = 1,
    Entropy = 2,
    Correctness = 3,
}

const PLACEMENT_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, device: usize, purpose: Purpose) -> Self {
        Self::with_stream_id(seed, ((device as u64) << 8) | purpose as u64)
    }

    pub fn with_stream_id(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Exp(1) by inversion.
    pub fn exponential(&mut self) -> f64 {
        -(1.0 - self.uniform()).ln()
    }

    /// Poisson(mean) by sequential inversion. Large means are split into
    /// independent chunks of at most 500 so that `e^{-mean}` never underflows;
    /// the sum of Poisson variables is Poisson, so the law stays exact.
    pub fn poisson(&mut self, mean: f64) -> u64 {
        if mean.is_nan() || mean <= 0.0 {
            return 0;
        }
        const CHUNK: f64 = 500.0;
        let chunks = (mean / CHUNK).ceil();
        let part = mean / chunks;
        (0..chunks as u64).map(|_| self.poisson_inversion(part)).sum()
    }

    fn poisson_inversion(&mut self, mean: f64) -> u64 {
        let u = self.uniform();
        let mut k = 0u64;
        let mut p = (-mean).exp();
        let mut cdf = p;
        while u >= cdf {
            k += 1;
            p *= mean / k as f64;
            let next = cdf + p;
            if next == cdf {
                // Tail below f64 resolution.
                break;
            }
            cdf = next;
        }
        k
    }
}

/// Path loss in dB: `33 + 25.5 log10(d) + 20 log10(fc)`, `d` in metres and
/// `fc` in GHz.
pub fn pathloss_db(distance: f64, carrier_ghz: f64) -> Result<f64> {
    if !(distance.is_finite() && distance > 0.0) {
        return Err(Error::InvalidArgument(format!("distance must be positive, got {distance}")));
    }
    if !(carrier_ghz.is_finite() && carrier_ghz > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "carrier frequency must be positive, got {carrier_ghz}"
        )));
    }
    Ok(33.0 + 25.5 * distance.log10() + 20.0 * carrier_ghz.log10())
}

/// Mean linear power gain `10^(−PL/10)`.
pub fn mean_gain(distance: f64, carrier_ghz: f64) -> Result<f64> {
    Ok(10f64.powf(-pathloss_db(distance, carrier_ghz)? / 10.0))
}

/// One block-fading draw: Rayleigh fading on top of path loss. The squared
/// magnitude of a unit circularly-symmetric complex Gaussian is Exp(1).
pub fn sample_channel(mean_gain: f64, stream: &mut RngStream) -> f64 {
    mean_gain * stream.exponential()
}

pub fn sample_arrivals(arrival_rate: f64, stream: &mut RngStream) -> u64 {
    stream.poisson(arrival_rate)
}

/// Distances of `count` devices placed uniformly over a disk of `radius`
/// around the access point.
pub fn placement_distances(seed: u64, count: usize, radius: f64) -> Vec<f64> {
    let mut stream = RngStream::with_stream_id(seed, PLACEMENT_STREAM);
    (0..count)
        .map(|_| radius * (1.0 - stream.uniform()).sqrt())
        .collect()
}
