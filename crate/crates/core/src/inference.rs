//! Per-pattern classification outcomes drawn from the encoding profile.
//!
//! The edge classifier is not run; a pattern encoded at a given level gets
//! the level's entropy (optionally perturbed by Gaussian noise, clamped to
//! `[0, ln L]`) and is classified correctly with the level's accuracy.

use crate::error::{Error, Result};
use crate::profile::{EncodingLevel, EncodingProfile};
use crate::stochastic::RngStream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassificationOutcome {
    pub entropy: f64,
    pub correct: bool,
}

fn level(profile: &EncodingProfile, index: usize) -> Result<&EncodingLevel> {
    profile.level(index).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "unknown encoding level index {index} (profile has {})",
            profile.len()
        ))
    })
}

/// Realized entropy, nats. With `noise_std == 0` no randomness is drawn.
pub fn realize_entropy(
    profile: &EncodingProfile,
    index: usize,
    noise_std: f64,
    stream: &mut RngStream,
) -> Result<f64> {
    let lvl = level(profile, index)?;
    if noise_std == 0.0 {
        return Ok(lvl.entropy);
    }
    let h = lvl.entropy + noise_std * stream.standard_normal();
    Ok(h.clamp(0.0, profile.max_entropy()))
}

/// Bernoulli(accuracy) correctness draw.
pub fn realize_correctness(
    profile: &EncodingProfile,
    index: usize,
    stream: &mut RngStream,
) -> Result<bool> {
    let lvl = level(profile, index)?;
    Ok(stream.uniform() < lvl.accuracy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::EncodingLevel;
    use crate::stochastic::Purpose;

    fn stream() -> RngStream {
        RngStream::new(42, 0, Purpose::Entropy)
    }

    #[test]
    fn noiseless_entropy_is_the_profile_value() {
        let p = EncodingProfile::default_profile();
        let mut s = stream();
        assert_eq!(realize_entropy(&p, 8, 0.0, &mut s).unwrap(), 0.27);
        assert_eq!(realize_entropy(&p, 0, 0.0, &mut s).unwrap(), 0.88);
        assert!(realize_entropy(&p, 9, 0.0, &mut s).is_err());
    }

    #[test]
    fn certain_outcomes() {
        let lvl = |id, bits, h, a| EncodingLevel {
            level_id: id,
            bits_per_pattern: bits,
            entropy: h,
            accuracy: a,
        };
        let p = EncodingProfile::new(vec![lvl(1, 10, 1.0, 0.0), lvl(2, 20, 0.1, 1.0)], 10).unwrap();
        let mut s = stream();
        for _ in 0..1000 {
            assert!(!realize_correctness(&p, 0, &mut s).unwrap());
            assert!(realize_correctness(&p, 1, &mut s).unwrap());
        }
        assert!(realize_correctness(&p, 2, &mut s).is_err());
    }

    #[test]
    fn noisy_entropy_is_clamped() {
        let p = EncodingProfile::default_profile();
        let mut s = stream();
        for _ in 0..10_000 {
            let h = realize_entropy(&p, 8, 2.0, &mut s).unwrap();
            assert!((0.0..=p.max_entropy()).contains(&h));
        }
    }
}
