//! Unit-suffixed quantities in configuration files.
//!
//! A quantity is either a bare number, taken to already be in SI units, or a
//! string `"<number> <unit>"`. Logarithmic units are converted on parse:
//!
//! | dimension | accepted units                         | stored as |
//! |-----------|----------------------------------------|-----------|
//! | power     | `W`, `mW`, `dBW`, `dBm`                | W         |
//! | time      | `s`, `ms`, `us`                        | s         |
//! | frequency | `Hz`, `kHz`, `MHz`, `GHz`              | Hz        |
//! | noise PSD | `W/Hz`, `dBW/Hz`, `dBm/Hz`             | W/Hz      |
//! | length    | `m`, `km`                              | m         |
//! | ratio     | `dB` (bare numbers are also dB)        | dB        |
//!
//! `x dBm = 10^(x/10) mW = 10^((x-30)/10) W`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Power,
    Time,
    Frequency,
    NoisePsd,
    Length,
    Decibel,
}

/// Raw config value: a number in SI units or a unit-suffixed string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Number(f64),
    Text(String),
}

impl From<f64> for Quantity {
    fn from(v: f64) -> Self {
        Quantity::Number(v)
    }
}

impl From<&str> for Quantity {
    fn from(s: &str) -> Self {
        Quantity::Text(s.to_owned())
    }
}

impl Quantity {
    pub fn to_si(&self, dim: Dimension) -> Result<f64> {
        match self {
            Quantity::Number(v) => Ok(*v),
            Quantity::Text(s) => parse_quantity(s, dim),
        }
    }
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

pub fn parse_quantity(text: &str, dim: Dimension) -> Result<f64> {
    let text = text.trim();
    let split = text
        .find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E')
        .unwrap_or(text.len());
    let (num, unit) = text.split_at(split);
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| Error::config(format!("cannot parse quantity `{text}`")))?;
    let unit = unit.trim();

    let si = match (dim, unit) {
        (Dimension::Power, "W") => value,
        (Dimension::Power, "mW") => value * 1e-3,
        (Dimension::Power, "dBW") => db_to_linear(value),
        (Dimension::Power, "dBm") => dbm_to_watts(value),
        (Dimension::Time, "s") => value,
        (Dimension::Time, "ms") => value * 1e-3,
        (Dimension::Time, "us") => value * 1e-6,
        (Dimension::Frequency, "Hz") => value,
        (Dimension::Frequency, "kHz") => value * 1e3,
        (Dimension::Frequency, "MHz") => value * 1e6,
        (Dimension::Frequency, "GHz") => value * 1e9,
        (Dimension::NoisePsd, "W/Hz") => value,
        (Dimension::NoisePsd, "dBW/Hz") => db_to_linear(value),
        (Dimension::NoisePsd, "dBm/Hz") => dbm_to_watts(value),
        (Dimension::Length, "m") => value,
        (Dimension::Length, "km") => value * 1e3,
        (Dimension::Decibel, "dB") => value,
        (_, "") => value,
        _ => {
            return Err(Error::config(format!(
                "unit `{unit}` is not valid for a {dim:?} quantity (`{text}`)"
            )))
        }
    };
    if si.is_finite() {
        Ok(si)
    } else {
        Err(Error::config(format!("quantity `{text}` is not finite")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs()
    }

    #[test]
    fn power_units() {
        assert!(close(parse_quantity("20 dBm", Dimension::Power).unwrap(), 0.1));
        assert!(close(parse_quantity("0dBW", Dimension::Power).unwrap(), 1.0));
        assert!(close(parse_quantity("250 mW", Dimension::Power).unwrap(), 0.25));
    }

    #[test]
    fn psd_and_frequency() {
        let n0 = parse_quantity("-174 dBm/Hz", Dimension::NoisePsd).unwrap();
        assert!(close(n0, 10f64.powf(-20.4)));
        assert!(close(parse_quantity("3.5 GHz", Dimension::Frequency).unwrap(), 3.5e9));
        assert!(close(parse_quantity("1e2 MHz", Dimension::Frequency).unwrap(), 1e8));
    }

    #[test]
    fn time_and_bare_numbers() {
        assert!(close(parse_quantity("25 ms", Dimension::Time).unwrap(), 0.025));
        assert_eq!(parse_quantity("0.5", Dimension::Time).unwrap(), 0.5);
        assert_eq!(Quantity::Number(7.0).to_si(Dimension::Length).unwrap(), 7.0);
    }

    #[test]
    fn rejects_wrong_dimension() {
        assert!(parse_quantity("20 dBm", Dimension::Time).is_err());
        assert!(parse_quantity("fast", Dimension::Time).is_err());
    }
}
