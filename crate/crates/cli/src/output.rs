//! Flat, plot-ready rows for the trace, summary and sweep files.
//!
//! Each row type serializes to JSON through serde and to CSV through
//! [`Row::fields`], which prints every float in scientific notation with 13
//! significant digits. Missing values are empty CSV cells and JSON nulls.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use edgeinfer::queueing::Stability;
use edgeinfer::sim::{DeviceSummary, RunResult, SweepResult};
use serde::Serialize;

pub trait Row: Serialize {
    const HEADER: &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

fn num(x: f64) -> String {
    format!("{x:.12e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn status(s: Option<Stability>) -> String {
    match s {
        Some(Stability::Stable { .. }) => "stable".into(),
        Some(Stability::Drifting { .. }) => "drifting".into(),
        None => String::new(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub slot: u64,
    pub device: usize,
    pub local_backlog: u64,
    pub remote_backlog: u64,
    pub virtual_queue: f64,
    pub lyapunov: f64,
    pub gain: f64,
    pub arrivals: u64,
    pub level: Option<u32>,
    pub rate: f64,
    pub tx_power: f64,
    pub local_freq: f64,
    pub remote_freq: f64,
    pub encode_energy: f64,
    pub tx_energy: f64,
    pub tx_patterns: u64,
    pub classify_capacity: u64,
    pub classified: u64,
    pub classified_entropy_mean: Option<f64>,
    pub running_entropy: Option<f64>,
    pub running_accuracy: Option<f64>,
}

impl Row for TraceRow {
    const HEADER: &'static [&'static str] = &[
        "slot",
        "device",
        "local_backlog",
        "remote_backlog",
        "virtual_queue",
        "lyapunov",
        "gain",
        "arrivals",
        "level",
        "rate",
        "tx_power",
        "local_freq",
        "remote_freq",
        "encode_energy",
        "tx_energy",
        "tx_patterns",
        "classify_capacity",
        "classified",
        "classified_entropy_mean",
        "running_entropy",
        "running_accuracy",
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            self.slot.to_string(),
            self.device.to_string(),
            self.local_backlog.to_string(),
            self.remote_backlog.to_string(),
            num(self.virtual_queue),
            num(self.lyapunov),
            num(self.gain),
            self.arrivals.to_string(),
            self.level.map(|l| l.to_string()).unwrap_or_default(),
            num(self.rate),
            num(self.tx_power),
            num(self.local_freq),
            num(self.remote_freq),
            num(self.encode_energy),
            num(self.tx_energy),
            self.tx_patterns.to_string(),
            self.classify_capacity.to_string(),
            self.classified.to_string(),
            opt(self.classified_entropy_mean),
            opt(self.running_entropy),
            opt(self.running_accuracy),
        ]
    }
}

pub fn trace_rows(result: &RunResult) -> Vec<TraceRow> {
    result
        .trace
        .iter()
        .flat_map(|m| {
            m.devices.iter().map(move |d| TraceRow {
                slot: m.slot,
                device: d.device,
                local_backlog: d.local_backlog,
                remote_backlog: d.remote_backlog,
                virtual_queue: d.virtual_queue,
                lyapunov: m.lyapunov,
                gain: d.gain,
                arrivals: d.arrivals,
                level: d.level,
                rate: d.rate,
                tx_power: d.tx_power,
                local_freq: d.local_freq,
                remote_freq: d.remote_freq,
                encode_energy: d.encode_energy,
                tx_energy: d.tx_energy,
                tx_patterns: d.tx_patterns,
                classify_capacity: d.classify_capacity,
                classified: d.classified,
                classified_entropy_mean: d.classified_entropy_mean,
                running_entropy: d.running_entropy,
                running_accuracy: d.running_accuracy,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub device: usize,
    pub entropy_threshold: f64,
    pub distance: f64,
    pub energy: f64,
    pub encode_energy: f64,
    pub tx_energy: f64,
    pub local_backlog: f64,
    pub remote_backlog: f64,
    pub little_delay: Option<f64>,
    pub empirical_delay: Option<f64>,
    pub entropy: Option<f64>,
    pub accuracy: Option<f64>,
    pub classified: u64,
    pub final_virtual_queue: f64,
    pub virtual_queue_rate: f64,
    pub local_stability: String,
    pub local_slope: Option<f64>,
    pub remote_stability: String,
    pub remote_slope: Option<f64>,
    pub virtual_stability: String,
    pub virtual_slope: Option<f64>,
}

impl From<&DeviceSummary> for SummaryRow {
    fn from(s: &DeviceSummary) -> Self {
        Self {
            device: s.device,
            entropy_threshold: s.entropy_threshold,
            distance: s.distance,
            energy: s.mean_energy,
            encode_energy: s.mean_encode_energy,
            tx_energy: s.mean_tx_energy,
            local_backlog: s.mean_local_backlog,
            remote_backlog: s.mean_remote_backlog,
            little_delay: s.little_delay,
            empirical_delay: s.empirical_delay,
            entropy: s.mean_entropy,
            accuracy: s.accuracy,
            classified: s.classified,
            final_virtual_queue: s.final_virtual_queue,
            virtual_queue_rate: s.virtual_queue_rate,
            local_stability: status(s.local_stability),
            local_slope: s.local_stability.map(|x| x.slope()),
            remote_stability: status(s.remote_stability),
            remote_slope: s.remote_stability.map(|x| x.slope()),
            virtual_stability: status(s.virtual_stability),
            virtual_slope: s.virtual_stability.map(|x| x.slope()),
        }
    }
}

impl Row for SummaryRow {
    const HEADER: &'static [&'static str] = &[
        "device",
        "entropy_threshold",
        "distance",
        "energy",
        "encode_energy",
        "tx_energy",
        "local_backlog",
        "remote_backlog",
        "little_delay",
        "empirical_delay",
        "entropy",
        "accuracy",
        "classified",
        "final_virtual_queue",
        "virtual_queue_rate",
        "local_stability",
        "local_slope",
        "remote_stability",
        "remote_slope",
        "virtual_stability",
        "virtual_slope",
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            self.device.to_string(),
            num(self.entropy_threshold),
            num(self.distance),
            num(self.energy),
            num(self.encode_energy),
            num(self.tx_energy),
            num(self.local_backlog),
            num(self.remote_backlog),
            opt(self.little_delay),
            opt(self.empirical_delay),
            opt(self.entropy),
            opt(self.accuracy),
            self.classified.to_string(),
            num(self.final_virtual_queue),
            num(self.virtual_queue_rate),
            self.local_stability.clone(),
            opt(self.local_slope),
            self.remote_stability.clone(),
            opt(self.remote_slope),
            self.virtual_stability.clone(),
            opt(self.virtual_slope),
        ]
    }
}

/// One row of `sweep.csv`: energy in J per slot, delay in seconds
/// (Little's law), entropy in nats.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub v: f64,
    pub device: usize,
    pub energy: f64,
    pub delay: Option<f64>,
    pub entropy: Option<f64>,
    pub accuracy: Option<f64>,
}

impl Row for SweepRow {
    const HEADER: &'static [&'static str] =
        &["v", "device", "energy", "delay", "entropy", "accuracy"];

    fn fields(&self) -> Vec<String> {
        vec![
            num(self.v),
            self.device.to_string(),
            num(self.energy),
            opt(self.delay),
            opt(self.entropy),
            opt(self.accuracy),
        ]
    }
}

pub fn sweep_rows(result: &SweepResult) -> Vec<SweepRow> {
    result
        .points
        .iter()
        .flat_map(|p| {
            p.summaries.iter().map(move |s| SweepRow {
                v: p.penalty_weight,
                device: s.device,
                energy: s.mean_energy,
                delay: s.little_delay,
                entropy: s.mean_entropy,
                accuracy: s.accuracy,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

pub fn write_csv<R: Row, W: Write>(rows: &[R], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(R::HEADER)?;
    for r in rows {
        w.write_record(r.fields())?;
    }
    w.flush()
}

/// Writes `dir/<stem>.<csv|json>` and returns its path.
pub fn write_rows<R: Row>(
    dir: &Path,
    stem: &str,
    rows: &[R],
    format: Format,
) -> io::Result<std::path::PathBuf> {
    let path = dir.join(format!("{stem}.{}", format.extension()));
    let mut out = BufWriter::new(File::create(&path)?);
    match format {
        Format::Csv => write_csv(rows, &mut out)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, rows)?;
            out.write_all(b"\n")?;
        }
    }
    out.flush()?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_thirteen_significant_digits() {
        assert_eq!(num(0.1), "1.000000000000e-1");
        assert_eq!(num(1.0 / 3.0), "3.333333333333e-1");
        assert_eq!(opt(None), "");
    }

    #[test]
    fn sweep_schema() {
        let row = SweepRow {
            v: 1e4,
            device: 2,
            energy: 3e-5,
            delay: Some(0.06),
            entropy: None,
            accuracy: Some(0.5),
        };
        let mut buf = Vec::new();
        write_csv(&[row], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("v,device,energy,delay,entropy,accuracy"));
        assert_eq!(
            lines.next(),
            Some("1.000000000000e4,2,3.000000000000e-5,6.000000000000e-2,,5.000000000000e-1")
        );
    }
}
