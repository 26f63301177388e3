//! Two-hop pattern queues, entropy virtual queues and long-term averages.
//!
//! Per device, the local queue holds raw patterns waiting to be encoded and
//! sent, and the remote queue at the edge host holds encoded patterns waiting
//! to be classified:
//!
//! ```text
//! Q^u(t+1) = max(0, Q^u(t) − N^u(t)) + A(t)
//! Q^r(t+1) = max(0, Q^r(t) − N^c(t)) + min(N^u(t), Q^u(t))
//! Z(t+1)   = max(0, Z(t) + ε_z Σ_{i classified in t} (H_i − H^th))
//! ```
//!
//! Queues keep one record per pattern (not just counters) because the
//! virtual-queue update needs the entropy of every classified pattern, which
//! depends on the level it was encoded with when it left the device.

use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatternRecord {
    pub arrival_slot: u64,
    /// Index into the device profile; set when the pattern is transmitted.
    pub level: Option<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct LocalQueue {
    records: VecDeque<PatternRecord>,
}

impl LocalQueue {
    pub fn backlog(&self) -> u64 {
        self.records.len() as u64
    }

    pub fn records(&self) -> impl Iterator<Item = &PatternRecord> {
        self.records.iter()
    }

    /// Serves `min(served, Q^u)` oldest patterns, then enqueues `arrivals`
    /// new patterns stamped with `slot`. Returns the departed records.
    pub fn update(&mut self, served: u64, arrivals: u64, slot: u64) -> Vec<PatternRecord> {
        let take = served.min(self.backlog()) as usize;
        let departed = self.records.drain(..take).collect();
        self.records.extend((0..arrivals).map(|_| PatternRecord {
            arrival_slot: slot,
            level: None,
        }));
        departed
    }
}

#[derive(Debug, Clone, Default)]
pub struct RemoteQueue {
    records: VecDeque<PatternRecord>,
}

impl RemoteQueue {
    pub fn backlog(&self) -> u64 {
        self.records.len() as u64
    }

    pub fn records(&self) -> impl Iterator<Item = &PatternRecord> {
        self.records.iter()
    }

    /// Pops `min(served, Q^r)` oldest patterns for classification, then
    /// enqueues the patterns that arrived over the uplink.
    ///
    /// # Panics
    ///
    /// If an arriving record carries no encoding level.
    pub fn update(&mut self, served: u64, arriving: Vec<PatternRecord>) -> Vec<PatternRecord> {
        let take = served.min(self.backlog()) as usize;
        let classified = self.records.drain(..take).collect();
        for r in &arriving {
            assert!(r.level.is_some(), "remote queue record without encoding level");
        }
        self.records.extend(arriving);
        classified
    }
}

/// Entropy virtual queue, in nat·pattern units scaled by ε_z.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VirtualQueue {
    value: f64,
}

impl VirtualQueue {
    pub fn new(value: f64) -> Self {
        Self {
            value: value.max(0.0),
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// An empty set of entropies leaves the queue unchanged.
    pub fn update<I>(&mut self, entropies: I, threshold: f64, step: f64)
    where
        I: IntoIterator<Item = f64>,
    {
        let mut excess = 0.0;
        let mut any = false;
        for h in entropies {
            excess += h - threshold;
            any = true;
        }
        if any {
            self.value = (self.value + step * excess).max(0.0);
        }
    }
}

/// `½ Σ_k [(Q^u)² + (Q^r)² + Z²]`.
pub fn lyapunov_value<I>(queues: I) -> f64
where
    I: IntoIterator<Item = (f64, f64, f64)>,
{
    0.5 * queues
        .into_iter()
        .map(|(qu, qr, z)| qu * qu + qr * qr + z * z)
        .sum::<f64>()
}

/// Post-warmup time averages for one device.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunningAverages {
    pub slots: u64,
    sum_local: f64,
    sum_remote: f64,
    sum_arrivals: f64,
    sum_encode_energy: f64,
    sum_tx_energy: f64,
    entropy_sum: f64,
    correct: u64,
    classified: u64,
    delay_sum: u64,
}

impl RunningAverages {
    /// Records one slot: start-of-slot backlogs, arrivals and energies.
    pub fn record_slot(&mut self, local: u64, remote: u64, arrivals: u64, encode: f64, tx: f64) {
        self.slots += 1;
        self.sum_local += local as f64;
        self.sum_remote += remote as f64;
        self.sum_arrivals += arrivals as f64;
        self.sum_encode_energy += encode;
        self.sum_tx_energy += tx;
    }

    /// Records one classified pattern; `delay_slots` = classification slot −
    /// arrival slot.
    pub fn record_classified(&mut self, entropy: f64, correct: bool, delay_slots: u64) {
        self.classified += 1;
        self.entropy_sum += entropy;
        self.correct += u64::from(correct);
        self.delay_sum += delay_slots;
    }

    fn per_slot(&self, sum: f64) -> f64 {
        if self.slots == 0 {
            0.0
        } else {
            sum / self.slots as f64
        }
    }

    pub fn mean_local_backlog(&self) -> f64 {
        self.per_slot(self.sum_local)
    }

    pub fn mean_remote_backlog(&self) -> f64 {
        self.per_slot(self.sum_remote)
    }

    pub fn mean_arrivals(&self) -> f64 {
        self.per_slot(self.sum_arrivals)
    }

    pub fn mean_encode_energy(&self) -> f64 {
        self.per_slot(self.sum_encode_energy)
    }

    pub fn mean_tx_energy(&self) -> f64 {
        self.per_slot(self.sum_tx_energy)
    }

    pub fn classified(&self) -> u64 {
        self.classified
    }

    pub fn mean_entropy(&self) -> Option<f64> {
        (self.classified > 0).then(|| self.entropy_sum / self.classified as f64)
    }

    pub fn accuracy(&self) -> Option<f64> {
        (self.classified > 0).then(|| self.correct as f64 / self.classified as f64)
    }

    /// Mean per-pattern delay in slots.
    pub fn mean_delay_slots(&self) -> Option<f64> {
        (self.classified > 0).then(|| self.delay_sum as f64 / self.classified as f64)
    }

    /// Little's-law delay `τ (Q̄^u + Q̄^r) / Ā`, seconds; absent without
    /// arrivals.
    pub fn little_delay(&self, tau: f64) -> Option<f64> {
        let arrivals = self.mean_arrivals();
        (arrivals > 0.0)
            .then(|| tau * (self.mean_local_backlog() + self.mean_remote_backlog()) / arrivals)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Stability {
    Stable { slope: f64 },
    Drifting { slope: f64 },
}

impl Stability {
    pub fn slope(&self) -> f64 {
        match *self {
            Stability::Stable { slope } | Stability::Drifting { slope } => slope,
        }
    }

    pub fn is_drifting(&self) -> bool {
        matches!(self, Stability::Drifting { .. })
    }
}

/// t-statistic a positive slope must exceed to count as a trend.
pub const TREND_T_STAT: f64 = 3.0;

/// Least-squares trend test on the post-warmup part of a backlog series.
///
/// A series is drifting when its fitted slope exceeds `threshold` and the
/// slope is significant (t-statistic above [`TREND_T_STAT`]). This is a
/// finite-horizon diagnostic, not a proof of (in)stability.
pub fn stability_diagnostic(series: &[f64], warmup: usize, threshold: f64) -> Result<Stability> {
    if series.len() < 2 * warmup || series.len() < warmup + 2 {
        return Err(Error::InvalidArgument(format!(
            "series of {} samples is too short for a warmup of {warmup}",
            series.len()
        )));
    }
    let tail = &series[warmup..];
    let n = tail.len() as f64;
    let mean_x = (n - 1.0) / 2.0;
    let mean_y = tail.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (i, &y) in tail.iter().enumerate() {
        let dx = i as f64 - mean_x;
        sxx += dx * dx;
        sxy += dx * (y - mean_y);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let sse: f64 = tail
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let r = y - (intercept + slope * i as f64);
            r * r
        })
        .sum();
    let significant = if n > 2.0 {
        let se = (sse / (n - 2.0) / sxx).sqrt();
        se == 0.0 || slope / se > TREND_T_STAT
    } else {
        true
    };
    Ok(if slope > threshold && significant {
        Stability::Drifting { slope }
    } else {
        Stability::Stable { slope }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn local_with(n: u64) -> LocalQueue {
        let mut q = LocalQueue::default();
        q.update(0, n, 0);
        q
    }

    #[test]
    fn local_update_examples() {
        let mut q = local_with(5);
        let gone = q.update(3, 2, 1);
        assert_eq!((q.backlog(), gone.len()), (4, 3));

        let mut q = local_with(1);
        let gone = q.update(3, 0, 1);
        assert_eq!((q.backlog(), gone.len()), (0, 1));

        let mut q = LocalQueue::default();
        assert!(q.update(0, 7, 4).is_empty());
        assert_eq!(q.backlog(), 7);
        assert!(q.records().all(|r| r.arrival_slot == 4));
    }

    fn tagged(n: usize) -> Vec<PatternRecord> {
        (0..n)
            .map(|i| PatternRecord {
                arrival_slot: i as u64,
                level: Some(0),
            })
            .collect()
    }

    #[test]
    fn remote_update_examples() {
        let mut q = RemoteQueue::default();
        q.update(0, tagged(10));
        let done = q.update(25, tagged(2));
        assert_eq!((q.backlog(), done.len()), (2, 10));

        let mut q = RemoteQueue::default();
        assert!(q.update(5, Vec::new()).is_empty());
        assert_eq!(q.backlog(), 0);
    }

    #[test]
    fn fifo_order() {
        let mut q = LocalQueue::default();
        for slot in 0..5 {
            q.update(0, 2, slot);
        }
        let out = q.update(4, 0, 5);
        let slots: Vec<u64> = out.iter().map(|r| r.arrival_slot).collect();
        assert_eq!(slots, vec![0, 0, 1, 1]);
    }

    #[test]
    #[should_panic(expected = "without encoding level")]
    fn remote_rejects_untagged() {
        RemoteQueue::default().update(0, vec![PatternRecord { arrival_slot: 0, level: None }]);
    }

    #[test]
    fn virtual_queue_examples() {
        let mut z = VirtualQueue::new(0.5);
        z.update([0.3], 0.4, 1.0);
        assert!((z.value() - 0.4).abs() < 1e-15);

        let mut z = VirtualQueue::default();
        z.update([0.4, 0.4, 0.4], 0.4, 1.0);
        assert_eq!(z.value(), 0.0);

        let mut z = VirtualQueue::default();
        z.update([0.9, 0.9], 0.4, 1.0);
        assert!((z.value() - 1.0).abs() < 1e-15);

        let mut z = VirtualQueue::new(0.2);
        z.update([0.0; 4], 0.6, 2.0);
        assert_eq!(z.value(), 0.0);

        let mut z = VirtualQueue::new(3.0);
        z.update(std::iter::empty(), 0.4, 1.0);
        assert_eq!(z.value(), 3.0);
    }

    #[test]
    fn lyapunov_examples() {
        assert_eq!(lyapunov_value([(3.0, 4.0, 0.0)]), 12.5);
        assert_eq!(lyapunov_value([(0.0, 0.0, 0.0)]), 0.0);
        assert_eq!(lyapunov_value([(1.0, 1.0, 1.0), (2.0, 2.0, 2.0)]), 7.5);
    }

    #[test]
    fn little_delay_formula() {
        let mut avg = RunningAverages::default();
        avg.record_slot(5, 3, 2, 0.0, 0.0);
        assert!((avg.little_delay(0.025).unwrap() - 0.1).abs() < 1e-15);
        let mut none = RunningAverages::default();
        none.record_slot(5, 3, 0, 0.0, 0.0);
        assert_eq!(none.little_delay(0.025), None);
    }

    #[test]
    fn stability_examples() {
        let flat = vec![4.0; 100];
        assert_eq!(stability_diagnostic(&flat, 10, 1e-2).unwrap(), Stability::Stable { slope: 0.0 });
        let ramp: Vec<f64> = (0..100).map(f64::from).collect();
        let s = stability_diagnostic(&ramp, 10, 1e-2).unwrap();
        assert!(s.is_drifting());
        assert!((s.slope() - 1.0).abs() < 1e-12);
        assert!(stability_diagnostic(&ramp[..15], 10, 1e-2).is_err());
    }
}
