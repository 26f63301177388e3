//! Energy-efficient classification at the wireless edge.
//!
//! A set of devices collects patterns (e.g. images), encodes them at a
//! selectable quality level and uploads them to an edge host that classifies
//! them. Every slot a drift-plus-penalty controller picks, per device, the
//! encoding level and the uplink rate (which fixes the local CPU frequency and
//! the transmit power), and splits the edge CPU among the devices. Physical
//! queues keep the end-to-end delay finite and a virtual queue per device
//! enforces a long-term bound on the average output entropy of the
//! classifier.
//!
//! Module map:
//!
//! - [`physics`]: closed-form rate, power, frequency, energy and pattern-count
//!   relations.
//! - [`profile`]: the finite set of encoding levels with their surrogate
//!   entropy and accuracy.
//! - [`config`] / [`units`]: scenario description and unit-suffixed parsing.
//! - [`stochastic`]: seeded channel and arrival generators.
//! - [`queueing`]: local/remote pattern queues, virtual queues, averages and
//!   stability diagnostics.
//! - [`inference`]: per-pattern entropy and correctness outcomes.
//! - [`solver`]: the per-slot radio/encoding subproblem and edge CPU
//!   scheduling.
//! - [`sim`]: the slot loop, runs and V sweeps.
//! - [`oracle`]: brute-force cross-checks of the solver, used by the CLI.

pub mod config;
pub mod error;
pub mod inference;
pub mod oracle;
pub mod physics;
pub mod profile;
pub mod queueing;
pub mod sim;
pub mod solver;
pub mod stochastic;
pub mod units;

pub use config::{DeviceConfig, Scenario, SweepConfig, SystemConfig};
pub use error::{Error, Result};
pub use profile::{EncodingLevel, EncodingProfile, ProfileError};
pub use sim::{run, sweep, DeviceSummary, RunResult, Simulator, SweepResult};
