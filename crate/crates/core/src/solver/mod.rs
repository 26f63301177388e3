//! Per-slot drift-plus-penalty control.
//!
//! Minimizing the per-slot upper bound of the drift-plus-penalty splits into
//! one encoding/radio subproblem per device ([`radio`]) and a single edge CPU
//! allocation problem ([`cpu`]).

pub mod cpu;
pub mod radio;

pub use cpu::{cpu_objective, schedule_cpu, CpuDemand};
pub use radio::{
    radio_objective, rate_range, solve_radio, solve_rate_for_level, stationarity_residual,
    RadioChoice, RadioSolution, RadioSubproblemInput,
};
