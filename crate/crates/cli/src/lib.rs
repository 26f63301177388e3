//! `edgeinfer` command line.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 output I/O
//! error, 4 invalid encoding profile, 5 oracle failure.

pub mod output;

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use edgeinfer::oracle::{self, OracleOptions, OracleReport};
use edgeinfer::solver::{CpuDemand, RadioSolution, RadioSubproblemInput};
use edgeinfer::{sim, EncodingProfile, ProfileError, Scenario};

use output::{Format, SummaryRow};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_PROFILE: u8 = 4;
pub const EXIT_ORACLE: u8 = 5;

#[derive(Debug, Parser)]
#[command(name = "edgeinfer", version, about = "Energy-efficient edge classification simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one scenario and write trace and summary files.
    Run(RunArgs),
    /// Run the scenario once per V and write the trade-off table.
    Sweep(SweepArgs),
    /// Check an encoding profile's ranges and monotonicity assumptions.
    ValidateProfile(ProfileArgs),
    /// Compare the solvers with brute-force oracles.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// Comma-separated V values; replaces the configured or automatic grid.
    #[arg(long, value_delimiter = ',')]
    pub v_grid: Option<Vec<f64>>,
    /// Run grid points in parallel (results are identical either way).
    #[arg(long)]
    pub parallel: Option<bool>,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    /// Profile file (`.csv` or `.json`).
    pub profile: PathBuf,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, default_value_t = OracleOptions::default().seed)]
    pub seed: u64,
    #[arg(long, default_value_t = OracleOptions::default().radio_instances)]
    pub radio_instances: usize,
    #[arg(long, default_value_t = OracleOptions::default().grid_points)]
    pub grid_points: usize,
    #[arg(long, default_value_t = OracleOptions::default().cpu_instances)]
    pub cpu_instances: usize,
    #[arg(long, default_value_t = OracleOptions::default().random_allocations)]
    pub allocations: usize,
    /// Print the report as a table or as JSON.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

impl OracleArgs {
    pub fn options(&self) -> OracleOptions {
        OracleOptions {
            seed: self.seed,
            radio_instances: self.radio_instances,
            grid_points: self.grid_points,
            cpu_instances: self.cpu_instances,
            random_allocations: self.allocations,
            ..OracleOptions::default()
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl CliError {
    fn io(path: &Path, err: std::io::Error) -> Self {
        Self {
            code: EXIT_IO,
            message: format!("cannot write {}: {err}", path.display()),
        }
    }
}

impl From<edgeinfer::Error> for CliError {
    fn from(err: edgeinfer::Error) -> Self {
        let code = match &err {
            edgeinfer::Error::Profile(ProfileError::Invalid(_)) => EXIT_PROFILE,
            _ => EXIT_CONFIG,
        };
        Self {
            code,
            message: err.to_string(),
        }
    }
}

fn load_scenario(common: &Common) -> Result<Scenario, CliError> {
    let mut scenario = Scenario::load(&common.config)?;
    if let Some(seed) = common.seed {
        scenario.set_seed(seed);
    }
    Ok(scenario)
}

fn prepare_out(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let scenario = load_scenario(&args.common)?;
    let result = sim::run(&scenario)?;
    let out = &args.common.out;
    prepare_out(out)?;
    let fmt = args.common.format;
    output::write_rows(out, "trace", &output::trace_rows(&result), fmt)
        .map_err(|e| CliError::io(out, e))?;
    let summary: Vec<SummaryRow> = result.summaries.iter().map(SummaryRow::from).collect();
    let path =
        output::write_rows(out, "summary", &summary, fmt).map_err(|e| CliError::io(out, e))?;
    println!(
        "{} slots x {} devices (seed {}) -> {}",
        scenario.system.horizon,
        scenario.num_devices(),
        result.seed,
        path.display()
    );
    Ok(())
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let mut scenario = load_scenario(&args.common)?;
    if let Some(grid) = &args.v_grid {
        scenario.sweep.v_grid = Some(grid.clone());
    }
    if let Some(p) = args.parallel {
        scenario.sweep.parallel = p;
    }
    scenario.validate()?;
    let grid = sim::v_grid(&scenario)?;
    let result = sim::sweep(&scenario, &grid)?;
    let out = &args.common.out;
    prepare_out(out)?;
    let path = output::write_rows(out, "sweep", &output::sweep_rows(&result), args.common.format)
        .map_err(|e| CliError::io(out, e))?;
    println!("{} V points x {} devices -> {}", grid.len(), scenario.num_devices(), path.display());
    Ok(())
}

pub fn cmd_validate_profile(args: &ProfileArgs) -> Result<(), CliError> {
    let profile = EncodingProfile::load(&args.profile).map_err(|e| CliError {
        code: match e {
            ProfileError::Invalid(_) => EXIT_PROFILE,
            ProfileError::Parse(_) => EXIT_CONFIG,
        },
        message: e.to_string(),
    })?;
    println!(
        "{}: {} levels, {} labels, ok",
        args.profile.display(),
        profile.len(),
        profile.labels()
    );
    Ok(())
}

/// Runs the oracle suite against the given solvers and prints the report.
pub fn cmd_oracle_with<R, C>(args: &OracleArgs, radio: R, cpu: C) -> Result<OracleReport, CliError>
where
    R: Fn(&RadioSubproblemInput) -> RadioSolution,
    C: Fn(&[CpuDemand], f64, f64) -> Vec<f64>,
{
    let report = oracle::run_oracle_with(&args.options(), radio, cpu);
    match args.format {
        Format::Csv => print!("{report}"),
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(&report).expect("report serializes")
        ),
    }
    if report.passed() {
        Ok(report)
    } else {
        Err(CliError {
            code: EXIT_ORACLE,
            message: "oracle check failed".into(),
        })
    }
}

pub fn cmd_oracle(args: &OracleArgs) -> Result<OracleReport, CliError> {
    cmd_oracle_with(
        args,
        edgeinfer::solver::solve_radio,
        edgeinfer::solver::schedule_cpu,
    )
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::ValidateProfile(a) => cmd_validate_profile(a),
        Command::Oracle(a) => cmd_oracle(a).map(|_| ()),
    }
}

/// Parses `args` (program name first), runs the command and maps the outcome
/// to an exit code, reporting errors on stderr.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK });
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
