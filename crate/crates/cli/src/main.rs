//! `iontc`: command-line front end for the driven Tavis-Cummings simulator.

mod commands;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use table::Format;

#[derive(Debug, Parser)]
#[command(name = "iontc", version, about = "Driven Tavis-Cummings simulations of trapped ions")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,

    /// Interpret time flags and the t column in units of 1/Omega.
    #[arg(long, global = true)]
    scaled: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Track the zero-energy state over a grid of x = 2E/(N Omega).
    Scan(ScanArgs),
    /// Integrate the semiclassical equations, or an ensemble of noisy paths.
    Semiclassical(SemiclassicalArgs),
    /// Evolve the heating master equation from the ground state.
    Heat(HeatArgs),
    /// Ramp the drive and compare with the tracked instantaneous zero state.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScanArgs {
    #[arg(long)]
    pub n_ions: usize,
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    #[arg(long, default_value_t = 0.0)]
    pub x_min: f64,
    #[arg(long)]
    pub x_max: f64,
    #[arg(long)]
    pub x_step: f64,
    #[arg(long)]
    pub n_max: usize,
    /// Largest continuation step in x.
    #[arg(long, default_value_t = 0.02)]
    pub max_step: f64,
    /// Overlap below which continuation is declared lost.
    #[arg(long, default_value_t = 0.5)]
    pub min_overlap: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SemiclassicalArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub chi: f64,
    #[arg(long, default_value_t = 2.0)]
    pub n_ions: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub x0: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub y0: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub jx0: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub jy0: f64,
    /// Defaults to -N/2 (all ions down).
    #[arg(long, allow_hyphen_values = true)]
    pub jz0: Option<f64>,
    /// Start from the zero-energy fixed point instead of the given point.
    #[arg(long)]
    pub fixed_point: bool,
    #[arg(long, default_value_t = 10.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 0.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1)]
    pub n_traj: usize,
    /// Euler-Maruyama step (ensemble mode).
    #[arg(long, default_value = "1e-3")]
    pub dt: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Freeze the spin so only the oscillator moves.
    #[arg(long)]
    pub spin_frozen: bool,
    #[arg(long, default_value = "1e-9")]
    pub rel_tol: f64,
    #[arg(long, default_value = "1e-12")]
    pub abs_tol: f64,
    /// Output spacing; default every accepted step (deterministic) or 100 samples (ensemble).
    #[arg(long)]
    pub sample_dt: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HeatArgs {
    #[arg(long)]
    pub n_ions: usize,
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long)]
    pub n_max: usize,
    #[arg(long, default_value_t = 1.0)]
    pub t_end: f64,
    /// RK4 step; default 1e-3 / max(Omega, gamma, E).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Drive amplitude E; zero leaves the drive out.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub drive: f64,
    #[arg(long, default_value_t = 100)]
    pub sample_every: usize,
    /// Skip the per-sample smallest-eigenvalue diagonalization.
    #[arg(long)]
    pub no_min_eig: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub n_ions: usize,
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    #[arg(long)]
    pub x_final: f64,
    #[arg(long)]
    pub ramp_time: f64,
    #[arg(long, default_value_t = 0.02)]
    pub dt: f64,
    #[arg(long)]
    pub n_max: usize,
    /// Total time; default is the ramp time rounded up to a whole number of steps.
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long, default_value_t = 0.02)]
    pub max_step: f64,
    #[arg(long, default_value = "1e-6")]
    pub leak_tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub struct Global {
    pub format: Format,
    pub scaled: bool,
}

/// A failed run: message for stderr and the process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

impl From<iontc_core::Error> for Failure {
    fn from(e: iontc_core::Error) -> Self {
        match e {
            iontc_core::Error::InvalidArgument(_) => Failure::usage(e.to_string()),
            _ => Failure::runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::runtime(format!("writing output: {e}"))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            if !e.use_stderr() {
                return ExitCode::SUCCESS;
            }
            if !e.render().to_string().contains("Usage:") {
                eprintln!("Run 'iontc --help' for usage.");
            }
            return ExitCode::from(1);
        }
    };
    let g = Global { format: cli.format, scaled: cli.scaled };
    let res = match &cli.command {
        Command::Scan(a) => commands::scan(a, &g),
        Command::Semiclassical(a) => commands::semiclassical(a, &g),
        Command::Heat(a) => commands::heat(a, &g),
        Command::Sweep(a) => commands::sweep(a, &g),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("iontc: {}", f.message);
            if f.code == 1 {
                eprintln!("Run 'iontc --help' for usage.");
            }
            ExitCode::from(f.code)
        }
    }
}
