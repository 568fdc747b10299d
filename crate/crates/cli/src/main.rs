mod commands;
mod config;

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Result};
use atompair::montecarlo::ScanOptions;
use clap::{Args, Parser, Subcommand};

use commands::FringeState;

/// Simulate and analyse heralded two-atom entanglement experiments.
#[derive(Parser)]
#[command(name = "atompair", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Sampling {
    /// RNG seed; falls back to the config, then to a random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Parallel shards per point. The output does not depend on it.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..=1024))]
    shards: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Witness probability against phase difference (CSV).
    Fringe {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 9, value_parser = clap::value_parser!(u64).range(2..))]
        points: u64,
        /// Heralds per phase point.
        #[arg(long, default_value_t = 20_000, value_parser = clap::value_parser!(u64).range(1..))]
        heralds: u64,
        #[arg(long, value_enum, default_value_t = FringeState::Heralded)]
        state: FringeState,
        #[command(flatten)]
        sampling: Sampling,
        /// Output file; standard output if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Witness probability against delay in a field gradient (CSV plus a
    /// JSON period fit next to it).
    DelayScan {
        #[arg(long)]
        config: PathBuf,
        /// Set phase difference: 0, pi/2, pi, 3pi/2 or a number in radians.
        #[arg(long, default_value = "0", value_parser = parse_phase)]
        dphi: f64,
        /// Overrides the configured gradient, mT/m.
        #[arg(long)]
        gradient: Option<f64>,
        #[arg(long, default_value_t = 41, value_parser = clap::value_parser!(u64).range(2..))]
        points: u64,
        #[arg(long, default_value_t = 20.0)]
        tau_max_ms: f64,
        #[arg(long, default_value_t = 200_000, value_parser = clap::value_parser!(u64).range(1..))]
        heralds: u64,
        #[command(flatten)]
        sampling: Sampling,
        /// Output CSV; the report goes to the same path with a .json extension.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a fringe CSV (columns delta_phi_rad, n_witness, n_heralds) and
    /// print the fit as JSON.
    Fit {
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Herald and witness rates for a configuration (JSON).
    Budget {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the calibration table through a simulated Michelson readout (JSON).
    Calibrate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 20_001, value_parser = clap::value_parser!(u64).range(2..))]
        samples: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parity oscillation of the heralded state (CSV plus a JSON concurrence
    /// estimate).
    Parity {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u64).range(2..))]
        points: u64,
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
        shots: u64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Zero-delay g2 for a photon indistinguishability m.
    G2 {
        #[arg(long, default_value_t = 1.0)]
        m: f64,
    },
}

fn parse_phase(s: &str) -> Result<f64, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "0" => Ok(0.0),
        "pi/2" => Ok(FRAC_PI_2),
        "pi" => Ok(PI),
        "3pi/2" => Ok(3.0 * FRAC_PI_2),
        other => other
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| format!("expected 0, pi/2, pi, 3pi/2 or radians, got `{s}`")),
    }
}

fn resolve_seed(flag: Option<u64>, config: Option<u64>) -> u64 {
    flag.or(config).unwrap_or_else(|| {
        let seed = rand::random::<u64>();
        eprintln!("seed: {seed}");
        seed
    })
}

fn scan_options(heralds: u64, sampling: &Sampling, config_seed: Option<u64>) -> ScanOptions {
    ScanOptions::new(heralds, resolve_seed(sampling.seed, config_seed)).with_shards(sampling.shards as usize)
}

fn sidecar(out: &Path) -> PathBuf {
    out.with_extension("json")
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fringe { config, points, heralds, state, sampling, out } => {
            let cfg = config::load(&config)?;
            let opts = scan_options(heralds, &sampling, cfg.seed);
            let csv = commands::fringe(&cfg, state, points as usize, &opts)?;
            commands::emit(out.as_deref(), &csv)
        }
        Command::DelayScan { config, dphi, gradient, points, tau_max_ms, heralds, sampling, out } => {
            let mut cfg = config::load(&config)?;
            if let Some(g) = gradient {
                if !g.is_finite() {
                    bail!("--gradient must be finite");
                }
                cfg.gradiometer = cfg.gradiometer.with_gradient(g / 1e3);
            }
            let opts = scan_options(heralds, &sampling, cfg.seed);
            let scan = commands::delay_scan(&cfg, dphi, points as usize, tau_max_ms, &opts)?;
            commands::emit(Some(&out), &scan.csv)?;
            commands::emit(Some(&sidecar(&out)), &scan.report)
        }
        Command::Fit { data, out } => commands::emit(out.as_deref(), &commands::fit(&data)?),
        Command::Budget { config, out } => {
            let cfg = config::load(&config)?;
            commands::emit(out.as_deref(), &commands::budget(&cfg)?)
        }
        Command::Calibrate { config, samples, out } => {
            let cfg = config::load(&config)?;
            commands::emit(out.as_deref(), &commands::calibrate(&cfg, samples as usize)?)
        }
        Command::Parity { config, points, shots, seed, out } => {
            let cfg = config::load(&config)?;
            let seed = resolve_seed(seed, cfg.seed);
            let scan = commands::parity(&cfg, points as usize, shots, seed)?;
            commands::emit(Some(&out), &scan.csv)?;
            commands::emit(Some(&sidecar(&out)), &scan.report)
        }
        Command::G2 { m } => commands::emit(None, &commands::g2(m)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
