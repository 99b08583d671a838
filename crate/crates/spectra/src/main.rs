//! `spectra` — desk-scale eigenvalue experiments for matrix Schrodinger
//! operators on a box: resonance-domain classification, comparison and full
//! Galerkin spectra, iterated eigenvalue predictions checked against the
//! full solver, and resonance-set measure estimates.

// `!(x > 0.0)` rejects NaN where `x <= 0.0` would accept it
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

mod config;
mod pipeline;
mod potfile;
mod report;

use config::RunConfig;
use pipeline::Mode;

#[derive(Parser)]
#[command(
    name = "spectra",
    about = "Resonance-domain eigenvalue laboratory for -Delta + V(x) on a box",
    version
)]
struct Cli {
    #[command(subcommand)]
    mode: ModeArg,
}

#[derive(Subcommand)]
enum ModeArg {
    /// Classify lattice points in the rho shell into resonance domains.
    Classify(CommonArgs),
    /// Solve the 1D comparison problem T(P) and export its spectrum.
    Solve1d(CommonArgs),
    /// Diagonalise the full operator on the ball basis per rho.
    Solvefull(CommonArgs),
    /// Compute iterated eigenvalue predictions (no oracle comparison).
    Predict(CommonArgs),
    /// Predictions plus oracle matching, binding checks and error summary.
    Compare(CommonArgs),
    /// Monte Carlo estimate of the single-resonance measure fraction.
    Measure(CommonArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: config `output`, else `./out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the Monte Carlo seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the rho grid, e.g. `--rho 10,20,40`.
    #[arg(long, value_delimiter = ',')]
    rho: Option<Vec<f64>>,
    /// Override the highest prediction order.
    #[arg(long)]
    order: Option<u32>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match &cli.mode {
        ModeArg::Classify(a) => (Mode::Classify, a),
        ModeArg::Solve1d(a) => (Mode::Solve1d, a),
        ModeArg::Solvefull(a) => (Mode::SolveFull, a),
        ModeArg::Predict(a) => (Mode::Predict, a),
        ModeArg::Compare(a) => (Mode::Compare, a),
        ModeArg::Measure(a) => (Mode::Measure, a),
    };
    match execute(mode, args) {
        Ok(outcome) => {
            if outcome.guard_violations > 0 {
                eprintln!(
                    "completed with {} numerical guard violation(s); see manifest flags",
                    outcome.guard_violations
                );
                ExitCode::from(3)
            } else if outcome.no_match > 0 {
                eprintln!(
                    "completed with {} unmatched eigenvalue row(s); see manifest flags",
                    outcome.no_match
                );
                ExitCode::from(4)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            // configuration and input problems exit 2; anything else 1
            let config_error = err.chain().any(|c| {
                let s = c.to_string();
                s.contains("config") || s.contains("potential file")
            });
            if config_error {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn execute(mode: Mode, args: &CommonArgs) -> Result<pipeline::Outcome> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.params.measure_seed = seed;
    }
    if let Some(rho) = &args.rho {
        cfg.params.rho_grid = rho.clone();
    }
    if let Some(order) = args.order {
        cfg.params.order = order;
    }
    use anyhow::Context;
    cfg.validate().context("invalid configuration")?;
    let out_dir = args
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    pipeline::run(mode, &cfg, &out_dir)
}
