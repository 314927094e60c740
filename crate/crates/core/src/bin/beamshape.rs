//! `beamshape` — beam patterns, γ sweeps and Monte Carlo SINR benchmarks
//! for shaped Capon beamformers.

use std::path::PathBuf;
use std::process::ExitCode;

use beamshape::commands::{run_montecarlo, run_pattern, run_sweep, Outcome};
use beamshape::output::fmt_g9;
use beamshape::config::{GammaGrid, Overrides, RunConfig};
use beamshape::{Error, Options};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "beamshape", version, about)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; the built-in reference experiment if omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Monte Carlo trials.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Comma-separated DOA mismatches in degrees.
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    mismatch: Option<Vec<f64>>,
    /// Base RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Beam pattern of every configured method on one snapshot draw.
    Pattern,
    /// Monte Carlo SINR benchmark over the mismatch list.
    Montecarlo,
    /// SINR / sidelobe / MSPR versus γ on the held-out draws.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// Explicit comma-separated γ values (overrides the log grid).
    #[arg(long, value_delimiter = ',')]
    gammas: Option<Vec<f64>>,
    /// Lower end of the log γ grid.
    #[arg(long)]
    gamma_lo: Option<f64>,
    /// Upper end of the log γ grid.
    #[arg(long)]
    gamma_hi: Option<f64>,
    /// Grid points per decade.
    #[arg(long)]
    per_decade: Option<usize>,
}

impl SweepArgs {
    fn grid(&self, base: &GammaGrid) -> GammaGrid {
        if let Some(list) = &self.gammas {
            return GammaGrid::List(list.clone());
        }
        if self.gamma_lo.is_none() && self.gamma_hi.is_none() && self.per_decade.is_none() {
            return base.clone();
        }
        let (lo, hi, per_decade) = match base {
            GammaGrid::Log { lo, hi, per_decade } => (*lo, *hi, *per_decade),
            GammaGrid::List(_) => match GammaGrid::default() {
                GammaGrid::Log { lo, hi, per_decade } => (lo, hi, per_decade),
                GammaGrid::List(_) => unreachable!(),
            },
        };
        GammaGrid::Log {
            lo: self.gamma_lo.unwrap_or(lo),
            hi: self.gamma_hi.unwrap_or(hi),
            per_decade: self.per_decade.unwrap_or(per_decade),
        }
    }
}

fn load(common: &Common) -> beamshape::Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::reference(),
    };
    cfg.apply(&Overrides {
        output_dir: common.out.clone(),
        trials: common.trials,
        mismatch_list: common.mismatch.clone(),
        seed: common.seed,
    })?;
    Ok(cfg)
}

fn run(cli: &Cli) -> beamshape::Result<Outcome> {
    let cfg = load(&cli.common)?;
    let opts = Options::default();
    match &cli.command {
        Command::Pattern => run_pattern(&cfg, &opts),
        Command::Montecarlo => run_montecarlo(&cfg, &opts),
        Command::Sweep(args) => {
            let gammas = args.grid(&cfg.gamma_grid).values()?;
            run_sweep(&cfg, &gammas, &opts)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::Json(_) => 2,
        Error::Numerical(_) => 3,
        Error::Io(_) => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            for r in &outcome.reports {
                for m in &r.methods {
                    println!(
                        "mismatch {:>5} deg  {:<16} gamma {:<12} mean SINR {:>9.3} dB  (std {:.3}, failures {})",
                        r.mismatch_deg, m.kind.kind, fmt_g9(m.kind.gamma), m.mean_sinr_db, m.std_db, m.failures
                    );
                }
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("beamshape: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
