//! Command-line front end: single runs, stabilization sweeps, and the
//! contraction classifier.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use config::{parse_config, parse_problem, RawConfig};

#[derive(Parser)]
#[command(
    name = "pfrac",
    about = "2D quasi-static phase-field brittle fracture solver (stabilized staggered scheme)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Configuration shared by all subcommands: an optional key=value file and
/// per-key flag overrides (flags win).
#[derive(Args, Clone, Debug, Default)]
struct ConfigArgs {
    /// Flat key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Benchmark problem: tension, shear, or lshape.
    #[arg(long)]
    problem: Option<String>,
    /// Mesh refinement level.
    #[arg(long)]
    refinement: Option<u32>,
    /// Mechanics stabilization parameter L_u.
    #[arg(long)]
    l_u: Option<f64>,
    /// Phase-field stabilization parameter L_phi.
    #[arg(long)]
    l_phi: Option<f64>,
    /// Irreversibility penalization parameter gamma.
    #[arg(long)]
    gamma: Option<f64>,
    /// Bulk regularization kappa.
    #[arg(long)]
    kappa: Option<f64>,
    /// kappa interpretation: absolute or h_scaled.
    #[arg(long)]
    kappa_mode: Option<String>,
    /// Length scale factor: eps = eps_factor * h.
    #[arg(long)]
    eps_factor: Option<f64>,
    /// Loading step size [s].
    #[arg(long)]
    delta_t: Option<f64>,
    /// Number of loading steps.
    #[arg(long)]
    n_steps: Option<usize>,
    /// Staggered stopping tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Staggered iteration cap per loading step.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Truncate the staggered loop at a low fixed iteration count.
    #[arg(long)]
    lfi: Option<usize>,
    /// Output directory (PFRAC_OUTPUT_ROOT prefixes relative paths).
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Write VTK field snapshots every N steps (0 = never).
    #[arg(long)]
    vtk_every: Option<usize>,
    /// Single-threaded deterministic mode (always on; accepted for
    /// compatibility).
    #[arg(long)]
    deterministic: Option<bool>,
    /// Suppress progress output.
    #[arg(long, short, default_value_t = false)]
    quiet: bool,
}

impl ConfigArgs {
    fn overrides(&self) -> Result<RawConfig> {
        Ok(RawConfig {
            problem: self.problem.as_deref().map(parse_problem).transpose()?,
            refinement: self.refinement,
            l_u: self.l_u,
            l_phi: self.l_phi,
            gamma: self.gamma,
            kappa: self.kappa,
            kappa_mode: self.kappa_mode.clone(),
            eps_factor: self.eps_factor,
            delta_t: self.delta_t,
            n_steps: self.n_steps,
            tol: self.tol,
            max_iters: self.max_iters,
            lfi: self.lfi,
            output_dir: self.output_dir.clone(),
            vtk_every: self.vtk_every,
            deterministic: self.deterministic,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one benchmark configuration and write its load-displacement CSV.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Run the stabilization sweep over a list of L values plus the special
    /// configurations (L_u = 0, L_phi > 0) and (L_u = L_phi = 0).
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Comma-separated L values, e.g. 1e-6,1e-3,1e-2,1e-1.
        #[arg(long, value_delimiter = ',', default_value = "1e-6,1e-3,1e-2,1e-1")]
        l_values: Vec<f64>,
        /// L_phi used by the (L_u = 0, L_phi > 0) special configuration.
        #[arg(long, default_value_t = 1e-3)]
        special_l_phi: f64,
    },
    /// Classify the contraction polynomial for the configured problem.
    Classify {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Strain bound M (e.g. the strain_sup maximum of a prior run).
        #[arg(long)]
        strain_bound: f64,
        /// Poincare constant estimate c_P.
        #[arg(long, default_value_t = 1.0)]
        poincare: f64,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { cfg } => {
            let config = parse_config(cfg.config.as_deref(), cfg.overrides()?)?;
            commands::cmd_run(&config, cfg.quiet)?;
            Ok(())
        }
        Command::Sweep { cfg, l_values, special_l_phi } => {
            let config = parse_config(cfg.config.as_deref(), cfg.overrides()?)?;
            commands::cmd_sweep(&config, &l_values, special_l_phi, cfg.quiet)
        }
        Command::Classify { cfg, strain_bound, poincare } => {
            let config = parse_config(cfg.config.as_deref(), cfg.overrides()?)?;
            commands::cmd_classify(&config, strain_bound, poincare)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
