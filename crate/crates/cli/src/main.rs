//! Command line driver for the Lichnerowicz solver.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Ctx, OutputFormat};
use config::{load_run_config, CliError, CliResult};

#[derive(Parser)]
#[command(name = "lichsolve", version, about = "Positive solutions of Lichnerowicz-type equations on discretized manifolds")]
struct Cli {
    /// run config (TOML) pointing at mesh and coefficient files
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// output directory for reports and CSV dumps
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// defocusing weight: a number in (0, 1], or "auto"
    #[arg(long, global = true)]
    theta: Option<String>,

    /// iteration stopping tolerance
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// iteration cap
    #[arg(long, global = true)]
    max_iter: Option<usize>,

    /// exhaustion member count; 1 solves on the full mesh directly
    #[arg(long, global = true)]
    exhaustion: Option<usize>,

    /// what goes to stdout
    #[arg(long, global = true, value_parser = ["report", "csv"], default_value = "report")]
    format: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// First Zaremba (or all-Dirichlet) eigenvalue of -Delta + a
    Eigen {
        /// treat every boundary node as Dirichlet
        #[arg(long)]
        dirichlet_all: bool,
    },
    /// Construct and certify the ordered barrier pair
    Barriers,
    /// Full pipeline: hypotheses, barriers, monotone iteration
    Solve,
    /// Check a solution CSV against the problem residual
    Verify {
        /// solution CSV as written by `solve`
        solution: PathBuf,
    },
    /// Dump the dual problem data
    Dual,
}

fn build_ctx(cli: &Cli) -> CliResult<Ctx> {
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::config("--config is required"))?;
    let mut config = load_run_config(config_path)?;
    if let Some(t) = cli.tol {
        config.solver.tol = Some(t);
    }
    if let Some(m) = cli.max_iter {
        config.solver.max_iter = Some(m);
    }
    if let Some(c) = cli.exhaustion {
        if c < 1 {
            return Err(CliError::config("--exhaustion must be >= 1"));
        }
        config.solver.exhaustion = Some(c);
    }
    if let Some(t) = &cli.theta {
        config.solver.theta = Some(if t == "auto" {
            toml::Value::String("auto".into())
        } else {
            let x: f64 = t
                .parse()
                .map_err(|_| CliError::config(format!("--theta must be a number or auto, got {t}")))?;
            toml::Value::Float(x)
        });
    }
    let out = cli
        .out
        .clone()
        .or_else(|| config.out.clone().map(|p| config.base_dir.join(p)))
        .unwrap_or_else(|| PathBuf::from("."));
    let format = match cli.format.as_str() {
        "csv" => OutputFormat::Csv,
        _ => OutputFormat::Report,
    };
    Ok(Ctx { config, out, format })
}

fn run(cli: &Cli) -> CliResult<()> {
    let ctx = build_ctx(cli)?;
    match &cli.command {
        Command::Eigen { dirichlet_all } => commands::cmd_eigen(&ctx, *dirichlet_all),
        Command::Barriers => commands::cmd_barriers(&ctx),
        Command::Solve => commands::cmd_solve(&ctx),
        Command::Verify { solution } => commands::cmd_verify(&ctx, solution),
        Command::Dual => commands::cmd_dual(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code.clamp(0, 255) as u8)
        }
    }
}
