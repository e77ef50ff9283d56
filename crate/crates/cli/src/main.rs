use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};
use hinge_penalty::ProxControls;
use hpo::commands::{self, CertifyArgs, Overrides};
use hpo::config::ExperimentConfig;
use hpo::plot::{self, Panel};

#[derive(Parser)]
#[command(name = "hpo", version, about = "Hinge-penalty stochastic constrained optimisation")]
struct Cli {
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for independent runs.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Replace every solver seed.
    #[arg(long, global = true)]
    seed_override: Option<u64>,
    /// Snapshot stride.
    #[arg(long, global = true)]
    stride: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every named solver configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Hinge vs squared hinge over a grid of penalty parameters.
    Compare {
        #[arg(long)]
        config: PathBuf,
    },
    /// Schedule sweep over target accuracies.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Certificates and regularity diagnostics for a finished run.
    Certify {
        /// run.json written by `hpo run`.
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long, default_value_t = 10_000)]
        prox_iterations: usize,
        #[arg(long, default_value_t = 1e-6)]
        prox_tol: f64,
        /// Certify every n-th stored snapshot.
        #[arg(long, default_value_t = 1)]
        every: usize,
    },
    /// SVG figures from trajectory CSVs.
    Plot {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',', default_values_t = [PanelArg::Constraints, PanelArg::Objective])]
        panels: Vec<PanelArg>,
        /// Iterations per epoch.
        #[arg(long, default_value_t = 400)]
        epoch: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PanelArg {
    Constraints,
    Objective,
}

impl std::fmt::Display for PanelArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PanelArg::Constraints => "constraints",
            PanelArg::Objective => "objective",
        })
    }
}

const LOG_LEVELS: [&str; 4] = ["error", "warn", "info", "debug"];

fn main() -> ExitCode {
    let level = std::env::var("HPO_LOG_LEVEL").unwrap_or_else(|_| "warn".into());
    if !LOG_LEVELS.contains(&level.as_str()) {
        eprintln!("error: HPO_LOG_LEVEL must be one of {}", LOG_LEVELS.join(", "));
        return ExitCode::FAILURE;
    }
    env_logger::Builder::new().parse_filters(&level).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let o = Overrides {
        out: cli.out,
        workers: cli.workers,
        seed: cli.seed_override,
        stride: cli.stride,
    };
    if o.workers == Some(0) {
        anyhow::bail!("--workers must be at least 1");
    }
    match cli.command {
        Command::Run { config } => {
            commands::cmd_run(&ExperimentConfig::load(&config)?, &o)?;
        }
        Command::Compare { config } => {
            commands::cmd_compare(&ExperimentConfig::load(&config)?, &o)?;
        }
        Command::Sweep { config } => {
            commands::cmd_sweep(&ExperimentConfig::load(&config)?, &o)?;
        }
        Command::Certify {
            run,
            instance,
            theta,
            prox_iterations,
            prox_tol,
            every,
        } => {
            let prox = ProxControls {
                iterations: prox_iterations,
                tol: prox_tol,
            };
            commands::cmd_certify(
                &CertifyArgs {
                    run,
                    instance,
                    theta,
                    prox,
                    stride: every,
                },
                &o,
            )?;
        }
        Command::Plot { csv, panels, epoch } => {
            let panels: Vec<Panel> = panels
                .into_iter()
                .map(|p| match p {
                    PanelArg::Constraints => Panel::Constraints,
                    PanelArg::Objective => Panel::Objective,
                })
                .collect();
            let out = o.out.unwrap_or_else(|| PathBuf::from("figures"));
            for p in plot::cmd_plot(&csv, &out, &panels, epoch)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}
