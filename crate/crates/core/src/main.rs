use std::path::PathBuf;
use std::process::ExitCode;

use backward_cp::bounds::BoundParams;
use backward_cp::commands;
use backward_cp::fmt::to_json_17;
use clap::{Parser, Subcommand};
use serde::Serialize;

/// Backward conformal prediction: size-capped sets with an adaptive
/// miscoverage level and a leave-one-out coverage estimate.
#[derive(Parser)]
#[command(name = "bcp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment; writes summary.json, histogram.csv, trials.csv.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Hold out one row as the test point and run the procedure once.
    Run {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// Inline JSON or path to a JSON file.
        #[arg(long)]
        rule: String,
        #[arg(long)]
        test_row: usize,
    },
    /// Leave-one-out miscoverage estimate of a calibration file.
    Loo {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        rule: String,
    },
    /// Finite-sample bound and, given --alpha-loo and --tau, the trust decision.
    Bound {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        smin: f64,
        #[arg(long)]
        smax: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        alpha_loo: Option<f64>,
        #[arg(long)]
        tau: Option<f64>,
    },
}

fn print<T: Serialize>(value: &T) -> backward_cp::Result<()> {
    let text = to_json_17(value).map_err(|e| backward_cp::BcpError::Config(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn execute(cli: Cli) -> backward_cp::Result<()> {
    match cli.command {
        Command::Simulate { config, out_dir } => {
            let s = commands::simulate(&config, &out_dir)?;
            eprintln!(
                "{} trials: coverage {:.4}, mean alpha~ {:.4}, mean alpha_loo {:.4} -> {}",
                s.num_trials,
                s.empirical_coverage,
                s.mean_alpha_tilde,
                s.mean_alpha_loo,
                out_dir.display()
            );
            Ok(())
        }
        Command::Run {
            scores,
            embeddings,
            rule,
            test_row,
        } => {
            let rule = commands::parse_rule(&rule)?;
            print(&commands::run_single(&scores, embeddings.as_deref(), &rule, test_row)?)
        }
        Command::Loo {
            scores,
            embeddings,
            rule,
        } => {
            let rule = commands::parse_rule(&rule)?;
            print(&commands::loo(&scores, embeddings.as_deref(), &rule)?)
        }
        Command::Bound {
            n,
            smin,
            smax,
            delta,
            mu,
            alpha_loo,
            tau,
        } => {
            let mut params = BoundParams::new(n, smin, smax, delta)?;
            if let Some(mu) = mu {
                params = params.with_mu(mu)?;
            }
            print(&commands::bound(params, alpha_loo, tau)?)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
