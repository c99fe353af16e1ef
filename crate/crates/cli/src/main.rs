use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use wftg::{Quadrature, SphereSignal};
use wftg_cli::commands::{self, Dataset, Report};
use wftg_cli::{CliError, Overrides, RunConfig};

#[derive(Parser)]
#[command(
    name = "wftg",
    version,
    about = "Tight wavelet frame transforms on graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset (points plus truth, signal or labels)
    Gen {
        #[arg(value_enum)]
        dataset: DatasetArg,
        /// Sphere test signal
        #[arg(long, value_enum, default_value_t = SignalArg::Cap)]
        signal_kind: SignalArg,
    },
    /// Build a k-NN graph from points and write its edge list
    Graph,
    /// Largest Laplacian eigenvalue and dilation scale; `--output` writes the Fiedler vector
    Spectral,
    /// Mask family checks
    Masks {
        #[command(subcommand)]
        action: MasksAction,
    },
    /// Chebyshev approximation diagnostics
    Cheb {
        #[command(subcommand)]
        action: ChebAction,
    },
    /// Decompose a signal into frame coefficients
    Transform,
    /// Reconstruct a signal from a coefficient file
    Itransform,
    /// Split Bregman denoising (synthetic sphere trials when `--signal` is absent)
    Denoise,
    /// Semi-supervised clustering (synthetic two-moons trials when `--labels` is absent)
    Cluster,
    /// Run the identity checks on a seeded random graph
    Verify,
    /// Time decompose + reconstruct on a generated sphere graph
    Bench,
}

#[derive(Subcommand)]
enum MasksAction {
    /// Check the sum rule on a uniform grid
    Verify,
}

#[derive(Subcommand)]
enum ChebAction {
    /// Sup-norm approximation error of every mask
    Error {
        /// Comma-separated orders; defaults to `--order`
        #[arg(long, value_delimiter = ',')]
        orders: Vec<usize>,
        #[arg(long, value_enum, default_value_t = QuadArg::Trapezoid)]
        quadrature: QuadArg,
        #[arg(long, default_value_t = wftg::chebyshev::DEFAULT_QUAD_POINTS)]
        quad_points: usize,
        #[arg(long, default_value_t = 1e-6)]
        simpson_tol: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DatasetArg {
    TwoMoons,
    Sphere,
}

#[derive(Clone, Copy, ValueEnum)]
enum SignalArg {
    Cap,
    Harmonic,
    Step,
}

#[derive(Clone, Copy, ValueEnum)]
enum QuadArg {
    Trapezoid,
    Simpson,
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let name = match &cli.command {
        Command::Gen { .. } => "gen",
        Command::Graph => "graph",
        Command::Spectral => "spectral",
        Command::Masks { .. } => "masks verify",
        Command::Cheb { .. } => "cheb error",
        Command::Transform => "transform",
        Command::Itransform => "itransform",
        Command::Denoise => "denoise",
        Command::Cluster => "cluster",
        Command::Verify => "verify",
        Command::Bench => "bench",
    };
    let mut ov = cli.overrides;
    if matches!(cli.command, Command::Bench) && ov.levels.is_none() && ov.config.is_none() {
        ov.levels = Some(4);
    }
    let cfg = RunConfig::resolve(name, &ov)?;
    let report: Report = match cli.command {
        Command::Gen {
            dataset,
            signal_kind,
        } => {
            let dataset = match dataset {
                DatasetArg::TwoMoons => Dataset::TwoMoons,
                DatasetArg::Sphere => Dataset::Sphere,
            };
            let signal = match signal_kind {
                SignalArg::Cap => SphereSignal::Cap,
                SignalArg::Harmonic => SphereSignal::Harmonic,
                SignalArg::Step => SphereSignal::Step,
            };
            commands::cmd_gen(&cfg, dataset, signal)?
        }
        Command::Graph => commands::cmd_graph(&cfg)?,
        Command::Spectral => commands::cmd_spectral(&cfg)?,
        Command::Masks {
            action: MasksAction::Verify,
        } => commands::cmd_masks_verify(&cfg)?,
        Command::Cheb {
            action:
                ChebAction::Error {
                    orders,
                    quadrature,
                    quad_points,
                    simpson_tol,
                },
        } => {
            let rule = match quadrature {
                QuadArg::Trapezoid => Quadrature::Trapezoid {
                    points: quad_points,
                },
                QuadArg::Simpson => Quadrature::AdaptiveSimpson { tol: simpson_tol },
            };
            commands::cmd_cheb_error(&cfg, &orders, rule)?
        }
        Command::Transform => commands::cmd_transform(&cfg)?,
        Command::Itransform => commands::cmd_itransform(&cfg)?,
        Command::Denoise => commands::cmd_denoise(&cfg)?,
        Command::Cluster => commands::cmd_cluster(&cfg)?,
        Command::Verify => commands::cmd_verify(&cfg)?,
        Command::Bench => commands::cmd_bench(&cfg)?,
    };
    let env = commands::finish(&cfg, &report)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&env).expect("metrics serialize")
    );
    Ok(report.passed)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("wftg: verification failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("wftg: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
