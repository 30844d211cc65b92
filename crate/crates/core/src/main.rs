use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use netres::config::RunConfig;
use netres::pipeline::{cmd_converge, cmd_estimate, cmd_oracle, cmd_sweep, PipelineError};

/// Resilience probability of uncertain networked dynamical systems.
#[derive(Parser)]
#[command(name = "netres", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Path to the TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides NETRES_OUT and the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the mean-field + PCE pipeline once; write summary.json,
    /// pdf.csv, cdf.csv.
    Estimate(Common),
    /// Fit surrogates at several truncation orders from shared samples;
    /// write per-order curves and converge.json.
    Converge {
        #[command(flatten)]
        common: Common,
        /// Comma-separated truncation orders.
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,5")]
        orders: Vec<usize>,
    },
    /// Sweep one lever (edge weight or a parameter mean); write sweep.csv.
    Sweep(Common),
    /// Compare the pipeline against the full-network Monte Carlo oracle;
    /// write oracle.json.
    Oracle(Common),
}

fn resolve(common: &Common) -> Result<(RunConfig, PathBuf), PipelineError> {
    let mut cfg = RunConfig::from_file(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let out = common
        .out
        .clone()
        .or_else(|| std::env::var_os("NETRES_OUT").map(PathBuf::from))
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((cfg, out))
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match &cli.command {
        Command::Estimate(common) => {
            let (cfg, out) = resolve(common)?;
            let est = cmd_estimate(&cfg, &out)?;
            println!(
                "resilience probability {} (order {}, degenerate fraction {})",
                est.probability, est.order, est.degenerate_fraction
            );
        }
        Command::Converge { common, orders } => {
            let (cfg, out) = resolve(common)?;
            let report = cmd_converge(&cfg, orders, &out)?;
            for (order, p) in report.orders.iter().zip(&report.probabilities) {
                println!("N={order}: probability {p}");
            }
        }
        Command::Sweep(common) => {
            let (cfg, out) = resolve(common)?;
            let rows = cmd_sweep(&cfg, &out)?;
            for row in rows {
                println!("{} -> {}", row.value, row.probability);
            }
        }
        Command::Oracle(common) => {
            let (cfg, out) = resolve(common)?;
            let report = cmd_oracle(&cfg, &out)?;
            println!(
                "mc {} +- {} | pce {} +- {} | |diff| {} vs {} => {}",
                report.mc.p_hat,
                report.mc.stderr,
                report.pce_probability,
                report.pce_stderr,
                report.difference,
                report.threshold,
                if report.pass { "pass" } else { "fail" }
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
