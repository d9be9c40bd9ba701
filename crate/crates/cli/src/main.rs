use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use stochhr_cli::{parse_config, run, Experiment};

#[derive(Parser)]
#[command(
    name = "stochhr",
    version,
    about = "Pathwise stochastic Hindmarsh-Rose experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory and write energies and field snapshots.
    Simulate(Common),
    /// Pull a cloud of initial states back to time 0 from several horizons.
    Pullback {
        #[command(flatten)]
        common: Common,
        /// Comma-separated horizons, e.g. 1,2,4,8.
        #[arg(long, value_delimiter = ',')]
        horizons: Option<Vec<f64>>,
        /// Number of cloud members.
        #[arg(long)]
        cloud: Option<usize>,
    },
    /// Check the energy inequality, Gronwall bound and H1 norms along a trajectory.
    Diagnose(Common),
    /// Compare final states across the configured solver steps.
    Convergence(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Run directory to create or overwrite.
    #[arg(long, default_value = "run")]
    out: PathBuf,
    /// Load the noise path from this file instead of sampling it.
    #[arg(long)]
    noise_file: Option<PathBuf>,
    /// Worker threads for cloud runs (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let (experiment, common, horizons, cloud) = match cli.command {
        Command::Simulate(c) => (Experiment::Simulate, c, None, None),
        Command::Diagnose(c) => (Experiment::Diagnose, c, None, None),
        Command::Convergence(c) => (Experiment::Convergence, c, None, None),
        Command::Pullback {
            common,
            horizons,
            cloud,
        } => (Experiment::Pullback, common, horizons, cloud),
    };
    let text = std::fs::read_to_string(&common.config)
        .with_context(|| format!("reading {}", common.config.display()))?;
    let mut cfg =
        parse_config(&text).with_context(|| format!("in config {}", common.config.display()))?;
    if let Some(f) = common.noise_file {
        cfg.noise.file = Some(f);
    }
    if let Some(h) = horizons {
        cfg.experiment.horizons = h;
    }
    if let Some(m) = cloud {
        cfg.experiment.cloud = m;
    }
    // overrides must satisfy the same checks as the file
    let cfg = parse_config(&cfg.to_toml()).context("after command-line overrides")?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.threads.unwrap_or(0))
        .build()
        .context("starting the thread pool")?;
    let outcome = pool.install(|| run(&cfg, experiment, &common.out))?;
    println!("wrote {}", outcome.dir.display());
    Ok(())
}
