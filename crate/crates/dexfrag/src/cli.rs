//! Command-line interface: subcommands mirror the pipeline steps.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::ExperimentConfig;
use crate::pipeline::{Manifest, OutputFormat, Pipeline};
use crate::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "dexfrag",
    version,
    about = "Two-cluster distributed-exchange fragmentation experiments"
)]
pub struct Cli {
    /// Experiment configuration file (TOML); defaults are built in.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Master seed, overriding the configuration file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory, overriding the configuration file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Output format for the reproduce step.
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,

    /// Worker threads; defaults to the number of cores. Results do not
    /// depend on this.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormatArg {
    Csv,
    Svg,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::CsvOnly,
            FormatArg::Svg => OutputFormat::Svg,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sweep the closed-form miner economics over the speed ratio.
    Econ,
    /// Simulate message delays for every network configuration.
    Simulate,
    /// Bootstrap the mean delay per configuration.
    Bootstrap,
    /// Export delay densities and distribution functions.
    Distributions,
    /// Estimate cluster and node winning probabilities.
    Montecarlo,
    /// Fit the winning-probability regressions from winprob.csv.
    Regress,
    /// Run the timed consensus protocol sequence.
    Protocol,
    /// Run the whole pipeline and write the artifact manifest.
    Reproduce {
        /// Laptop-scale profile: same grids, reduced sample counts.
        #[arg(long)]
        desk_scale: bool,
    },
}

/// Loads the configuration, applies flag overrides, and dispatches.
pub fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(workers) = cli.workers {
        if workers == 0 {
            return Err(CliError::Config("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    }

    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    if let Command::Reproduce { desk_scale: true } = cli.command {
        config = config.desk_scale();
    }
    let out_dir = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&config.output_dir));

    let pipeline = Pipeline::new(config, out_dir)?;
    match cli.command {
        Command::Econ => report(pipeline.run_econ()?),
        Command::Simulate => report(pipeline.run_simulate()?),
        Command::Bootstrap => report(pipeline.run_bootstrap()?),
        Command::Distributions => {
            for path in pipeline.run_distributions()? {
                report(path);
            }
        }
        Command::Montecarlo => report(pipeline.run_montecarlo()?),
        Command::Regress => report(pipeline.run_regress()?),
        Command::Protocol => report(pipeline.run_protocol()?),
        Command::Reproduce { .. } => {
            let manifest: Manifest = pipeline.run_all(cli.format.into())?;
            for path in &manifest.files {
                report(path.clone());
            }
            eprintln!(
                "manifest fingerprint {:016x}, seed {}",
                manifest.fingerprint, manifest.seed
            );
        }
    }
    Ok(())
}

fn report(path: PathBuf) {
    println!("{}", path.display());
}
