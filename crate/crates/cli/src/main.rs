use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ebseg::harness::{self, DataSource, RunConfig, Sigma2Choice, SignalSpec};
use ebseg::sampler::{ProposalWeights, SamplerConfig};
use ebseg::Error;

/// Empirical Bayes change-point segmentation of piecewise-constant sequences.
#[derive(Debug, Parser)]
#[command(name = "ebseg", version)]
struct Cli {
    /// Worker threads for concurrent chains (0 = all cores). Output does not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample the posterior and write summary.json, posterior.csv and block_size_pmf.csv.
    Fit(RunArgs),
    /// Enumerate the exact posterior (n <= 20) and write oracle.json.
    Oracle(RunArgs),
    /// Simulate a signal spec and write data.csv and truth.csv.
    Simulate {
        /// Signal spec JSON.
        #[arg(long)]
        spec: PathBuf,
        /// Overrides the signal spec's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// One-column CSV of observations.
    #[arg(long, conflicts_with = "simulate", required_unless_present = "simulate")]
    input: Option<PathBuf>,
    /// Signal spec JSON to simulate from instead of reading data.
    #[arg(long)]
    simulate: Option<PathBuf>,
    #[arg(long, default_value_t = 0.99)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    v: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Noise variance: a number, `estimate`, or `auto` (known variance if simulated, else estimate).
    #[arg(long, default_value = "auto")]
    sigma2: Sigma2Choice,
    #[arg(long, default_value_t = 50_000)]
    iters: usize,
    #[arg(long, default_value_t = 10_000)]
    burnin: usize,
    #[arg(long, default_value_t = 10)]
    thin: usize,
    #[arg(long, default_value_t = 2)]
    chains: usize,
    /// Seeds the sampler and, when given, the simulation.
    #[arg(long)]
    seed: Option<u64>,
    /// Credible level of the marginal intervals.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

impl RunArgs {
    fn source(&self) -> Result<DataSource, Error> {
        match (&self.input, &self.simulate) {
            (Some(path), _) => Ok(DataSource::Csv(path.clone())),
            (None, Some(spec)) => {
                let mut spec = read_spec(spec)?;
                if let Some(seed) = self.seed {
                    spec.seed = seed;
                }
                Ok(DataSource::Simulate(spec))
            }
            (None, None) => Err(Error::Config("either --input or --simulate is required".into())),
        }
    }

    fn run_config(&self) -> RunConfig {
        RunConfig {
            alpha: self.alpha,
            v: self.v,
            lambda: self.lambda,
            sigma2: self.sigma2,
            sampler: SamplerConfig {
                iterations: self.iters,
                burn_in: self.burnin,
                thin: self.thin,
                seed: self.seed.unwrap_or(0),
                chains: self.chains,
                proposal_weights: ProposalWeights::default(),
            },
            level: self.level,
            out_dir: self.out_dir.clone(),
        }
    }
}

fn read_spec(path: &PathBuf) -> Result<SignalSpec, Error> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    SignalSpec::from_json(&text)
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io { .. } => 2,
        Error::Config(_) => 3,
        Error::Domain(_) => 4,
        Error::Capacity { .. } => 5,
        Error::State(_) => 1,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Fit(args) => {
            let out = harness::fit(&args.source()?, &args.run_config())?;
            log::info!(
                "n = {}, sigma2 = {} ({}), modal |B| = {}",
                out.data.len(),
                out.hyperparams.sigma2,
                out.sigma2_source.as_str(),
                out.summary.block_size_mode()
            );
        }
        Command::Oracle(args) => {
            let dump = harness::oracle(&args.source()?, &args.run_config())?;
            log::info!("enumerated {} configurations", dump.configs.len());
        }
        Command::Simulate { spec, seed, out_dir } => {
            let mut spec = read_spec(&spec)?;
            if let Some(seed) = seed {
                spec.seed = seed;
            }
            harness::write_simulation(&spec, &out_dir)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(3) } else { ExitCode::SUCCESS };
        }
    };
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
