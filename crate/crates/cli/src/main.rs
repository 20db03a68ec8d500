mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "hsl", version, about = "Random hyperspherical harmonics experiments")]
struct Cli {
    /// JSON experiment config; unset fields take their defaults
    #[arg(long, global = true, env = "HSL_CONFIG")]
    config: Option<PathBuf>,
    #[arg(long, global = true, env = "HSL_SEED")]
    seed: Option<u64>,
    /// worker threads (default: all cores)
    #[arg(long, global = true, env = "HSL_THREADS")]
    threads: Option<usize>,
    #[arg(long, global = true, env = "HSL_OUT")]
    out: Option<PathBuf>,
    /// comma-separated even degrees, e.g. 8,16,32
    #[arg(long, global = true, env = "HSL_ELL", value_delimiter = ',')]
    ell: Option<Vec<u32>>,
    #[arg(long, global = true, env = "HSL_REPS")]
    reps: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Gegenbauer moment tables against their asymptotes
    Moments,
    /// Index-set scans and diagram formula against the Wick oracle
    Diagram,
    /// Gaunt constant checks, four-point scan and four-clique integrals
    GraphIntegral,
    /// Field batches with X, its standardization and sigma
    Simulate,
    /// Wasserstein and smoothed TV proxy series with slope fits
    Rates,
    /// Run the acceptance suite; exits nonzero if any criterion fails
    Verify {
        /// comma-separated criterion ids (default: all)
        #[arg(long, value_delimiter = ',')]
        only: Vec<u32>,
    },
    /// Show configuration
    Config {
        #[arg(long)]
        print_defaults: bool,
        /// print the hash of the effective config
        #[arg(long)]
        hash: bool,
    },
}

impl Cli {
    fn effective_config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out_dir = o.clone();
        }
        if let Some(e) = &self.ell {
            cfg.ell_list = e.clone();
        }
        if let Some(r) = self.reps {
            cfg.reps = r;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: &Cli) -> Result<bool> {
    if let Command::Config { print_defaults: true, .. } = cli.command {
        println!("{}", ExperimentConfig::defaults_json());
        return Ok(true);
    }
    let cfg = cli.effective_config()?;
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match &cli.command {
        Command::Moments => commands::moments(&cfg),
        Command::Diagram => commands::diagram(&cfg),
        Command::GraphIntegral => commands::graph_integral(&cfg),
        Command::Simulate => commands::simulate(&cfg),
        Command::Rates => commands::rates(&cfg),
        Command::Verify { only } => commands::verify(&cfg, only),
        Command::Config { hash, .. } => {
            if *hash {
                println!("{}", cfg.hash());
            } else {
                println!("{}", serde_json::to_string_pretty(&cfg)?);
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("HSL_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        // only `verify` turns failed checks into a failing exit status
        Ok(false) if !matches!(cli.command, Command::Verify { .. }) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
