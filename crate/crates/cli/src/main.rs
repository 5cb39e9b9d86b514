//! `m2hs` command-line front end.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use config::ExperimentConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver breakdown: {0}")]
    Breakdown(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Breakdown(_) => 3,
            CliError::Verification(_) => 4,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "m2hs", version, about = "Magnetic two-component Hunter-Saxton experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for randomized suites; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the geometric and/or direct solver.
    Solve,
    /// Predict blow-up and cross-check it against detection.
    Blowup,
    /// Continue past blow-up and verify the weak solution.
    Continue {
        /// Verify a stored trajectory.json instead of solving.
        #[arg(long)]
        verify: Option<PathBuf>,
    },
    /// Classify and search for connecting geodesics at energy k.
    Connect {
        #[arg(long)]
        q0: Option<PathBuf>,
        #[arg(long)]
        q1: Option<PathBuf>,
        #[arg(long)]
        k: Option<f64>,
        /// Inputs are Lagrangian states.
        #[arg(long)]
        lagrangian: bool,
    },
    /// Action statistics over random loops.
    Mane {
        #[arg(long)]
        k: Option<f64>,
        #[arg(long)]
        loops: Option<usize>,
    },
}

fn load(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    match &cli.command {
        Command::Connect { q0, q1, k, lagrangian } => {
            cfg.connect.q0 = q0.clone().or(cfg.connect.q0.take());
            cfg.connect.q1 = q1.clone().or(cfg.connect.q1.take());
            cfg.connect.k = k.or(cfg.connect.k);
            cfg.connect.lagrangian |= *lagrangian;
        }
        Command::Mane { k, loops } => {
            cfg.mane.k = k.unwrap_or(cfg.mane.k);
            cfg.mane.loops = loops.unwrap_or(cfg.mane.loops);
        }
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn set_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("M2HS_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| CliError::Config(format!("M2HS_THREADS: not a count: {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("M2HS_THREADS: {e}")))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    set_threads()?;
    let cfg = load(cli)?;
    let name = match cli.command {
        Command::Solve => "solve",
        Command::Blowup => "blowup",
        Command::Continue { .. } => "continue",
        Command::Connect { .. } => "connect",
        Command::Mane { .. } => "mane",
    };
    let mut resolved = json!({ "command": name, "config": cfg });
    if let Command::Continue { verify: Some(path) } = &cli.command {
        resolved["verify"] = json!(path);
    }
    match &cli.command {
        Command::Solve => commands::solve(&cfg, &cli.out, &resolved),
        Command::Blowup => commands::blowup(&cfg, &cli.out, &resolved),
        Command::Continue { verify: None } => commands::continue_weak(&cfg, &cli.out, &resolved),
        Command::Continue { verify: Some(path) } => commands::verify_file(&cfg, path, &cli.out, &resolved),
        Command::Connect { .. } => commands::connect(&cfg, &cli.out, &resolved),
        Command::Mane { .. } => commands::mane(&cfg, &cli.out, &resolved),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("m2hs: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
