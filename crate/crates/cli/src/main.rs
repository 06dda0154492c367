mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use spincav::model::CumulantOrder;

use crate::commands::{Failure, Output};
use crate::config::RunConfig;

#[derive(Parser)]
#[command(name = "spincav", version, about = "Driven cavity + spin ensemble: semiclassical and cumulant-expansion sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration (unknown keys are rejected).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (overrides the config).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Closure order ce1, ce2 or ce3 (overrides the config).
    #[arg(long, global = true)]
    order: Option<CumulantOrder>,
    /// Also write an SVG line chart per CSV.
    #[arg(long, global = true)]
    svg: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Semiclassical stationary curves |⟨a⟩|² vs η.
    Steady,
    /// Time traces from the empty cavity and unexcited spins.
    Evolve,
    /// Stationary |⟨a⟩|² vs η/η⁺ for a list of ensemble sizes.
    Scan,
    /// Normalized amplitude x_CE / x_CE1 vs N.
    Normalized,
    /// Semiclassical-to-quantum boundary N_sc over (row, η/η⁺).
    Boundary,
    /// Term-by-term check of the moment equations against the exact master equation.
    OracleVerify {
        #[arg(long)]
        spins: Option<usize>,
    },
    /// Variable inventory of a closure order.
    Inventory {
        #[arg(long)]
        clusters: Option<usize>,
    },
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Steady => "steady",
            Command::Evolve => "evolve",
            Command::Scan => "scan",
            Command::Normalized => "normalized",
            Command::Boundary => "boundary",
            Command::OracleVerify { .. } => "oracle-verify",
            Command::Inventory { .. } => "inventory",
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(o) = &cli.out {
        cfg.out = o.display().to_string();
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if let Some(o) = cli.order {
        cfg.order = o;
    }
    match cli.command {
        Command::OracleVerify { spins: Some(s) } => cfg.oracle.spins = s,
        Command::Inventory { .. } | Command::OracleVerify { .. } => {}
        _ => {}
    }
    cfg.validate().map_err(Failure::Config)?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = load(cli)?;
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Failure::Config(format!("thread pool: {e}")))?;
    let mut out = Output::new(PathBuf::from(&cfg.out), cli.svg)?;
    let result = pool.install(|| match cli.command {
        Command::Steady => commands::steady(&cfg, &mut out),
        Command::Evolve => commands::evolve(&cfg, &mut out),
        Command::Scan => commands::scan(&cfg, &mut out),
        Command::Normalized => commands::normalized(&cfg, &mut out),
        Command::Boundary => commands::boundary(&cfg, &mut out),
        Command::OracleVerify { .. } => commands::oracle_verify(&cfg, &mut out),
        Command::Inventory { clusters } => commands::inventory(&cfg, clusters, &mut out),
    });
    let status = match &result {
        Ok(()) => "ok".to_string(),
        Err(f) => f.to_string(),
    };
    out.sidecar(cli.command.name(), &cfg, start.elapsed().as_secs_f64(), &status)?;
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("spincav: {f}");
            ExitCode::from(f.code())
        }
    }
}
