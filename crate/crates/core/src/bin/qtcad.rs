use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qtcad::commands::{cmd_defect_spectrum, cmd_growth, cmd_quench, cmd_sq_map, CommandOutcome};
use qtcad::config::{load, parse_set};
use qtcad::Error;

#[derive(Parser)]
#[command(name = "qtcad", version, about = "Defect spins, proton-lattice maps, RF quenches and growth profiles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Exit with status 1 when any grid point or run fails
    #[arg(long, global = true)]
    strict: bool,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override a config value, e.g. --set lattice.n1=4 (repeatable)
    #[arg(long = "set", global = true, value_parser = parse_set)]
    sets: Vec<(String, String)>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    DefectSpectrum,
    SqMap,
    Quench,
    Growth,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let mut sets = cli.sets.clone();
    if let Some(w) = cli.workers {
        sets.push(("workers".into(), w.to_string()));
    }
    if let Some(s) = cli.seed {
        sets.push(("seed".into(), s.to_string()));
    }
    let cfg = match load(cli.config.as_deref(), &sets) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.out));
    let result: qtcad::Result<CommandOutcome> = match cli.command {
        Command::DefectSpectrum => cmd_defect_spectrum(&cfg, &out),
        Command::SqMap => cmd_sq_map(&cfg, &out),
        Command::Quench => cmd_quench(&cfg, &out),
        Command::Growth => cmd_growth(&cfg, &out),
    };
    match result {
        Ok(o) => {
            for w in &o.warnings {
                log::warn!("{w}");
            }
            for p in &o.outputs {
                println!("{}", p.display());
            }
            if o.failures > 0 && cli.strict {
                eprintln!("error: {} item(s) failed", o.failures);
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(e @ (Error::Config(_) | Error::Lattice(_) | Error::Defect(_) | Error::Protocol(_) | Error::Growth(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
