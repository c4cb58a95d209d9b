//! `ife run <config>`: runs a study described by a TOML file.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use ife_cli::config::RunConfig;
use ife_cli::studies;

#[derive(Parser)]
#[command(name = "ife", version, about = "Enriched immersed finite element experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the study in CONFIG.
    Run {
        config: PathBuf,
        /// Evaluate the acceptance gates; exit with status 2 if any fails.
        #[arg(long)]
        check: bool,
        /// Worker threads (default: all cores).
        #[arg(long, value_name = "K")]
        threads: Option<usize>,
        /// Output directory, overriding `output.dir`.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
}

fn run(config: PathBuf, check: bool, threads: Option<usize>, out: Option<PathBuf>) -> Result<bool> {
    if let Some(k) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global().context("cannot start thread pool")?;
    }
    let cfg = RunConfig::load(&config)?;
    let out = out.unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    let mut stdout = std::io::stdout().lock();
    let checks = studies::run(&cfg, &out, check, &mut stdout)?;
    let mut ok = true;
    for c in &checks {
        let status = if c.pass { "PASS" } else { "FAIL" };
        println!("check {status}: {}: {}", c.name, c.detail);
        if !c.pass {
            eprintln!("check failed: {}: {}", c.name, c.detail);
            ok = false;
        }
    }
    if check {
        let failed = checks.iter().filter(|c| !c.pass).count();
        println!("{} checks, {failed} failed", checks.len());
    }
    println!("artifacts in {}", out.display());
    Ok(ok)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let Command::Run { config, check, threads, out } = cli.command;
    match run(config, check, threads, out) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
