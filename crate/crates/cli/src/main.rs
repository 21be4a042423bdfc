//! `effham`: effective Hamiltonians, solvability sets and homogenization runs.
//!
//! Exit codes: 0 ok, 1 input error, 2 partial table, 3 refused assumptions,
//! 4 verification failure.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use crate::commands::Overrides;
use crate::report::Outcome;

#[derive(Parser)]
#[command(name = "effham", version, about = "Generalized effective Hamiltonians for σ(x) m(|p|)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the effective Hamiltonian and classify solvability on a lattice.
    Effham(Common),
    /// Exact 1D solvability interval, critical values and correctors.
    Onedim(Common),
    /// ε-sweep of the oscillatory problem against the effective one.
    Homogenize(Common),
    /// Relaxed-limit gap when the problem does not homogenize.
    Nonhomog(Common),
    /// Cross-check the 1D table against the exact theory and its invariants.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory (default: `out` from the config, else `effham-out`).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Run a homogenization sweep even when its assumptions fail.
    #[arg(long)]
    force: bool,
    /// Grid points per axis (cell problems) or per period (evolution).
    #[arg(long, value_name = "N")]
    grid: Option<usize>,
    /// Worker threads.
    #[arg(long, value_name = "K")]
    jobs: Option<usize>,
}

fn run(name: &str, args: &Common) -> Result<Outcome> {
    let start = Instant::now();
    if let Some(k) = args.jobs {
        anyhow::ensure!(k > 0, "--jobs must be positive");
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global()?;
    }
    let loaded = config::load(&args.config)?;
    let ov = Overrides { grid: args.grid, force: args.force };
    let compute = Instant::now();
    let result = match name {
        "effham" => commands::effham(&loaded, &ov)?,
        "onedim" => commands::onedim(&loaded)?,
        "homogenize" => commands::homogenize(&loaded, &ov)?,
        "nonhomog" => commands::nonhomog(&loaded, &ov)?,
        _ => commands::verify(&loaded, &ov)?,
    };
    let compute_s = compute.elapsed().as_secs_f64();
    let out = args
        .out
        .clone()
        .or_else(|| loaded.config.out.clone())
        .unwrap_or_else(|| PathBuf::from("effham-out"));
    report::write_run(&out, name, &loaded.config, &ov.to_json(), &result, compute_s, start.elapsed().as_secs_f64())?;

    match result.outcome {
        Outcome::Ok => {}
        Outcome::Partial => eprintln!("warning: some lattice points are uncertain"),
        Outcome::Refused => eprintln!("refused: {}", result.outputs["explanation"].as_str().unwrap_or("")),
        Outcome::VerificationFailed => eprintln!("verification failed: {}", result.outputs["failed"]),
    }
    eprintln!("{name}: wrote {} in {compute_s:.2} s", out.display());
    Ok(result.outcome)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (name, args) = match &cli.command {
        Command::Effham(a) => ("effham", a),
        Command::Onedim(a) => ("onedim", a),
        Command::Homogenize(a) => ("homogenize", a),
        Command::Nonhomog(a) => ("nonhomog", a),
        Command::Verify(a) => ("verify", a),
    };
    match run(name, args) {
        Ok(outcome) => ExitCode::from(outcome.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
