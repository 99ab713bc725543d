use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fsi_gcsi::bench::problems::discretization;
use fsi_gcsi::bench::verify::run_suite;
use fsi_gcsi::bench::{parse_config, run_benchmark};
use fsi_gcsi::{FsiError, Result};

/// Threads used by the solver; defaults to all cores.
const THREADS_VAR: &str = "FSI_GCSI_THREADS";

#[derive(Parser)]
#[command(name = "fsi-gcsi", version, about = "Semi-implicit ALE solver for incompressible fluid-structure interaction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the benchmark described by a configuration file
    Run { config: PathBuf },
    /// Run a self-check suite: bdf, operators, extension, oscillation, stokes, temporal or all
    Verify { suite: String },
    /// Print the number of degrees of freedom per level
    Info { config: PathBuf },
}

fn load(path: &PathBuf) -> Result<fsi_gcsi::bench::RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| FsiError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| FsiError::Config(format!("{THREADS_VAR} must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| FsiError::Config(e.to_string()))
}

fn execute(cli: Cli) -> Result<i32> {
    init_threads()?;
    let mut out = std::io::stdout().lock();
    match cli.command {
        Command::Run { config } => {
            run_benchmark(&load(&config)?, &mut out)?;
            Ok(0)
        }
        Command::Verify { suite } => {
            let checks = run_suite(&suite, &mut out)?;
            let failed = checks.iter().filter(|c| !c.passed).count();
            writeln!(out, "{} passed, {failed} failed", checks.len() - failed)?;
            Ok(if failed == 0 { 0 } else { 5 })
        }
        Command::Info { config } => {
            let c = load(&config)?;
            let disc = discretization(&c)?;
            writeln!(out, "{} with {} refinements", c.benchmark.name(), c.refinements)?;
            writeln!(out, "{:>5} {:>9} {:>10} {:>10} {:>10}", "level", "cells", "velocity", "pressure", "total")?;
            for (l, (nv, np)) in disc.dof_counts().into_iter().enumerate() {
                writeln!(out, "{l:5} {:9} {nv:10} {np:10} {:10}", disc.mesh(l).num_cells(), nv + np)?;
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
