//! `kcurv`: identity verification, single solves and parameter sweeps.
//!
//! Exit codes: 0 success, 1 config error, 2 verification failure,
//! 3 solver failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use kcurv::harness::config::RunConfig;
use kcurv::harness::sweep::{run_sweep, write_csv, SweepPlan};
use kcurv::harness::{run_solve, run_verify, RunError};

#[derive(Parser)]
#[command(name = "kcurv", version, about = "Prescribed k-curvature radial graphs in de Sitter space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the identity, symmetric-function, α and Jacobian suites.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Seed for the random fields and fuzz samples.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Solve one boundary value problem, or a refinement study for a
    /// manufactured boundary.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a parameter sweep and write one CSV row per tuple and level.
    Sweep {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Config(anyhow::Error),
    Verification(String),
    Solver(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Verification(_) => 2,
            Failure::Solver(_) => 3,
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(Failure::Config)
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display())).map_err(Failure::Solver)
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, Failure> {
    let text = match path {
        Some(p) => read(p)?,
        None => "{}".to_owned(),
    };
    RunConfig::from_json(&text).map_err(|e| Failure::Config(e.into()))
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<Vec<u8>, Failure> {
    let mut s = serde_json::to_vec_pretty(v).map_err(|e| Failure::Solver(e.into()))?;
    s.push(b'\n');
    Ok(s)
}

fn verify(config: Option<&Path>, out: &Path, seed: u64) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    let report = run_verify(&cfg, seed).map_err(|e| Failure::Solver(e.into()))?;
    write(out, &to_json(&report)?)?;
    for s in &report.suites {
        println!("{}: {}", s.name, if s.passed { "pass" } else { "FAIL" });
        for c in s.failures() {
            println!("  {} = {:e} (limit {:e})", c.name, c.value, c.limit);
        }
    }
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Verification("one or more suites failed".into()))
    }
}

fn solve(config: &Path, out: &Path) -> Result<(), Failure> {
    let cfg = load_config(Some(config))?;
    let output = run_solve(&cfg).map_err(|e| match e {
        RunError::Config(e) => Failure::Config(e.into()),
        other => Failure::Solver(other.into()),
    })?;
    write(out, &to_json(&output)?)?;
    let r = &output.report;
    println!(
        "converged in {} Newton iterations, residual {:e}, sup_interior |A| = {:.12}",
        r.newton_iters, r.final_residual, r.extremes.sup_interior_abs_a
    );
    if let Some(t) = &output.refinement {
        println!("refinement order {:.3}", t.order);
        if !t.passed {
            return Err(Failure::Verification(format!("refinement order {:.3} below 1.8", t.order)));
        }
    }
    Ok(())
}

fn sweep(plan: &Path, out: &Path) -> Result<(), Failure> {
    let plan = SweepPlan::from_json(&read(plan)?).map_err(|e| Failure::Config(e.into()))?;
    let rows = run_sweep(&plan);
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).map_err(|e| Failure::Solver(e.into()))?;
    write(out, &buf)?;
    let failed = rows.iter().filter(|r| r.status != kcurv::harness::sweep::RowStatus::Converged).count();
    println!("{} rows, {failed} not converged", rows.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Verify { config, out, seed } => verify(config.as_deref(), out, *seed),
        Command::Solve { config, out } => solve(config, out),
        Command::Sweep { plan, out } => sweep(plan, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(e) => eprintln!("config error: {e:#}"),
                Failure::Verification(msg) => eprintln!("verification failed: {msg}"),
                Failure::Solver(e) => eprintln!("solver failure: {e:#}"),
            }
            ExitCode::from(f.code())
        }
    }
}
