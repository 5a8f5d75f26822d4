//! `hermlab`: runs curvature scenarios from JSON configs.
//!
//! Exit status: 0 when every check passes, 2 when a check fails (the report
//! is still written), 1 on config, geometry or i/o errors.

mod config;
mod error;
mod output;
mod scenario;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use hermlab_core::C64;
use serde_json::json;

use crate::config::Builder;
use crate::error::CliError;
use crate::scenario::{Check, Context, Outcome};

#[derive(Parser)]
#[command(name = "hermlab", version, about = "Curvature positivity scenarios for Hermitian metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write report.json, fields/ and metrics/.
    Run(RunArgs),
    /// Check a config (schema, expressions, geometry) without numerics.
    Validate { config: PathBuf },
}

#[derive(clap::Args)]
struct RunArgs {
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for grid sweeps.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Classification tolerance; overrides `numeric.tol`.
    #[arg(long)]
    tol: Option<f64>,
    /// Re-evaluate the final metrics at one point, given as "re,im,...".
    #[arg(long)]
    point: Option<String>,
}

const EXIT_FAIL: u8 = 2;
const EXIT_ERROR: u8 = 1;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let status = match cli.command {
        Command::Run(args) => run(&args),
        Command::Validate { config } => validate(&config),
    };
    match status {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn validate(path: &Path) -> Result<u8, CliError> {
    let cfg = config::load(path)?;
    Context::new(Builder { config: &cfg, base: base_dir(path) })?.validate()?;
    Ok(0)
}

fn parse_point(text: &str, n: usize) -> Result<Vec<C64>, CliError> {
    let bad = |m: String| CliError::config("--point".into(), m);
    let xs = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| bad(format!("`{s}`: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    if xs.len() != 2 * n {
        return Err(bad(format!("expected {} numbers for a point of C^{n}, got {}", 2 * n, xs.len())));
    }
    Ok(xs.chunks(2).map(|c| C64::new(c[0], c[1])).collect())
}

fn run(args: &RunArgs) -> Result<u8, CliError> {
    let start = Instant::now();
    let mut cfg = config::load(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(t) = args.tol {
        cfg.numeric.tol = Some(t);
    }
    if let Some(threads) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::config("--threads".into(), e.to_string()))?;
    }
    let base = base_dir(&args.config);
    let out_dir = match (&args.out, &cfg.output.dir) {
        (Some(d), _) => d.clone(),
        (None, Some(d)) => base.join(d),
        (None, None) => base.join("hermlab-out"),
    };
    let point = args.point.as_deref().map(|p| parse_point(p, cfg.domain.n)).transpose()?;

    let cx = Context::new(Builder { config: &cfg, base })?;
    cx.validate()?;
    let outcome = match cx.run() {
        Ok(o) => o,
        Err(CliError::Core { context, source: source @ hermlab_core::Error::WeightSearchFailed { .. } }) => {
            let mut o = Outcome::new(cx.domain.steps());
            o.checks.push(Check::new("weight_search", false, None, format!("{context}: {source}")));
            o
        }
        Err(e) => return Err(e),
    };
    let computed = start.elapsed().as_secs_f64();

    let mut report = json!({
        "kind": cfg.kind,
        "seed": cfg.seed,
        "tolerance": cfg.numeric.tol.unwrap_or_else(|| {
            let h = outcome.steps.iter().copied().fold(0.0, f64::max);
            10.0 * h * h
        }),
        "config": &cfg,
    });
    let checks = match &point {
        Some(z) => {
            let (checks, at) = scenario::probe_point(&outcome.probes, z, &outcome.steps, &cx.opts)?;
            report["mode"] = json!("point");
            report["point"] = json!(z.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>());
            report["result"] = at;
            checks
        }
        None => {
            report["mode"] = json!("grid");
            report["result"] = outcome.result.clone();
            let provenance = json!({ "kind": cfg.kind, "seed": cfg.seed });
            report["outputs"] =
                output::write_artifacts(&out_dir, &outcome, cfg.output.fields, cfg.output.metrics, &provenance)?;
            outcome.checks.clone()
        }
    };
    let pass = checks.iter().all(|c| c.pass);
    report["pass"] = json!(pass);
    report["checks"] = json!(checks);
    report["timing"] = json!({ "compute_seconds": computed, "total_seconds": start.elapsed().as_secs_f64() });
    output::write_report(&out_dir, &report)?;

    print_summary(&checks, &out_dir);
    Ok(if pass { 0 } else { EXIT_FAIL })
}

fn print_summary(checks: &[Check], dir: &Path) {
    for c in checks {
        let value = c.value.map_or(String::new(), |v| format!(" {v:e}"));
        println!("{} {}{value}  {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    println!("report: {}", dir.join("report.json").display());
}
