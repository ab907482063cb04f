use std::process::ExitCode;

use clap::Parser;
use ergodyn::config::{load_config, Cli, Command, Experiment, VerifyArgs};
use ergodyn::envelope::write_atomic;
use ergodyn::error::{CliError, Result};
use ergodyn::experiments;
use ergodyn::suite::run_suite;

const EXIT_FAIL: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::FAILURE;
    }
    let outcome = match cli.command {
        Command::Experiment(e) => run_experiment(&e),
        Command::Run(args) => load_config(&args.config).and_then(|e| run_experiment(&e)),
        Command::Verify(args) => verify(&args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// `ERGODYN_THREADS` caps the worker pool; results do not depend on it.
fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("ERGODYN_THREADS") else { return Ok(()) };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::config("ERGODYN_THREADS", format!("`{value}` is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::config("ERGODYN_THREADS", e.to_string()))
}

/// Returns whether every tolerance check passed.
fn run_experiment(experiment: &Experiment) -> Result<bool> {
    let rendered = experiments::run(experiment)?;
    match experiment.output().out {
        Some(path) => write_atomic(&path, &rendered.bytes)?,
        None => print!("{}", String::from_utf8_lossy(&rendered.bytes)),
    }
    for check in rendered.envelope.checks.iter().filter(|c| !c.pass) {
        eprintln!("FAIL {}: observed {:e}, tolerance {:e}", check.name, check.observed, check.tolerance);
    }
    Ok(!rendered.envelope.failed())
}

fn verify(args: &VerifyArgs) -> Result<bool> {
    let results = run_suite(args.profile, args.seed, |r| println!("{}", r.line()))?;
    let passed = results.iter().filter(|r| r.pass).count();
    println!("{passed}/{} criteria passed", results.len());
    if let Some(path) = &args.out {
        let doc = serde_json::json!({ "profile": args.profile, "seed": args.seed, "criteria": results });
        write_atomic(path, serde_json::to_string_pretty(&doc)?.as_bytes())?;
    }
    Ok(passed == results.len())
}
