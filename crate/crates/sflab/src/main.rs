use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use sflab::config::{Scenario, ScenarioConfig};
use sflab::parallel::with_threads;
use sflab::runner::{run, RunError, RunOutput, Status};

#[derive(Parser)]
#[command(name = "sflab", version, about = "Saddle-focus fold asymptotics and moduli lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    config: PathBuf,
    /// Output directory; overrides `out` in `[scenario]`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; falls back to SFLAB_THREADS.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario named in the config.
    Run(RunArgs),
    /// Run the `[sweep]` grid of the config.
    Sweep(RunArgs),
}

fn emit_error(e: &RunError) -> ExitCode {
    let status = e.status();
    eprintln!("{}", json!({"status": status.as_str(), "error": e.detail()}));
    ExitCode::from(status.code() as u8)
}

fn threads(arg: Option<usize>) -> Option<usize> {
    arg.or_else(|| std::env::var("SFLAB_THREADS").ok()?.trim().parse().ok())
}

fn execute(args: RunArgs, sweep: bool) -> ExitCode {
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            return emit_error(&RunError::Output(format!(
                "{}: {e}",
                args.config.display()
            )))
        }
    };
    let mut cfg = match ScenarioConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => return emit_error(&RunError::Config(e)),
    };
    if sweep {
        cfg.scenario = Scenario::Sweep;
    }
    let out_dir = args
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("sflab-out"));
    let output = with_threads(threads(args.threads), || run(&cfg));
    finish(&output, &out_dir)
}

fn finish(output: &RunOutput, dir: &Path) -> ExitCode {
    if let Err(e) = output.write_to(dir) {
        return emit_error(&e);
    }
    match output.status {
        Status::Pass => {
            println!("{}: pass ({})", output.report["scenario"].as_str().unwrap_or(""), dir.display());
        }
        Status::InvariantFailure => {
            let failed: Vec<&str> = output.failed().map(|i| i.name.as_str()).collect();
            eprintln!(
                "{}",
                json!({"status": output.status.as_str(), "error": {"kind": "invariant", "failed": failed}})
            );
        }
        _ => {
            eprintln!(
                "{}",
                json!({"status": output.status.as_str(), "error": output.report["error"]})
            );
        }
    }
    ExitCode::from(output.status.code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(a) => execute(a, false),
        Command::Sweep(a) => execute(a, true),
    }
}
