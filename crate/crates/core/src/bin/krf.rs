use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use krf::estimates::EstimateReport;
use krf::runner;
use krf::KrfError;

#[derive(Parser)]
#[command(name = "krf", version, about = "Reduced Kähler-Ricci flow lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline for one config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recompute the report of a completed run from its artifacts.
    Verify {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Resume a run stopped after its manifold phase.
    Surgery {
        #[arg(long)]
        run: PathBuf,
    },
    /// Run every config matching a glob, each in its own directory.
    Sweep {
        #[arg(long)]
        configs: String,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, default_value = "sweep_index.json")]
        index: PathBuf,
    },
}

fn summarize(report: &EstimateReport) -> ExitCode {
    for c in &report.checks {
        let tag = if c.informational {
            "info"
        } else if c.pass {
            "pass"
        } else {
            "FAIL"
        };
        println!("{tag:4}  {:28} {:>12.5e}  (threshold {:.5e})", c.name, c.measured, c.threshold);
    }
    if report.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn fail(e: KrfError) -> ExitCode {
    eprintln!("error [{}]: {e}", e.kind());
    ExitCode::from(2)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("KRF_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out } => runner::load_config(&config).and_then(|cfg| runner::run_pipeline(&cfg, &out)),
        Command::Verify { run, report } => runner::verify(&run, &report),
        Command::Surgery { run } => runner::resume_after_extinction(&run),
        Command::Sweep { configs, jobs, index } => {
            let outcome = runner::expand_glob(&configs)
                .and_then(|paths| runner::sweep(&paths, jobs))
                .and_then(|idx| runner::write_index(&idx, &index).map(|_| idx));
            return match outcome {
                Ok(idx) => {
                    for e in &idx.entries {
                        println!("{:5}  {}", e.status, e.config);
                    }
                    println!("{} passed, {} failed, {} errors", idx.passed, idx.failed, idx.errors);
                    if idx.errors > 0 {
                        ExitCode::from(2)
                    } else if idx.failed > 0 {
                        ExitCode::from(1)
                    } else {
                        ExitCode::SUCCESS
                    }
                }
                Err(e) => fail(e),
            };
        }
    };
    match result {
        Ok(report) => summarize(&report),
        Err(e) => fail(e),
    }
}
