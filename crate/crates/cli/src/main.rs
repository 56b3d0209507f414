use std::path::PathBuf;
use std::process::ExitCode;

use adfd_core::harness::{
    run_experiment, run_preset, verify_config, ExperimentConfig, RunOptions, VerdictStatus,
    OUTPUT_ROOT_ENV,
};
use adfd_core::Error;
use clap::{Parser, Subcommand};

const EXIT_FAILURE: u8 = 1;
const EXIT_SCHEMA: u8 = 2;
const EXIT_DIVERGED: u8 = 3;

/// AD vs FD spectral experiments for PINN-style PDE solvers.
#[derive(Parser)]
#[command(name = "adfd", version)]
struct Cli {
    /// Skip SVG rendering.
    #[arg(long, global = true)]
    no_plots: bool,

    /// Root for relative output directories.
    #[arg(long, global = true, env = OUTPUT_ROOT_ENV, default_value = ".")]
    output_root: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment described by a TOML config.
    Run { config: PathBuf },
    /// Run a figure preset over several seeds.
    Preset {
        name: String,
        #[arg(long, default_value_t = 10)]
        seeds: usize,
        /// Output directory; defaults to the output root.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check Propositions 1-2 for a config without writing artifacts.
    Verify { config: PathBuf },
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::Config(_) | Error::UnknownProblem(_) => ExitCode::from(EXIT_SCHEMA),
        _ => ExitCode::from(EXIT_FAILURE),
    }
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    ExperimentConfig::from_toml_str(&text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let plots = !cli.no_plots;
    match cli.command {
        Command::Run { config } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            let opts = RunOptions { output_root: cli.output_root, plots };
            match run_experiment(&cfg, &opts) {
                Ok(a) => {
                    println!("{}", a.summary_path.display());
                    if a.diverged() {
                        eprintln!("training diverged; partial artifacts in {}", a.directory.display());
                        return ExitCode::from(EXIT_DIVERGED);
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
        Command::Preset { name, seeds, out } => {
            let out = out.unwrap_or(cli.output_root);
            match run_preset(&name, seeds, &out, plots) {
                Ok(o) => {
                    for a in &o.aggregates {
                        let h = |k: &str| a.metrics.get(k).map_or(f64::NAN, |s| s.mean);
                        println!("{}: H_AD {:.4} H_FD {:.4} ({} seeds)", a.tag, h("H_AD"), h("H_FD"), a.seeds.len());
                    }
                    println!("{}", o.directory.display());
                    if o.diverged() {
                        eprintln!("at least one run diverged; partial artifacts kept");
                        return ExitCode::from(EXIT_DIVERGED);
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
        Command::Verify { config } => {
            let report = match load(&config).and_then(|c| verify_config(&c)) {
                Ok(r) => r,
                Err(e) => return fail(&e),
            };
            let text = serde_json::to_string_pretty(&report).expect("report serializes");
            println!("{text}");
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                if report.prop1.status == VerdictStatus::Fails {
                    eprintln!("proposition 1 sandwich violated");
                } else {
                    eprintln!("proposition 2 ordering violated under its hypothesis");
                }
                ExitCode::from(EXIT_FAILURE)
            }
        }
    }
}
