use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use vlasov_cli::{analyze, config, oracle, simulate};

#[derive(Parser)]
#[command(
    name = "vlasov",
    version,
    about = "Spherically symmetric collisionless ensembles: simulate, analyze, verify."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a simulation described by a TOML config and write its artifacts.
    Simulate {
        /// Path to the run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config's `output.dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: all cores). Results do not depend on this.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Check the late-time behavior of a completed run directory.
    Analyze {
        /// Run directory holding the artifacts written by `simulate`.
        #[arg(long)]
        run: PathBuf,
        /// Optional TOML file adjusting analysis windows and the binning grid.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Closed-form reference values.
    #[command(subcommand)]
    Oracle(OracleCmd),
}

#[derive(Subcommand)]
enum OracleCmd {
    /// Exact field-free evolution of a single shell.
    FreeStream {
        /// `classical` or `relativistic`.
        #[arg(long)]
        model: String,
        /// Initial condition as `r,w,ell`.
        #[arg(long)]
        state: String,
        /// Evolution time.
        #[arg(long)]
        t: f64,
    },
}

fn run() -> Result<bool> {
    match Cli::parse().cmd {
        Cmd::Simulate {
            config: path,
            out,
            threads,
        } => {
            if let Some(n) = threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .context("configuring the thread pool")?;
            }
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("reading {}", path.display()))?;
            let cfg = config::parse_config(&text)
                .with_context(|| format!("config {}", path.display()))?;
            let out_dir = out.unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
            let summary = simulate::run_simulation(&cfg, &out_dir)?;
            println!(
                "run complete: {} shells, {} records, final time {}; artifacts in {}",
                summary.n_particles,
                summary.records,
                summary.final_time,
                out_dir.display()
            );
            Ok(true)
        }
        Cmd::Analyze { run, spec } => {
            let aspec = match spec {
                Some(p) => {
                    let text = std::fs::read_to_string(&p)
                        .with_context(|| format!("reading {}", p.display()))?;
                    analyze::parse_analysis_spec(&text)
                        .with_context(|| format!("analysis spec {}", p.display()))?
                }
                None => analyze::AnalysisSpec::default(),
            };
            let a = analyze::run_analysis(&run, &aspec)?;
            for (name, outcome) in &a.suites {
                let word = match outcome {
                    Some(true) => "pass",
                    Some(false) => "FAIL",
                    None => "n/a",
                };
                println!("{name}: {word}");
            }
            println!("asymptotics: {}", if a.pass { "pass" } else { "FAIL" });
            Ok(a.pass)
        }
        Cmd::Oracle(OracleCmd::FreeStream { model, state, t }) => {
            let model = oracle::parse_model(&model)?;
            let p = oracle::parse_state(&state)?;
            println!("{}", oracle::free_stream_line(&p, t, model)?);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
