use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use cbob_cli::config::{parse_seeds, Experiment, Overrides};
use cbob_cli::runner::{resolve_workers, run_experiment, WORKERS_ENV};
use cbob_cli::summarize::summarize;
use cbob_cli::{demo, figure_ids, problem_listing};
use clap::{Parser, Subcommand};

/// Exit status for runs or summaries that finished with some failures.
const PARTIAL: u8 = 2;

#[derive(Parser)]
#[command(name = "cbob", version, about = "Constrained Bayesian optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (algorithm, seed) pair of an experiment config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `out` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seeds as `a..b`, `a..=b` or `1,2,5`.
        #[arg(long)]
        seeds: Option<String>,
        /// Parallel runs; overrides CBOB_WORKERS and the config.
        #[arg(long)]
        workers: Option<usize>,
        /// Overwrite results already in the output directory.
        #[arg(long)]
        force: bool,
        #[arg(long)]
        budget: Option<usize>,
        /// Exploration width for every EICB algorithm.
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Median BOV and mean ROF per algorithm, plus quartile bands.
    Summarize {
        dir: PathBuf,
        /// Where to write the tables (default `<dir>/summary`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regenerate the data behind one of the illustration figures.
    Demo {
        /// One of fig1, fig2, fig3, figB1.
        figure: String,
        #[arg(long, default_value = "demo")]
        out: PathBuf,
    },
    /// List the built-in problems.
    ListProblems,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn execute(command: Command) -> Result<ExitCode> {
    match command {
        Command::Run { config, out, seeds, workers, force, budget, beta } => {
            let overrides = Overrides { seeds: seeds.as_deref().map(parse_seeds).transpose()?, budget, beta };
            let exp = Experiment::load(&config, &overrides)?;
            let out = out.or_else(|| exp.out.clone()).ok_or_else(|| anyhow!("no output directory: pass --out or set `out` in the config"))?;
            let env = std::env::var(WORKERS_ENV).ok();
            let workers = resolve_workers(workers, env.as_deref(), exp.workers)?;
            let total = exp.algorithms.len() * exp.seeds.len();
            eprintln!("{total} runs of {} on {workers} worker(s) into {}", exp.problem.name, out.display());
            let report = run_experiment(&exp, &out, workers, force)?;
            let failed: Vec<_> = report.failures().collect();
            if failed.is_empty() {
                println!("{total} runs finished; manifest at {}", out.join(cbob_cli::runner::MANIFEST).display());
                return Ok(ExitCode::SUCCESS);
            }
            eprintln!("{} of {total} runs failed:", failed.len());
            for f in failed {
                eprintln!("  {} seed {}: {}", f.algorithm, f.seed, f.error.as_deref().unwrap_or("unknown error"));
            }
            Ok(ExitCode::from(PARTIAL))
        }
        Command::Summarize { dir, out } => {
            let report = summarize(&dir, out.as_deref())?;
            print!("{}", report.table());
            for p in &report.written {
                eprintln!("wrote {}", p.display());
            }
            if report.excluded.is_empty() {
                return Ok(ExitCode::SUCCESS);
            }
            eprintln!("excluded:");
            for e in &report.excluded {
                eprintln!("  {e}");
            }
            Ok(ExitCode::from(PARTIAL))
        }
        Command::Demo { figure, out } => {
            if !figure_ids().contains(&figure.as_str()) {
                return Err(anyhow!("unknown figure {figure:?}; expected one of {}", figure_ids().join(", ")));
            }
            for p in demo(&figure, &out)? {
                println!("{}", p.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::ListProblems => {
            print!("{}", problem_listing());
            Ok(ExitCode::SUCCESS)
        }
    }
}
