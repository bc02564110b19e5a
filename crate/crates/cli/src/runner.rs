//! Batch execution of an experiment and its manifest.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{bail, Context, Result};
use cbob::driver::run;
use serde::{Deserialize, Serialize};

use crate::config::Experiment;

pub const MANIFEST: &str = "manifest.json";
pub const WORKERS_ENV: &str = "CBOB_WORKERS";

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_sha256: String,
    pub problem: String,
    pub dim: usize,
    pub seeds: Vec<u64>,
    pub algorithms: Vec<String>,
    pub runs: Vec<RunEntry>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunEntry {
    pub algorithm: String,
    pub seed: u64,
    /// Trajectory file name; absent when the run produced nothing.
    pub file: Option<String>,
    pub ok: bool,
    pub error: Option<String>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Option<Self>> {
        let path = dir.join(MANIFEST);
        if !path.exists() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(&path)?;
        Ok(Some(serde_json::from_str(&text).with_context(|| format!("corrupt manifest {}", path.display()))?))
    }
}

pub fn trajectory_file(algorithm: &str, seed: u64) -> String {
    format!("{algorithm}_seed{seed}.csv")
}

/// Worker count from the flag, then the environment, then the config, then
/// the number of available cores.
pub fn resolve_workers(flag: Option<usize>, env: Option<&str>, config: Option<usize>) -> Result<usize> {
    let env = match env {
        Some(v) => Some(v.trim().parse::<usize>().with_context(|| format!("{WORKERS_ENV}={v:?} is not a count"))?),
        None => None,
    };
    let n = flag.or(env).or(config).unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if n == 0 {
        bail!("worker count must be at least 1");
    }
    Ok(n)
}

/// `*.csv` files directly inside `dir`, sorted by name.
pub fn csv_files(dir: &Path) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("cannot read {}", dir.display()))? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if entry.file_type()?.is_file() && name.ends_with(".csv") {
            out.push(name);
        }
    }
    out.sort();
    Ok(out)
}

/// Clears the results of a previous run, or refuses when `force` is off.
fn prepare(out: &Path, force: bool) -> Result<()> {
    if !out.exists() {
        std::fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
        return Ok(());
    }
    let old = csv_files(out)?;
    let manifest = out.join(MANIFEST);
    if old.is_empty() && !manifest.exists() {
        return Ok(());
    }
    if !force {
        bail!("{} already holds results; pass --force to overwrite", out.display());
    }
    for name in old {
        std::fs::remove_file(out.join(name))?;
    }
    if manifest.exists() {
        std::fs::remove_file(manifest)?;
    }
    Ok(())
}

#[derive(Debug)]
pub struct RunReport {
    pub out: PathBuf,
    pub manifest: Manifest,
}

impl RunReport {
    pub fn failures(&self) -> impl Iterator<Item = &RunEntry> {
        self.manifest.runs.iter().filter(|r| !r.ok)
    }
}

/// Runs every (algorithm, seed) pair on `workers` threads. Each run writes
/// its own trajectory file; the manifest is written last.
pub fn run_experiment(exp: &Experiment, out: &Path, workers: usize, force: bool) -> Result<RunReport> {
    prepare(out, force)?;
    let jobs: Vec<(usize, u64)> = (0..exp.algorithms.len()).flat_map(|a| exp.seeds.iter().map(move |s| (a, *s))).collect();
    let results: Mutex<Vec<Option<RunEntry>>> = Mutex::new(vec![None; jobs.len()]);
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..workers.min(jobs.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(a, seed)) = jobs.get(i) else { break };
                let entry = execute(exp, a, seed, out);
                results.lock().expect("no worker panics while holding the lock")[i] = Some(entry);
            });
        }
    });
    let runs = results.into_inner().expect("workers finished").into_iter().map(|r| r.expect("every job ran")).collect();
    let manifest = Manifest {
        tool: "cbob".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_sha256: exp.hash.clone(),
        problem: exp.problem.name.clone(),
        dim: exp.problem.dim(),
        seeds: exp.seeds.clone(),
        algorithms: exp.algorithms.iter().map(|(n, _)| n.clone()).collect(),
        runs,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(out.join(MANIFEST), text)?;
    Ok(RunReport { out: out.to_path_buf(), manifest })
}

fn execute(exp: &Experiment, algorithm: usize, seed: u64, out: &Path) -> RunEntry {
    let (name, template) = &exp.algorithms[algorithm];
    let mut cfg = template.clone();
    cfg.seed = seed;
    let file = trajectory_file(name, seed);
    let mut entry = RunEntry { algorithm: name.clone(), seed, file: None, ok: false, error: None };
    match run(&cfg) {
        Err(e) => entry.error = Some(e.to_string()),
        Ok(outcome) => match outcome.trajectory.save(&out.join(&file)) {
            Err(e) => entry.error = Some(format!("cannot write {file}: {e}")),
            Ok(()) => {
                entry.file = Some(file);
                entry.ok = outcome.failure.is_none();
                entry.error = outcome.failure.map(|e| format!("stopped early: {e}"));
            }
        },
    }
    entry
}
