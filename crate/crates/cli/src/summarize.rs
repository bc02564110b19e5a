//! Summary tables and quartile bands over a results directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use cbob::driver::{metrics, Summary};
use cbob::figures::Table;
use cbob::trajectory::Trajectory;

use crate::runner::{csv_files, Manifest};

pub const SUMMARY_DIR: &str = "summary";

#[derive(Debug)]
pub struct SummaryReport {
    /// Per algorithm, in manifest order (or by name without a manifest).
    pub rows: Vec<(String, Summary)>,
    /// Runs or algorithms that were left out, with the reason.
    pub excluded: Vec<String>,
    pub written: Vec<PathBuf>,
}

impl SummaryReport {
    pub fn table(&self) -> String {
        let width = self.rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max("algorithm".len());
        let mut s = format!("{:<width$}  {:>4}  {:>14}  {:>7}\n", "algorithm", "runs", "median BOV", "ROF");
        for (name, m) in &self.rows {
            s.push_str(&format!("{name:<width$}  {:>4}  {:>14.6}  {:>6.1}%\n", m.runs, m.median_bov, 100.0 * m.mean_rof));
        }
        s
    }
}

/// Algorithm part of a `<algorithm>_seed<n>.csv` name.
fn algorithm_of(file: &str) -> Option<&str> {
    let stem = file.strip_suffix(".csv")?;
    let (name, seed) = stem.rsplit_once("_seed")?;
    seed.parse::<u64>().ok().map(|_| name)
}

/// Reads every trajectory in `dir`, groups them by algorithm, and writes
/// `summary.csv` plus one `bands_<algorithm>.csv` per algorithm into `out`
/// (default `dir/summary`).
pub fn summarize(dir: &Path, out: Option<&Path>) -> Result<SummaryReport> {
    let files = csv_files(dir)?;
    let mut excluded = Vec::new();
    let mut groups: Vec<(String, Vec<String>)> = Vec::new();
    match Manifest::load(dir)? {
        Some(manifest) => {
            let listed: Vec<&str> = manifest.runs.iter().filter_map(|r| r.file.as_deref()).collect();
            if let Some(stray) = files.iter().find(|f| !listed.contains(&f.as_str())) {
                bail!("{stray} is not listed in the manifest of config {}; the directory mixes results", manifest.config_sha256);
            }
            for alg in &manifest.algorithms {
                let mut members = Vec::new();
                for r in manifest.runs.iter().filter(|r| &r.algorithm == alg) {
                    match (&r.file, r.ok) {
                        (Some(f), true) => members.push(f.clone()),
                        _ => excluded.push(format!("{alg} seed {}: run failed: {}", r.seed, r.error.as_deref().unwrap_or("no output"))),
                    }
                }
                groups.push((alg.clone(), members));
            }
        }
        None => {
            let mut by_name: BTreeMap<String, Vec<String>> = BTreeMap::new();
            for f in &files {
                match algorithm_of(f) {
                    Some(a) => by_name.entry(a.to_string()).or_default().push(f.clone()),
                    None => excluded.push(format!("{f}: name does not match <algorithm>_seed<n>.csv")),
                }
            }
            groups.extend(by_name);
        }
    }
    if groups.iter().all(|(_, m)| m.is_empty()) && excluded.is_empty() {
        bail!("{} contains no trajectory files", dir.display());
    }

    let out = out.map(Path::to_path_buf).unwrap_or_else(|| dir.join(SUMMARY_DIR));
    std::fs::create_dir_all(&out)?;
    let mut rows = Vec::new();
    for (alg, members) in groups {
        let mut trajectories = Vec::new();
        for f in members {
            match Trajectory::load(&dir.join(&f)) {
                Ok(t) if t.rows.is_empty() => excluded.push(format!("{f}: empty trajectory")),
                Ok(t) => trajectories.push(t),
                Err(e) => excluded.push(format!("{f}: {e}")),
            }
        }
        if trajectories.is_empty() {
            continue;
        }
        match metrics(&trajectories) {
            Ok(m) => rows.push((alg, m)),
            Err(e) => excluded.push(format!("{alg}: {e}")),
        }
    }

    let mut written = Vec::new();
    let path = out.join("summary.csv");
    std::fs::write(&path, summary_csv(&rows))?;
    written.push(path);
    for (alg, m) in &rows {
        let mut bands = Table::new(format!("bands_{alg}"), &["k", "q25", "median", "q75"]);
        bands.rows = m.bands.iter().map(|b| vec![b.k as f64, b.q25, b.median, b.q75]).collect();
        let path = out.join(format!("{}.csv", bands.name));
        bands.write_csv(std::fs::File::create(&path)?)?;
        written.push(path);
    }
    Ok(SummaryReport { rows, excluded, written })
}

fn summary_csv(rows: &[(String, Summary)]) -> String {
    let mut s = String::from("algorithm,runs,median_bov,mean_rof\n");
    for (name, m) in rows {
        s.push_str(&format!("{name},{},{},{}\n", m.runs, m.median_bov, m.mean_rof));
    }
    s
}
