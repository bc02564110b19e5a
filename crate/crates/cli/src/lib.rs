//! Experiment runner for the `cbob` library: TOML experiment configs,
//! parallel seeded runs with a manifest, summary tables and figure data.

pub mod config;
pub mod runner;
pub mod summarize;

use std::path::Path;

use anyhow::Result;
use cbob::figures::{figure, FIGURE_IDS};
use cbob::problems::builtin_problems;

/// Writes every table of figure `id` as `<out>/<table>.csv`.
pub fn demo(id: &str, out: &Path) -> Result<Vec<std::path::PathBuf>> {
    let tables = figure(id)?;
    std::fs::create_dir_all(out)?;
    let mut written = Vec::new();
    for t in tables {
        let path = out.join(format!("{}.csv", t.name));
        t.write_csv(std::fs::File::create(&path)?)?;
        written.push(path);
    }
    Ok(written)
}

pub fn figure_ids() -> &'static [&'static str] {
    &FIGURE_IDS
}

/// One line per built-in problem: name, dimension, constraint count and
/// scenario.
pub fn problem_listing() -> String {
    let mut s = format!("{:<22} {:>4} {:>12}  {}\n", "name", "dim", "constraints", "scenario");
    for p in builtin_problems() {
        s.push_str(&format!("{:<22} {:>4} {:>12}  {:?}\n", p.name, p.dim(), p.num_constraints(), p.scenario));
    }
    s.push_str("kbf:<n> and ackley:<n> select other dimensions\n");
    s
}
