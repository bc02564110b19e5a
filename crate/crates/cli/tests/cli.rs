use std::path::Path;
use std::process::{Command, Output};

use anyhow::Result;
use cbob::driver::{metrics, run};
use cbob_cli::config::{Experiment, Overrides};
use tempfile::TempDir;

const CONFIG: &str = r#"
problem = "illustrative1d"
seeds = [0, 1, 2]
budget = 2
gp_restarts = 1
adapt_probes = 64

[init]
design = "uniform"
count = 4

[optimizer]
multistarts = 2
local_iterations = 30
probe_count = 128

[[algorithm]]
name = "eicb"
family = "eicb"
constraint_model = "gpr"

[[algorithm]]
name = "eic"
family = "eic"
constraint_model = "gpr"
"#;

fn cbob(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cbob")).args(args).env_remove("CBOB_WORKERS").output().expect("binary runs")
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

fn setup() -> (TempDir, String, String) {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("exp.toml");
    std::fs::write(&config, CONFIG).unwrap();
    let out = dir.path().join("out");
    (dir, config.to_string_lossy().into_owned(), out.to_string_lossy().into_owned())
}

fn csvs(dir: &Path) -> Vec<String> {
    cbob_cli::runner::csv_files(dir).unwrap()
}

#[test]
fn two_algorithms_three_seeds_give_six_files_and_a_manifest() {
    let (_tmp, config, out) = setup();
    let o = cbob(&["run", "--config", &config, "--out", &out, "--workers", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let files = csvs(Path::new(&out));
    assert_eq!(files.len(), 6, "{files:?}");
    assert!(files.contains(&"eicb_seed2.csv".to_string()));
    let manifest = cbob_cli::runner::Manifest::load(Path::new(&out)).unwrap().unwrap();
    assert_eq!(manifest.runs.len(), 6);
    assert_eq!(manifest.seeds, vec![0, 1, 2]);
    assert_eq!(manifest.config_sha256.len(), 64);
    assert!(manifest.runs.iter().all(|r| r.ok));
}

#[test]
fn rerun_without_force_is_refused_and_force_is_byte_identical() {
    let (_tmp, config, out) = setup();
    assert_eq!(cbob(&["run", "--config", &config, "--out", &out, "--seeds", "0..2"]).status.code(), Some(0));
    let read = |f: &str| std::fs::read(Path::new(&out).join(f)).unwrap();
    let first: Vec<Vec<u8>> = csvs(Path::new(&out)).iter().map(|f| read(f)).collect();

    let refused = cbob(&["run", "--config", &config, "--out", &out, "--seeds", "0..2"]);
    assert_eq!(refused.status.code(), Some(1));
    assert!(text(&refused).contains("--force"), "{}", text(&refused));

    let again = cbob(&["run", "--config", &config, "--out", &out, "--seeds", "0..2", "--force", "--workers", "1"]);
    assert_eq!(again.status.code(), Some(0), "{}", text(&again));
    let second: Vec<Vec<u8>> = csvs(Path::new(&out)).iter().map(|f| read(f)).collect();
    assert_eq!(first.len(), 4);
    assert_eq!(first, second);
}

#[test]
fn summarize_reproduces_in_memory_metrics() -> Result<()> {
    let (_tmp, config, out) = setup();
    assert_eq!(cbob(&["run", "--config", &config, "--out", &out]).status.code(), Some(0));
    let o = cbob(&["summarize", &out]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let table = std::fs::read_to_string(Path::new(&out).join("summary/summary.csv"))?;
    let rows: Vec<Vec<String>> = table.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 2);

    let exp = Experiment::load(Path::new(&config), &Overrides::default())?;
    for ((name, template), row) in exp.algorithms.iter().zip(&rows) {
        let runs: Vec<_> = exp.seeds.iter().map(|s| run(&cbob::driver::RunConfig { seed: *s, ..template.clone() }).map(|o| o.trajectory)).collect::<Result<_, _>>()?;
        let m = metrics(&runs)?;
        assert_eq!(&row[0], name);
        assert_eq!(row[1].parse::<usize>()?, m.runs);
        assert_eq!(row[2].parse::<f64>()?.to_bits(), m.median_bov.to_bits());
        assert_eq!(row[3].parse::<f64>()?.to_bits(), m.mean_rof.to_bits());
        let bands = std::fs::read_to_string(Path::new(&out).join(format!("summary/bands_{name}.csv")))?;
        let last: Vec<f64> = bands.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        let b = m.bands.last().unwrap();
        assert_eq!(last, vec![b.k as f64, b.q25, b.median, b.q75]);
    }
    Ok(())
}

const HEADER: &str = "seed,k,x_1,feasible,f_obs,best_feasible,acq_value,wall_ms\n";

fn write_fixture(dir: &Path) {
    std::fs::write(dir.join("a_seed0.csv"), format!("{HEADER}0,0,1,1,0.5,0.5,,0\n0,1,2,1,-1,-1,0.3,0\n0,2,3,1,2,-1,0.1,0\n")).unwrap();
    std::fs::write(dir.join("a_seed1.csv"), format!("{HEADER}1,0,1,0,,,,0\n1,1,2,1,-3,-3,0.3,0\n1,2,3,0,,-3,0.1,0\n")).unwrap();
    std::fs::write(dir.join("b_seed0.csv"), format!("{HEADER}0,0,1,1,4,4,,0\n0,1,2,1,3,3,0.2,0\n0,2,3,1,5,3,0.2,0\n")).unwrap();
}

#[test]
fn hand_built_fixture_gives_known_rows() {
    let tmp = TempDir::new().unwrap();
    write_fixture(tmp.path());
    let o = cbob(&["summarize", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let table = std::fs::read_to_string(tmp.path().join("summary/summary.csv")).unwrap();
    assert_eq!(table, "algorithm,runs,median_bov,mean_rof\na,2,-2,0.75\nb,1,3,1\n");
    assert!(text(&o).contains("100.0%"), "{}", text(&o));
    let bands = std::fs::read_to_string(tmp.path().join("summary/bands_a.csv")).unwrap();
    assert_eq!(bands.lines().nth(1), Some("0,inf,inf,inf"));
}

#[test]
fn corrupt_and_foreign_files_are_excluded_with_partial_status() {
    let tmp = TempDir::new().unwrap();
    write_fixture(tmp.path());
    std::fs::write(tmp.path().join("a_seed2.csv"), "seed,k,x_1,feasible,f_obs,best_feasible,acq_value,wall_ms,extra\n0,0,1,1,1,1,,0,9\n").unwrap();
    std::fs::write(tmp.path().join("b_seed1.csv"), format!("{HEADER}0,0,1,maybe,1,1,,0\n")).unwrap();
    let o = cbob(&["summarize", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", text(&o));
    let t = text(&o);
    assert!(t.contains("a_seed2.csv") && t.contains("b_seed1.csv"), "{t}");
    let table = std::fs::read_to_string(tmp.path().join("summary/summary.csv")).unwrap();
    assert_eq!(table, "algorithm,runs,median_bov,mean_rof\na,2,-2,0.75\nb,1,3,1\n");
}

#[test]
fn summaries_refuse_mixed_directories() {
    let (_tmp, config, out) = setup();
    assert_eq!(cbob(&["run", "--config", &config, "--out", &out, "--seeds", "0"]).status.code(), Some(0));
    write_fixture(Path::new(&out));
    let o = cbob(&["summarize", &out]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("manifest"), "{}", text(&o));
}

#[test]
fn empty_directory_is_an_error() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(cbob(&["summarize", tmp.path().to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn malformed_configs_exit_one_with_diagnostics() {
    let (tmp, _, out) = setup();
    let cases = [
        (CONFIG.replace("budget = 2", "budget = 2\nbuget = 3"), "buget"),
        (CONFIG.replace("budget = 2", "budget = \"two\""), "budget"),
        (CONFIG.replace("family = \"eic\"", "family = \"ei\""), "ei"),
        (CONFIG.replace("\"illustrative1d\"", "\"nowhere\""), "nowhere"),
        (CONFIG.replace("[0, 1, 2]", "[0, 0]"), "seeds"),
    ];
    for (i, (body, needle)) in cases.iter().enumerate() {
        let path = tmp.path().join(format!("bad{i}.toml"));
        std::fs::write(&path, body).unwrap();
        let o = cbob(&["run", "--config", path.to_str().unwrap(), "--out", &out]);
        assert_eq!(o.status.code(), Some(1), "case {i}: {}", text(&o));
        assert!(text(&o).contains(needle), "case {i}: {}", text(&o));
    }
    let unknown = tmp.path().join("bad0.toml");
    let o = cbob(&["run", "--config", unknown.to_str().unwrap(), "--out", &out]);
    assert!(text(&o).contains("line"), "{}", text(&o));
    assert!(!Path::new(&out).exists());
}

#[test]
fn failed_runs_are_listed_with_partial_status() {
    let (_tmp, config, out) = setup();
    std::fs::create_dir_all(Path::new(&out).join("eic_seed1.csv")).unwrap();
    let o = cbob(&["run", "--config", &config, "--out", &out, "--seeds", "0,1"]);
    assert_eq!(o.status.code(), Some(2), "{}", text(&o));
    assert!(text(&o).contains("eic seed 1"), "{}", text(&o));
    let manifest = cbob_cli::runner::Manifest::load(Path::new(&out)).unwrap().unwrap();
    assert_eq!(manifest.runs.iter().filter(|r| !r.ok).count(), 1);
    let s = cbob(&["summarize", &out]);
    assert_eq!(s.status.code(), Some(2), "{}", text(&s));
    assert!(text(&s).contains("eic seed 1"), "{}", text(&s));
}

#[test]
fn worker_count_comes_from_the_environment() {
    let (_tmp, config, out) = setup();
    let o = Command::new(env!("CARGO_BIN_EXE_cbob")).args(["run", "--config", &config, "--out", &out, "--seeds", "0"]).env("CBOB_WORKERS", "lots").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("CBOB_WORKERS"), "{}", text(&o));
    let o = Command::new(env!("CARGO_BIN_EXE_cbob")).args(["run", "--config", &config, "--out", &out, "--seeds", "0"]).env("CBOB_WORKERS", "3").output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert!(text(&o).contains("3 worker"), "{}", text(&o));
}

#[test]
fn demo_and_listing() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("fig2");
    let o = cbob(&["demo", "fig2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert!(out.join("fig2_hlgp.csv").exists());
    assert_eq!(cbob(&["demo", "fig9"]).status.code(), Some(1));
    let list = cbob(&["list-problems"]);
    assert_eq!(list.status.code(), Some(0));
    for name in ["ackley", "wbd", "pvd", "illustrative1d"] {
        assert!(text(&list).contains(name));
    }
    assert_eq!(cbob(&["frobnicate"]).status.code(), Some(1));
}
