//! Experiment configuration files.
//!
//! A config is TOML with a problem, seeds, shared run settings and one
//! `[[algorithm]]` table per algorithm. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use cbob::acq_opt::OptimizerConfig;
use cbob::acquisition::{AcquisitionSpec, Exploration, Family, GammaPolicy, DEFAULT_BETA};
use cbob::driver::{ConstraintModelKind, RunConfig};
use cbob::ep::{EpConfig, SweepOrder};
use cbob::problems::{load_problem_file, problem_by_name, InitDesign, ProblemSpec, Scenario};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const DEFAULT_SEEDS: u64 = 20;
pub const DEFAULT_BUDGET: usize = 100;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    /// Registry name such as `ackley:5` or `wbd`.
    pub problem: Option<String>,
    /// Problem definition file, relative to the config file.
    pub problem_file: Option<PathBuf>,
    /// Overrides the problem's observability scenario.
    pub scenario: Option<ScenarioName>,
    pub seeds: Option<Vec<u64>>,
    pub budget: Option<usize>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub init: Option<InitFile>,
    #[serde(default)]
    pub optimizer: OptimizerFile,
    #[serde(default)]
    pub ep: EpFile,
    pub gp_restarts: Option<usize>,
    pub adapt_probes: Option<usize>,
    #[serde(default)]
    pub record_wall_time: bool,
    #[serde(rename = "algorithm", default)]
    pub algorithms: Vec<AlgorithmFile>,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioName {
    FullyObservable,
    S1,
    S2,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum DesignName {
    Sobol,
    Uniform,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct InitFile {
    pub design: DesignName,
    /// Point count; defaults to `11·n` for Sobol designs.
    pub count: Option<usize>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerFile {
    pub multistarts: usize,
    pub local_iterations: usize,
    pub probe_count: usize,
}

impl Default for OptimizerFile {
    fn default() -> Self {
        let d = OptimizerConfig::default();
        Self { multistarts: d.multistarts, local_iterations: d.local_iterations, probe_count: d.probe_count }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum OrderName {
    Forward,
    Reverse,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpFile {
    pub tolerance: f64,
    pub max_sweeps: usize,
    pub damping: f64,
    pub noise_std: f64,
    pub alpha: f64,
    pub order: OrderName,
}

impl Default for EpFile {
    fn default() -> Self {
        let d = EpConfig::default();
        let order = match d.order {
            SweepOrder::Forward => OrderName::Forward,
            SweepOrder::Reverse => OrderName::Reverse,
        };
        Self { tolerance: d.tolerance, max_sweeps: d.max_sweeps, damping: d.damping, noise_std: d.noise_std, alpha: d.alpha, order }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum FamilyName {
    Eic,
    Eicb,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ExplorationName {
    None,
    Pob,
    Emub,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    Hlgp,
    Gpc,
    Gpr,
}

/// A fixed EMUB scale or the string `"adapt"`.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(untagged)]
pub enum GammaField {
    Fixed(f64),
    Named(String),
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmFile {
    /// File-name label; defaults to `<family>_<model>`.
    pub name: Option<String>,
    pub family: FamilyName,
    /// Defaults to `pob` for EICB and `none` for EIC.
    pub exploration: Option<ExplorationName>,
    pub beta: Option<f64>,
    pub gamma: Option<GammaField>,
    pub lambda: Option<f64>,
    pub constraint_model: ModelName,
}

/// Command-line values that replace config entries.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seeds: Option<Vec<u64>>,
    pub budget: Option<usize>,
    pub beta: Option<f64>,
}

/// A resolved experiment: one run template per algorithm, each run once
/// per seed.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub problem: ProblemSpec,
    pub seeds: Vec<u64>,
    pub algorithms: Vec<(String, RunConfig)>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    /// SHA-256 of the effective configuration.
    pub hash: String,
}

impl Experiment {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base, overrides).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn from_toml(text: &str, base: &Path, overrides: &Overrides) -> Result<Self> {
        let mut file: ExperimentFile = toml::from_str(text)?;
        apply(&mut file, overrides);
        resolve(file, base)
    }
}

fn apply(file: &mut ExperimentFile, o: &Overrides) {
    if let Some(s) = &o.seeds {
        file.seeds = Some(s.clone());
    }
    if let Some(b) = o.budget {
        file.budget = Some(b);
    }
    if let Some(beta) = o.beta {
        for a in &mut file.algorithms {
            if a.family == FamilyName::Eicb && a.exploration != Some(ExplorationName::None) {
                a.beta = Some(beta);
            }
        }
    }
}

fn resolve(file: ExperimentFile, base: &Path) -> Result<Experiment> {
    let (problem, problem_text) = match (&file.problem, &file.problem_file) {
        (Some(name), None) => (problem_by_name(name).map_err(|e| anyhow!("field `problem`: {e}"))?, String::new()),
        (None, Some(p)) => {
            let path = base.join(p);
            let text = std::fs::read_to_string(&path).with_context(|| format!("field `problem_file`: cannot read {}", path.display()))?;
            (load_problem_file(&path).map_err(|e| anyhow!("field `problem_file`: {e}"))?, text)
        }
        _ => bail!("exactly one of `problem` and `problem_file` must be given"),
    };
    let problem = match file.scenario {
        Some(ScenarioName::FullyObservable) => problem.with_scenario(Scenario::FullyObservable),
        Some(ScenarioName::S1) => problem.with_scenario(Scenario::S1),
        Some(ScenarioName::S2) => problem.with_scenario(Scenario::S2),
        None => problem,
    };

    let seeds = file.seeds.clone().unwrap_or_else(|| (0..DEFAULT_SEEDS).collect());
    if seeds.is_empty() {
        bail!("field `seeds`: at least one seed is required");
    }
    let mut sorted = seeds.clone();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        bail!("field `seeds`: seed {} is repeated", w[0]);
    }
    if file.algorithms.is_empty() {
        bail!("at least one [[algorithm]] table is required");
    }
    if file.workers == Some(0) {
        bail!("field `workers`: must be at least 1");
    }

    let init = match &file.init {
        None => InitDesign::default(),
        Some(InitFile { design: DesignName::Sobol, count }) => InitDesign::Sobol(*count),
        Some(InitFile { design: DesignName::Uniform, count: Some(n) }) => InitDesign::Uniform(*n),
        Some(InitFile { design: DesignName::Uniform, count: None }) => bail!("field `init.count`: required for a uniform design"),
    };
    let optimizer = OptimizerConfig {
        multistarts: file.optimizer.multistarts,
        local_iterations: file.optimizer.local_iterations,
        probe_count: file.optimizer.probe_count,
        seed: 0,
    };
    let ep = EpConfig {
        tolerance: file.ep.tolerance,
        max_sweeps: file.ep.max_sweeps,
        damping: file.ep.damping,
        noise_std: file.ep.noise_std,
        alpha: file.ep.alpha,
        order: match file.ep.order {
            OrderName::Forward => SweepOrder::Forward,
            OrderName::Reverse => SweepOrder::Reverse,
        },
    };

    let mut algorithms: Vec<(String, RunConfig)> = Vec::new();
    for (i, a) in file.algorithms.iter().enumerate() {
        let field = |name: &str| format!("algorithm[{i}].{name}");
        let spec = acquisition(a).with_context(|| format!("algorithm[{i}]"))?;
        let model = match a.constraint_model {
            ModelName::Hlgp => ConstraintModelKind::Hlgp,
            ModelName::Gpc => ConstraintModelKind::Gpc,
            ModelName::Gpr => ConstraintModelKind::Gpr,
        };
        let mut cfg = RunConfig::new(problem.clone(), spec, model);
        cfg.budget = file.budget.unwrap_or(DEFAULT_BUDGET);
        cfg.init = init;
        cfg.optimizer = optimizer.clone();
        cfg.ep = ep.clone();
        cfg.gp_restarts = file.gp_restarts.unwrap_or(cfg.gp_restarts);
        cfg.adapt_probes = file.adapt_probes.unwrap_or(cfg.adapt_probes);
        cfg.record_wall_time = file.record_wall_time;
        cfg.validate().with_context(|| format!("algorithm[{i}]"))?;
        let name = a.name.clone().unwrap_or_else(|| cfg.label());
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            bail!("{}: {name:?} must be non-empty and use only letters, digits, '_' or '-'", field("name"));
        }
        if algorithms.iter().any(|(n, _)| *n == name) {
            bail!("{}: duplicate algorithm name {name:?}; set distinct names", field("name"));
        }
        algorithms.push((name, cfg));
    }

    let hash = config_hash(&file, &problem_text)?;
    Ok(Experiment { problem, seeds, algorithms, out: file.out, workers: file.workers, hash })
}

fn acquisition(a: &AlgorithmFile) -> Result<AcquisitionSpec> {
    let lambda = a.lambda.unwrap_or(0.0);
    let exploration = match (a.family, a.exploration) {
        (FamilyName::Eic, None | Some(ExplorationName::None)) => {
            if a.beta.is_some() || a.gamma.is_some() {
                bail!("`beta` and `gamma` do not apply to family \"eic\"");
            }
            Exploration::None
        }
        (FamilyName::Eic, Some(_)) => bail!("field `exploration`: family \"eic\" takes no exploration function"),
        (FamilyName::Eicb, Some(ExplorationName::None)) => Exploration::None,
        (FamilyName::Eicb, None | Some(ExplorationName::Pob)) => {
            if a.gamma.is_some() {
                bail!("field `gamma`: only used with exploration \"emub\"");
            }
            Exploration::Pob { beta: a.beta.unwrap_or(DEFAULT_BETA) }
        }
        (FamilyName::Eicb, Some(ExplorationName::Emub)) => {
            let gamma = match &a.gamma {
                None => GammaPolicy::Adapt,
                Some(GammaField::Fixed(g)) => GammaPolicy::Fixed(*g),
                Some(GammaField::Named(s)) if s == "adapt" => GammaPolicy::Adapt,
                Some(GammaField::Named(s)) => bail!("field `gamma`: expected a number or \"adapt\", got {s:?}"),
            };
            Exploration::Emub { beta: a.beta.unwrap_or(DEFAULT_BETA), gamma }
        }
    };
    let family = match a.family {
        FamilyName::Eic => Family::Eic,
        FamilyName::Eicb => Family::Eicb,
    };
    let spec = AcquisitionSpec { family, exploration, lambda };
    spec.validate()?;
    Ok(spec)
}

/// Hash over everything that affects results; output location and worker
/// count are excluded.
fn config_hash(file: &ExperimentFile, problem_text: &str) -> Result<String> {
    let mut effective = file.clone();
    effective.out = None;
    effective.workers = None;
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(&effective)?);
    h.update(problem_text.as_bytes());
    Ok(format!("{:x}", h.finalize()))
}

/// Parses `a..b`, `a..=b` or a comma-separated list.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let s = s.trim();
    let num = |t: &str| t.trim().parse::<u64>().map_err(|_| anyhow!("--seeds: {t:?} is not a seed"));
    if let Some((a, b)) = s.split_once("..=") {
        let (a, b) = (num(a)?, num(b)?);
        return if a <= b { Ok((a..=b).collect()) } else { bail!("--seeds: empty range {s}") };
    }
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (num(a)?, num(b)?);
        return if a < b { Ok((a..b).collect()) } else { bail!("--seeds: empty range {s}") };
    }
    s.split(',').map(num).collect()
}
