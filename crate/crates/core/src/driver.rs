//! The sequential optimization loop, its configuration, and run metrics.

use std::time::Instant;

use crate::acq_opt::{maximize_acquisition, OptimizerConfig};
use crate::acquisition::{Acquisition, AcquisitionSpec, ConstraintModel, Family, SurrogateBundle};
use crate::bounds::Bounds;
use crate::ep::{fit_gpc_hyper, fit_hlgp_hyper, ConstraintObservation, EpConfig, ObservationKind};
use crate::error::{Error, Result};
use crate::gp::{gp_fit_with, FitOptions, GpTrainingSet, BASE_JITTER};
use crate::problems::{initial_points, EvaluationRecord, InitDesign, ProblemSpec, Scenario};
use crate::seeding;
use crate::trajectory::{Trajectory, TrajectoryRow};

/// Relative jitter used when a surrogate fit is retried.
pub const RETRY_JITTER: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintModelKind {
    Hlgp,
    Gpc,
    Gpr,
}

impl ConstraintModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Hlgp => "hlgp",
            Self::Gpc => "gpc",
            Self::Gpr => "gpr",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub acquisition: AcquisitionSpec,
    pub constraint_model: ConstraintModelKind,
    /// Number of acquisition-phase evaluations.
    pub budget: usize,
    pub seed: u64,
    pub init: InitDesign,
    /// The optimizer seed is replaced by one derived per iteration.
    pub optimizer: OptimizerConfig,
    pub ep: EpConfig,
    pub gp_restarts: usize,
    /// Probe count for the adaptive EMUB scale.
    pub adapt_probes: usize,
    /// When false, `wall_ms` is written as 0 so trajectory files are
    /// byte-identical across reruns.
    pub record_wall_time: bool,
}

impl RunConfig {
    pub fn new(problem: ProblemSpec, acquisition: AcquisitionSpec, constraint_model: ConstraintModelKind) -> Self {
        Self {
            problem,
            acquisition,
            constraint_model,
            budget: 100,
            seed: 0,
            init: InitDesign::default(),
            optimizer: OptimizerConfig::default(),
            ep: EpConfig::default(),
            gp_restarts: 5,
            adapt_probes: 2048,
            record_wall_time: false,
        }
    }

    /// Short algorithm label such as `eicb_hlgp` or `eic_gpc`.
    pub fn label(&self) -> String {
        let family = match self.acquisition.family {
            Family::Eic => "eic",
            Family::Eicb => "eicb",
        };
        format!("{family}_{}", self.constraint_model.name())
    }

    pub fn validate(&self) -> Result<()> {
        self.acquisition.validate()?;
        self.optimizer.validate()?;
        if self.gp_restarts == 0 || self.adapt_probes == 0 {
            return Err(Error::Config("gp_restarts and adapt_probes must be at least 1".into()));
        }
        if self.constraint_model == ConstraintModelKind::Gpr && self.problem.scenario == Scenario::S2 {
            return Err(Error::Config(format!("{}: GPR constraint models need observed constraint values; use hlgp or gpc", self.problem.name)));
        }
        if self.init.count(self.problem.dim()) == 0 {
            return Err(Error::Config("the initial design must contain at least one point".into()));
        }
        Ok(())
    }
}

/// Evaluated points in order; records from `acquired_from` on were chosen
/// by the acquisition function.
#[derive(Clone, Debug, Default)]
pub struct Dataset {
    pub records: Vec<EvaluationRecord>,
    pub acquired_from: usize,
}

impl Dataset {
    pub fn best_feasible(&self) -> Option<f64> {
        self.records.iter().filter(|r| r.feasible).filter_map(|r| r.objective).reduce(f64::min)
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub trajectory: Trajectory,
    /// Set when the run stopped early; the trajectory is then partial.
    pub failure: Option<Error>,
}

/// Fits every surrogate on `data`, working in unit-box coordinates.
pub fn fit_surrogates(config: &RunConfig, data: &Dataset, iteration: usize, min_jitter: f64) -> Result<SurrogateBundle> {
    let bounds = &config.problem.bounds;
    let unit: Vec<Vec<f64>> = data.records.iter().map(|r| bounds.to_unit(&r.x)).collect();
    let fit = |label: &str, index: u64| FitOptions {
        restarts: config.gp_restarts,
        seed: seeding::derive(config.seed, label, ((iteration as u64) << 16) | index),
        min_jitter,
        ..FitOptions::default()
    };

    let (ox, oy): (Vec<Vec<f64>>, Vec<f64>) = data.records.iter().zip(&unit).filter_map(|(r, u)| r.objective.map(|f| (u.clone(), f))).unzip();
    let objective = if ox.is_empty() { None } else { Some(gp_fit_with(GpTrainingSet::noise_free(ox, oy)?, &fit("fit-objective", 0))?) };

    let mut constraints = Vec::with_capacity(config.problem.num_constraints());
    for i in 0..config.problem.num_constraints() {
        let opts = fit("fit-constraint", i as u64);
        let model = match config.constraint_model {
            ConstraintModelKind::Gpr => {
                let (x, y): (Vec<Vec<f64>>, Vec<f64>) = data
                    .records
                    .iter()
                    .zip(&unit)
                    .filter_map(|(r, u)| match r.constraints[i] {
                        ObservationKind::Value(g) => Some((u.clone(), g)),
                        ObservationKind::ViolatedFlag => None,
                    })
                    .unzip();
                ConstraintModel::Gpr(gp_fit_with(GpTrainingSet::noise_free(x, y)?, &opts)?)
            }
            ConstraintModelKind::Hlgp => {
                let obs: Vec<ConstraintObservation> = data.records.iter().zip(&unit).map(|(r, u)| ConstraintObservation { x: u.clone(), kind: r.constraints[i] }).collect();
                ConstraintModel::Hlgp(fit_hlgp_hyper(&obs, &config.ep, &opts)?)
            }
            ConstraintModelKind::Gpc => {
                let labels: Vec<(Vec<f64>, f64)> = data
                    .records
                    .iter()
                    .zip(&unit)
                    .map(|(r, u)| {
                        let violated = match r.constraints[i] {
                            ObservationKind::Value(g) => g > 0.0,
                            ObservationKind::ViolatedFlag => true,
                        };
                        (u.clone(), if violated { 1.0 } else { -1.0 })
                    })
                    .collect();
                ConstraintModel::Gpc(fit_gpc_hyper(&labels, &config.ep, &opts)?)
            }
        };
        constraints.push(model);
    }
    Ok(SurrogateBundle { objective, constraints, best_feasible: data.best_feasible() })
}

/// Chooses the next point in unit coordinates: maximizes log EICB, or log
/// DPOF alone while there is no feasible incumbent. Returns the point and
/// the acquisition value there.
pub fn propose(config: &RunConfig, bundle: &SurrogateBundle, iteration: usize) -> Result<(Vec<f64>, f64)> {
    let unit = Bounds::unit(config.problem.dim());
    let acq = Acquisition::new(bundle, config.acquisition, &unit, config.adapt_probes, seeding::derive(config.seed, "adapt", iteration as u64))?;
    let opt = OptimizerConfig { seed: seeding::derive(config.seed, "acq", iteration as u64), ..config.optimizer.clone() };
    let has_incumbent = bundle.objective.is_some() && bundle.best_feasible.is_some();
    let best = if has_incumbent {
        maximize_acquisition(|u| acq.log_eicb(u).unwrap_or(f64::NAN), &unit, &opt)
    } else {
        maximize_acquisition(|u| acq.log_dpof(u), &unit, &opt)
    }?;
    let value = if has_incumbent { acq.eicb(&best.x)? } else { acq.dpof(&best.x) };
    Ok((best.x, value))
}

/// Runs one optimization: initial design, then `budget` acquisitions.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let spec = &config.problem;
    let clock = Instant::now();
    let elapsed = |since: Instant| if config.record_wall_time { since.elapsed().as_secs_f64() * 1e3 } else { 0.0 };

    let mut data = Dataset::default();
    let mut trajectory = Trajectory::default();
    for x in initial_points(spec, config.init, config.seed)? {
        let rec = spec.evaluate(&x)?;
        data.records.push(rec.clone());
        trajectory.rows.push(row(config.seed, 0, &rec, data.best_feasible(), None, elapsed(clock)));
    }
    data.acquired_from = data.records.len();

    for k in 1..=config.budget {
        let start = Instant::now();
        let step = fit_surrogates(config, &data, k, BASE_JITTER)
            .or_else(|_| fit_surrogates(config, &data, k, RETRY_JITTER))
            .and_then(|bundle| propose(config, &bundle, k));
        let (u, value) = match step {
            Ok(v) => v,
            Err(e) => return Ok(RunOutcome { trajectory, failure: Some(e) }),
        };
        let rec = spec.evaluate(&spec.bounds.from_unit(&u))?;
        data.records.push(rec.clone());
        trajectory.rows.push(row(config.seed, k, &rec, data.best_feasible(), Some(value), elapsed(start)));
    }
    Ok(RunOutcome { trajectory, failure: None })
}

fn row(seed: u64, k: usize, rec: &EvaluationRecord, best: Option<f64>, acq: Option<f64>, wall_ms: f64) -> TrajectoryRow {
    TrajectoryRow { seed, k, x: rec.x.clone(), feasible: rec.feasible, f_obs: rec.objective, best_feasible: best, acq_value: acq, wall_ms }
}

/// Quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi || sorted[lo] == sorted[hi] {
        return sorted[lo];
    }
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Clone, Debug, PartialEq)]
pub struct Band {
    pub k: usize,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub runs: usize,
    /// Median final best feasible value; runs without one count as `+∞`.
    pub median_bov: f64,
    /// Mean ratio of feasible acquisition-phase evaluations.
    pub mean_rof: f64,
    /// Quartiles of the best feasible value after each iteration.
    pub bands: Vec<Band>,
}

pub fn metrics(trajectories: &[Trajectory]) -> Result<Summary> {
    let first = trajectories.first().ok_or_else(|| Error::InvalidInput("metrics need at least one trajectory".into()))?;
    let budget = first.budget();
    if let Some(t) = trajectories.iter().find(|t| t.budget() != budget) {
        return Err(Error::InvalidInput(format!("trajectories differ in length: {} vs {}", t.budget(), budget)));
    }
    let per_run: Vec<Vec<f64>> = trajectories.iter().map(|t| t.best_by_iteration().into_iter().map(|b| b.unwrap_or(f64::INFINITY)).collect()).collect();
    let bands = (0..=budget)
        .map(|k| {
            let mut v: Vec<f64> = per_run.iter().map(|r| r[k]).collect();
            v.sort_by(f64::total_cmp);
            Band { k, q25: quantile(&v, 0.25), median: quantile(&v, 0.5), q75: quantile(&v, 0.75) }
        })
        .collect::<Vec<_>>();
    let rofs: Vec<f64> = trajectories.iter().filter_map(Trajectory::ratio_of_feasible).collect();
    let mean_rof = if rofs.is_empty() { f64::NAN } else { rofs.iter().sum::<f64>() / rofs.len() as f64 };
    Ok(Summary { runs: trajectories.len(), median_bov: bands[budget].median, mean_rof, bands })
}
