//! Benchmark problems, observability scenarios and initial designs.

use std::f64::consts::{E, PI};
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use serde::Deserialize;

use crate::bounds::Bounds;
use crate::ep::{ConstraintObservation, ObservationKind};
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::seeding;
use crate::sobol::sobol_points;

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// What is revealed at an infeasible point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
pub enum Scenario {
    /// Objective and constraint values are always observed.
    FullyObservable,
    /// The objective is hidden at infeasible points.
    S1,
    /// The objective and every violated constraint value are hidden at
    /// infeasible points.
    S2,
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub bounds: Bounds,
    pub objective: ScalarFn,
    /// Feasible iff every constraint is `≤ 0`.
    pub constraints: Vec<ScalarFn>,
    pub scenario: Scenario,
    /// Dimensions rounded to the nearest integer before evaluation.
    pub integer_dims: Vec<usize>,
    pub known_feasible: Option<Vec<f64>>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("bounds", &self.bounds)
            .field("constraints", &self.constraints.len())
            .field("scenario", &self.scenario)
            .field("integer_dims", &self.integer_dims)
            .finish()
    }
}

/// One evaluated point with the observability mask applied.
#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationRecord {
    /// The point actually evaluated (integer dimensions rounded).
    pub x: Vec<f64>,
    pub feasible: bool,
    pub objective: Option<f64>,
    pub constraints: Vec<ObservationKind>,
}

impl EvaluationRecord {
    pub fn constraint_observation(&self, i: usize) -> ConstraintObservation {
        ConstraintObservation { x: self.x.clone(), kind: self.constraints[i] }
    }
}

impl ProblemSpec {
    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn with_scenario(mut self, scenario: Scenario) -> Self {
        self.scenario = scenario;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn round_integers(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        for &d in &self.integer_dims {
            out[d] = out[d].round();
        }
        self.bounds.clamp(&mut out);
        out
    }

    /// Unmasked objective and constraint values at `x` (after rounding).
    pub fn true_values(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let x = self.round_integers(x);
        ((self.objective)(&x), self.constraints.iter().map(|g| g(&x)).collect())
    }

    pub fn is_feasible(&self, x: &[f64]) -> bool {
        self.true_values(x).1.iter().all(|g| *g <= 0.0)
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<EvaluationRecord> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        if !self.bounds.contains(x) {
            return Err(Error::InvalidInput(format!("point {x:?} lies outside the box of {}", self.name)));
        }
        let xr = self.round_integers(x);
        let f = (self.objective)(&xr);
        let g: Vec<f64> = self.constraints.iter().map(|c| c(&xr)).collect();
        if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("{} returned a non-finite value at {xr:?}", self.name)));
        }
        let feasible = g.iter().all(|v| *v <= 0.0);
        let objective = if feasible || self.scenario == Scenario::FullyObservable { Some(f) } else { None };
        let constraints = g
            .iter()
            .map(|v| {
                if self.scenario == Scenario::S2 && *v > 0.0 {
                    ObservationKind::ViolatedFlag
                } else {
                    ObservationKind::Value(*v)
                }
            })
            .collect();
        Ok(EvaluationRecord { x: xr, feasible, objective, constraints })
    }

    /// Errors unless the shipped feasible point is feasible.
    pub fn check_known_feasible(&self) -> Result<()> {
        match &self.known_feasible {
            Some(x) if !self.is_feasible(x) => Err(Error::InvalidInput(format!("{}: shipped point {x:?} is not feasible", self.name))),
            _ => Ok(()),
        }
    }
}

/// Initial-design rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitDesign {
    /// Scrambled Sobol points; `None` means `11·n`.
    Sobol(Option<usize>),
    /// Independent uniform points.
    Uniform(usize),
}

impl Default for InitDesign {
    fn default() -> Self {
        InitDesign::Sobol(None)
    }
}

impl InitDesign {
    pub fn count(&self, dim: usize) -> usize {
        match self {
            InitDesign::Sobol(None) => 11 * dim,
            InitDesign::Sobol(Some(n)) | InitDesign::Uniform(n) => *n,
        }
    }
}

/// Initial points; they depend only on the problem name and seed, so every
/// algorithm sharing a seed starts from the same data.
pub fn initial_points(spec: &ProblemSpec, design: InitDesign, seed: u64) -> Result<Vec<Vec<f64>>> {
    let n = design.count(spec.dim());
    let stream = seeding::derive(seed, &format!("init:{}", spec.name), 0);
    match design {
        InitDesign::Sobol(_) => sobol_points(&spec.bounds, n, stream),
        InitDesign::Uniform(_) => {
            let mut rng = seeding::rng(stream);
            Ok((0..n)
                .map(|_| spec.bounds.lower.iter().zip(&spec.bounds.upper).map(|(l, u)| l + (u - l) * rng.random::<f64>()).collect())
                .collect())
        }
    }
}

/// `11·n` scrambled Sobol points, evaluated.
pub fn sobol_initial_design(spec: &ProblemSpec, seed: u64) -> Result<Vec<EvaluationRecord>> {
    initial_points(spec, InitDesign::Sobol(None), seed)?.iter().map(|x| spec.evaluate(x)).collect()
}

pub fn uniform_initial_design(spec: &ProblemSpec, count: usize, seed: u64) -> Result<Vec<EvaluationRecord>> {
    initial_points(spec, InitDesign::Uniform(count), seed)?.iter().map(|x| spec.evaluate(x)).collect()
}

fn f(func: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> ScalarFn {
    Arc::new(func)
}

/// Keane's bump function in `n` dimensions on `[0, 10]ⁿ`.
pub fn kbf(n: usize) -> ProblemSpec {
    ProblemSpec {
        name: if n == 10 { "kbf".into() } else { format!("kbf:{n}") },
        bounds: Bounds::uniform(n, 0.0, 10.0).expect("valid box"),
        objective: f(|x| {
            let num = x.iter().map(|v| v.cos().powi(4)).sum::<f64>() - 2.0 * x.iter().map(|v| v.cos().powi(2)).product::<f64>();
            let den = x.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v * v).sum::<f64>().sqrt();
            if den == 0.0 {
                0.0
            } else {
                -(num / den).abs()
            }
        }),
        constraints: vec![f(|x| 0.75 - x.iter().product::<f64>()), f(move |x| x.iter().sum::<f64>() - 7.5 * x.len() as f64)],
        scenario: Scenario::S1,
        integer_dims: vec![],
        known_feasible: Some(vec![5.0; n]),
    }
}

/// Ackley (`a = 20, b = 0.2, c = 2π`) on `[−5, 5]ⁿ` subject to `Σx ≤ 0`.
pub fn ackley(n: usize) -> ProblemSpec {
    ProblemSpec {
        name: if n == 10 { "ackley".into() } else { format!("ackley:{n}") },
        bounds: Bounds::uniform(n, -5.0, 5.0).expect("valid box"),
        objective: f(|x| {
            let d = x.len() as f64;
            let sq = x.iter().map(|v| v * v).sum::<f64>() / d;
            let cs = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / d;
            -20.0 * (-0.2 * sq.sqrt()).exp() - cs.exp() + 20.0 + E
        }),
        constraints: vec![f(|x| x.iter().sum())],
        scenario: Scenario::S2,
        integer_dims: vec![],
        known_feasible: Some(vec![0.0; n]),
    }
}

/// Welded beam design, variables `(h, l, t, b)`.
pub fn wbd() -> ProblemSpec {
    const P: f64 = 6000.0;
    const L: f64 = 14.0;
    fn tau(x: &[f64]) -> f64 {
        let (h, l, t) = (x[0], x[1], x[2]);
        let tp = P / (2f64.sqrt() * h * l);
        let m = P * (L + l / 2.0);
        let r = (l * l / 4.0 + ((h + t) / 2.0).powi(2)).sqrt();
        let j = 2.0 * (2f64.sqrt() * h * l * (l * l / 12.0 + ((h + t) / 2.0).powi(2)));
        let tpp = m * r / j;
        (tp * tp + 2.0 * tp * tpp * l / (2.0 * r) + tpp * tpp).sqrt()
    }
    ProblemSpec {
        name: "wbd".into(),
        bounds: Bounds::new(vec![0.125, 0.1, 0.1, 0.125], vec![5.0, 10.0, 10.0, 5.0]).expect("valid box"),
        objective: f(|x| 1.10471 * x[0] * x[0] * x[1] + 0.04811 * x[2] * x[3] * (14.0 + x[1])),
        constraints: vec![
            f(|x| tau(x) - 13600.0),
            f(|x| 504000.0 / (x[2] * x[2] * x[3]) - 30000.0),
            f(|x| x[0] - x[3]),
            f(|x| 6000.0 - 64746.022 * (1.0 - 0.0282346 * x[2]) * x[2] * x[3].powi(3)),
            f(|x| 2.1952 / (x[2].powi(3) * x[3]) - 0.25),
        ],
        scenario: Scenario::S1,
        integer_dims: vec![],
        known_feasible: Some(vec![1.0, 2.0, 8.0, 1.0]),
    }
}

/// Pressure vessel design; shell and head thickness are integer-rounded.
pub fn pvd() -> ProblemSpec {
    ProblemSpec {
        name: "pvd".into(),
        bounds: Bounds::new(vec![0.0, 0.0, 10.0, 150.0], vec![20.0, 20.0, 50.0, 200.0]).expect("valid box"),
        objective: f(|x| 0.6224 * x[0] * x[2] * x[3] + 1.7781 * x[1] * x[2] * x[2] + 3.1661 * x[0] * x[0] * x[3] + 19.84 * x[0] * x[0] * x[2]),
        constraints: vec![
            f(|x| -x[0] + 0.0193 * x[2]),
            f(|x| -x[1] + 0.00954 * x[2]),
            f(|x| -PI * x[2] * x[2] * x[3] - 4.0 / 3.0 * PI * x[2].powi(3) + 1_296_000.0),
            f(|x| x[3] - 240.0),
        ],
        scenario: Scenario::S2,
        integer_dims: vec![0, 1],
        known_feasible: Some(vec![1.0, 1.0, 50.0, 200.0]),
    }
}

pub fn illustrative_function(x: f64) -> f64 {
    (5.0 * x).cos() - x.sin() * (2.0 * x).sin()
}

/// One-dimensional problem whose objective and constraint are both
/// `cos(5x) − sin(x)·sin(2x)` on `[0, 10]`.
pub fn illustrative_1d(scenario: Scenario) -> ProblemSpec {
    ProblemSpec {
        name: if scenario == Scenario::FullyObservable { "illustrative1d".into() } else { "illustrative1d-pocop".into() },
        bounds: Bounds::new(vec![0.0], vec![10.0]).expect("valid box"),
        objective: f(|x| illustrative_function(x[0])),
        constraints: vec![f(|x| illustrative_function(x[0]))],
        scenario,
        integer_dims: vec![],
        known_feasible: Some(vec![4.25]),
    }
}

/// Feasible points of the fixed one-dimensional surrogate fixture.
pub const ILLUSTRATIVE_FEASIBLE: [f64; 2] = [4.25, 4.7];
/// Infeasible points of the fixed one-dimensional surrogate fixture.
pub const ILLUSTRATIVE_INFEASIBLE: [f64; 4] = [2.5, 3.7, 4.2, 5.0];

/// Constraint of the two-dimensional classifier comparison: a curved band
/// that winds through the unit square.
pub fn hlgp_demo_constraint(x: &[f64]) -> f64 {
    let centre = 0.5 + 0.3 * (3.0 * PI * x[0]).sin();
    (x[1] - centre).abs() - 0.25
}

/// `6 × 6` equidistant grid over the unit square.
pub fn hlgp_demo_design() -> Vec<Vec<f64>> {
    let ticks: Vec<f64> = (0..6).map(|i| (i as f64 + 0.5) / 6.0).collect();
    ticks.iter().flat_map(|a| ticks.iter().map(move |b| vec![*a, *b])).collect()
}

pub fn hlgp_demo_2d() -> ProblemSpec {
    ProblemSpec {
        name: "hlgp-demo-2d".into(),
        bounds: Bounds::unit(2),
        objective: f(|x| (x[0] - 0.25).powi(2) + (x[1] - 0.8).powi(2)),
        constraints: vec![f(hlgp_demo_constraint)],
        scenario: Scenario::S2,
        integer_dims: vec![],
        known_feasible: Some(vec![0.0, 0.5]),
    }
}

pub fn builtin_problems() -> Vec<ProblemSpec> {
    vec![kbf(10), ackley(10), wbd(), pvd(), illustrative_1d(Scenario::FullyObservable), illustrative_1d(Scenario::S2), hlgp_demo_2d()]
}

/// Looks a problem up by name. `kbf:n` and `ackley:n` select the dimension.
pub fn problem_by_name(name: &str) -> Result<ProblemSpec> {
    if let Some((base, dim)) = name.split_once(':') {
        let n: usize = dim.parse().map_err(|_| Error::UnknownProblem(name.into()))?;
        if n == 0 || n > 64 {
            return Err(Error::UnknownProblem(name.into()));
        }
        return match base {
            "kbf" => Ok(kbf(n)),
            "ackley" => Ok(ackley(n)),
            _ => Err(Error::UnknownProblem(name.into())),
        };
    }
    builtin_problems().into_iter().find(|p| p.name == name).ok_or_else(|| Error::UnknownProblem(name.into()))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    name: String,
    lower: Vec<f64>,
    upper: Vec<f64>,
    #[serde(default)]
    variables: Option<Vec<String>>,
    objective: String,
    #[serde(default)]
    constraints: Vec<String>,
    scenario: Scenario,
    #[serde(default)]
    integer_dims: Vec<usize>,
    #[serde(default)]
    known_feasible: Option<Vec<f64>>,
}

/// Builds a problem from TOML text with expression strings.
pub fn problem_from_toml(text: &str) -> Result<ProblemSpec> {
    let file: ProblemFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let bounds = Bounds::new(file.lower, file.upper)?;
    let vars = file.variables.unwrap_or_else(|| (1..=bounds.dim()).map(|i| format!("x{i}")).collect());
    if vars.len() != bounds.dim() {
        return Err(Error::Config(format!("{} variables for a {}-dimensional box", vars.len(), bounds.dim())));
    }
    if let Some(d) = file.integer_dims.iter().find(|d| **d >= bounds.dim()) {
        return Err(Error::Config(format!("integer dimension {d} out of range")));
    }
    let compile = |src: &str| -> Result<ScalarFn> {
        let e = Expression::parse(src, &vars)?;
        Ok(Arc::new(move |x: &[f64]| e.eval(x).unwrap_or(f64::NAN)))
    };
    let spec = ProblemSpec {
        name: file.name,
        objective: compile(&file.objective)?,
        constraints: file.constraints.iter().map(|c| compile(c)).collect::<Result<_>>()?,
        bounds,
        scenario: file.scenario,
        integer_dims: file.integer_dims,
        known_feasible: file.known_feasible,
    };
    if let Some(x) = &spec.known_feasible {
        if x.len() != spec.dim() {
            return Err(Error::Config("known_feasible has the wrong dimension".into()));
        }
    }
    spec.check_known_feasible()?;
    Ok(spec)
}

pub fn load_problem_file(path: &Path) -> Result<ProblemSpec> {
    problem_from_toml(&std::fs::read_to_string(path)?)
}
