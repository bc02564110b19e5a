//! Plot-ready data behind the illustrative figures: DPOF curves on the
//! one-dimensional fixture, the HLGP surrogate of that fixture, HLGP vs GPC
//! feasible regions on the two-dimensional grid design, and EMUB-based DPOF
//! curves over a `(β, γ)` grid.

use std::collections::VecDeque;
use std::io::Write;

use crate::acq_opt::OptimizerConfig;
use crate::acquisition::{Acquisition, AcquisitionSpec, ConstraintModel, GammaPolicy, SurrogateBundle};
use crate::bounds::Bounds;
use crate::driver::{metrics, run, ConstraintModelKind, RunConfig};
use crate::ep::{fit_gpc_hyper, fit_hlgp_hyper, ConstraintObservation, EpConfig, GpcModel, HlgpModel};
use crate::error::{Error, Result};
use crate::gp::{gp_fit, FitOptions, GpTrainingSet};
use crate::problems::{hlgp_demo_constraint, hlgp_demo_design, illustrative_1d, illustrative_function, InitDesign, Scenario, ILLUSTRATIVE_FEASIBLE, ILLUSTRATIVE_INFEASIBLE};
use crate::trajectory::Trajectory;

/// Width of the one-dimensional fixture's search box `[0, 10]`.
pub const FIXTURE_SCALE: f64 = 10.0;
/// Plotted sub-interval of the one-dimensional fixture.
pub const FIXTURE_WINDOW: (f64, f64) = (2.5, 5.0);
/// Grid step of the one-dimensional curves.
pub const CURVE_STEP: f64 = 1e-3;
/// β values of the DPOF curves; `β = 0` reduces to POF.
pub const FIG1_BETAS: [f64; 4] = [0.0, 0.5, 1.0, 1.96];
/// Side length of the two-dimensional evaluation grid.
pub const REGION_GRID: usize = 200;
/// Seeds of the trajectory panel of the first figure.
pub const FIG1_SEEDS: u64 = 5;
/// Budget of the trajectory panel of the first figure.
pub const FIG1_BUDGET: usize = 8;
/// Initial uniform samples of the trajectory panel of the first figure.
pub const FIG1_INIT: usize = 10;
/// β values of the EMUB grid.
pub const EMUB_BETAS: [f64; 2] = [1.0, 1.96];
/// Fixed γ values of the EMUB grid; `Adapt` is added to them.
pub const EMUB_GAMMAS: [f64; 2] = [0.1, 1.0];

/// A named numeric table written as CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.columns)?;
        for r in &self.rows {
            out.write_record(r.iter().map(|v| v.to_string()))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is UTF-8")
    }
}

/// Points of the one-dimensional fixture with their feasibility.
pub fn fixture_points() -> Vec<(f64, bool)> {
    let mut pts: Vec<(f64, bool)> = ILLUSTRATIVE_FEASIBLE.iter().map(|x| (*x, true)).chain(ILLUSTRATIVE_INFEASIBLE.iter().map(|x| (*x, false))).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts
}

/// Fixture coordinate `x ∈ [0, 10]` as a unit-box point.
pub fn to_unit(x: f64) -> Vec<f64> {
    vec![x / FIXTURE_SCALE]
}

/// Fully observed surrogates of the one-dimensional fixture in unit
/// coordinates `u = x / 10`: GPR for the objective and for the constraint,
/// with the incumbent taken over the feasible points.
pub fn fixture_bundle() -> Result<SurrogateBundle> {
    let pts = fixture_points();
    let x: Vec<Vec<f64>> = pts.iter().map(|(x, _)| to_unit(*x)).collect();
    let y: Vec<f64> = pts.iter().map(|(x, _)| illustrative_function(*x)).collect();
    let objective = gp_fit(GpTrainingSet::noise_free(x.clone(), y.clone())?, 5, 0)?;
    let constraint = gp_fit(GpTrainingSet::noise_free(x, y)?, 5, 1)?;
    let best = pts.iter().filter(|(_, f)| *f).map(|(x, _)| illustrative_function(*x)).reduce(f64::min);
    Ok(SurrogateBundle { objective: Some(objective), constraints: vec![ConstraintModel::Gpr(constraint)], best_feasible: best })
}

/// HLGP of the fixture constraint when it is only partially observable:
/// values at the feasible points, violation flags elsewhere.
pub fn fixture_hlgp() -> Result<HlgpModel> {
    let obs: Vec<ConstraintObservation> = fixture_points()
        .into_iter()
        .map(|(x, feasible)| if feasible { ConstraintObservation::value(to_unit(x), illustrative_function(x)) } else { ConstraintObservation::flag(to_unit(x)) })
        .collect();
    fit_hlgp_hyper(&obs, &EpConfig::default(), &FitOptions::default())
}

/// Evaluation grid on the plotted window at [`CURVE_STEP`].
pub fn window_grid() -> Vec<f64> {
    let (a, b) = FIXTURE_WINDOW;
    let n = ((b - a) / CURVE_STEP).round() as usize;
    (0..=n).map(|i| a + i as f64 * CURVE_STEP).collect()
}

fn fig1_curves(bundle: &SurrogateBundle) -> Result<Table> {
    let mut cols = vec!["x".to_string(), "g_true".into(), "g_mean".into(), "g_std".into()];
    cols.extend(FIG1_BETAS.iter().map(|b| format!("dpof_beta_{b}")));
    let mut table = Table { name: "fig1_dpof".into(), columns: cols, rows: Vec::new() };
    let unit = Bounds::unit(1);
    let acqs = FIG1_BETAS
        .iter()
        .map(|b| {
            let spec = if *b == 0.0 { AcquisitionSpec::eic() } else { AcquisitionSpec::eicb_pob(*b) };
            Acquisition::new(bundle, spec, &unit, 1, 0)
        })
        .collect::<Result<Vec<_>>>()?;
    for x in window_grid() {
        let u = to_unit(x);
        let (m, s) = bundle.constraints[0].predict(&u);
        let mut row = vec![x, illustrative_function(x), m, s];
        row.extend(acqs.iter().map(|a| a.dpof(&u)));
        table.rows.push(row);
    }
    Ok(table)
}

/// Run configuration of the trajectory panel: fully observable
/// one-dimensional problem, uniform initial design, GPR constraint model.
pub fn illustrative_run(acquisition: AcquisitionSpec, init: usize, budget: usize, seed: u64) -> RunConfig {
    RunConfig {
        budget,
        seed,
        init: InitDesign::Uniform(init),
        optimizer: OptimizerConfig::default(),
        ..RunConfig::new(illustrative_1d(Scenario::FullyObservable), acquisition, ConstraintModelKind::Gpr)
    }
}

fn bands_table(name: &str, runs: &[(String, Vec<Trajectory>)]) -> Result<Table> {
    let mut table = Table::new(name, &["k"]);
    let summaries = runs.iter().map(|(_, t)| metrics(t)).collect::<Result<Vec<_>>>()?;
    for (label, _) in runs {
        table.columns.extend(["q25", "median", "q75"].map(|q| format!("{label}_{q}")));
    }
    let budget = summaries.first().map_or(0, |s| s.bands.len());
    for k in 0..budget {
        let mut row = vec![k as f64];
        for s in &summaries {
            let b = &s.bands[k];
            row.extend([b.q25, b.median, b.q75]);
        }
        table.rows.push(row);
    }
    Ok(table)
}

/// DPOF curves for the β grid on the fixture, and best-feasible bands of
/// EIC vs EICB(β = 1.96) over [`FIG1_SEEDS`] seeds.
pub fn fig1() -> Result<Vec<Table>> {
    let bundle = fixture_bundle()?;
    let curves = fig1_curves(&bundle)?;
    let mut runs = Vec::new();
    for (label, spec) in [("eic", AcquisitionSpec::eic()), ("eicb", AcquisitionSpec::eicb_pob(1.96))] {
        let mut ts = Vec::new();
        for seed in 0..FIG1_SEEDS {
            let out = run(&illustrative_run(spec, FIG1_INIT, FIG1_BUDGET, seed))?;
            if let Some(e) = out.failure {
                return Err(e);
            }
            ts.push(out.trajectory);
        }
        runs.push((label.to_string(), ts));
    }
    Ok(vec![curves, bands_table("fig1_bands", &runs)?])
}

/// HLGP posterior of the partially observed fixture constraint.
pub fn fig2() -> Result<Vec<Table>> {
    let model = fixture_hlgp()?;
    let mut curve = Table::new("fig2_hlgp", &["x", "g_true", "mean", "std", "lower", "upper"]);
    for x in window_grid() {
        let (m, v) = model.predict(&to_unit(x));
        let s = v.max(0.0).sqrt();
        curve.rows.push(vec![x, illustrative_function(x), m, s, m - 1.96 * s, m + 1.96 * s]);
    }
    let mut points = Table::new("fig2_points", &["x", "feasible", "g_true", "site_mean", "site_std"]);
    for ((x, feasible), site) in fixture_points().into_iter().zip(model.sites()) {
        points.rows.push(vec![x, if feasible { 1.0 } else { 0.0 }, illustrative_function(x), site.site_mean, site.site_variance.sqrt()]);
    }
    Ok(vec![curve, points])
}

/// Feasible-region masks on a `REGION_GRID × REGION_GRID` cell-centred grid
/// over the unit square, row-major with `x1` varying fastest.
#[derive(Clone, Debug)]
pub struct RegionComparison {
    pub side: usize,
    pub truth: Vec<bool>,
    pub hlgp: Vec<bool>,
    pub gpc: Vec<bool>,
    pub hlgp_mean: Vec<f64>,
    pub gpc_probability: Vec<f64>,
}

impl RegionComparison {
    pub fn hlgp_components(&self) -> usize {
        components(&self.hlgp, self.side)
    }

    pub fn gpc_components(&self) -> usize {
        components(&self.gpc, self.side)
    }

    /// Fraction of truly feasible cells that the HLGP region contains.
    pub fn hlgp_coverage(&self) -> f64 {
        coverage(&self.hlgp, &self.truth)
    }

    pub fn gpc_coverage(&self) -> f64 {
        coverage(&self.gpc, &self.truth)
    }
}

fn coverage(region: &[bool], truth: &[bool]) -> f64 {
    let total = truth.iter().filter(|t| **t).count();
    let hit = region.iter().zip(truth).filter(|(r, t)| **r && **t).count();
    if total == 0 {
        0.0
    } else {
        hit as f64 / total as f64
    }
}

/// Number of 4-connected components of `true` cells in a `side × side` mask.
pub fn components(mask: &[bool], side: usize) -> usize {
    assert_eq!(mask.len(), side * side, "mask is not square");
    let mut seen = vec![false; mask.len()];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        queue.push_back(start);
        while let Some(c) = queue.pop_front() {
            let (i, j) = (c % side, c / side);
            let mut visit = |n: usize| {
                if mask[n] && !seen[n] {
                    seen[n] = true;
                    queue.push_back(n);
                }
            };
            if i > 0 {
                visit(c - 1);
            }
            if i + 1 < side {
                visit(c + 1);
            }
            if j > 0 {
                visit(c - side);
            }
            if j + 1 < side {
                visit(c + side);
            }
        }
    }
    count
}

/// Fits HLGP and GPC to the 36-point grid design of the two-dimensional
/// problem (values where feasible, flags or `+1` labels elsewhere) and
/// classifies every grid cell.
pub fn region_comparison(side: usize) -> Result<RegionComparison> {
    if side == 0 {
        return Err(Error::InvalidInput("grid side must be at least 1".into()));
    }
    let design = hlgp_demo_design();
    let obs: Vec<ConstraintObservation> = design
        .iter()
        .map(|x| {
            let g = hlgp_demo_constraint(x);
            if g <= 0.0 {
                ConstraintObservation::value(x.clone(), g)
            } else {
                ConstraintObservation::flag(x.clone())
            }
        })
        .collect();
    let labels: Vec<(Vec<f64>, f64)> = design.iter().map(|x| (x.clone(), if hlgp_demo_constraint(x) > 0.0 { 1.0 } else { -1.0 })).collect();
    let hlgp = fit_hlgp_hyper(&obs, &EpConfig::default(), &FitOptions::default())?;
    let gpc = fit_gpc_hyper(&labels, &EpConfig::default(), &FitOptions::default())?;
    Ok(classify(&hlgp, &gpc, side))
}

fn classify(hlgp: &HlgpModel, gpc: &GpcModel, side: usize) -> RegionComparison {
    let n = side * side;
    let mut out = RegionComparison {
        side,
        truth: Vec::with_capacity(n),
        hlgp: Vec::with_capacity(n),
        gpc: Vec::with_capacity(n),
        hlgp_mean: Vec::with_capacity(n),
        gpc_probability: Vec::with_capacity(n),
    };
    for j in 0..side {
        for i in 0..side {
            let x = [(i as f64 + 0.5) / side as f64, (j as f64 + 0.5) / side as f64];
            let m = hlgp.predict(&x).0;
            let p = 1.0 - gpc.probability(&x);
            out.truth.push(hlgp_demo_constraint(&x) <= 0.0);
            out.hlgp.push(m <= 0.0);
            out.gpc.push(p >= 0.5);
            out.hlgp_mean.push(m);
            out.gpc_probability.push(p);
        }
    }
    out
}

/// HLGP vs GPC feasible-region grids on the two-dimensional design.
pub fn fig3() -> Result<Vec<Table>> {
    let r = region_comparison(REGION_GRID)?;
    let mut grid = Table::new("fig3_grid", &["x1", "x2", "g_true", "hlgp_mean", "gpc_prob_feasible", "hlgp_feasible", "gpc_feasible"]);
    for j in 0..r.side {
        for i in 0..r.side {
            let c = j * r.side + i;
            let x = [(i as f64 + 0.5) / r.side as f64, (j as f64 + 0.5) / r.side as f64];
            grid.rows.push(vec![x[0], x[1], hlgp_demo_constraint(&x), r.hlgp_mean[c], r.gpc_probability[c], f64::from(u8::from(r.hlgp[c])), f64::from(u8::from(r.gpc[c]))]);
        }
    }
    let mut design = Table::new("fig3_design", &["x1", "x2", "feasible"]);
    for x in hlgp_demo_design() {
        let feasible = hlgp_demo_constraint(&x) <= 0.0;
        design.rows.push(vec![x[0], x[1], f64::from(u8::from(feasible))]);
    }
    let mut summary = Table::new("fig3_summary", &["hlgp_components", "gpc_components", "hlgp_coverage", "gpc_coverage"]);
    summary.rows.push(vec![r.hlgp_components() as f64, r.gpc_components() as f64, r.hlgp_coverage(), r.gpc_coverage()]);
    Ok(vec![grid, design, summary])
}

/// The `(β, γ)` settings of the EMUB grid.
pub fn emub_settings() -> Vec<(f64, GammaPolicy)> {
    EMUB_BETAS.iter().flat_map(|b| EMUB_GAMMAS.iter().map(|g| (*b, GammaPolicy::Fixed(*g))).chain(std::iter::once((*b, GammaPolicy::Adapt)))).collect()
}

pub fn gamma_label(g: GammaPolicy) -> String {
    match g {
        GammaPolicy::Fixed(v) => format!("{v}"),
        GammaPolicy::Adapt => "adapt".into(),
    }
}

/// EMUB-based DPOF curves on the fixture for every `(β, γ)` setting, with
/// the POF curve for reference and the resolved γ of each setting.
pub fn fig_b1() -> Result<Vec<Table>> {
    let bundle = fixture_bundle()?;
    let unit = Bounds::unit(1);
    let settings = emub_settings();
    let acqs = settings.iter().map(|(b, g)| Acquisition::new(&bundle, AcquisitionSpec::eicb_emub(*b, *g), &unit, 2048, 0)).collect::<Result<Vec<_>>>()?;
    let pof = Acquisition::new(&bundle, AcquisitionSpec::eic(), &unit, 1, 0)?;
    let mut cols = vec!["x".to_string(), "pof".into()];
    cols.extend(settings.iter().map(|(b, g)| format!("dpof_beta_{b}_gamma_{}", gamma_label(*g))));
    let mut curves = Table { name: "figB1_dpof".into(), columns: cols, rows: Vec::new() };
    for x in window_grid() {
        let u = to_unit(x);
        let mut row = vec![x, pof.pof(&u)];
        row.extend(acqs.iter().map(|a| a.dpof(&u)));
        curves.rows.push(row);
    }
    let mut gammas = Table::new("figB1_gamma", &["beta", "adapt", "gamma"]);
    for ((b, g), a) in settings.iter().zip(&acqs) {
        gammas.rows.push(vec![*b, if matches!(g, GammaPolicy::Adapt) { 1.0 } else { 0.0 }, a.gammas()[0]]);
    }
    Ok(vec![curves, gammas])
}

pub const FIGURE_IDS: [&str; 4] = ["fig1", "fig2", "fig3", "figB1"];

pub fn figure(id: &str) -> Result<Vec<Table>> {
    match id {
        "fig1" => fig1(),
        "fig2" => fig2(),
        "fig3" => fig3(),
        "figB1" => fig_b1(),
        other => Err(Error::InvalidInput(format!("unknown figure {other:?}; expected one of {}", FIGURE_IDS.join(", ")))),
    }
}
