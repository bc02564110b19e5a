//! Property checks over seeded random instances. Each check drives a
//! deterministic proptest runner so failures shrink and replay identically.

use std::cell::Cell;
use std::fmt::Debug;

use anyhow::{anyhow, Result};
use cbob::acq_opt::{maximize_acquisition, OptimizerConfig};
use cbob::acquisition::{adapt_gamma, emub, expected_improvement, exploration_emub, exploration_pob, Acquisition, AcquisitionSpec, ConstraintModel, GammaPolicy, SurrogateBundle};
use cbob::driver::{fit_surrogates, run, ConstraintModelKind, Dataset, RunConfig};
use cbob::ep::{ep_fit_hlgp, ConstraintObservation, EpConfig, HlgpModel, SiteParams, SweepOrder};
use cbob::gp::{GpModel, GpTrainingSet};
use cbob::math::{matern52, matern52_with_gradient, norm_cdf, norm_pdf, KernelParams, MeanParams};
use cbob::problems::{self, InitDesign, ProblemSpec, Scenario};
use cbob::sobol::{sobol_points, Sobol};
use cbob::Bounds;
use nalgebra::DMatrix;
use proptest::collection::vec;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

use super::oracles::random_gp;

type Case = std::result::Result<(), TestCaseError>;

fn check<S>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Case) -> Result<()>
where
    S: Strategy,
    S::Value: Debug,
{
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, test).map_err(|e| anyhow!("{e}"))
}

fn lib<T>(r: cbob::Result<T>) -> std::result::Result<T, TestCaseError> {
    r.map_err(|e| TestCaseError::fail(e.to_string()))
}

/// Random point set in `[0,1]^d` with kernel hyperparameters.
fn point_sets(max: usize) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>, f64)> {
    (1usize..=4).prop_flat_map(move |d| (vec(vec(0.0..1.0f64, d), 1..=max), vec(0.05..2.0f64, d), 0.1..5.0f64))
}

pub fn kernel_psd(cases: u32) -> Result<()> {
    check(cases, point_sets(20), |(x, l, s)| {
        let k = lib(KernelParams::new(s, l))?;
        let mut m: DMatrix<f64> = lib(cbob::math::kernel_matrix(&x, &k))?;
        for i in 0..x.len() {
            m[(i, i)] += 1e-9 * s;
        }
        prop_assert!(m.cholesky().is_some());
        Ok(())
    })
}

pub fn kernel_gradient(cases: u32) -> Result<()> {
    let strat = (1usize..=4).prop_flat_map(|d| (vec(-1.0..1.0f64, d), vec(-1.0..1.0f64, d), vec(0.1..2.0f64, d), 0.1..5.0f64));
    check(cases, strat, |(a, b, l, s)| {
        let k = lib(KernelParams::new(s, l.clone()))?;
        let (_, grad) = lib(matern52_with_gradient(&a, &b, &k))?;
        let h = 1e-6;
        let eval = |s: f64, l: &[f64]| matern52(&a, &b, &KernelParams::new(s, l.to_vec()).unwrap()).unwrap();
        let mut fd = vec![(eval(s + h, &l) - eval(s - h, &l)) / (2.0 * h)];
        for j in 0..l.len() {
            let (mut up, mut dn) = (l.clone(), l.clone());
            up[j] += h;
            dn[j] -= h;
            fd.push((eval(s, &up) - eval(s, &dn)) / (2.0 * h));
        }
        for (an, num) in grad.iter().zip(&fd) {
            prop_assert!((an - num).abs() <= 1e-4 * an.abs() + 1e-9, "analytic {an} vs finite difference {num}");
        }
        Ok(())
    })
}

pub fn cdf_derivative() -> Result<()> {
    let h = 1e-5;
    for i in 0..=1200 {
        let z = -6.0 + i as f64 * 0.01;
        let d = (norm_cdf(z + h) - norm_cdf(z - h)) / (2.0 * h);
        if (d - norm_pdf(z)).abs() > 1e-6 {
            return Err(anyhow!("dΦ/dz at {z}: {d} vs φ {}", norm_pdf(z)));
        }
    }
    Ok(())
}

pub fn variance_bounded(cases: u32) -> Result<()> {
    check(cases, (1usize..=15, 1usize..=3, any::<u64>(), vec(vec(-0.5..1.5f64, 3), 1..10)), |(n, d, seed, probes)| {
        let model = random_gp(n, d, seed).map_err(|e| TestCaseError::fail(e.to_string()))?;
        for p in &probes {
            let (_, v) = model.predict(&p[..d]);
            prop_assert!(v <= model.kernel().signal_variance + 1e-9 && v >= 0.0);
        }
        Ok(())
    })
}

fn one_d_kernel() -> impl Strategy<Value = KernelParams> {
    (0.1..0.6f64, 0.5..2.0f64).prop_map(|(l, s)| KernelParams::new(s, vec![l]).unwrap())
}

pub fn data_shrinks_variance(cases: u32) -> Result<()> {
    check(cases, (vec((0.0..1.0f64, -2.0..2.0f64), 1..10), (0.0..1.0f64, -2.0..2.0f64), one_d_kernel(), vec(-0.2..1.2f64, 10)), |(data, extra, k, probes)| {
        let build = |pts: &[(f64, f64)]| {
            let x = pts.iter().map(|p| vec![p.0]).collect();
            let y = pts.iter().map(|p| p.1).collect();
            GpModel::new(GpTrainingSet::with_noise(x, y, 1e-4).unwrap(), k.clone(), MeanParams::new(0.0))
        };
        let before = lib(build(&data))?;
        let mut more = data.clone();
        more.push(extra);
        let after = lib(build(&more))?;
        for p in probes {
            let (v0, v1) = (before.predict(&[p]).1, after.predict(&[p]).1);
            prop_assert!(v1 <= v0 + 1e-10, "variance rose from {v0} to {v1} at {p}");
        }
        Ok(())
    })
}

pub fn interpolation(cases: u32) -> Result<()> {
    check(cases, (vec(-2.0..2.0f64, 1..10), 0.02..0.1f64, 0.5..2.0f64), |(y, l, s)| {
        let x: Vec<Vec<f64>> = (0..y.len()).map(|i| vec![i as f64 * 0.1]).collect();
        let model = lib(GpModel::new(lib(GpTrainingSet::noise_free(x.clone(), y.clone()))?, KernelParams::new(s, vec![l]).unwrap(), MeanParams::new(0.3)))?;
        prop_assert!(model.jitter() <= 1e-9 * s);
        for (xi, yi) in x.iter().zip(&y) {
            let m = model.predict(xi).0;
            prop_assert!((m - yi).abs() <= 1e-6 * yi.abs().max(1.0), "mean {m} vs {yi}");
        }
        Ok(())
    })
}

/// Mixed 1-D constraint observations from a random sinusoid: values where
/// it is satisfied, flags where it is violated.
fn mixed_observations() -> impl Strategy<Value = (Vec<ConstraintObservation>, KernelParams)> {
    (vec(0.0..1.0f64, 2..9), 0.5..1.5f64, 2.0..9.0f64, 0.0..6.3f64, -0.6..0.6f64, one_d_kernel()).prop_map(|(xs, a, w, phase, shift, k)| {
        let obs = xs
            .into_iter()
            .map(|x| {
                let g = a * (w * x + phase).sin() + shift;
                if g <= 0.0 {
                    ConstraintObservation::value(vec![x], g)
                } else {
                    ConstraintObservation::flag(vec![x])
                }
            })
            .collect();
        (obs, k)
    })
}

fn rel_change(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs()).max(1.0)
    }
}

fn max_site_change(a: &[SiteParams], b: &[SiteParams]) -> f64 {
    a.iter().zip(b).map(|(p, q)| rel_change(p.site_mean, q.site_mean).max(rel_change(p.site_variance, q.site_variance))).fold(0.0, f64::max)
}

fn fit(obs: &[ConstraintObservation], k: &KernelParams, config: &EpConfig) -> std::result::Result<HlgpModel, TestCaseError> {
    lib(ep_fit_hlgp(obs, k, MeanParams::new(0.0), config))
}

pub fn ep_fixed_point(cases: u32) -> Result<()> {
    check(cases, mixed_observations(), |(obs, k)| {
        let config = EpConfig::default();
        let model = fit(&obs, &k, &config)?;
        prop_assume!(model.converged());
        let longer = fit(&obs, &k, &EpConfig { tolerance: f64::MIN_POSITIVE, max_sweeps: model.sweeps() + 1, ..config.clone() })?;
        let change = max_site_change(model.sites(), longer.sites());
        prop_assert!(change <= config.tolerance, "extra sweep moved a site by {change}");
        Ok(())
    })
}

pub fn gaussian_reduction(cases: u32) -> Result<()> {
    check(cases, (vec((0.0..1.0f64, -2.0..2.0f64), 1..10), one_d_kernel(), vec(-0.2..1.2f64, 10)), |(data, k, probes)| {
        let config = EpConfig::default();
        let obs: Vec<_> = data.iter().map(|(x, g)| ConstraintObservation::value(vec![*x], *g)).collect();
        let hlgp = fit(&obs, &k, &config)?;
        let x = data.iter().map(|p| vec![p.0]).collect();
        let y = data.iter().map(|p| p.1).collect();
        let gpr = lib(GpModel::new(lib(GpTrainingSet::with_noise(x, y, config.noise_std * config.noise_std))?, k.clone(), MeanParams::new(0.0)))?;
        for p in probes {
            let (a, b) = (hlgp.predict(&[p]), gpr.predict(&[p]));
            prop_assert!((a.0 - b.0).abs() <= 1e-8 && (a.1 - b.1).abs() <= 1e-8, "{a:?} vs {b:?} at {p}");
        }
        Ok(())
    })
}

pub fn sweep_order_invariance(cases: u32) -> Result<()> {
    check(cases, mixed_observations(), |(obs, k)| {
        let config = EpConfig::default();
        let fwd = fit(&obs, &k, &config)?;
        let rev = fit(&obs, &k, &EpConfig { order: SweepOrder::Reverse, ..config.clone() })?;
        prop_assume!(fwd.converged() && rev.converged());
        let change = max_site_change(fwd.sites(), rev.sites());
        prop_assert!(change <= 10.0 * config.tolerance, "orders disagree by {change}");
        Ok(())
    })
}

pub fn flags_shrink_variance(cases: u32) -> Result<()> {
    check(cases, (mixed_observations(), 0.0..1.0f64, vec(-0.2..1.2f64, 10)), |((obs, k), extra, probes)| {
        let config = EpConfig::default();
        let before = fit(&obs, &k, &config)?;
        let mut more = obs.clone();
        more.push(ConstraintObservation::flag(vec![extra]));
        let after = fit(&more, &k, &config)?;
        for p in probes {
            let (v0, v1) = (before.predict(&[p]).1, after.predict(&[p]).1);
            // EP fixed points are only resolved to the sweep tolerance.
            prop_assert!(v1 <= v0 + config.tolerance * k.signal_variance, "variance rose from {v0} to {v1} at {p}");
        }
        Ok(())
    })
}

/// One flag added to a values-only model: the flagged marginal is a
/// truncated log-concave Gaussian, so no variance can rise.
pub fn single_flag_shrinks_variance(cases: u32) -> Result<()> {
    check(cases, (vec((0.0..1.0f64, -2.0..2.0f64), 1..8), 0.0..1.0f64, one_d_kernel(), vec(-0.2..1.2f64, 10)), |(data, extra, k, probes)| {
        let config = EpConfig::default();
        let obs: Vec<_> = data.iter().map(|(x, g)| ConstraintObservation::value(vec![*x], *g)).collect();
        let before = fit(&obs, &k, &config)?;
        let mut more = obs.clone();
        more.push(ConstraintObservation::flag(vec![extra]));
        let after = fit(&more, &k, &config)?;
        for p in probes {
            let (v0, v1) = (before.predict(&[p]).1, after.predict(&[p]).1);
            prop_assert!(v1 <= v0 + config.tolerance * k.signal_variance, "variance rose from {v0} to {v1} at {p}");
        }
        Ok(())
    })
}

fn random_bundle(seed: u64, constraints: usize) -> std::result::Result<SurrogateBundle, TestCaseError> {
    let gp = |s: u64| random_gp(6, 2, s).map_err(|e| TestCaseError::fail(e.to_string()));
    Ok(SurrogateBundle {
        objective: Some(gp(seed)?),
        constraints: (0..constraints).map(|i| gp(seed.wrapping_add(i as u64 + 1)).map(ConstraintModel::Gpr)).collect::<std::result::Result<_, _>>()?,
        best_feasible: Some(0.0),
    })
}

fn exploring_specs() -> impl Strategy<Value = AcquisitionSpec> {
    prop_oneof![
        (0.1..3.0f64).prop_map(AcquisitionSpec::eicb_pob),
        (0.1..3.0f64, 0.05..2.0f64).prop_map(|(b, g)| AcquisitionSpec::eicb_emub(b, GammaPolicy::Fixed(g))),
        (0.1..3.0f64).prop_map(|b| AcquisitionSpec::eicb_emub(b, GammaPolicy::Adapt)),
    ]
}

pub fn dpof_dominates_pof(cases: u32) -> Result<()> {
    check(cases, (any::<u64>(), 1usize..=3, exploring_specs(), vec(vec(0.0..1.0f64, 2), 5)), |(seed, m, spec, xs)| {
        let bundle = random_bundle(seed, m)?;
        let unit = Bounds::unit(2);
        let eicb = lib(Acquisition::new(&bundle, spec, &unit, 64, seed))?;
        let eic = lib(Acquisition::new(&bundle, AcquisitionSpec { lambda: spec.lambda, ..AcquisitionSpec::eic() }, &unit, 64, seed))?;
        for x in &xs {
            for (c, f) in bundle.constraints.iter().zip(eicb.dpof_factors(x)) {
                prop_assert!(f >= c.feasibility_probability(x, spec.lambda) && f <= 1.0);
            }
            prop_assert!(lib(eicb.eicb(x))? >= lib(eic.eicb(x))?);
        }
        Ok(())
    })
}

pub fn pob_bounds(cases: u32) -> Result<()> {
    check(cases, (any::<u64>(), 1usize..=3, 0.1..3.0f64, vec(vec(0.0..1.0f64, 2), 5)), |(seed, m, beta, xs)| {
        let bundle = random_bundle(seed, m)?;
        let acq = lib(Acquisition::new(&bundle, AcquisitionSpec::eicb_pob(beta), &Bounds::unit(2), 1, 0))?;
        for x in &xs {
            for (c, f) in bundle.constraints.iter().zip(acq.dpof_factors(x)) {
                let phi = c.feasibility_probability(x, 0.0);
                prop_assert!(f <= (2.0 * phi).min(1.0) + 1e-15);
            }
            prop_assert!(lib(acq.eicb(x))? <= lib(acq.ei(x))?);
        }
        Ok(())
    })
}

pub fn exploration_definition(cases: u32) -> Result<()> {
    check(cases, (-3.0..3.0f64, 0.1..3.0f64, 0.1..3.0f64, any::<u64>()), |(m, s, beta, seed)| {
        prop_assert_eq!(exploration_pob(m, 0.0, beta), 0.0);
        prop_assert_eq!(emub(m, 0.0, beta), 0.0);
        let pob = exploration_pob(m, s, beta);
        prop_assert!((0.0..=1.0).contains(&pob));
        let e = emub(m, s, beta);
        prop_assert!(e >= 0.0 && e <= beta * s + 1e-12);
        if m != 0.0 {
            prop_assert!(exploration_pob(m, 1e-9 * m.abs(), beta) < 1e-12);
            prop_assert!(emub(m, 1e-9 * m.abs(), beta) < 1e-12);
        }
        let bundle = random_bundle(seed, 1)?;
        let unit = Bounds::unit(2);
        let gamma = lib(adapt_gamma(&bundle.constraints[0], beta, 0.0, &unit, 128, seed))?;
        for x in lib(sobol_points(&unit, 128, seed))? {
            let c = &bundle.constraints[0];
            let (mu, sd) = c.predict(&x);
            prop_assert!(exploration_emub(mu, sd, beta, gamma) * c.feasibility_probability(&x, 0.0) <= 1.0 + 1e-12);
        }
        Ok(())
    })
}

pub fn ei_scaling(cases: u32) -> Result<()> {
    check(cases, (vec((-2.0..2.0f64, 0.05..2.0f64, 0.01..1.0f64), 2..20), -1.0..1.0f64, 0.01..100.0f64), |(cands, best, c)| {
        let argmax = |scale: f64| {
            let mut best_i = 0;
            let mut best_v = f64::NEG_INFINITY;
            for (i, (m, s, d)) in cands.iter().enumerate() {
                let v = expected_improvement(best - scale * (best - m), scale * s, best) * d;
                if v > best_v {
                    best_v = v;
                    best_i = i;
                }
            }
            best_i
        };
        for (m, s, _) in &cands {
            let base = expected_improvement(*m, *s, best);
            let scaled = expected_improvement(best - c * (best - m), c * s, best);
            prop_assert!((scaled - c * base).abs() <= 1e-9 * (c * base).max(1e-300) + 1e-300);
        }
        prop_assert_eq!(argmax(1.0), argmax(c));
        Ok(())
    })
}

pub fn optimizer_properties(cases: u32) -> Result<()> {
    let strat = (1usize..=3).prop_flat_map(|d| (vec((-5.0..0.0f64, 0.1..5.0f64), d), vec(0.0..1.0f64, d), vec(1.0..20.0f64, d), any::<u64>(), 1usize..5));
    check(cases, strat, |(ranges, centre, freq, seed, starts)| {
        let bounds = Bounds::new(ranges.iter().map(|r| r.0).collect(), ranges.iter().map(|r| r.0 + r.1).collect()).unwrap();
        let outside = Cell::new(false);
        let acq = |x: &[f64]| {
            if !bounds.contains(x) {
                outside.set(true);
            }
            x.iter().zip(&centre).zip(&freq).map(|((v, c), f)| (f * v).sin() - (v - c).powi(2)).sum::<f64>()
        };
        let config = OptimizerConfig { multistarts: starts, local_iterations: 100, probe_count: 128, seed };
        let a = lib(maximize_acquisition(acq, &bounds, &config))?;
        let b = lib(maximize_acquisition(acq, &bounds, &config))?;
        let probe_max = lib(Sobol::scrambled(bounds.dim(), seed))?.take_points(128).iter().map(|u| acq(&bounds.from_unit(u))).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(a.value >= probe_max);
        prop_assert!(bounds.contains(&a.x));
        prop_assert!(!outside.get(), "an evaluation left the box");
        prop_assert_eq!(a.x.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.x.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        prop_assert_eq!(a.value.to_bits(), b.value.to_bits());
        Ok(())
    })
}

fn masking_problems() -> Vec<ProblemSpec> {
    let mut out = Vec::new();
    for p in [problems::kbf(3), problems::ackley(3), problems::wbd(), problems::pvd(), problems::illustrative_1d(Scenario::S2), problems::hlgp_demo_2d()] {
        for s in [Scenario::FullyObservable, Scenario::S1, Scenario::S2] {
            out.push(p.clone().with_scenario(s));
        }
    }
    out
}

pub fn masking_soundness(cases: u32) -> Result<()> {
    let specs = masking_problems();
    let n = specs.len();
    check(cases, (0..n, vec(0.0..1.0f64, 4)), |(i, u)| {
        let spec = &specs[i];
        let x = spec.bounds.from_unit(&u[..spec.dim()]);
        let rec = lib(spec.evaluate(&x))?;
        prop_assert_eq!(&rec, &lib(spec.evaluate(&x))?);
        let (f, g) = spec.true_values(&x);
        prop_assert_eq!(rec.feasible, g.iter().all(|v| *v <= 0.0));
        match spec.scenario {
            Scenario::FullyObservable => prop_assert_eq!(rec.objective, Some(f)),
            _ => prop_assert_eq!(rec.objective.is_none(), !rec.feasible),
        }
        for (obs, gi) in rec.constraints.iter().zip(&g) {
            let hidden = matches!(obs, cbob::ep::ObservationKind::ViolatedFlag);
            prop_assert_eq!(hidden, spec.scenario == Scenario::S2 && *gi > 0.0);
            if let cbob::ep::ObservationKind::Value(v) = obs {
                prop_assert_eq!(v, gi);
            }
        }
        Ok(())
    })
}

pub fn known_feasible_points() -> Result<()> {
    for p in problems::builtin_problems() {
        p.check_known_feasible()?;
        if p.known_feasible.is_none() {
            return Err(anyhow!("{} ships no feasible point", p.name));
        }
    }
    Ok(())
}

/// Short runs: monotone incumbent, exact budget and no hidden objective in
/// the objective model's training set.
pub fn driver_properties(cases: u32) -> Result<()> {
    let configs = [
        (problems::illustrative_1d(Scenario::S2), ConstraintModelKind::Hlgp),
        (problems::hlgp_demo_2d(), ConstraintModelKind::Gpc),
        (problems::kbf(2), ConstraintModelKind::Gpr),
    ];
    check(cases, (0..configs.len(), any::<u64>(), 0usize..4), |(i, seed, budget)| {
        let (problem, model) = configs[i].clone();
        let config = RunConfig {
            budget,
            seed,
            init: InitDesign::Uniform(6),
            optimizer: OptimizerConfig { multistarts: 2, local_iterations: 30, probe_count: 128, seed: 0 },
            gp_restarts: 2,
            adapt_probes: 64,
            ..RunConfig::new(problem, AcquisitionSpec::default(), model)
        };
        let out = lib(run(&config))?;
        prop_assert!(out.failure.is_none(), "{:?}", out.failure);
        let t = out.trajectory;
        prop_assert_eq!(t.acquired().count(), budget);
        let mut last: Option<f64> = None;
        for r in &t.rows {
            if let (Some(a), Some(b)) = (last, r.best_feasible) {
                prop_assert!(b <= a);
            }
            prop_assert!(!(last.is_some() && r.best_feasible.is_none()));
            last = r.best_feasible;
        }
        let records = t.rows.iter().map(|r| config.problem.evaluate(&r.x)).collect::<cbob::Result<Vec<_>>>();
        let data = Dataset { records: lib(records)?, acquired_from: 6 };
        let bundle = lib(fit_surrogates(&config, &data, 1, cbob::gp::BASE_JITTER))?;
        let observed: Vec<Vec<f64>> = data.records.iter().filter(|r| r.objective.is_some()).map(|r| config.problem.bounds.to_unit(&r.x)).collect();
        if let Some(obj) = &bundle.objective {
            prop_assert_eq!(&obj.train().x, &observed);
        } else {
            prop_assert!(observed.is_empty());
        }
        Ok(())
    })
}

/// Every invariant check with its default case count, by name.
pub fn suite() -> Vec<(&'static str, Box<dyn Fn() -> Result<()>>)> {
    vec![
        ("kernel matrices are positive definite", Box::new(|| kernel_psd(128))),
        ("kernel gradient matches finite differences", Box::new(|| kernel_gradient(256))),
        ("Φ derivative matches φ", Box::new(cdf_derivative)),
        ("posterior variance never exceeds the prior", Box::new(|| variance_bounded(128))),
        ("adding data never increases variance", Box::new(|| data_shrinks_variance(128))),
        ("noise-free GP interpolates", Box::new(|| interpolation(128))),
        ("EP is at a fixed point after convergence", Box::new(|| ep_fixed_point(64))),
        ("HLGP without flags equals GPR", Box::new(|| gaussian_reduction(64))),
        ("EP sweep order does not matter at convergence", Box::new(|| sweep_order_invariance(64))),
        ("flags never increase variance", Box::new(|| flags_shrink_variance(64))),
        ("one flag on a values-only model never increases variance", Box::new(|| single_flag_shrinks_variance(64))),
        ("DPOF dominates POF and EICB dominates EIC", Box::new(|| dpof_dominates_pof(64))),
        ("POB DPOF factor is at most min(1, 2Φ)", Box::new(|| pob_bounds(64))),
        ("exploration functions satisfy the vanishing-variance rule", Box::new(|| exploration_definition(64))),
        ("EI scales linearly and keeps its argmax", Box::new(|| ei_scaling(256))),
        ("optimizer beats its probes, stays in the box, is deterministic", Box::new(|| optimizer_properties(64))),
        ("evaluation never exposes hidden values", Box::new(|| masking_soundness(256))),
        ("every builtin problem ships a feasible point", Box::new(known_feasible_points)),
        ("runs keep a monotone incumbent, exact budget and masked objective data", Box::new(|| driver_properties(12))),
    ]
}
