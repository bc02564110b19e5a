//! Checks against independent numerical oracles.

use anyhow::{Context, Result};
use cbob::acquisition::{emub, expected_improvement};
use cbob::ep::moment_match_probit;
use cbob::gp::{GpModel, GpTrainingSet};
use cbob::math::{log_norm_cdf, matern52, norm_cdf, norm_pdf, norm_ppf, KernelParams, MeanParams};
use rand::Rng;

use super::{breakpoints, close, dense_solve, integrate, matern, near, normal_pdf, rng};

/// Kernel and normal-distribution values against 30-digit references.
pub fn core_math_values() -> Result<()> {
    let cdf = [
        (0.0, 0.5),
        (1.96, 0.975002104851779563787176307604),
        (-1.96, 0.0249978951482204362128236923956),
        (-5.0, 2.86651571879193911673752332875e-7),
        (-10.0, 7.6198530241605260659733432516e-24),
        (-20.0, 2.75362411860623369507562278086e-89),
        (3.0, 0.998650101968369905473348185232),
        (8.0, 0.999999999999999377903942572822),
    ];
    for (z, want) in cdf {
        close(&format!("Φ({z})"), norm_cdf(z), want, 1e-6)?;
    }
    for (z, want) in [(0.0, 0.398942280401432677939946059934), (1.0, 0.241970724519143349797830192936), (-2.5, 0.0175283004935685373621583221667)] {
        close(&format!("φ({z})"), norm_pdf(z), want, 1e-6)?;
    }
    for (z, want) in [(-5.0, -15.0649983939887257360837047919), (-10.0, -53.2312851505124705783470273541), (-30.0, -454.321243956343197107355771338)] {
        close(&format!("log Φ({z})"), log_norm_cdf(z), want, 1e-6)?;
    }
    close("Φ⁻¹(0.975)", norm_ppf(0.975), 1.95996398454005423552459443052, 1e-6)?;
    let unit = KernelParams::isotropic(1, 1.0);
    for (r, want) in [(0.0, 1.0), (0.5, 0.828649142418125313075101248425), (1.0, 0.523994108831820310592713250761), (2.0, 0.138660219138504277281484941903)] {
        close(&format!("k(r={r})"), matern52(&[0.0], &[r], &unit)?, want, 1e-6)?;
    }
    let ard = KernelParams::new(1.5, vec![2.0, 4.0])?;
    close("ARD kernel", matern52(&[0.0, 0.0], &[1.0, -2.0], &ard)?, 1.05374364023070491081005528254, 1e-6)?;
    Ok(())
}

/// Moments of `Φ(g/α)·N(g; m, v)` by quadrature: `(Z, mean, variance)`.
pub fn tilted_moments(m: f64, v: f64, alpha: f64) -> (f64, f64, f64) {
    let s = v.sqrt();
    let lik = |g: f64| norm_cdf(g / alpha);
    // Where the tilted mass lives: near the cavity when it is well inside
    // the violated side, otherwise just above the step.
    let (lo, hi) = (m.min(0.0) - 14.0 * s - 40.0 * alpha, m.max(0.0) + 14.0 * s + 40.0 * alpha);
    let b = breakpoints(lo, hi, &[-40.0 * alpha, -4.0 * alpha, 0.0, 4.0 * alpha, 40.0 * alpha, m]);
    let z = integrate(|g| lik(g) * normal_pdf(g, m, v), &b, 200);
    let mean = integrate(|g| g * lik(g) * normal_pdf(g, m, v), &b, 200) / z;
    let var = integrate(|g| (g - mean) * (g - mean) * lik(g) * normal_pdf(g, m, v), &b, 200) / z;
    (z, mean, var)
}

/// Closed-form probit moment matching against quadrature over `count`
/// random cavities for each probit slope.
pub fn moment_matching(count: usize, seed: u64) -> Result<()> {
    let mut r = rng(seed);
    for alpha in [1e-6, 0.1, 1.0] {
        for _ in 0..count {
            let m = r.random_range(-5.0..5.0);
            let v = r.random_range(0.1..4.0);
            let (z, mean, var) = moment_match_probit(m, v, alpha);
            let (qz, qm, qv) = tilted_moments(m, v, alpha);
            let ctx = || format!("cavity ({m}, {v}), α = {alpha}");
            close("Ẑ", z, qz, 1e-6).with_context(ctx)?;
            close("μ̂", mean, qm, 1e-6).with_context(ctx)?;
            close("σ̂²", var, qv, 1e-6).with_context(ctx)?;
        }
    }
    Ok(())
}

/// `E[max(βσ − |g|, 0)]` for `g ~ N(μ, σ²)` by quadrature.
pub fn emub_quadrature(mean: f64, std: f64, beta: f64) -> f64 {
    let eps = beta * std;
    integrate(|g| (eps - g.abs()) * normal_pdf(g, mean, std * std), &[-eps, 0.0, eps], 200)
}

pub fn emub_closed_form(count: usize, seed: u64) -> Result<()> {
    let mut r = rng(seed);
    for _ in 0..count {
        let m = r.random_range(-3.0..3.0);
        let s = r.random_range(0.1..3.0);
        let b = r.random_range(0.5..3.0);
        close(&format!("EMUB({m}, {s}, {b})"), emub(m, s, b), emub_quadrature(m, s, b), 1e-6)?;
    }
    Ok(())
}

pub fn ei_quadrature(count: usize, seed: u64) -> Result<()> {
    let mut r = rng(seed);
    for _ in 0..count {
        let m: f64 = r.random_range(-2.0..2.0);
        let s = r.random_range(0.1..2.0);
        let best = r.random_range(-2.0..2.0);
        let b = breakpoints(m.min(best) - 14.0 * s, best, &[m]);
        let want = integrate(|f| (best - f) * normal_pdf(f, m, s * s), &b, 200);
        close(&format!("EI({m}, {s}, {best})"), expected_improvement(m, s, best), want, 1e-6)?;
    }
    Ok(())
}

/// Random GP instance: `n` points in `[0,1]^d` with noise in `[1e-4, 1e-2]`.
pub fn random_gp(n: usize, dim: usize, seed: u64) -> Result<GpModel> {
    let mut r = rng(seed);
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| r.random_range(0.0..1.0)).collect()).collect();
    let y: Vec<f64> = (0..n).map(|_| r.random_range(-2.0..2.0)).collect();
    let noise: Vec<f64> = (0..n).map(|_| 10f64.powf(r.random_range(-4.0..-2.0))).collect();
    let kernel = KernelParams::new(r.random_range(0.5..2.0), (0..dim).map(|_| r.random_range(0.2..1.0)).collect())?;
    Ok(GpModel::new(GpTrainingSet::new(x, y, noise)?, kernel, MeanParams::new(r.random_range(-1.0..1.0)))?)
}

/// Posterior moments and log marginal likelihood against dense elimination
/// on fixed 3–10-point sets.
pub fn gp_dense(seed: u64) -> Result<()> {
    let mut r = rng(seed ^ 0xd1ce);
    for n in 3..=10 {
        let dim = 1 + n % 3;
        let model = random_gp(n, dim, seed + n as u64)?;
        let t = model.train();
        let k = model.kernel();
        let a: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| matern(&t.x[i], &t.x[j], k.signal_variance, &k.lengthscales) + if i == j { t.noise_variances[i] + model.jitter() } else { 0.0 }).collect())
            .collect();
        let resid: Vec<f64> = t.y.iter().map(|y| y - model.mean().constant).collect();
        let probes: Vec<Vec<f64>> = (0..5).map(|_| (0..dim).map(|_| r.random_range(-0.2..1.2)).collect()).collect();
        let mut rhs = vec![resid.clone()];
        rhs.extend(probes.iter().map(|p| t.x.iter().map(|xi| matern(xi, p, k.signal_variance, &k.lengthscales)).collect::<Vec<f64>>()));
        let (sol, log_det) = dense_solve(&a, &rhs);
        let quad: f64 = resid.iter().zip(&sol[0]).map(|(a, b)| a * b).sum();
        let lml = -0.5 * quad - 0.5 * log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
        near(&format!("LML n={n}"), model.log_marginal_likelihood(), lml, 1e-8)?;
        for (p, (ks, w)) in probes.iter().zip(rhs[1..].iter().zip(&sol[1..])) {
            let mean = model.mean().constant + ks.iter().zip(&sol[0]).map(|(a, b)| a * b).sum::<f64>();
            let var = k.signal_variance - ks.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
            let (gm, gv) = model.predict(p);
            near(&format!("mean n={n} at {p:?}"), gm, mean, 1e-8)?;
            near(&format!("variance n={n} at {p:?}"), gv, var.max(0.0), 1e-8)?;
        }
    }
    Ok(())
}

/// Every oracle check of the suite, by name.
pub fn suite() -> Vec<(&'static str, fn() -> Result<()>)> {
    vec![
        ("core math values", core_math_values),
        ("probit moment matching vs quadrature", || moment_matching(100, 11)),
        ("EMUB closed form vs quadrature", || emub_closed_form(100, 12)),
        ("EI closed form vs quadrature", || ei_quadrature(100, 13)),
        ("GP posterior and LML vs dense solve", || gp_dense(14)),
    ]
}

pub fn run_suite() -> Result<()> {
    for (name, check) in suite() {
        check().with_context(|| name.to_string())?;
    }
    Ok(())
}
