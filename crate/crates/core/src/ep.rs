//! Expectation propagation for constraint surrogates.
//!
//! [`ep_fit_hlgp`] builds a heterogeneous-likelihood GP: measured constraint
//! values enter through an almost noise-free Gaussian likelihood, violation
//! flags through a steep probit `Φ(g/α)`. [`ep_fit_gpc`] is the ordinary
//! probit classifier used as a baseline. Both end up as a [`GpModel`] over
//! virtual observations (site means with site variances as noise).

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gp::{gp_fit_with, FitOptions, GpModel, GpTrainingSet, BASE_JITTER};
use crate::math::{kernel_matrix_unchecked, log_norm_cdf, matern52_unchecked, norm_cdf, pdf_over_cdf, KernelParams, MeanParams};

const LN_2PI: f64 = 1.837_877_066_409_345_5;
/// Largest site precision; keeps every probit site variance ≥ 1e-10.
const MAX_SITE_PRECISION: f64 = 1e10;
/// Noise variance used in place of an infinite site variance.
const UNINFORMATIVE_VARIANCE: f64 = 1e12;
/// Probit slope of the classifier baseline.
pub const GPC_ALPHA: f64 = 1.0;
/// Hyperparameter refits alternated with EP.
pub const HYPER_ROUNDS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ObservationKind {
    /// Measured constraint value.
    Value(f64),
    /// Only known that the constraint is violated (`g > 0`).
    ViolatedFlag,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintObservation {
    pub x: Vec<f64>,
    pub kind: ObservationKind,
}

impl ConstraintObservation {
    pub fn value(x: Vec<f64>, g: f64) -> Self {
        Self { x, kind: ObservationKind::Value(g) }
    }

    pub fn flag(x: Vec<f64>) -> Self {
        Self { x, kind: ObservationKind::ViolatedFlag }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SiteParams {
    pub site_mean: f64,
    /// Infinite for a probit site that never received an update.
    pub site_variance: f64,
    pub log_normalizer: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SweepOrder {
    #[default]
    Forward,
    Reverse,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpConfig {
    pub tolerance: f64,
    pub max_sweeps: usize,
    /// Weight of the new site natural parameters in each update.
    pub damping: f64,
    /// Standard deviation of the Gaussian likelihood for measured values.
    pub noise_std: f64,
    /// Probit slope for violation flags.
    pub alpha: f64,
    pub order: SweepOrder,
}

impl Default for EpConfig {
    fn default() -> Self {
        Self { tolerance: 1e-6, max_sweeps: 100, damping: 0.8, noise_std: 1e-6, alpha: 1e-6, order: SweepOrder::Forward }
    }
}

impl EpConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) || self.max_sweeps == 0 || !(self.damping > 0.0 && self.damping <= 1.0) || !(self.noise_std > 0.0) || !(self.alpha > 0.0) {
            return Err(Error::Config(format!("invalid EP configuration {self:?}")));
        }
        Ok(())
    }
}

/// Log normalizer, mean and variance of `Φ(y·g/α)·N(g; m, v)` normalized.
fn moment_match_signed(label: f64, cavity_mean: f64, cavity_variance: f64, alpha: f64) -> (f64, f64, f64) {
    let s2 = alpha * alpha + cavity_variance;
    let s = s2.sqrt();
    let z = label * cavity_mean / s;
    let r = pdf_over_cdf(z);
    let mean = cavity_mean + label * cavity_variance * r / s;
    let var = cavity_variance - cavity_variance * cavity_variance * r * (z + r) / s2;
    (log_norm_cdf(z), mean, var.clamp(f64::MIN_POSITIVE, cavity_variance))
}

/// Moments of the cavity `N(cavity_mean, cavity_variance)` tilted by the
/// violation likelihood `Φ(g/α)`: returns `(Ẑ, μ̂, σ̂²)`.
pub fn moment_match_probit(cavity_mean: f64, cavity_variance: f64, alpha: f64) -> (f64, f64, f64) {
    let (log_z, mean, var) = moment_match_signed(1.0, cavity_mean, cavity_variance, alpha);
    (log_z.exp(), mean, var)
}

/// Result of EP over probit sites with a Gaussian prior `N(m, C)`.
struct EpState {
    tau: Vec<f64>,
    nu: Vec<f64>,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    converged: bool,
    sweeps: usize,
}

fn site_mean_var(tau: f64, nu: f64) -> (f64, f64) {
    if tau > 0.0 {
        (nu / tau, 1.0 / tau)
    } else {
        (0.0, f64::INFINITY)
    }
}

fn relative_change(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if !a.is_finite() || !b.is_finite() {
        return f64::INFINITY;
    }
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Posterior `N(μ, Σ)` from the prior and site natural parameters:
/// `Σ = C − C S½ B⁻¹ S½ C` with `B = I + S½ C S½`, `μ = m + Σ(ν̃ − τ̃∘m)`.
fn recompute_posterior(prior_mean: &DVector<f64>, prior_cov: &DMatrix<f64>, tau: &[f64], nu: &[f64]) -> Option<(DVector<f64>, DMatrix<f64>)> {
    let n = tau.len();
    let sq: Vec<f64> = tau.iter().map(|t| t.max(0.0).sqrt()).collect();
    let mut b = DMatrix::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] += sq[i] * prior_cov[(i, j)] * sq[j];
        }
    }
    let l = Cholesky::new(b)?.l();
    let mut sc = prior_cov.clone();
    for i in 0..n {
        for j in 0..n {
            sc[(i, j)] *= sq[i];
        }
    }
    let v = l.solve_lower_triangular(&sc)?;
    let cov = prior_cov - v.transpose() * &v;
    let rhs = DVector::from_iterator(n, (0..n).map(|i| nu[i] - tau[i] * prior_mean[i]));
    let mean = prior_mean + &cov * rhs;
    Some((mean, cov))
}

fn run_ep(prior_mean: DVector<f64>, prior_cov: DMatrix<f64>, labels: &[f64], alpha: f64, config: &EpConfig) -> Result<EpState> {
    let n = labels.len();
    let mut tau = vec![0.0; n];
    let mut nu = vec![0.0; n];
    let mut mean = prior_mean.clone();
    let mut cov = prior_cov.clone();
    let order: Vec<usize> = match config.order {
        SweepOrder::Forward => (0..n).collect(),
        SweepOrder::Reverse => (0..n).rev().collect(),
    };
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < config.max_sweeps {
        sweeps += 1;
        let before: Vec<(f64, f64)> = tau.iter().zip(&nu).map(|(t, v)| site_mean_var(*t, *v)).collect();
        for &i in &order {
            let sii = cov[(i, i)];
            let cav_tau = 1.0 / sii - tau[i];
            if !(cav_tau > 0.0) || !cav_tau.is_finite() {
                continue;
            }
            let cav_var = 1.0 / cav_tau;
            let cav_mean = cav_var * (mean[i] / sii - nu[i]);
            let (_, hat_mean, hat_var) = moment_match_signed(labels[i], cav_mean, cav_var, alpha);
            let mut target_tau = 1.0 / hat_var - cav_tau;
            let mut target_nu = hat_mean / hat_var - cav_mean * cav_tau;
            if target_tau > MAX_SITE_PRECISION {
                target_nu *= MAX_SITE_PRECISION / target_tau;
                target_tau = MAX_SITE_PRECISION;
            }
            if !target_tau.is_finite() || !target_nu.is_finite() || target_tau < 0.0 {
                continue;
            }
            let new_tau = config.damping * target_tau + (1.0 - config.damping) * tau[i];
            let new_nu = config.damping * target_nu + (1.0 - config.damping) * nu[i];
            let d_tau = new_tau - tau[i];
            let d_nu = new_nu - nu[i];
            let denom = 1.0 + d_tau * sii;
            if !(denom > 0.0) {
                continue;
            }
            let col = cov.column(i).clone_owned();
            let shift = (d_nu - d_tau * mean[i]) / denom;
            mean.axpy(shift, &col, 1.0);
            cov.ger(-d_tau / denom, &col, &col, 1.0);
            tau[i] = new_tau;
            nu[i] = new_nu;
        }
        let (m, c) = recompute_posterior(&prior_mean, &prior_cov, &tau, &nu)
            .ok_or_else(|| Error::InvalidInput("EP posterior recomputation failed".into()))?;
        mean = m;
        cov = c;
        let change = tau
            .iter()
            .zip(&nu)
            .zip(&before)
            .map(|((t, v), (bm, bv))| {
                let (am, av) = site_mean_var(*t, *v);
                relative_change(am, *bm).max(relative_change(av, *bv))
            })
            .fold(0.0, f64::max);
        if change < config.tolerance {
            converged = true;
            break;
        }
    }
    Ok(EpState { tau, nu, mean, cov, converged, sweeps })
}

/// Log normalizers of converged probit sites.
fn probit_log_normalizers(state: &EpState, labels: &[f64], alpha: f64) -> Vec<f64> {
    (0..labels.len())
        .map(|i| {
            let sii = state.cov[(i, i)];
            let cav_tau = 1.0 / sii - state.tau[i];
            let (site_mean, site_var) = site_mean_var(state.tau[i], state.nu[i]);
            if !(cav_tau > 0.0) || !site_var.is_finite() {
                return 0.0;
            }
            let cav_var = 1.0 / cav_tau;
            let cav_mean = cav_var * (state.mean[i] / sii - state.nu[i]);
            let (log_z, _, _) = moment_match_signed(labels[i], cav_mean, cav_var, alpha);
            let total = cav_var + site_var;
            log_z + 0.5 * (LN_2PI + total.ln()) + (cav_mean - site_mean).powi(2) / (2.0 * total)
        })
        .collect()
}

fn sites_to_training(x: Vec<Vec<f64>>, sites: &[SiteParams]) -> Result<GpTrainingSet> {
    GpTrainingSet::new(
        x,
        sites.iter().map(|s| s.site_mean).collect(),
        sites.iter().map(|s| if s.site_variance.is_finite() { s.site_variance } else { UNINFORMATIVE_VARIANCE }).collect(),
    )
}

fn check_inputs(points: &[&Vec<f64>], kernel: &KernelParams) -> Result<()> {
    if points.is_empty() {
        return Err(Error::InvalidInput("EP needs at least one observation".into()));
    }
    if let Some(p) = points.iter().find(|p| p.len() != kernel.dim()) {
        return Err(Error::DimensionMismatch { expected: kernel.dim(), got: p.len() });
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct HlgpModel {
    gp: GpModel,
    sites: Vec<SiteParams>,
    config: EpConfig,
    converged: bool,
    sweeps: usize,
}

impl HlgpModel {
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        self.gp.predict(x)
    }

    pub fn gp(&self) -> &GpModel {
        &self.gp
    }

    pub fn sites(&self) -> &[SiteParams] {
        &self.sites
    }

    pub fn config(&self) -> &EpConfig {
        &self.config
    }

    /// False when EP stopped at `max_sweeps`; the model is still usable.
    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// Site means as targets and site variances as per-point noise.
    pub fn to_virtual_observations(&self) -> GpTrainingSet {
        self.gp.train().clone()
    }
}

/// Fits an HLGP by EP with fixed hyperparameters.
///
/// Value sites are exact Gaussians `N(g; c, σ²)`; the prior is first
/// conditioned on them, then EP runs over the violation sites only.
pub fn ep_fit_hlgp(observations: &[ConstraintObservation], kernel: &KernelParams, mean: MeanParams, config: &EpConfig) -> Result<HlgpModel> {
    config.validate()?;
    check_inputs(&observations.iter().map(|o| &o.x).collect::<Vec<_>>(), kernel)?;
    let noise_var = config.noise_std * config.noise_std;
    let jitter = BASE_JITTER * kernel.signal_variance;

    let mut values = Vec::new();
    let mut flags = Vec::new();
    for (i, o) in observations.iter().enumerate() {
        match o.kind {
            ObservationKind::Value(g) => values.push((i, g)),
            ObservationKind::ViolatedFlag => flags.push(i),
        }
    }

    let mut sites = vec![SiteParams { site_mean: 0.0, site_variance: f64::INFINITY, log_normalizer: 0.0 }; observations.len()];
    for &(i, g) in &values {
        sites[i] = SiteParams { site_mean: g, site_variance: noise_var, log_normalizer: 0.0 };
    }

    let (mut converged, mut sweeps) = (true, 1);
    if !flags.is_empty() {
        let fx: Vec<Vec<f64>> = flags.iter().map(|&i| observations[i].x.clone()).collect();
        let mut prior_cov = kernel_matrix_unchecked(&fx, kernel);
        let mut prior_mean = DVector::from_element(flags.len(), mean.constant);
        if !values.is_empty() {
            let vx: Vec<Vec<f64>> = values.iter().map(|&(i, _)| observations[i].x.clone()).collect();
            let mut a = kernel_matrix_unchecked(&vx, kernel);
            for d in 0..vx.len() {
                a[(d, d)] += noise_var + jitter;
            }
            let l = Cholesky::new(a)
                .ok_or_else(|| Error::Factorization { jitter, points: (values[0].0, values[values.len() - 1].0) })?
                .l();
            let cross = DMatrix::from_fn(vx.len(), fx.len(), |r, c| matern52_unchecked(&vx[r], &fx[c], kernel));
            let w = l.solve_lower_triangular(&cross).expect("positive diagonal");
            let resid = DVector::from_iterator(values.len(), values.iter().map(|(_, g)| g - mean.constant));
            let white = l.solve_lower_triangular(&resid).expect("positive diagonal");
            prior_mean += w.transpose() * white;
            prior_cov -= w.transpose() * &w;
        }
        for d in 0..flags.len() {
            prior_cov[(d, d)] += jitter;
        }
        let labels = vec![1.0; flags.len()];
        let state = run_ep(prior_mean, prior_cov, &labels, config.alpha, config)?;
        let log_z = probit_log_normalizers(&state, &labels, config.alpha);
        for (k, &i) in flags.iter().enumerate() {
            let (m, v) = site_mean_var(state.tau[k], state.nu[k]);
            sites[i] = SiteParams { site_mean: m, site_variance: v, log_normalizer: log_z[k] };
        }
        converged = state.converged;
        sweeps = state.sweeps;
    }

    let train = sites_to_training(observations.iter().map(|o| o.x.clone()).collect(), &sites)?;
    let gp = GpModel::new(train, kernel.clone(), mean)?;
    Ok(HlgpModel { gp, sites, config: config.clone(), converged, sweeps })
}

fn hyper_close(a: &GpModel, b: &GpModel) -> bool {
    let ka = a.kernel();
    let kb = b.kernel();
    relative_change(ka.signal_variance, kb.signal_variance) < 1e-3
        && ka.lengthscales.iter().zip(&kb.lengthscales).all(|(x, y)| relative_change(*x, *y) < 1e-3)
        && (a.mean().constant - b.mean().constant).abs() < 1e-3 * kb.signal_variance.sqrt()
}

/// Fits HLGP hyperparameters by alternating EP with a marginal-likelihood
/// refit over the virtual observations.
pub fn fit_hlgp_hyper(observations: &[ConstraintObservation], config: &EpConfig, fit: &FitOptions) -> Result<HlgpModel> {
    check_inputs(&observations.iter().map(|o| &o.x).collect::<Vec<_>>(), &KernelParams::isotropic(observations.first().map_or(0, |o| o.x.len()), 1.0))?;
    let dim = observations[0].x.len();
    let value_obs: Vec<(Vec<f64>, f64)> = observations
        .iter()
        .filter_map(|o| match o.kind {
            ObservationKind::Value(g) => Some((o.x.clone(), g)),
            ObservationKind::ViolatedFlag => None,
        })
        .collect();
    let noise_var = config.noise_std * config.noise_std;
    let (mut kernel, mut mean) = if value_obs.is_empty() {
        (KernelParams::isotropic(dim, 0.5), MeanParams::default())
    } else {
        let (x, y): (Vec<_>, Vec<_>) = value_obs.into_iter().unzip();
        let g = gp_fit_with(GpTrainingSet::with_noise(x, y, noise_var)?, fit)?;
        (g.kernel().clone(), g.mean())
    };
    let mut model = ep_fit_hlgp(observations, &kernel, mean, config)?;
    if observations.iter().all(|o| matches!(o.kind, ObservationKind::Value(_))) {
        return Ok(model);
    }
    for _ in 0..HYPER_ROUNDS {
        let refit = gp_fit_with(model.to_virtual_observations(), fit)?;
        let done = hyper_close(&refit, model.gp());
        kernel = refit.kernel().clone();
        mean = refit.mean();
        model = ep_fit_hlgp(observations, &kernel, mean, config)?;
        if done {
            break;
        }
    }
    Ok(model)
}

/// Probit GP classifier. Labels are `+1` (violated) or `-1` (satisfied).
#[derive(Clone, Debug)]
pub struct GpcModel {
    gp: GpModel,
    sites: Vec<SiteParams>,
    converged: bool,
    sweeps: usize,
    single_class: bool,
}

impl GpcModel {
    /// Latent mean and variance.
    pub fn predict_latent(&self, x: &[f64]) -> (f64, f64) {
        self.gp.predict(x)
    }

    /// Probability of label `+1`: `Φ(μ/√(1+σ²))`.
    pub fn probability(&self, x: &[f64]) -> f64 {
        let (m, v) = self.predict_latent(x);
        norm_cdf(m / (GPC_ALPHA * GPC_ALPHA + v).sqrt())
    }

    pub fn gp(&self) -> &GpModel {
        &self.gp
    }

    pub fn sites(&self) -> &[SiteParams] {
        &self.sites
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// True when all labels share one sign.
    pub fn single_class(&self) -> bool {
        self.single_class
    }
}

pub fn ep_fit_gpc(labels: &[(Vec<f64>, f64)], kernel: &KernelParams, mean: MeanParams, config: &EpConfig) -> Result<GpcModel> {
    config.validate()?;
    check_inputs(&labels.iter().map(|(x, _)| x).collect::<Vec<_>>(), kernel)?;
    if let Some((_, y)) = labels.iter().find(|(_, y)| *y != 1.0 && *y != -1.0) {
        return Err(Error::InvalidInput(format!("class labels must be +1 or -1, got {y}")));
    }
    let x: Vec<Vec<f64>> = labels.iter().map(|(x, _)| x.clone()).collect();
    let y: Vec<f64> = labels.iter().map(|(_, y)| *y).collect();
    let mut prior_cov = kernel_matrix_unchecked(&x, kernel);
    for d in 0..x.len() {
        prior_cov[(d, d)] += BASE_JITTER * kernel.signal_variance;
    }
    let prior_mean = DVector::from_element(x.len(), mean.constant);
    let state = run_ep(prior_mean, prior_cov, &y, GPC_ALPHA, config)?;
    let log_z = probit_log_normalizers(&state, &y, GPC_ALPHA);
    let sites: Vec<SiteParams> = (0..y.len())
        .map(|i| {
            let (m, v) = site_mean_var(state.tau[i], state.nu[i]);
            SiteParams { site_mean: m, site_variance: v, log_normalizer: log_z[i] }
        })
        .collect();
    let gp = GpModel::new(sites_to_training(x, &sites)?, kernel.clone(), mean)?;
    let single_class = y.iter().all(|v| *v == y[0]);
    Ok(GpcModel { gp, sites, converged: state.converged, sweeps: state.sweeps, single_class })
}

/// Classifier with hyperparameters alternated between EP and a
/// marginal-likelihood refit over virtual observations.
pub fn fit_gpc_hyper(labels: &[(Vec<f64>, f64)], config: &EpConfig, fit: &FitOptions) -> Result<GpcModel> {
    let dim = labels.first().map_or(0, |(x, _)| x.len());
    let mut kernel = KernelParams::isotropic(dim.max(1), 0.5);
    let mut mean = MeanParams::default();
    let mut model = ep_fit_gpc(labels, &kernel, mean, config)?;
    for _ in 0..HYPER_ROUNDS {
        let refit = gp_fit_with(model.gp().train().clone(), fit)?;
        let done = hyper_close(&refit, model.gp());
        kernel = refit.kernel().clone();
        mean = refit.mean();
        model = ep_fit_gpc(labels, &kernel, mean, config)?;
        if done {
            break;
        }
    }
    Ok(model)
}
