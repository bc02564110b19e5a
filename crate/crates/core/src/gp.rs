//! Gaussian-process regression with per-observation noise.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;

use crate::error::{Error, Result};
use crate::math::{kernel_matrix_unchecked, matern52_unchecked, scaled_distance, KernelParams, MeanParams};
use crate::optim::{minimize_bounded, LbfgsOptions};
use crate::seeding;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Relative diagonal jitter (times the signal variance) tried first.
pub const BASE_JITTER: f64 = 1e-9;
/// Largest relative jitter before factorization is declared failed.
pub const MAX_JITTER: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct GpTrainingSet {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub noise_variances: Vec<f64>,
}

impl GpTrainingSet {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>, noise_variances: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidInput("training set is empty".into()));
        }
        if y.len() != x.len() || noise_variances.len() != x.len() {
            return Err(Error::InvalidInput(format!(
                "training set lengths differ: {} inputs, {} targets, {} noise variances",
                x.len(),
                y.len(),
                noise_variances.len()
            )));
        }
        let dim = x[0].len();
        if dim == 0 {
            return Err(Error::InvalidInput("training inputs have zero dimension".into()));
        }
        if let Some(p) = x.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
        }
        if let Some(v) = noise_variances.iter().find(|v| !(**v >= 0.0) || v.is_nan()) {
            return Err(Error::InvalidInput(format!("noise variance must be nonnegative, got {v}")));
        }
        if let Some(v) = y.iter().chain(x.iter().flatten()).find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite training value {v}")));
        }
        Ok(Self { x, y, noise_variances })
    }

    /// Same noise variance on every observation.
    pub fn with_noise(x: Vec<Vec<f64>>, y: Vec<f64>, noise_variance: f64) -> Result<Self> {
        let n = x.len();
        Self::new(x, y, vec![noise_variance; n])
    }

    pub fn noise_free(x: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        Self::with_noise(x, y, 0.0)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x[0].len()
    }

    /// Indices of the two closest inputs (by plain Euclidean distance).
    pub fn closest_pair(&self) -> (usize, usize) {
        let ones = vec![1.0; self.dim()];
        let mut best = (0, 0, f64::INFINITY);
        for i in 0..self.len() {
            for j in 0..i {
                let d = scaled_distance(&self.x[i], &self.x[j], &ones);
                if d < best.2 {
                    best = (j, i, d);
                }
            }
        }
        (best.0, best.1)
    }
}

/// Factorizes `base + jitter·I`, escalating the jitter ×10 from
/// `start·scale` up to `MAX_JITTER·scale`. Returns the factor and the
/// absolute jitter used.
fn factorize(base: &DMatrix<f64>, scale: f64, start: f64) -> Option<(Cholesky<f64, Dyn>, f64)> {
    let mut rel = start.max(BASE_JITTER);
    loop {
        let jitter = rel * scale;
        let mut a = base.clone();
        for i in 0..a.nrows() {
            a[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(a) {
            if c.l_dirty().diagonal().iter().all(|d| *d > 0.0 && d.is_finite()) {
                return Some((c, jitter));
            }
        }
        if rel >= MAX_JITTER * (1.0 - 1e-12) {
            return None;
        }
        rel = (rel * 10.0).min(MAX_JITTER);
    }
}

/// A GP conditioned on a training set, with the factorization cached.
#[derive(Clone, Debug)]
pub struct GpModel {
    kernel: KernelParams,
    mean: MeanParams,
    train: GpTrainingSet,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    jitter: f64,
}

impl GpModel {
    pub fn new(train: GpTrainingSet, kernel: KernelParams, mean: MeanParams) -> Result<Self> {
        Self::with_min_jitter(train, kernel, mean, BASE_JITTER)
    }

    /// As [`GpModel::new`] but starting the jitter escalation at
    /// `relative_jitter` instead of [`BASE_JITTER`].
    pub fn with_min_jitter(train: GpTrainingSet, kernel: KernelParams, mean: MeanParams, relative_jitter: f64) -> Result<Self> {
        if train.dim() != kernel.dim() {
            return Err(Error::DimensionMismatch { expected: kernel.dim(), got: train.dim() });
        }
        let mut a = kernel_matrix_unchecked(&train.x, &kernel);
        for (i, v) in train.noise_variances.iter().enumerate() {
            a[(i, i)] += v;
        }
        let (chol, jitter) = factorize(&a, kernel.signal_variance, relative_jitter).ok_or(Error::Factorization {
            jitter: MAX_JITTER * kernel.signal_variance,
            points: train.closest_pair(),
        })?;
        let resid = DVector::from_iterator(train.len(), train.y.iter().map(|y| y - mean.constant));
        let alpha = chol.solve(&resid);
        Ok(Self { kernel, mean, train, chol, alpha, jitter })
    }

    pub fn kernel(&self) -> &KernelParams {
        &self.kernel
    }

    pub fn mean(&self) -> MeanParams {
        self.mean
    }

    pub fn train(&self) -> &GpTrainingSet {
        &self.train
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    /// Absolute jitter that was added to the covariance diagonal.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Lower Cholesky factor of `K + diag(noise) + jitter·I`.
    pub fn cholesky_factor(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    fn cross_covariance(&self, x: &[f64]) -> DVector<f64> {
        assert_eq!(x.len(), self.dim(), "prediction point has the wrong dimension");
        DVector::from_iterator(self.train.len(), self.train.x.iter().map(|xi| matern52_unchecked(xi, x, &self.kernel)))
    }

    /// Posterior mean and variance at `x` (variance clamped at zero).
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let ks = self.cross_covariance(x);
        let mean = self.mean.constant + ks.dot(&self.alpha);
        let v = self.chol.l_dirty().solve_lower_triangular(&ks).expect("factor has positive diagonal");
        let var = (self.kernel.signal_variance - v.dot(&v)).max(0.0);
        (mean, var)
    }

    pub fn predict_mean(&self, x: &[f64]) -> f64 {
        self.mean.constant + self.cross_covariance(x).dot(&self.alpha)
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        let resid = DVector::from_iterator(self.train.len(), self.train.y.iter().map(|y| y - self.mean.constant));
        let log_det_half: f64 = self.chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
        -0.5 * resid.dot(&self.alpha) - log_det_half - 0.5 * self.train.len() as f64 * LN_2PI
    }
}

/// Hyperparameter search settings. Bounds are in normalized input units and
/// standardized target units.
#[derive(Clone, Debug)]
pub struct FitOptions {
    pub restarts: usize,
    pub seed: u64,
    pub lengthscale_bounds: (f64, f64),
    pub signal_variance_bounds: (f64, f64),
    pub max_iterations: usize,
    pub min_jitter: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            restarts: 5,
            seed: 0,
            lengthscale_bounds: (1e-3, 10.0),
            signal_variance_bounds: (1e-4, 1e3),
            max_iterations: 200,
            min_jitter: BASE_JITTER,
        }
    }
}

/// Training data with standardized targets; the constant mean is profiled
/// out by its generalized-least-squares estimate.
struct StandardizedProblem<'a> {
    x: &'a [Vec<f64>],
    y: DVector<f64>,
    noise: Vec<f64>,
    min_jitter: f64,
}

struct Evaluation {
    neg_lml: f64,
    grad: Vec<f64>,
    mean: f64,
}

impl StandardizedProblem<'_> {
    /// Negative log marginal likelihood and its gradient with respect to
    /// `(ln l_1, …, ln l_d, ln σ²)`.
    fn evaluate(&self, theta: &[f64]) -> Option<Evaluation> {
        let d = theta.len() - 1;
        let kernel = KernelParams { signal_variance: theta[d].exp(), lengthscales: theta[..d].iter().map(|t| t.exp()).collect() };
        let n = self.x.len();
        let k = kernel_matrix_unchecked(self.x, &kernel);
        let mut a = k.clone();
        for (i, v) in self.noise.iter().enumerate() {
            a[(i, i)] += v;
        }
        let (chol, jitter) = factorize(&a, kernel.signal_variance, self.min_jitter)?;
        let ones = DVector::from_element(n, 1.0);
        let ainv_one = chol.solve(&ones);
        let ainv_y = chol.solve(&self.y);
        let mean = ainv_y.sum() / ainv_one.sum();
        let alpha = &ainv_y - &ainv_one * mean;
        let resid = self.y.add_scalar(-mean);
        let log_det_half: f64 = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum();
        let lml = -0.5 * resid.dot(&alpha) - log_det_half - 0.5 * n as f64 * LN_2PI;

        // W = ααᵀ − A⁻¹; ∂lml/∂θ = ½ tr(W ∂A/∂θ)
        let ainv = chol.inverse();
        let mut grad = vec![0.0; d + 1];
        for i in 0..n {
            let w_ii = alpha[i] * alpha[i] - ainv[(i, i)];
            grad[d] += 0.5 * w_ii * (k[(i, i)] + jitter);
            for j in 0..i {
                let w = alpha[i] * alpha[j] - ainv[(i, j)];
                let r = scaled_distance(&self.x[i], &self.x[j], &kernel.lengthscales);
                let sr = 5f64.sqrt() * r;
                grad[d] += w * k[(i, j)];
                let common = w * kernel.signal_variance * (5.0 / 3.0) * (1.0 + sr) * (-sr).exp();
                for (p, l) in kernel.lengthscales.iter().enumerate() {
                    let diff = self.x[i][p] - self.x[j][p];
                    grad[p] += common * diff * diff / (l * l);
                }
            }
        }
        if !lml.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return None;
        }
        Some(Evaluation { neg_lml: -lml, grad: grad.into_iter().map(|g| -g).collect(), mean })
    }
}

/// Fits kernel and mean hyperparameters by maximizing the log marginal
/// likelihood over `restarts` seeded local searches.
pub fn gp_fit(train: GpTrainingSet, restarts: usize, seed: u64) -> Result<GpModel> {
    gp_fit_with(train, &FitOptions { restarts, seed, ..FitOptions::default() })
}

pub fn gp_fit_with(train: GpTrainingSet, opts: &FitOptions) -> Result<GpModel> {
    if opts.restarts == 0 {
        return Err(Error::InvalidInput("gp_fit needs at least one restart".into()));
    }
    let n = train.len();
    let dim = train.dim();
    let y_mean = train.y.iter().sum::<f64>() / n as f64;
    let var = train.y.iter().map(|y| (y - y_mean).powi(2)).sum::<f64>() / n as f64;
    let y_scale = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
    let problem = StandardizedProblem {
        x: &train.x,
        y: DVector::from_iterator(n, train.y.iter().map(|y| (y - y_mean) / y_scale)),
        noise: train.noise_variances.iter().map(|v| v / (y_scale * y_scale)).collect(),
        min_jitter: opts.min_jitter,
    };

    let (l_lo, l_hi) = (opts.lengthscale_bounds.0.ln(), opts.lengthscale_bounds.1.ln());
    let (s_lo, s_hi) = (opts.signal_variance_bounds.0.ln(), opts.signal_variance_bounds.1.ln());
    let mut lower = vec![l_lo; dim];
    lower.push(s_lo);
    let mut upper = vec![l_hi; dim];
    upper.push(s_hi);

    let mut rng = seeding::rng(seeding::derive(opts.seed, "gp-fit", n as u64));
    let lbfgs = LbfgsOptions { max_iterations: opts.max_iterations, gradient_tolerance: 1e-6, value_tolerance: 1e-10, ..LbfgsOptions::default() };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for restart in 0..opts.restarts {
        let mut start: Vec<f64> = if restart == 0 {
            vec![0.5f64.ln(); dim]
        } else {
            (0..dim).map(|_| rng.random_range(0.05f64.ln()..2.0f64.ln())).collect()
        };
        start.push(if restart == 0 { 0.0 } else { rng.random_range(0.2f64.ln()..5.0f64.ln()) });
        for ((v, lo), hi) in start.iter_mut().zip(&lower).zip(&upper) {
            *v = v.clamp(*lo, *hi);
        }
        let m = minimize_bounded(
            |theta| match problem.evaluate(theta) {
                Some(e) => (e.neg_lml, e.grad),
                None => (f64::INFINITY, vec![f64::NAN; theta.len()]),
            },
            &start,
            &lower,
            &upper,
            &lbfgs,
        );
        if m.value.is_finite() && best.as_ref().is_none_or(|(v, _)| m.value < *v) {
            best = Some((m.value, m.x));
        }
    }

    let Some((_, theta)) = best else {
        return Err(Error::Factorization { jitter: MAX_JITTER, points: train.closest_pair() });
    };
    let eval = problem.evaluate(&theta).expect("best point was evaluated successfully");
    let kernel = KernelParams {
        signal_variance: theta[dim].exp() * y_scale * y_scale,
        lengthscales: theta[..dim].iter().map(|t| t.exp()).collect(),
    };
    let mean = MeanParams::new(y_mean + y_scale * eval.mean);
    GpModel::with_min_jitter(train, kernel, mean, opts.min_jitter)
}
