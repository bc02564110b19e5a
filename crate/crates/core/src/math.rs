//! Matérn 5/2 kernel with per-dimension lengthscales, constant mean, and
//! standard-normal primitives.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT5: f64 = 2.236_067_977_499_79;
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Hyperparameters of the Matérn 5/2 ARD kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub signal_variance: f64,
    pub lengthscales: Vec<f64>,
}

impl KernelParams {
    pub fn new(signal_variance: f64, lengthscales: Vec<f64>) -> Result<Self> {
        if !(signal_variance > 0.0 && signal_variance.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "signal variance must be positive, got {signal_variance}"
            )));
        }
        if lengthscales.is_empty() {
            return Err(Error::InvalidInput("at least one lengthscale is required".into()));
        }
        if let Some(l) = lengthscales.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidInput(format!("lengthscales must be positive, got {l}")));
        }
        Ok(Self { signal_variance, lengthscales })
    }

    /// Unit signal variance, every lengthscale equal to `lengthscale`.
    pub fn isotropic(dim: usize, lengthscale: f64) -> Self {
        Self { signal_variance: 1.0, lengthscales: vec![lengthscale; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }
}

/// Constant prior mean.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanParams {
    pub constant: f64,
}

impl MeanParams {
    pub fn new(constant: f64) -> Self {
        Self { constant }
    }
}

/// Lengthscale-scaled Euclidean distance. Caller guarantees equal lengths.
#[inline]
pub(crate) fn scaled_distance(a: &[f64], b: &[f64], lengthscales: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(lengthscales)
        .map(|((x, y), l)| {
            let d = (x - y) / l;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

#[inline]
pub(crate) fn matern52_unchecked(a: &[f64], b: &[f64], params: &KernelParams) -> f64 {
    let r = scaled_distance(a, b, &params.lengthscales);
    let sr = SQRT5 * r;
    params.signal_variance * (1.0 + sr + sr * sr / 3.0) * (-sr).exp()
}

fn check_dims(a: &[f64], b: &[f64], params: &KernelParams) -> Result<()> {
    let n = params.dim();
    for p in [a, b] {
        if p.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: p.len() });
        }
    }
    Ok(())
}

/// Matérn 5/2 covariance `σ²(1 + √5 r + 5r²/3) exp(−√5 r)`.
pub fn matern52(a: &[f64], b: &[f64], params: &KernelParams) -> Result<f64> {
    check_dims(a, b, params)?;
    Ok(matern52_unchecked(a, b, params))
}

/// Kernel value with its partial derivatives with respect to the signal
/// variance and to each lengthscale (in that order).
pub fn matern52_with_gradient(a: &[f64], b: &[f64], params: &KernelParams) -> Result<(f64, Vec<f64>)> {
    check_dims(a, b, params)?;
    let r = scaled_distance(a, b, &params.lengthscales);
    let sr = SQRT5 * r;
    let e = (-sr).exp();
    let s = params.signal_variance;
    let value = s * (1.0 + sr + sr * sr / 3.0) * e;
    let mut grad = Vec::with_capacity(params.dim() + 1);
    grad.push(value / s);
    // dk/dl_j = s (5/3)(1 + √5 r) e^{-√5 r} (a_j - b_j)^2 / l_j^3
    let common = s * (5.0 / 3.0) * (1.0 + sr) * e;
    for ((x, y), l) in a.iter().zip(b).zip(&params.lengthscales) {
        let d = x - y;
        grad.push(common * d * d / (l * l * l));
    }
    Ok((value, grad))
}

/// Covariance matrix over `points`. Exactly symmetric with `signal_variance`
/// on the diagonal.
pub fn kernel_matrix(points: &[Vec<f64>], params: &KernelParams) -> Result<DMatrix<f64>> {
    if points.is_empty() {
        return Err(Error::InvalidInput("kernel matrix of an empty point set".into()));
    }
    for p in points {
        if p.len() != params.dim() {
            return Err(Error::DimensionMismatch { expected: params.dim(), got: p.len() });
        }
    }
    Ok(kernel_matrix_unchecked(points, params))
}

pub(crate) fn kernel_matrix_unchecked(points: &[Vec<f64>], params: &KernelParams) -> DMatrix<f64> {
    let n = points.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = params.signal_variance;
        for j in 0..i {
            let v = matern52_unchecked(&points[i], &points[j], params);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Standard normal density.
#[inline]
pub fn norm_pdf(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * z * z).exp()
}

#[inline]
pub fn log_norm_pdf(z: f64) -> f64 {
    -0.5 * z * z - LN_SQRT_2PI
}

/// Standard normal distribution function.
#[inline]
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * std::f64::consts::FRAC_1_SQRT_2)
}

/// `(φ(z), Φ(z))`.
pub fn std_normal(z: f64) -> (f64, f64) {
    (norm_pdf(z), norm_cdf(z))
}

/// Mills ratio `Φ(−t)/φ(t)` for `t ≥ 8`, by its continued fraction.
fn mills_ratio_tail(t: f64) -> f64 {
    // R(t) = 1/(t + 1/(t + 2/(t + 3/(t + ...))))
    let mut acc = t;
    for k in (1..=60).rev() {
        acc = t + k as f64 / acc;
    }
    1.0 / acc
}

/// `φ(z)/Φ(z)`, finite for every finite `z`.
pub fn pdf_over_cdf(z: f64) -> f64 {
    if z < -8.0 {
        1.0 / mills_ratio_tail(-z)
    } else {
        norm_pdf(z) / norm_cdf(z)
    }
}

/// `ln Φ(z)` without underflow in the lower tail.
pub fn log_norm_cdf(z: f64) -> f64 {
    if z < -8.0 {
        log_norm_pdf(z) + mills_ratio_tail(-z).ln()
    } else if z > 5.0 {
        (-norm_cdf(-z)).ln_1p()
    } else {
        norm_cdf(z).ln()
    }
}

/// `ln(zΦ(z) + φ(z))`, the log of the standardized expected improvement.
pub fn log_ei_core(z: f64) -> f64 {
    if z >= -8.0 {
        (z * norm_cdf(z) + norm_pdf(z)).ln()
    } else {
        let t = -z;
        // zΦ(z) + φ(z) = φ(t)(1 − t R(t))
        let tail = if t > 1e3 {
            1.0 / (t * t) - 3.0 / (t * t * t * t)
        } else {
            1.0 - t * mills_ratio_tail(t)
        };
        log_norm_pdf(t) + tail.ln()
    }
}

/// Inverse of [`norm_cdf`] for `p ∈ (0, 1)`; ±∞ at the endpoints.
pub fn norm_ppf(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
    let mut z = 0.0;
    for _ in 0..200 {
        z = 0.5 * (lo + hi);
        if norm_cdf(z) < p {
            lo = z;
        } else {
            hi = z;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    z
}
