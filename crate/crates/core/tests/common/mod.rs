//! Shared helpers for the integration tests: independent numerical oracles
//! and the invariant suite.

#![allow(dead_code)]

pub mod invariants;
pub mod oracles;

use std::num::NonZeroUsize;

use anyhow::{bail, Result};
use gauss_quad::GaussLegendre;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Composite 20-point Gauss–Legendre quadrature over `[breaks[0], breaks[last]]`
/// with every gap split into `panels` equal pieces.
pub fn integrate(f: impl Fn(f64) -> f64, breaks: &[f64], panels: usize) -> f64 {
    let rule = GaussLegendre::new(NonZeroUsize::new(20).unwrap());
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let h = (b - a) / panels as f64;
        for p in 0..panels {
            let lo = a + p as f64 * h;
            total += rule.integrate(lo, lo + h, &f);
        }
    }
    total
}

/// Sorted breakpoints restricted to `[lo, hi]`, ends included.
pub fn breakpoints(lo: f64, hi: f64, inner: &[f64]) -> Vec<f64> {
    let mut b = vec![lo, hi];
    b.extend(inner.iter().copied().filter(|x| *x > lo && *x < hi));
    b.sort_by(f64::total_cmp);
    b
}

pub fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean) * (x - mean) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

/// Matérn 5/2 written out independently of the library.
pub fn matern(a: &[f64], b: &[f64], signal: f64, lengthscales: &[f64]) -> f64 {
    let r2: f64 = a.iter().zip(b).zip(lengthscales).map(|((x, y), l)| ((x - y) / l).powi(2)).sum();
    let r = r2.sqrt();
    signal * (1.0 + 5f64.sqrt() * r + 5.0 * r2 / 3.0) * (-(5f64.sqrt()) * r).exp()
}

/// Gaussian elimination with partial pivoting; returns `(A⁻¹B, log|det A|)`.
pub fn dense_solve(a: &[Vec<f64>], rhs: &[Vec<f64>]) -> (Vec<Vec<f64>>, f64) {
    let n = a.len();
    let m = rhs.len();
    let mut aug: Vec<Vec<f64>> = (0..n).map(|i| a[i].iter().copied().chain(rhs.iter().map(|c| c[i])).collect()).collect();
    let mut log_det = 0.0;
    for col in 0..n {
        let piv = (col..n).max_by(|x, y| aug[*x][col].abs().total_cmp(&aug[*y][col].abs())).unwrap();
        aug.swap(col, piv);
        let p = aug[col][col];
        log_det += p.abs().ln();
        for r in 0..n {
            if r != col {
                let factor = aug[r][col] / p;
                if factor != 0.0 {
                    for c in col..n + m {
                        aug[r][c] -= factor * aug[col][c];
                    }
                }
            }
        }
    }
    let sol = (0..m).map(|j| (0..n).map(|i| aug[i][n + j] / aug[i][i]).collect()).collect();
    (sol, log_det)
}

pub fn close(what: &str, got: f64, want: f64, rel: f64) -> Result<()> {
    let scale = want.abs().max(f64::MIN_POSITIVE);
    if !((got - want).abs() <= rel * scale) {
        bail!("{what}: got {got:e}, want {want:e} (relative error {:e} > {rel:e})", (got - want).abs() / scale);
    }
    Ok(())
}

/// Absolute-or-relative comparison: `|got − want| ≤ tol·max(1, |want|)`.
pub fn near(what: &str, got: f64, want: f64, tol: f64) -> Result<()> {
    if !((got - want).abs() <= tol * want.abs().max(1.0)) {
        bail!("{what}: got {got:e}, want {want:e} (tolerance {tol:e})");
    }
    Ok(())
}
