//! Multi-start maximization of an acquisition function over a box.

use crate::bounds::Bounds;
use crate::error::{Error, Result};
use crate::optim::{fd_gradient, minimize_bounded, LbfgsOptions};
use crate::sobol::Sobol;

/// Finite-difference step in unit-box coordinates.
pub const FD_STEP: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub multistarts: usize,
    pub local_iterations: usize,
    pub probe_count: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { multistarts: 10, local_iterations: 1000, probe_count: 4096, seed: 0 }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.multistarts == 0 || self.local_iterations == 0 || self.probe_count == 0 {
            return Err(Error::Config(format!("optimizer counts must be at least 1: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AcqOptimum {
    pub x: Vec<f64>,
    pub value: f64,
}

/// Maximizes `acq` over `bounds`.
///
/// A scrambled Sobol probe set is scored first; the best `multistarts`
/// probes (ties to the lower index) are then refined by projected L-BFGS
/// with central finite-difference gradients. Non-finite probe values are
/// discarded. The result is never worse than the best probe.
pub fn maximize_acquisition<F>(acq: F, bounds: &Bounds, config: &OptimizerConfig) -> Result<AcqOptimum>
where
    F: Fn(&[f64]) -> f64,
{
    config.validate()?;
    let dim = bounds.dim();
    let eval = |u: &[f64]| acq(&bounds.from_unit(u));
    let probes = Sobol::scrambled(dim, config.seed)?.take_points(config.probe_count);
    let mut scored: Vec<(usize, f64)> = probes.iter().enumerate().map(|(i, u)| (i, eval(u))).filter(|(_, v)| v.is_finite()).collect();
    if scored.is_empty() {
        return Err(Error::Optimizer("acquisition is non-finite at every probe".into()));
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let lower = vec![0.0; dim];
    let upper = vec![1.0; dim];
    let opts = LbfgsOptions { max_iterations: config.local_iterations, ..LbfgsOptions::default() };
    let (mut best_u, mut best_v) = (probes[scored[0].0].clone(), scored[0].1);
    for &(i, v) in scored.iter().take(config.multistarts) {
        let objective = |u: &[f64]| {
            let f = -eval(u);
            if !f.is_finite() {
                return (f64::INFINITY, vec![f64::NAN; u.len()]);
            }
            let mut neg = |p: &[f64]| -eval(p);
            let g = fd_gradient(&mut neg, u, f, &lower, &upper, FD_STEP);
            (f, g)
        };
        let m = minimize_bounded(objective, &probes[i], &lower, &upper, &opts);
        let value = -m.value;
        if value.is_finite() && value > best_v.max(v) {
            best_u = m.x;
            best_v = value;
        }
    }
    let mut x = bounds.from_unit(&best_u);
    bounds.clamp(&mut x);
    Ok(AcqOptimum { x, value: best_v })
}
