//! Box-constrained quasi-Newton minimization (projected L-BFGS).
//!
//! Variables sitting on a bound with the gradient pushing outward are frozen
//! for the step; the remaining ones follow the two-loop L-BFGS direction.
//! Steps are projected back onto the box and accepted by an Armijo test
//! along the projection arc.

use std::collections::VecDeque;

#[derive(Clone, Debug)]
pub struct LbfgsOptions {
    pub max_iterations: usize,
    pub memory: usize,
    /// Stop when the projected-gradient infinity norm falls below this.
    pub gradient_tolerance: f64,
    /// Stop when the relative decrease of f over an iteration falls below this.
    pub value_tolerance: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self { max_iterations: 200, memory: 8, gradient_tolerance: 1e-8, value_tolerance: 1e-12 }
    }
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, l), u) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(*l, *u);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn projected_gradient_norm(x: &[f64], g: &[f64], lower: &[f64], upper: &[f64]) -> f64 {
    x.iter()
        .zip(g)
        .zip(lower.iter().zip(upper))
        .map(|((xi, gi), (l, u))| {
            let target = (xi - gi).clamp(*l, *u);
            (target - xi).abs()
        })
        .fold(0.0, f64::max)
}

/// Minimizes `f` over the box `[lower, upper]` starting from `x0`.
///
/// `f` returns the value and gradient. A non-finite value is treated as a
/// rejected trial point; if the start itself is non-finite the start is
/// returned unchanged.
pub fn minimize_bounded<F>(mut f: F, x0: &[f64], lower: &[f64], upper: &[f64], opts: &LbfgsOptions) -> Minimum
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    project(&mut x, lower, upper);
    let (mut fx, mut g) = f(&x);
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Minimum { x, value: fx, iterations: 0 };
    }
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        if projected_gradient_norm(&x, &g, lower, upper) < opts.gradient_tolerance {
            break;
        }

        // Active set: bound variables whose gradient points out of the box.
        let free: Vec<bool> = (0..n)
            .map(|i| !((x[i] <= lower[i] && g[i] > 0.0) || (x[i] >= upper[i] && g[i] < 0.0)))
            .collect();
        let masked = |v: &mut Vec<f64>| {
            for (vi, fr) in v.iter_mut().zip(&free) {
                if !fr {
                    *vi = 0.0;
                }
            }
        };

        let mut q = g.clone();
        masked(&mut q);
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = history.back() {
            let gamma = dot(s, y) / dot(y, y);
            if gamma.is_finite() && gamma > 0.0 {
                q.iter_mut().for_each(|v| *v *= gamma);
            }
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
        }
        let mut d: Vec<f64> = q.iter().map(|v| -v).collect();
        masked(&mut d);
        if dot(&d, &g) >= 0.0 || d.iter().any(|v| !v.is_finite()) {
            history.clear();
            d = g.iter().map(|v| -v).collect();
            masked(&mut d);
        }

        let mut step = if history.is_empty() {
            let dn = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            if dn > 0.0 { (1.0 / dn).min(1.0) } else { 1.0 }
        } else {
            1.0
        };

        let mut accepted = None;
        for _ in 0..40 {
            let mut trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            project(&mut trial, lower, upper);
            let moved: Vec<f64> = trial.iter().zip(&x).map(|(t, xi)| t - xi).collect();
            let decrease = dot(&g, &moved);
            if moved.iter().all(|m| *m == 0.0) {
                break;
            }
            let (ft, gt) = f(&trial);
            if ft.is_finite() && gt.iter().all(|v| v.is_finite()) && ft <= fx + 1e-4 * decrease {
                accepted = Some((trial, ft, gt, moved));
                break;
            }
            step *= 0.5;
        }

        let Some((x_new, f_new, g_new, s)) = accepted else {
            if history.is_empty() {
                break;
            }
            history.clear();
            continue;
        };

        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() && sy > 0.0 {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }

        let rel = (fx - f_new).abs() / fx.abs().max(f_new.abs()).max(1.0);
        x = x_new;
        fx = f_new;
        g = g_new;
        if rel < opts.value_tolerance {
            break;
        }
    }

    Minimum { x, value: fx, iterations }
}

/// Central finite-difference gradient that never evaluates outside the box;
/// falls back to one-sided differences at the bounds.
pub fn fd_gradient<F>(f: &mut F, x: &[f64], fx: f64, lower: &[f64], upper: &[f64], h: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let xi = x[i];
            let up = xi + h <= upper[i];
            let down = xi - h >= lower[i];
            let g = match (up, down) {
                (true, true) => {
                    probe[i] = xi + h;
                    let fp = f(&probe);
                    probe[i] = xi - h;
                    let fm = f(&probe);
                    (fp - fm) / (2.0 * h)
                }
                (true, false) => {
                    probe[i] = xi + h;
                    (f(&probe) - fx) / h
                }
                (false, true) => {
                    probe[i] = xi - h;
                    (fx - f(&probe)) / h
                }
                (false, false) => 0.0,
            };
            probe[i] = xi;
            g
        })
        .collect()
}
