//! EI, POF, DPOF and EICB, with the POB and EMUB exploration functions.

use crate::bounds::Bounds;
use crate::ep::{GpcModel, HlgpModel, GPC_ALPHA};
use crate::error::{Error, Result};
use crate::gp::GpModel;
use crate::math::{log_ei_core, log_norm_cdf, norm_cdf, norm_pdf, norm_ppf, std_normal};
use crate::sobol;

pub const DEFAULT_BETA: f64 = 1.96;
/// Standard deviations at or below this are treated as zero.
pub const STD_CUTOFF: f64 = 1e-12;
/// Lower bound on an adapted EMUB scale.
pub const MIN_GAMMA: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Eic,
    Eicb,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GammaPolicy {
    Fixed(f64),
    Adapt,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exploration {
    None,
    Pob { beta: f64 },
    Emub { beta: f64, gamma: GammaPolicy },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AcquisitionSpec {
    pub family: Family,
    pub exploration: Exploration,
    /// Feasibility threshold on each constraint.
    pub lambda: f64,
}

impl AcquisitionSpec {
    pub fn eic() -> Self {
        Self { family: Family::Eic, exploration: Exploration::None, lambda: 0.0 }
    }

    pub fn eicb_pob(beta: f64) -> Self {
        Self { family: Family::Eicb, exploration: Exploration::Pob { beta }, lambda: 0.0 }
    }

    pub fn eicb_emub(beta: f64, gamma: GammaPolicy) -> Self {
        Self { family: Family::Eicb, exploration: Exploration::Emub { beta, gamma }, lambda: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() {
            return Err(Error::Config(format!("lambda must be finite, got {}", self.lambda)));
        }
        match (self.family, self.exploration) {
            (_, Exploration::None) => Ok(()),
            (Family::Eic, _) => Err(Error::Config("EIC takes no exploration function".into())),
            (Family::Eicb, Exploration::Pob { beta }) | (Family::Eicb, Exploration::Emub { beta, gamma: GammaPolicy::Adapt }) => check_beta(beta),
            (Family::Eicb, Exploration::Emub { beta, gamma: GammaPolicy::Fixed(g) }) => {
                check_beta(beta)?;
                if g > 0.0 && g.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Config(format!("gamma must be positive, got {g}")))
                }
            }
        }
    }
}

impl Default for AcquisitionSpec {
    fn default() -> Self {
        Self::eicb_pob(DEFAULT_BETA)
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("beta must be positive, got {beta}")))
    }
}

/// `σ·(zΦ(z) + φ(z))` with `z = (best − mean)/σ`; zero when `σ ≤ 1e-12`.
pub fn expected_improvement(mean: f64, std: f64, best: f64) -> f64 {
    if std <= STD_CUTOFF {
        return 0.0;
    }
    let z = (best - mean) / std;
    let (pdf, cdf) = std_normal(z);
    (std * (z * cdf + pdf)).max(0.0)
}

/// Natural log of [`expected_improvement`], accurate where EI underflows.
pub fn log_expected_improvement(mean: f64, std: f64, best: f64) -> f64 {
    if std <= STD_CUTOFF {
        return f64::NEG_INFINITY;
    }
    std.ln() + log_ei_core((best - mean) / std)
}

fn feasibility_factor(mean: f64, std: f64, lambda: f64) -> f64 {
    if std <= STD_CUTOFF {
        return step(lambda - mean);
    }
    norm_cdf((lambda - mean) / std)
}

fn log_feasibility_factor(mean: f64, std: f64, lambda: f64) -> f64 {
    if std <= STD_CUTOFF {
        return step(lambda - mean).ln();
    }
    log_norm_cdf((lambda - mean) / std)
}

fn step(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        0.0
    } else {
        0.5
    }
}

/// `∏ Φ((λ − μᵢ)/σᵢ)`.
pub fn pof(means: &[f64], stds: &[f64], lambda: f64) -> f64 {
    means.iter().zip(stds).map(|(m, s)| feasibility_factor(*m, *s, lambda)).product()
}

/// Posterior mass within `±β` standard deviations of the boundary:
/// `Φ(β − μ/σ) − Φ(−β − μ/σ)`.
pub fn exploration_pob(mean: f64, std: f64, beta: f64) -> f64 {
    if std <= STD_CUTOFF {
        return 0.0;
    }
    // Reflect to the lower tail so the difference of two small CDFs keeps
    // its relative accuracy.
    let g = (mean / std).abs();
    (norm_cdf(beta - g) - norm_cdf(-beta - g)).max(0.0)
}

/// Expected boundary utility `E[max(βσ − |g|, 0)]` for `g ~ N(μ, σ²)`.
pub fn emub(mean: f64, std: f64, beta: f64) -> f64 {
    if std <= STD_CUTOFF {
        return 0.0;
    }
    let mu = mean.abs();
    let g = mu / std;
    let eps = beta * std;
    let (gp, gm) = (beta - g, -beta - g);
    let cp = norm_cdf(gp);
    let cm = norm_cdf(gm);
    let c0 = norm_cdf(-g);
    let value = eps * (cp - cm) + mu * (2.0 * c0 - cp - cm) - std * (2.0 * norm_pdf(g) - norm_pdf(gp) - norm_pdf(gm));
    value.max(0.0)
}

/// EMUB exploration function: [`emub`] divided by the scale `gamma`.
pub fn exploration_emub(mean: f64, std: f64, beta: f64, gamma: f64) -> f64 {
    emub(mean, std, beta) / gamma
}

/// A fitted constraint surrogate.
#[derive(Clone, Debug)]
pub enum ConstraintModel {
    Gpr(GpModel),
    Hlgp(HlgpModel),
    /// Classifier over violation labels; its latent function is positive
    /// where the constraint is violated.
    Gpc(GpcModel),
}

impl ConstraintModel {
    /// Latent mean and standard deviation.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let (m, v) = match self {
            Self::Gpr(g) => g.predict(x),
            Self::Hlgp(h) => h.predict(x),
            Self::Gpc(c) => c.predict_latent(x),
        };
        (m, v.sqrt())
    }

    /// Mean and standard deviation that enter the feasibility factor
    /// `Φ((λ − μ)/s)`. For the classifier the latent variance is widened by
    /// the probit noise.
    fn factor_scale(&self, x: &[f64]) -> (f64, f64) {
        match self {
            Self::Gpc(c) => {
                let (m, v) = c.predict_latent(x);
                (m, (GPC_ALPHA * GPC_ALPHA + v).sqrt())
            }
            _ => self.predict(x),
        }
    }

    pub fn feasibility_probability(&self, x: &[f64], lambda: f64) -> f64 {
        let (m, s) = self.factor_scale(x);
        feasibility_factor(m, s, lambda)
    }

    fn log_feasibility_probability(&self, x: &[f64], lambda: f64) -> f64 {
        let (m, s) = self.factor_scale(x);
        log_feasibility_factor(m, s, lambda)
    }
}

/// Surrogates for one BO iteration.
#[derive(Clone, Debug)]
pub struct SurrogateBundle {
    pub objective: Option<GpModel>,
    pub constraints: Vec<ConstraintModel>,
    pub best_feasible: Option<f64>,
}

/// Largest value of `EMUB(x)·Φ((λ−μ(x))/σ(x))` over a scrambled Sobol probe
/// set, floored at [`MIN_GAMMA`].
pub fn adapt_gamma(model: &ConstraintModel, beta: f64, lambda: f64, bounds: &Bounds, probe_count: usize, seed: u64) -> Result<f64> {
    if probe_count == 0 {
        return Err(Error::InvalidInput("adapt_gamma needs at least one probe".into()));
    }
    let probes = sobol::sobol_points(bounds, probe_count, seed)?;
    let best = probes
        .iter()
        .map(|x| {
            let (m, s) = model.predict(x);
            emub(m - lambda, s, beta) * model.feasibility_probability(x, lambda)
        })
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    Ok(best.max(MIN_GAMMA))
}

/// An acquisition function bound to a surrogate bundle, with any adaptive
/// EMUB scales resolved.
#[derive(Clone, Debug)]
pub struct Acquisition<'a> {
    bundle: &'a SurrogateBundle,
    spec: AcquisitionSpec,
    gammas: Vec<f64>,
}

impl<'a> Acquisition<'a> {
    pub fn new(bundle: &'a SurrogateBundle, spec: AcquisitionSpec, bounds: &Bounds, probe_count: usize, seed: u64) -> Result<Self> {
        spec.validate()?;
        let gammas = match spec.exploration {
            Exploration::Emub { beta, gamma: GammaPolicy::Adapt } => bundle
                .constraints
                .iter()
                .enumerate()
                .map(|(i, c)| adapt_gamma(c, beta, spec.lambda, bounds, probe_count, seed.wrapping_add(i as u64)))
                .collect::<Result<Vec<_>>>()?,
            Exploration::Emub { gamma: GammaPolicy::Fixed(g), .. } => vec![g; bundle.constraints.len()],
            _ => vec![1.0; bundle.constraints.len()],
        };
        Ok(Self { bundle, spec, gammas })
    }

    pub fn spec(&self) -> &AcquisitionSpec {
        &self.spec
    }

    /// Resolved EMUB scale per constraint (1 when unused).
    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn bundle(&self) -> &SurrogateBundle {
        self.bundle
    }

    /// Exploration value `ρⁱ(x)` of each constraint.
    pub fn exploration(&self, x: &[f64]) -> Vec<f64> {
        self.bundle
            .constraints
            .iter()
            .zip(&self.gammas)
            .map(|(c, gamma)| {
                let (m, s) = c.predict(x);
                self.rho(m, s, *gamma)
            })
            .collect()
    }

    fn rho(&self, mean: f64, std: f64, gamma: f64) -> f64 {
        match self.spec.exploration {
            Exploration::None => 0.0,
            Exploration::Pob { beta } => exploration_pob(mean - self.spec.lambda, std, beta),
            Exploration::Emub { beta, .. } => exploration_emub(mean - self.spec.lambda, std, beta, gamma),
        }
    }

    pub fn pof(&self, x: &[f64]) -> f64 {
        self.bundle.constraints.iter().map(|c| c.feasibility_probability(x, self.spec.lambda)).product()
    }

    /// `∏ clip((ρⁱ + 1)·Φⁱ, 0, 1)`.
    pub fn dpof(&self, x: &[f64]) -> f64 {
        if self.spec.exploration == Exploration::None {
            return self.pof(x);
        }
        self.dpof_factors(x).iter().product()
    }

    pub fn dpof_factors(&self, x: &[f64]) -> Vec<f64> {
        self.bundle
            .constraints
            .iter()
            .zip(&self.gammas)
            .map(|(c, gamma)| {
                let (m, s) = c.predict(x);
                let phi = c.feasibility_probability(x, self.spec.lambda);
                ((self.rho(m, s, *gamma) + 1.0) * phi).clamp(0.0, 1.0)
            })
            .collect()
    }

    pub fn log_dpof(&self, x: &[f64]) -> f64 {
        self.bundle
            .constraints
            .iter()
            .zip(&self.gammas)
            .map(|(c, gamma)| {
                let log_phi = c.log_feasibility_probability(x, self.spec.lambda);
                let rho = match self.spec.exploration {
                    Exploration::None => 0.0,
                    _ => {
                        let (m, s) = c.predict(x);
                        self.rho(m, s, *gamma)
                    }
                };
                (rho.ln_1p() + log_phi).min(0.0)
            })
            .sum()
    }

    fn objective_and_best(&self) -> Result<(&GpModel, f64)> {
        match (&self.bundle.objective, self.bundle.best_feasible) {
            (Some(g), Some(b)) => Ok((g, b)),
            _ => Err(Error::NoFeasibleIncumbent),
        }
    }

    pub fn ei(&self, x: &[f64]) -> Result<f64> {
        let (g, best) = self.objective_and_best()?;
        let (m, v) = g.predict(x);
        Ok(expected_improvement(m, v.sqrt(), best))
    }

    /// EI × DPOF (EI × POF for the EIC family).
    pub fn eicb(&self, x: &[f64]) -> Result<f64> {
        Ok(self.ei(x)? * self.dpof(x))
    }

    pub fn log_eicb(&self, x: &[f64]) -> Result<f64> {
        let (g, best) = self.objective_and_best()?;
        let (m, v) = g.predict(x);
        Ok(log_expected_improvement(m, v.sqrt(), best) + self.log_dpof(x))
    }

    /// Effective per-constraint thresholds `λ̃ⁱ(x) = μⁱ + σⁱ·Φ⁻¹(DPOFⁱ(x))`
    /// under which the plain feasibility factor equals the DPOF factor.
    pub fn dynamic_thresholds(&self, x: &[f64]) -> Vec<f64> {
        self.bundle
            .constraints
            .iter()
            .zip(self.dpof_factors(x))
            .map(|(c, f)| {
                let (m, s) = c.factor_scale(x);
                m + s * norm_ppf(f)
            })
            .collect()
    }
}
