//! Power-sum nonlinearities `f(u) = Σ C_i u^{p_i}`, the weighted antiderivative
//! `F`, the two families of structural conditions on `(α, β, θ)`, and the
//! concavity constants `σ`, `M` and the blow-up time bound.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_U_MAX: f64 = 1e6;
pub const DEFAULT_SAMPLES: usize = 400;
/// Sampling starts at `u_max * SAMPLE_SPAN`.
pub const SAMPLE_SPAN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SourceError {
    #[error("term {index}: coefficient must be finite and > 0, got {value}")]
    BadCoefficient { index: usize, value: f64 },
    #[error("term {index}: power must be finite and >= 1, got {value}")]
    BadPower { index: usize, value: f64 },
    #[error("ell must be finite and >= 1, got {0}")]
    BadEll(f64),
    #[error("parameter constraint violated: {0}")]
    ParamViolation(String),
    #[error("sampling needs u_max > 0 and at least 2 samples (u_max = {u_max}, n = {n})")]
    BadSampling { u_max: f64, n: usize },
    #[error("J0 = {0} is not positive; blow-up cannot be certified")]
    NonPositiveJ0(f64),
    #[error("sigma = {0} is not positive (need 2 ell alpha > (ell + 1)^2)")]
    NonPositiveSigma(f64),
    #[error("initial mass {0} is not positive")]
    NonPositiveMass(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerTerm {
    pub c: f64,
    pub p: f64,
}

/// `f(u) = Σ C_i max(u, 0)^{p_i}`. An empty term list is `f ≡ 0`, accepted for
/// pure diffusion runs only; the condition checkers reject it.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceModel {
    pub terms: Vec<PowerTerm>,
}

/// `x^e` for `x >= 0`, exact for small integral exponents.
pub(crate) fn pow(x: f64, e: f64) -> f64 {
    if e == 1.0 {
        x
    } else if e.fract() == 0.0 && e.abs() <= 64.0 {
        x.powi(e as i32)
    } else {
        x.powf(e)
    }
}

impl SourceModel {
    pub fn new(terms: Vec<PowerTerm>) -> Result<Self, SourceError> {
        let src = Self { terms };
        src.validate()?;
        Ok(src)
    }

    pub fn power(c: f64, p: f64) -> Result<Self, SourceError> {
        Self::new(vec![PowerTerm { c, p }])
    }

    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn validate(&self) -> Result<(), SourceError> {
        for (index, t) in self.terms.iter().enumerate() {
            if !(t.c.is_finite() && t.c > 0.0) {
                return Err(SourceError::BadCoefficient { index, value: t.c });
            }
            if !(t.p.is_finite() && t.p >= 1.0) {
                return Err(SourceError::BadPower { index, value: t.p });
            }
        }
        Ok(())
    }

    pub fn f(&self, u: f64) -> f64 {
        f_eval(self, u)
    }

    pub fn big_f(&self, ell: f64, u: f64) -> f64 {
        big_f_eval(self, ell, u)
    }

    /// Lipschitz bound of `f` on `[0, U]`: `Σ C_i p_i U^{p_i - 1}`.
    pub fn lipschitz(&self, upper: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.c * t.p * pow(upper, t.p - 1.0))
            .sum()
    }

    pub fn max_power(&self) -> Option<f64> {
        self.terms.iter().map(|t| t.p).reduce(f64::max)
    }
}

pub fn f_eval(src: &SourceModel, u: f64) -> f64 {
    let u = u.max(0.0);
    src.terms.iter().map(|t| t.c * pow(u, t.p)).sum()
}

/// `F(u) = (2ℓ/(ℓ+1)) ∫₀ᵘ s^{ℓ-1} f(s) ds` in closed form.
pub fn big_f_eval(src: &SourceModel, ell: f64, u: f64) -> f64 {
    let u = u.max(0.0);
    let lead = 2.0 * ell / (ell + 1.0);
    lead * src
        .terms
        .iter()
        .map(|t| t.c * pow(u, t.p + ell) / (t.p + ell))
        .sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionMode {
    BlowUp,
    Global,
}

impl ConditionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ConditionMode::BlowUp => "blow-up",
            ConditionMode::Global => "global",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcavityParams {
    pub ell: f64,
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
}

impl ConcavityParams {
    /// `λ₁ (α - ℓ - 1) / (ℓ + 1)`: upper bound on β in blow-up mode, lower
    /// bound in global mode.
    pub fn beta_bound(&self, lambda1: f64) -> f64 {
        lambda1 * (self.alpha - self.ell - 1.0) / (self.ell + 1.0)
    }

    pub fn check(&self, mode: ConditionMode, lambda1: f64) -> Result<(), SourceError> {
        let Self {
            ell,
            alpha,
            beta,
            theta,
        } = *self;
        if !(ell.is_finite() && ell >= 1.0) {
            return Err(SourceError::BadEll(ell));
        }
        if !(alpha.is_finite() && beta.is_finite() && theta.is_finite()) {
            return Err(SourceError::ParamViolation(
                "alpha, beta and theta must be finite".into(),
            ));
        }
        let bound = self.beta_bound(lambda1);
        let fail = |msg: String| Err(SourceError::ParamViolation(msg));
        match mode {
            ConditionMode::BlowUp => {
                if alpha <= ell + 1.0 {
                    return fail(format!("blow-up mode needs alpha > ell + 1 = {}, got {alpha}", ell + 1.0));
                }
                if theta <= 0.0 {
                    return fail(format!("blow-up mode needs theta > 0, got {theta}"));
                }
                if beta <= 0.0 {
                    return fail(format!("blow-up mode needs beta > 0, got {beta}"));
                }
                if beta > bound {
                    return fail(format!(
                        "blow-up mode needs beta <= lambda1 (alpha - ell - 1)/(ell + 1) = {bound}, got {beta}"
                    ));
                }
            }
            ConditionMode::Global => {
                if alpha > 0.0 {
                    return fail(format!("global mode needs alpha <= 0, got {alpha}"));
                }
                if theta < 0.0 {
                    return fail(format!("global mode needs theta >= 0, got {theta}"));
                }
                if beta < bound {
                    return fail(format!(
                        "global mode needs beta >= lambda1 (alpha - ell - 1)/(ell + 1) = {bound}, got {beta}"
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Outcome of sampling and leading-order analysis of
/// `g(u) = αF(u) - u^ℓ f(u) - β u^{2ℓ} - αθ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub mode: ConditionMode,
    /// Sign requirement met at every sample (`g <= 0` blow-up, `g >= 0` global).
    pub holds: bool,
    /// Sign requirement met as `u → ∞` by exact leading-power comparison.
    pub holds_asymptotically: bool,
    /// Largest `g` (blow-up) or smallest `g` (global) seen.
    pub worst_margin: f64,
    pub worst_u: f64,
    pub samples: usize,
    pub u_max: f64,
    /// Highest power of `u` with a nonzero coefficient in `g` (0 for the constant).
    pub dominant_power: f64,
    pub dominant_coefficient: f64,
}

/// `g` as a sum of monomials. The `u^{p+ℓ}` coefficient is
/// `C (α/α_p - 1)` with `α_p = (ℓ+1)(p+ℓ)/(2ℓ)`, exactly zero at `α = α_p`.
fn condition_monomials(src: &SourceModel, params: &ConcavityParams) -> Vec<(f64, f64)> {
    let ell = params.ell;
    let mut monomials: Vec<(f64, f64)> = Vec::new();
    let mut add = |power: f64, coeff: f64| {
        if let Some(slot) = monomials.iter_mut().find(|(p, _)| *p == power) {
            slot.1 += coeff;
        } else {
            monomials.push((power, coeff));
        }
    };
    for t in &src.terms {
        let power = t.p + ell;
        let critical = (ell + 1.0) * power / (2.0 * ell);
        let coeff = if params.alpha == critical {
            0.0
        } else {
            t.c * (params.alpha / critical - 1.0)
        };
        add(power, coeff);
    }
    add(2.0 * ell, -params.beta);
    add(0.0, -params.alpha * params.theta);
    monomials.sort_by(|a, b| b.0.total_cmp(&a.0));
    monomials
}

fn eval_monomials(monomials: &[(f64, f64)], u: f64) -> f64 {
    monomials.iter().map(|&(p, c)| if p == 0.0 { c } else { c * pow(u, p) }).sum()
}

/// `g(u) = αF(u) - u^ℓ f(u) - β u^{2ℓ} - αθ`.
pub fn condition_margin(src: &SourceModel, params: &ConcavityParams, u: f64) -> f64 {
    eval_monomials(&condition_monomials(src, params), u)
}

/// `α_p = (ℓ+1)(p*+ℓ)/(2ℓ)` for the highest power `p*`: the blow-up
/// condition holds asymptotically iff `α <= α_p` (when `p* + ℓ > 2ℓ`).
pub fn critical_alpha(src: &SourceModel, ell: f64) -> Option<f64> {
    src.max_power()
        .map(|p| (ell + 1.0) * (p + ell) / (2.0 * ell))
}

fn log_samples(u_max: f64, n: usize) -> impl Iterator<Item = f64> {
    let lo = (u_max * SAMPLE_SPAN).ln();
    let hi = u_max.ln();
    (0..n).map(move |j| {
        if j + 1 == n {
            u_max
        } else {
            (lo + (hi - lo) * j as f64 / (n - 1) as f64).exp()
        }
    })
}

fn check_condition(
    mode: ConditionMode,
    src: &SourceModel,
    params: &ConcavityParams,
    lambda1: f64,
    u_max: f64,
    n: usize,
) -> Result<ConditionReport, SourceError> {
    if src.is_zero() {
        return Err(SourceError::ParamViolation(
            "the condition checks need a nonzero source f".into(),
        ));
    }
    src.validate()?;
    params.check(mode, lambda1)?;
    if !(u_max.is_finite() && u_max > 0.0) || n < 2 {
        return Err(SourceError::BadSampling { u_max, n });
    }
    let monomials = condition_monomials(src, params);
    let mut worst_margin = match mode {
        ConditionMode::BlowUp => f64::NEG_INFINITY,
        ConditionMode::Global => f64::INFINITY,
    };
    let mut worst_u = f64::NAN;
    for u in log_samples(u_max, n) {
        let g = eval_monomials(&monomials, u);
        let worse = match mode {
            ConditionMode::BlowUp => g > worst_margin,
            ConditionMode::Global => g < worst_margin,
        };
        if worse || worst_u.is_nan() {
            worst_margin = g;
            worst_u = u;
        }
    }
    let holds = match mode {
        ConditionMode::BlowUp => worst_margin <= 0.0,
        ConditionMode::Global => worst_margin >= 0.0,
    };
    let (dominant_power, dominant_coefficient) = monomials
        .iter()
        .copied()
        .find(|&(_, c)| c != 0.0)
        .unwrap_or((0.0, 0.0));
    let holds_asymptotically = match mode {
        ConditionMode::BlowUp => dominant_coefficient <= 0.0,
        ConditionMode::Global => dominant_coefficient >= 0.0,
    };
    Ok(ConditionReport {
        mode,
        holds,
        holds_asymptotically,
        worst_margin,
        worst_u,
        samples: n,
        u_max,
        dominant_power,
        dominant_coefficient,
    })
}

/// Samples `αF(u) <= u^ℓ f(u) + β u^{2ℓ} + αθ` on `n` log-spaced points of
/// `(0, u_max]` after checking `α > ℓ+1`, `θ > 0`, `0 < β <= λ₁(α-ℓ-1)/(ℓ+1)`.
pub fn check_blowup_condition(
    src: &SourceModel,
    params: &ConcavityParams,
    lambda1: f64,
    u_max: f64,
    n: usize,
) -> Result<ConditionReport, SourceError> {
    check_condition(ConditionMode::BlowUp, src, params, lambda1, u_max, n)
}

/// Samples `αF(u) >= u^ℓ f(u) + β u^{2ℓ} + αθ` after checking `α <= 0`,
/// `θ >= 0`, `β >= λ₁(α-ℓ-1)/(ℓ+1)`.
pub fn check_global_condition(
    src: &SourceModel,
    params: &ConcavityParams,
    lambda1: f64,
    u_max: f64,
    n: usize,
) -> Result<ConditionReport, SourceError> {
    check_condition(ConditionMode::Global, src, params, lambda1, u_max, n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConcavityConstants {
    pub sigma: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub tstar_bound: f64,
    pub j0: f64,
    pub mass0: f64,
}

/// `σ = √(2ℓα)/(ℓ+1) - 1`, `M = (1+σ)(1+1/σ) mass0² / (α(ℓ+1)J₀)`,
/// `T* <= M / (σ mass0)`.
pub fn concavity_constants(
    params: &ConcavityParams,
    j0: f64,
    mass0: f64,
) -> Result<ConcavityConstants, SourceError> {
    let ConcavityParams { ell, alpha, .. } = *params;
    if !(ell.is_finite() && ell >= 1.0) {
        return Err(SourceError::BadEll(ell));
    }
    if !(j0 > 0.0) {
        return Err(SourceError::NonPositiveJ0(j0));
    }
    if !(mass0 > 0.0) {
        return Err(SourceError::NonPositiveMass(mass0));
    }
    let sigma = (2.0 * ell * alpha).max(0.0).sqrt() / (ell + 1.0) - 1.0;
    if !(sigma > 0.0) {
        return Err(SourceError::NonPositiveSigma(sigma));
    }
    let m = (1.0 + sigma) * (1.0 + 1.0 / sigma) * mass0 * mass0 / (alpha * (ell + 1.0) * j0);
    Ok(ConcavityConstants {
        sigma,
        m,
        tstar_bound: m / (sigma * mass0),
        j0,
        mass0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(ell: f64, alpha: f64, beta: f64, theta: f64) -> ConcavityParams {
        ConcavityParams {
            ell,
            alpha,
            beta,
            theta,
        }
    }

    #[test]
    fn f_values() {
        let cube = SourceModel::power(1.0, 3.0).unwrap();
        assert_eq!(cube.f(2.0), 8.0);
        assert_eq!(cube.f(0.0), 0.0);
        assert_eq!(cube.f(-1.0), 0.0);
        let mixed = SourceModel::new(vec![
            PowerTerm { c: 1.0, p: 3.0 },
            PowerTerm { c: 2.0, p: 1.0 },
        ])
        .unwrap();
        assert_eq!(mixed.f(1.0), 3.0);
    }

    #[test]
    fn big_f_values() {
        let cube = SourceModel::power(1.0, 3.0).unwrap();
        assert_eq!(cube.big_f(1.0, 2.0), 4.0);
        assert_eq!(cube.big_f(1.0, 0.0), 0.0);
        let square = SourceModel::power(1.0, 2.0).unwrap();
        assert_relative_eq!(square.big_f(2.0, 1.0), 1.0 / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn invalid_terms() {
        assert!(matches!(
            SourceModel::power(0.0, 2.0),
            Err(SourceError::BadCoefficient { .. })
        ));
        assert!(matches!(
            SourceModel::power(1.0, 0.5),
            Err(SourceError::BadPower { .. })
        ));
    }

    #[test]
    fn critical_alpha_is_an_identity() {
        let src = SourceModel::power(1.0, 3.0).unwrap();
        let alpha = critical_alpha(&src, 1.0).unwrap();
        assert_eq!(alpha, 4.0);
        let report =
            check_blowup_condition(&src, &params(1.0, alpha, 1.0, 0.01), 20.0, 1e6, 400).unwrap();
        assert!(report.holds);
        assert!(report.holds_asymptotically);
        assert_eq!(report.dominant_power, 2.0);
    }

    #[test]
    fn blowup_window_for_cubic() {
        let src = SourceModel::power(1.0, 3.0).unwrap();
        // alpha must exceed ell + 1 = 2
        assert!(matches!(
            check_blowup_condition(&src, &params(1.0, 2.0, 1.0, 0.01), 20.0, 1e6, 400),
            Err(SourceError::ParamViolation(_))
        ));
        let r = check_blowup_condition(&src, &params(1.0, 4.01, 1.0, 0.01), 20.0, 1e6, 400)
            .unwrap();
        assert!(!r.holds_asymptotically);
        assert!(!r.holds);

        let r = check_blowup_condition(&src, &params(1.0, 8.0, 0.1, 0.01), 20.0, 1e6, 400)
            .unwrap();
        assert!(!r.holds_asymptotically);
        assert!(!r.holds);
        assert_eq!(r.dominant_power, 4.0);
        assert_relative_eq!(r.dominant_coefficient, 1.0);
    }

    #[test]
    fn blowup_beta_bound_enforced() {
        let src = SourceModel::power(1.0, 3.0).unwrap();
        let lambda1 = 10.0;
        // bound = lambda1 (4 - 2)/2 = 10
        assert!(check_blowup_condition(&src, &params(1.0, 4.0, 10.0, 0.01), lambda1, 1e6, 50).is_ok());
        assert!(check_blowup_condition(&src, &params(1.0, 4.0, 10.5, 0.01), lambda1, 1e6, 50).is_err());
        assert!(check_blowup_condition(&src, &params(1.0, 4.0, 0.0, 0.01), lambda1, 1e6, 50).is_err());
        assert!(check_blowup_condition(&src, &params(1.0, 4.0, 1.0, 0.0), lambda1, 1e6, 50).is_err());
    }

    #[test]
    fn global_linear_window() {
        let src = SourceModel::power(1.0, 1.0).unwrap();
        let lambda1 = 12.0;
        let r = check_global_condition(&src, &params(1.0, 0.0, -1.0, 0.0), lambda1, 1e6, 400)
            .unwrap();
        assert!(r.holds);
        assert!(r.holds_asymptotically);
        assert_eq!(r.worst_margin, 0.0);

        let r = check_global_condition(&src, &params(1.0, 0.0, 1.0, 0.0), lambda1, 1e6, 400)
            .unwrap();
        assert!(!r.holds);
        assert!(!r.holds_asymptotically);
        assert_relative_eq!(r.worst_margin, -2.0 * r.worst_u * r.worst_u, max_relative = 1e-12);
        assert_eq!(r.worst_u, 1e6);

        // beta below -lambda1 leaves the admissible window
        assert!(matches!(
            check_global_condition(&src, &params(1.0, 0.0, -13.0, 0.0), lambda1, 1e6, 400),
            Err(SourceError::ParamViolation(_))
        ));
        assert!(check_global_condition(&src, &params(1.0, 0.5, -1.0, 0.0), lambda1, 1e6, 400).is_err());
    }

    #[test]
    fn global_quartic_minus_cubic() {
        // ell = 2, f = u: g(u) = u^4 - u^3, minimum -27/256 at u = 3/4
        let src = SourceModel::power(1.0, 1.0).unwrap();
        let r = check_global_condition(&src, &params(2.0, 0.0, -1.0, 1.0), 12.0, 1e6, 400)
            .unwrap();
        assert!(!r.holds);
        assert!(r.holds_asymptotically);
        assert_eq!(r.dominant_power, 4.0);
        assert!((r.worst_margin + 27.0 / 256.0).abs() < 1e-3);
        assert!((r.worst_u - 0.75).abs() < 0.05);
        let exact = r.worst_u.powi(4) - r.worst_u.powi(3);
        assert_relative_eq!(r.worst_margin, exact, max_relative = 1e-12);
    }

    #[test]
    fn sampling_arguments() {
        let src = SourceModel::power(1.0, 3.0).unwrap();
        let p = params(1.0, 4.0, 1.0, 0.01);
        assert!(matches!(
            check_blowup_condition(&src, &p, 20.0, 0.0, 10),
            Err(SourceError::BadSampling { .. })
        ));
        assert!(check_blowup_condition(&src, &p, 20.0, 10.0, 1).is_err());
        assert!(check_blowup_condition(&SourceModel::zero(), &p, 20.0, 10.0, 10).is_err());
    }

    #[test]
    fn constants_for_alpha_four() {
        let p = params(1.0, 4.0, 1.0, 0.01);
        let c = concavity_constants(&p, 1.0, 1.0).unwrap();
        assert_relative_eq!(c.sigma, 2f64.sqrt() - 1.0, max_relative = 1e-15);
        assert!((c.sigma - 0.4142136).abs() < 1e-7);
        assert!((c.m - 0.6035534).abs() < 1e-7);
        assert!((c.tstar_bound - 1.4571068).abs() < 1e-7);
    }

    #[test]
    fn constants_errors() {
        let p = params(1.0, 4.0, 1.0, 0.01);
        assert_eq!(
            concavity_constants(&p, 0.0, 1.0),
            Err(SourceError::NonPositiveJ0(0.0))
        );
        assert!(matches!(
            concavity_constants(&p, 1.0, 0.0),
            Err(SourceError::NonPositiveMass(_))
        ));
        // 2 ell alpha = 4 = (ell + 1)^2
        assert!(matches!(
            concavity_constants(&params(1.0, 2.0, 1.0, 0.01), 1.0, 1.0),
            Err(SourceError::NonPositiveSigma(_))
        ));
    }
}
