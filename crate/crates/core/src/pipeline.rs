//! End-to-end runs built from a [`RunConfig`].

use thiserror::Error;

use crate::config::{ConfigError, InitialSection, RunConfig};
use crate::diagnostics::{
    certify, certify_hypotheses_only, compute_j, compute_mass, Certificate, DiagnosticsError,
    Hypotheses, RunMode, SimulationTrace,
};
use crate::domain::{DomainError, Field, Grid};
use crate::operator::{assemble, SparseOperator};
use crate::solver::{run, InitialData, SimulationResult, SolverError};
use crate::source::{
    check_blowup_condition, check_global_condition, concavity_constants, ConcavityConstants,
    ConcavityParams, ConditionMode, ConditionReport, SourceError, SourceModel,
};
use crate::spectral::{smallest_eigenvalue, EigenResult, SpectralError};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid initial data: {0}")]
    InvalidInitialData(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error(transparent)]
    Solver(SolverError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl From<SolverError> for RunError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::InvalidInitialData(msg) => RunError::InvalidInitialData(msg),
            other => RunError::Solver(other),
        }
    }
}

/// Grid, operator and first eigenpair.
#[derive(Debug, Clone)]
pub struct Setup {
    pub grid: Grid,
    pub op: SparseOperator,
    pub eigen: EigenResult,
}

pub fn setup(cfg: &RunConfig) -> Result<Setup, RunError> {
    let grid = Grid::new(cfg.domain.clone())?;
    let op = assemble(&grid);
    let eigen = smallest_eigenvalue(&op, cfg.eigen.tol)?;
    Ok(Setup { grid, op, eigen })
}

/// Parameters with `beta = "auto"` resolved to `λ₁(α-ℓ-1)/(ℓ+1)`.
pub fn resolve_params(cfg: &RunConfig, lambda1: f64) -> ConcavityParams {
    let mut params = ConcavityParams {
        ell: cfg.ell,
        alpha: cfg.params.alpha,
        beta: 0.0,
        theta: cfg.params.theta,
    };
    params.beta = cfg
        .params
        .beta
        .value()
        .unwrap_or_else(|| params.beta_bound(lambda1));
    params
}

/// Largest `c > 0` with `J(c φ) = 0`, bracketed by doubling and refined by
/// bisection.
pub fn eigen_root_scale(
    phi: &Field,
    op: &SparseOperator,
    src: &SourceModel,
    ell: f64,
    theta: f64,
) -> Result<f64, RunError> {
    let j = |c: f64| -> Result<f64, RunError> {
        Ok(compute_j(&phi.scaled(c)?, op, src, ell, theta)?)
    };
    let mut hi = 1.0;
    let mut doublings = 0;
    while j(hi)? <= 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return Err(RunError::InvalidInitialData(
                "J(c phi) stays nonpositive for every tried scale c".into(),
            ));
        }
    }
    let mut lo = hi / 2.0;
    while j(lo)? > 0.0 {
        hi = lo;
        lo /= 2.0;
        if lo < 1e-300 {
            return Err(RunError::InvalidInitialData("J(c phi) has no sign change".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if j(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

pub fn initial_field(cfg: &RunConfig, setup: &Setup) -> Result<Field, RunError> {
    let phi = &setup.eigen.eigenfield;
    let data = match &cfg.solver.initial {
        InitialSection::Eigenfield { scale, headroom } => {
            let c = match scale.value() {
                Some(c) => c,
                None => {
                    let root =
                        eigen_root_scale(phi, &setup.op, &cfg.source, cfg.ell, cfg.params.theta)?;
                    (1.0 + headroom) * root
                }
            };
            InitialData::Eigenfield { scale: c }
        }
        InitialSection::Bump { scale } => InitialData::Bump { scale: *scale },
        InitialSection::File { path } => InitialData::File(path.clone()),
    };
    Ok(data.resolve(&setup.grid, Some(phi))?)
}

/// Resolved parameters, the constraint check, and the condition report (unset
/// when the constraints already fail).
pub type HypothesisParts = (ConcavityParams, Result<(), String>, Option<ConditionReport>);

/// Parameter constraints plus the sampled structural condition.
pub fn check_hypotheses(
    cfg: &RunConfig,
    mode: ConditionMode,
    lambda1: f64,
) -> Result<HypothesisParts, RunError> {
    let params = resolve_params(cfg, lambda1);
    let param_check = params.check(mode, lambda1).map_err(|e| e.to_string());
    let condition = if param_check.is_ok() {
        let checker = match mode {
            ConditionMode::BlowUp => check_blowup_condition,
            ConditionMode::Global => check_global_condition,
        };
        Some(checker(
            &cfg.source,
            &params,
            lambda1,
            cfg.checks.u_max,
            cfg.checks.samples,
        )?)
    } else {
        None
    };
    Ok((params, param_check, condition))
}

/// Everything computed before time stepping.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub setup: Setup,
    pub u0: Field,
    pub j0: f64,
    pub mass0: f64,
    pub hypotheses: Option<Hypotheses>,
    pub constants: Option<ConcavityConstants>,
}

impl Prepared {
    pub fn hypotheses_hold(&self) -> bool {
        let Some(h) = &self.hypotheses else {
            return true;
        };
        let j0_ok = match h.condition.as_ref().map(|c| c.mode) {
            Some(ConditionMode::Global) if h.params.alpha == 0.0 => true,
            _ => h.j0 > 0.0,
        };
        h.param_check.is_ok()
            && h.condition
                .as_ref()
                .is_some_and(|c| c.holds && c.holds_asymptotically)
            && j0_ok
    }
}

pub fn condition_mode(mode: RunMode) -> Option<ConditionMode> {
    match mode {
        RunMode::BlowUp => Some(ConditionMode::BlowUp),
        RunMode::Global => Some(ConditionMode::Global),
        RunMode::SimulateOnly => None,
    }
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared, RunError> {
    let setup = setup(cfg)?;
    let u0 = initial_field(cfg, &setup)?;
    let theta = cfg.params.theta;
    let j0 = compute_j(&u0, &setup.op, &cfg.source, cfg.ell, theta)?;
    let mass0 = compute_mass(&setup.grid, &u0, cfg.ell)?;
    let lambda1 = setup.eigen.lambda1;
    let (hypotheses, constants) = match condition_mode(cfg.mode) {
        Some(mode) => {
            let (params, param_check, condition) = check_hypotheses(cfg, mode, lambda1)?;
            let constants = match mode {
                ConditionMode::BlowUp => concavity_constants(&params, j0, mass0).ok(),
                ConditionMode::Global => None,
            };
            let hyp = Hypotheses {
                lambda1,
                params,
                param_check,
                condition,
                j0,
            };
            (Some(hyp), constants)
        }
        None => (None, None),
    };
    Ok(Prepared {
        setup,
        u0,
        j0,
        mass0,
        hypotheses,
        constants,
    })
}

pub fn simulate(cfg: &RunConfig, prepared: &Prepared) -> Result<SimulationResult, RunError> {
    let params = prepared.hypotheses.as_ref().map(|h| h.params);
    let trace = SimulationTrace::new(cfg.mode, cfg.ell, cfg.params.theta, params, prepared.constants);
    Ok(run(
        &prepared.setup.op,
        &cfg.solver_config(),
        prepared.u0.clone(),
        trace,
    )?)
}

/// Result of a certification pipeline.
#[derive(Debug, Clone)]
pub struct Certified {
    pub prepared: Prepared,
    /// Unset when the hypotheses failed and the run was skipped.
    pub result: Option<SimulationResult>,
    pub certificate: Certificate,
}

pub fn certify_config(cfg: &RunConfig, mode: ConditionMode) -> Result<Certified, RunError> {
    if condition_mode(cfg.mode) != Some(mode) {
        return Err(ConfigError::Validation {
            path: "mode".into(),
            message: format!("this pipeline needs mode `{}`, config has `{}`", mode.as_str(), cfg.mode.as_str()),
        }
        .into());
    }
    let prepared = prepare(cfg)?;
    let tol = cfg.tolerances();
    let hyp = prepared.hypotheses.clone().expect("certifying modes carry hypotheses");
    let runnable = prepared.hypotheses_hold()
        && (mode == ConditionMode::Global || prepared.constants.is_some());
    if !runnable {
        let certificate = certify_hypotheses_only(mode, &hyp, prepared.constants, &tol);
        return Ok(Certified {
            prepared,
            result: None,
            certificate,
        });
    }
    let result = simulate(cfg, &prepared)?;
    let certificate = certify(&result, mode, &hyp, &tol)?;
    Ok(Certified {
        prepared,
        result: Some(result),
        certificate,
    })
}
