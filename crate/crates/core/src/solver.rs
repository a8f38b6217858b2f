//! Explicit, positivity-preserving time stepping for
//! `u_t = Δ_γ(u^ℓ) + f(u)` with homogeneous Dirichlet data.
//!
//! The step size follows
//! `dt = cfl / (ℓ U^{ℓ-1} max|A_ii| + L_f(U))`, `U = max u`, which keeps
//! `u_i (1 - dt |A_ii| ℓ U^{ℓ-1}) >= 0` and therefore `u >= 0`.

use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

use crate::diagnostics::{append_row, DiagnosticsError, SimulationTrace};
use crate::domain::{DomainError, Field, Grid};
use crate::operator::SparseOperator;
use crate::source::{pow, SourceModel};

pub const DEFAULT_CFL: f64 = 0.5;
pub const DEFAULT_U_BLOW: f64 = 1e8;
pub const DEFAULT_DT_MIN: f64 = 1e-14;
/// Lower floor on `max u` inside the step-size rule.
pub const U_FLOOR: f64 = 1e-30;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid initial data: {0}")]
    InvalidInitialData(String),
    #[error("invalid solver configuration: {0}")]
    BadConfig(String),
    #[error("non-finite value at node {index} in step {step} (overflow before the blow-up threshold)")]
    NonFinite { step: usize, index: usize },
    #[error("negative value {value:e} at node {index} in step {step}")]
    NegativeValue { step: usize, index: usize, value: f64 },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub ell: f64,
    pub source: SourceModel,
    pub t_end: f64,
    pub cfl: f64,
    pub u_blow: f64,
    pub dt_min: f64,
    pub sample_every: usize,
}

impl SolverConfig {
    pub fn new(ell: f64, source: SourceModel, t_end: f64) -> Self {
        Self {
            ell,
            source,
            t_end,
            cfl: DEFAULT_CFL,
            u_blow: DEFAULT_U_BLOW,
            dt_min: DEFAULT_DT_MIN,
            sample_every: 1,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |msg: String| Err(SolverError::BadConfig(msg));
        if !(self.ell.is_finite() && self.ell >= 1.0) {
            return bad(format!("ell must be >= 1, got {}", self.ell));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad(format!("t_end must be > 0, got {}", self.t_end));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad(format!("cfl must lie in (0, 1], got {}", self.cfl));
        }
        if !(self.u_blow > 0.0) {
            return bad(format!("u_blow must be > 0, got {}", self.u_blow));
        }
        if !(self.dt_min >= 0.0 && self.dt_min.is_finite()) {
            return bad(format!("dt_min must be finite and >= 0, got {}", self.dt_min));
        }
        if self.sample_every == 0 {
            return bad("sample_every must be >= 1".into());
        }
        self.source
            .validate()
            .map_err(|e| SolverError::BadConfig(e.to_string()))
    }
}

/// Where the initial datum comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    /// `c φ₁` for the first Dirichlet eigenfield.
    Eigenfield { scale: f64 },
    /// `c Π_d sin(π (x_d - a_d)/(b_d - a_d))`.
    Bump { scale: f64 },
    /// Node values in flat order.
    Values(Vec<f64>),
    /// CSV in the field-dump layout (coordinates then value per row).
    File(PathBuf),
}

impl InitialData {
    pub fn resolve(&self, grid: &Grid, eigenfield: Option<&Field>) -> Result<Field, SolverError> {
        let field = match self {
            InitialData::Eigenfield { scale } => {
                let phi = eigenfield.ok_or_else(|| {
                    SolverError::InvalidInitialData("eigenfield datum needs the first eigenfield".into())
                })?;
                phi.scaled(*scale)?
            }
            InitialData::Bump { scale } => {
                let extents = grid.spec().extents.clone();
                grid.sample(|p| {
                    scale
                        * p.iter()
                            .zip(&extents)
                            .map(|(x, (a, b))| (std::f64::consts::PI * (x - a) / (b - a)).sin())
                            .product::<f64>()
                })
            }
            InitialData::Values(values) => grid.field(values.clone())?,
            InitialData::File(path) => crate::diagnostics::read_field_csv(grid, path)
                .map_err(|e| SolverError::InvalidInitialData(e.to_string()))?,
        };
        check_initial(&field)?;
        Ok(field)
    }
}

/// Nonnegative and not identically zero.
pub fn check_initial(u0: &Field) -> Result<(), SolverError> {
    if let Some((i, v)) = u0.values().iter().enumerate().find(|(_, &v)| v < 0.0) {
        return Err(SolverError::InvalidInitialData(format!(
            "negative value {v} at node {i}"
        )));
    }
    if u0.is_zero() {
        return Err(SolverError::InvalidInitialData(
            "initial datum is identically zero".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub t: f64,
    pub u: Field,
    pub step_count: usize,
    /// `∫ u^{ℓ+1}` at `t`.
    pub mass: f64,
    /// `∫₀ᵗ ∫ u^{ℓ+1}` by the trapezoid rule in time.
    pub time_mass_integral: f64,
    /// `(2ℓ/(ℓ+1)) Σ dt ∫ u^{ℓ-1} ((u⁺ - u)/dt)²`.
    pub dissipation_integral: f64,
    /// Size of the step that produced this state (0 initially).
    pub last_dt: f64,
}

impl SolverState {
    pub fn initial(u0: Field, ell: f64, cell_volume: f64) -> Self {
        let mass = mass_of(u0.values(), ell, cell_volume);
        Self {
            t: 0.0,
            u: u0,
            step_count: 0,
            mass,
            time_mass_integral: 0.0,
            dissipation_integral: 0.0,
            last_dt: 0.0,
        }
    }

    pub fn max_u(&self) -> f64 {
        self.u.max()
    }
}

pub(crate) fn mass_of(u: &[f64], ell: f64, cell_volume: f64) -> f64 {
    cell_volume * u.iter().map(|&v| pow(v, ell + 1.0)).sum::<f64>()
}

/// Step size from the stability rule, clipped so `t + dt <= t_end`.
pub fn adaptive_dt(state: &SolverState, op: &SparseOperator, config: &SolverConfig) -> f64 {
    let raw = stable_dt(state, op, config);
    raw.min(config.t_end - state.t)
}

fn stable_dt(state: &SolverState, op: &SparseOperator, config: &SolverConfig) -> f64 {
    let upper = state.max_u().max(U_FLOOR);
    let diffusion = config.ell * pow(upper, config.ell - 1.0) * op.max_abs_diagonal();
    config.cfl / (diffusion + config.source.lipschitz(upper))
}

/// One explicit Euler step `u⁺ = u + dt (A u^ℓ + f(u))`.
pub fn step(
    state: &SolverState,
    op: &SparseOperator,
    config: &SolverConfig,
    dt: f64,
) -> Result<SolverState, SolverError> {
    let ell = config.ell;
    let cv = op.cell_volume();
    let u = state.u.values();
    let step_index = state.step_count + 1;

    let powered: Vec<f64> = u.iter().map(|&v| pow(v, ell)).collect();
    let mut diffusion = vec![0.0; u.len()];
    op.apply_into(&powered, &mut diffusion);

    let mut next = Vec::with_capacity(u.len());
    let mut dissipation = 0.0;
    for (index, (&ui, &di)) in u.iter().zip(&diffusion).enumerate() {
        let value = ui + dt * (di + config.source.f(ui));
        if !value.is_finite() {
            return Err(SolverError::NonFinite {
                step: step_index,
                index,
            });
        }
        if value < 0.0 {
            return Err(SolverError::NegativeValue {
                step: step_index,
                index,
                value,
            });
        }
        let rate = (value - ui) / dt;
        dissipation += pow(ui, ell - 1.0) * rate * rate;
        next.push(value);
    }
    let mass = mass_of(&next, ell, cv);
    Ok(SolverState {
        t: state.t + dt,
        u: Field::from_vec_unchecked(next),
        step_count: step_index,
        mass,
        time_mass_integral: state.time_mass_integral + 0.5 * dt * (state.mass + mass),
        dissipation_integral: state.dissipation_integral
            + 2.0 * ell / (ell + 1.0) * dt * cv * dissipation,
        last_dt: dt,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Outcome {
    ReachedHorizon { t: f64 },
    BlowupDetected { t_blow: f64, max_u: f64 },
    StepUnderflow { t: f64, dt: f64 },
}

impl Outcome {
    pub fn name(&self) -> &'static str {
        match self {
            Outcome::ReachedHorizon { .. } => "reached-horizon",
            Outcome::BlowupDetected { .. } => "blowup-detected",
            Outcome::StepUnderflow { .. } => "step-underflow",
        }
    }

    /// Time at which a blow-up was signalled, if any.
    pub fn detection_time(&self) -> Option<f64> {
        match *self {
            Outcome::ReachedHorizon { .. } => None,
            Outcome::BlowupDetected { t_blow, .. } => Some(t_blow),
            Outcome::StepUnderflow { t, .. } => Some(t),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub outcome: Outcome,
    pub trace: SimulationTrace,
    pub final_state: SolverState,
}

/// Advances from `u0` until the horizon, the blow-up threshold, or step
/// collapse, appending a trace row every `sample_every` steps and at the end.
pub fn run(
    op: &SparseOperator,
    config: &SolverConfig,
    u0: Field,
    mut trace: SimulationTrace,
) -> Result<SimulationResult, SolverError> {
    config.validate()?;
    if u0.len() != op.dim() {
        return Err(DomainError::LengthMismatch {
            expected: op.dim(),
            got: u0.len(),
        }
        .into());
    }
    check_initial(&u0)?;
    let mut state = SolverState::initial(u0, config.ell, op.cell_volume());
    append_row(&mut trace, &state, op, &config.source)?;

    let outcome = loop {
        if state.t >= config.t_end {
            break Outcome::ReachedHorizon { t: state.t };
        }
        let raw = stable_dt(&state, op, config);
        if raw < config.dt_min {
            break Outcome::StepUnderflow { t: state.t, dt: raw };
        }
        let remaining = config.t_end - state.t;
        let dt = raw.min(remaining);
        state = step(&state, op, config, dt)?;
        if dt == remaining {
            state.t = config.t_end;
        }
        let max_u = state.max_u();
        if max_u >= config.u_blow {
            break Outcome::BlowupDetected {
                t_blow: state.t,
                max_u,
            };
        }
        if state.step_count.is_multiple_of(config.sample_every) {
            append_row(&mut trace, &state, op, &config.source)?;
        }
    };
    let last_logged = trace.rows.last().map(|r| r.step);
    if last_logged != Some(state.step_count) {
        append_row(&mut trace, &state, op, &config.source)?;
    }
    Ok(SimulationResult {
        outcome,
        trace,
        final_state: state,
    })
}
