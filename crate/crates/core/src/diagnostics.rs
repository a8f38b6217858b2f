//! Energy functionals along a run, trace files, and certificates for the
//! monitored inequalities.
//!
//! Per row: mass `E' = ∫ u^{ℓ+1}`, `J = -(1/(ℓ+1)) ∫|∇_γ u^ℓ|² + ∫(F(u) - θ)`,
//! `E = ∫₀ᵗ E' + M` (blow-up mode; `M = 0` otherwise), the accumulated
//! dissipation `(2ℓ/(ℓ+1)) ∫₀ᵗ∫ u^{ℓ-1} u_τ²`, and in blow-up mode the
//! concavity defect `E''E - (1+σ)(E')²` with `E''` the backward difference of
//! `E'` between consecutive rows.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{integrate_values, DomainError, Field, Grid};
use crate::operator::SparseOperator;
use crate::solver::{mass_of, Outcome, SimulationResult, SolverState};
use crate::source::{pow, ConcavityConstants, ConcavityParams, ConditionMode, ConditionReport, SourceModel};

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("non-finite {what} at t = {t}")]
    NonFinite { what: &'static str, t: f64 },
    #[error("incompatible trace: {0}")]
    IncompatibleTrace(String),
    #[error("field file: {0}")]
    FieldFile(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    BlowUp,
    Global,
    SimulateOnly,
}

impl RunMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RunMode::BlowUp => "blow-up",
            RunMode::Global => "global",
            RunMode::SimulateOnly => "simulate-only",
        }
    }
}

impl From<ConditionMode> for RunMode {
    fn from(mode: ConditionMode) -> Self {
        match mode {
            ConditionMode::BlowUp => RunMode::BlowUp,
            ConditionMode::Global => RunMode::Global,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub mass: f64,
    pub grad_energy_l: f64,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "E_prime")]
    pub e_prime: f64,
    pub dissipation: f64,
    pub max_u: f64,
    pub concavity_defect: Option<f64>,
}

pub const TRACE_HEADER: &str =
    "t,dt,mass,grad_energy_l,J,E,E_prime,dissipation,max_u,concavity_defect";

/// Rows of one run plus the constants needed to interpret them.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub mode: RunMode,
    pub ell: f64,
    pub theta: f64,
    pub params: Option<ConcavityParams>,
    pub constants: Option<ConcavityConstants>,
    pub rows: Vec<TraceRow>,
}

impl SimulationTrace {
    pub fn new(
        mode: RunMode,
        ell: f64,
        theta: f64,
        params: Option<ConcavityParams>,
        constants: Option<ConcavityConstants>,
    ) -> Self {
        Self {
            mode,
            ell,
            theta,
            params,
            constants,
            rows: Vec::new(),
        }
    }

    /// `E(0)` shift: `M` in blow-up mode.
    pub fn shift(&self) -> f64 {
        match (self.mode, self.constants) {
            (RunMode::BlowUp, Some(c)) => c.m,
            _ => 0.0,
        }
    }

    /// `J(t) - J(0) - dissipation(t)` per row.
    pub fn fp_residuals(&self) -> Vec<f64> {
        let Some(first) = self.rows.first() else {
            return Vec::new();
        };
        self.rows
            .iter()
            .map(|r| r.j - first.j - r.dissipation)
            .collect()
    }

    /// CSV with [`TRACE_HEADER`]; reals printed with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 + self.rows.len() * 240);
        out.push_str(TRACE_HEADER);
        out.push('\n');
        for r in &self.rows {
            let defect = r.concavity_defect.map(fmt17).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                fmt17(r.t),
                fmt17(r.dt),
                fmt17(r.mass),
                fmt17(r.grad_energy_l),
                fmt17(r.j),
                fmt17(r.e),
                fmt17(r.e_prime),
                fmt17(r.dissipation),
                fmt17(r.max_u),
                defect
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, self.to_csv())
    }
}

pub(crate) fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// `J = -(1/(ℓ+1)) ∫|∇_γ u^ℓ|² + ∫ (F(u) - θ)`.
pub fn compute_j(
    u: &Field,
    op: &SparseOperator,
    src: &SourceModel,
    ell: f64,
    theta: f64,
) -> Result<f64, DiagnosticsError> {
    let (_, j) = energy_and_j(u.values(), op, src, ell, theta)?;
    Ok(j)
}

fn energy_and_j(
    u: &[f64],
    op: &SparseOperator,
    src: &SourceModel,
    ell: f64,
    theta: f64,
) -> Result<(f64, f64), DiagnosticsError> {
    if u.len() != op.dim() {
        return Err(DomainError::LengthMismatch {
            expected: op.dim(),
            got: u.len(),
        }
        .into());
    }
    let powered: Vec<f64> = u.iter().map(|&v| pow(v, ell)).collect();
    let energy = op.grad_energy_values(&powered);
    let potential: Vec<f64> = u.iter().map(|&v| src.big_f(ell, v) - theta).collect();
    let j = -energy / (ell + 1.0) + integrate_values(op.cell_volume(), &potential)?;
    if !j.is_finite() || !energy.is_finite() {
        return Err(DiagnosticsError::NonFinite { what: "J", t: f64::NAN });
    }
    Ok((energy, j))
}

/// `∫ u^{ℓ+1}`.
pub fn compute_mass(grid: &Grid, u: &Field, ell: f64) -> Result<f64, DiagnosticsError> {
    if u.len() != grid.len() {
        return Err(DomainError::LengthMismatch {
            expected: grid.len(),
            got: u.len(),
        }
        .into());
    }
    let mass = mass_of(u.values(), ell, grid.cell_volume());
    if !mass.is_finite() {
        return Err(DiagnosticsError::NonFinite { what: "mass", t: f64::NAN });
    }
    Ok(mass)
}

/// Computes the row for `state` and appends it.
pub fn append_row<'a>(
    trace: &'a mut SimulationTrace,
    state: &SolverState,
    op: &SparseOperator,
    src: &SourceModel,
) -> Result<&'a TraceRow, DiagnosticsError> {
    let t = state.t;
    let (grad_energy_l, j) = energy_and_j(state.u.values(), op, src, trace.ell, trace.theta)
        .map_err(|e| match e {
            DiagnosticsError::NonFinite { what, .. } => DiagnosticsError::NonFinite { what, t },
            other => other,
        })?;
    let mass = state.mass;
    if !mass.is_finite() {
        return Err(DiagnosticsError::NonFinite { what: "mass", t });
    }
    let e = state.time_mass_integral + trace.shift();
    let concavity_defect = match (trace.mode, trace.constants, trace.rows.last()) {
        (RunMode::BlowUp, Some(c), Some(prev)) if t > prev.t => {
            let e_second = (mass - prev.mass) / (t - prev.t);
            Some(e_second * e - (1.0 + c.sigma) * mass * mass)
        }
        _ => None,
    };
    trace.rows.push(TraceRow {
        step: state.step_count,
        t,
        dt: state.last_dt,
        mass,
        grad_energy_l,
        j,
        e,
        e_prime: mass,
        dissipation: state.dissipation_integral,
        max_u: state.max_u(),
        concavity_defect,
    });
    Ok(trace.rows.last().expect("row just pushed"))
}

/// Thresholds for [`certify`]. Relative tolerances are scaled by the size of
/// the monitored quantity at `t = 0`, floored at `scale_floor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub j_rel: f64,
    pub concavity_rel: f64,
    pub scale_floor: f64,
    pub blowup_margin: f64,
    pub mass_rel: f64,
    pub final_mass_rel: f64,
    /// Rows skipped before second-difference checks start.
    pub warmup: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            j_rel: 1e-6,
            concavity_rel: 1e-6,
            scale_floor: 1e-12,
            blowup_margin: 0.1,
            mass_rel: 1e-10,
            final_mass_rel: 1e-6,
            warmup: 3,
        }
    }
}

/// Hypothesis-side inputs gathered before the run.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypotheses {
    pub lambda1: f64,
    pub params: ConcavityParams,
    /// `Err` carries the violated constraint.
    pub param_check: Result<(), String>,
    pub condition: Option<ConditionReport>,
    pub j0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Signed slack: nonnegative when the check passes without tolerance.
    pub worst_margin: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    fn new(name: &str, worst_margin: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            passed: worst_margin >= -tolerance,
            worst_margin,
            tolerance,
            detail: detail.into(),
        }
    }

    fn flag(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            passed,
            worst_margin: if passed { 0.0 } else { -1.0 },
            tolerance: 0.0,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub mode: ConditionMode,
    pub lambda1: f64,
    pub params: ConcavityParams,
    pub constants: Option<ConcavityConstants>,
    pub condition: Option<ConditionReport>,
    /// Unset when the hypotheses failed and nothing was run.
    pub outcome: Option<Outcome>,
    pub tolerances: Tolerances,
    pub hypothesis_checks: Vec<Check>,
    pub monitored_checks: Vec<Check>,
    pub verdict: Verdict,
}

impl Certificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }

    /// Flat `key=value` lines.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "mode={}", self.mode.as_str());
        let _ = writeln!(out, "verdict={}", self.verdict.as_str());
        let _ = writeln!(out, "lambda1={}", self.lambda1);
        let p = &self.params;
        let _ = writeln!(out, "ell={}\nalpha={}\nbeta={}\ntheta={}", p.ell, p.alpha, p.beta, p.theta);
        if let Some(c) = &self.constants {
            let _ = writeln!(
                out,
                "sigma={}\nM={}\ntstar_bound={}\nJ0={}\nmass0={}",
                c.sigma, c.m, c.tstar_bound, c.j0, c.mass0
            );
        }
        match &self.outcome {
            Some(o) => {
                let _ = writeln!(out, "outcome={}", o.name());
                if let Some(t) = o.detection_time() {
                    let _ = writeln!(out, "t_detect={t}");
                }
            }
            None => {
                let _ = writeln!(out, "outcome=not-run");
            }
        }
        for (group, checks) in [
            ("hypothesis", &self.hypothesis_checks),
            ("monitored", &self.monitored_checks),
        ] {
            for c in checks {
                let _ = writeln!(out, "{group}.{}.passed={}", c.name, c.passed);
                let _ = writeln!(out, "{group}.{}.worst_margin={}", c.name, c.worst_margin);
                let _ = writeln!(out, "{group}.{}.tolerance={}", c.name, c.tolerance);
            }
        }
        out
    }
}

/// Checks the hypotheses and the monitored inequalities of a finished run.
pub fn certify(
    result: &SimulationResult,
    mode: ConditionMode,
    hypotheses: &Hypotheses,
    tol: &Tolerances,
) -> Result<Certificate, DiagnosticsError> {
    let trace = &result.trace;
    if trace.mode != RunMode::from(mode) {
        return Err(DiagnosticsError::IncompatibleTrace(format!(
            "trace recorded in {} mode, certificate requested for {} mode",
            trace.mode.as_str(),
            mode.as_str()
        )));
    }
    let constants = trace.constants;
    if mode == ConditionMode::BlowUp && constants.is_none() {
        return Err(DiagnosticsError::IncompatibleTrace(
            "blow-up certificate needs the concavity constants".into(),
        ));
    }
    let rows = &trace.rows;
    let Some(first) = rows.first() else {
        return Err(DiagnosticsError::IncompatibleTrace("trace has no rows".into()));
    };

    let hyp = hypothesis_checks(mode, hypotheses);

    let j_scale = first.j.abs().max(tol.scale_floor);
    let tol_j = tol.j_rel * j_scale;
    let mut mon = Vec::new();
    let j_step = rows
        .windows(2)
        .map(|w| w[1].j - w[0].j)
        .fold(f64::INFINITY, f64::min);
    mon.push(Check::new(
        "j_monotone",
        finite_or_zero(j_step),
        tol_j,
        "min over consecutive rows of J(t_{i+1}) - J(t_i)",
    ));

    match mode {
        ConditionMode::BlowUp => {
            let c = constants.expect("checked above");
            let alpha = hypotheses.params.alpha;
            let ell = trace.ell;
            let j_floor = rows.iter().map(|r| r.j - first.j).fold(f64::INFINITY, f64::min);
            mon.push(Check::new(
                "j_above_initial",
                j_floor,
                tol_j,
                "min over rows of J(t) - J0",
            ));

            let tol_c = tol.concavity_rel * ((1.0 + c.sigma) * c.mass0 * c.mass0).max(tol.scale_floor);
            let defect = rows
                .iter()
                .skip(tol.warmup)
                .filter_map(|r| r.concavity_defect)
                .fold(f64::INFINITY, f64::min);
            mon.push(Check::new(
                "concavity_defect",
                finite_or_zero(defect),
                tol_c,
                "min after warmup of E''E - (1+sigma)(E')^2",
            ));

            // difference quotient over [t_{i-1}, t_i] against α(ℓ+1) J(t_{i-1})
            let rate_scale = (alpha * (ell + 1.0) * first.j).abs().max(tol.scale_floor);
            let rate = rows
                .windows(2)
                .skip(tol.warmup.saturating_sub(1))
                .filter(|w| w[1].t > w[0].t)
                .map(|w| (w[1].mass - w[0].mass) / (w[1].t - w[0].t) - alpha * (ell + 1.0) * w[0].j)
                .fold(f64::INFINITY, f64::min);
            mon.push(Check::new(
                "second_derivative_bound",
                finite_or_zero(rate),
                tol.concavity_rel * rate_scale,
                "min after warmup of E'' - alpha (ell+1) J",
            ));

            let limit = c.tstar_bound * (1.0 + tol.blowup_margin);
            mon.push(match result.outcome.detection_time() {
                Some(t) => Check::new(
                    "blowup_time",
                    limit - t,
                    0.0,
                    format!("t_detect = {t}, bound (1 + {}) T* = {limit}", tol.blowup_margin),
                ),
                None => Check::flag(
                    "blowup_time",
                    false,
                    format!("no blow-up detected before the horizon (bound {limit})"),
                ),
            });
        }
        ConditionMode::Global => {
            let mass0 = first.mass;
            let tol_m = tol.mass_rel * mass0.max(tol.scale_floor);
            let rise = rows
                .windows(2)
                .map(|w| w[0].mass - w[1].mass)
                .fold(f64::INFINITY, f64::min);
            mon.push(Check::new(
                "mass_monotone",
                finite_or_zero(rise),
                tol_m,
                "min over consecutive rows of mass(t_i) - mass(t_{i+1})",
            ));
            let reached = matches!(result.outcome, Outcome::ReachedHorizon { .. });
            mon.push(Check::flag(
                "reached_horizon",
                reached,
                format!("outcome {}", result.outcome.name()),
            ));
            let last = rows.last().expect("nonempty");
            let bound = mass0 * (1.0 + tol.final_mass_rel);
            mon.push(Check::new(
                "final_mass",
                bound - last.mass,
                0.0,
                format!("mass(t_end) = {}, mass0 (1 + {}) = {bound}", last.mass, tol.final_mass_rel),
            ));
        }
    }

    let verdict = if mon.iter().any(|c| !c.passed) && hyp.iter().all(|c| c.passed) {
        Verdict::Fail
    } else if hyp.iter().any(|c| !c.passed) {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };
    Ok(Certificate {
        mode,
        lambda1: hypotheses.lambda1,
        params: hypotheses.params,
        constants,
        condition: hypotheses.condition.clone(),
        outcome: Some(result.outcome),
        tolerances: *tol,
        hypothesis_checks: hyp,
        monitored_checks: mon,
        verdict,
    })
}

/// Certificate for a run that was not started because a hypothesis failed.
pub fn certify_hypotheses_only(
    mode: ConditionMode,
    hypotheses: &Hypotheses,
    constants: Option<ConcavityConstants>,
    tol: &Tolerances,
) -> Certificate {
    let hyp = hypothesis_checks(mode, hypotheses);
    Certificate {
        mode,
        lambda1: hypotheses.lambda1,
        params: hypotheses.params,
        constants,
        condition: hypotheses.condition.clone(),
        outcome: None,
        tolerances: *tol,
        hypothesis_checks: hyp,
        monitored_checks: Vec::new(),
        verdict: Verdict::Inconclusive,
    }
}

fn hypothesis_checks(mode: ConditionMode, hypotheses: &Hypotheses) -> Vec<Check> {
    let mut hyp = Vec::new();
    hyp.push(match &hypotheses.param_check {
        Ok(()) => Check::flag("parameter_constraints", true, "constraints on alpha, beta, theta hold"),
        Err(msg) => Check::flag("parameter_constraints", false, msg.clone()),
    });
    match &hypotheses.condition {
        Some(report) => {
            hyp.push(Check::flag(
                "condition_sampled",
                report.holds,
                format!(
                    "worst margin {} at u = {} over {} samples in (0, {}]",
                    report.worst_margin, report.worst_u, report.samples, report.u_max
                ),
            ));
            hyp.push(Check::flag(
                "condition_asymptotic",
                report.holds_asymptotically,
                format!(
                    "dominant power {} with coefficient {}",
                    report.dominant_power, report.dominant_coefficient
                ),
            ));
        }
        None => hyp.push(Check::flag("condition_sampled", false, "condition not evaluated")),
    }
    let j0 = hypotheses.j0;
    let j0_check = match mode {
        ConditionMode::BlowUp => Check::new("j0_positive", j0, 0.0, format!("J0 = {j0}"))
            .require_strict(j0 > 0.0),
        ConditionMode::Global if hypotheses.params.alpha == 0.0 => Check::flag(
            "j0_positive",
            true,
            format!("J0 = {j0}; alpha = 0 removes the J0 term from the mass bound"),
        ),
        ConditionMode::Global => Check::new("j0_positive", j0, 0.0, format!("J0 = {j0}"))
            .require_strict(j0 > 0.0),
    };
    hyp.push(j0_check);
    hyp
}

fn finite_or_zero(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        0.0
    }
}

impl Check {
    fn require_strict(mut self, ok: bool) -> Self {
        self.passed = ok;
        self
    }
}

/// Field dump: header `x1,..,y1,..,value`, one node per row in flat order.
pub fn field_csv(grid: &Grid, field: &Field) -> String {
    let mut out = String::new();
    let names: Vec<String> = (0..grid.m())
        .map(|d| format!("x{}", d + 1))
        .chain((0..grid.k()).map(|d| format!("y{}", d + 1)))
        .chain(std::iter::once("value".to_string()))
        .collect();
    out.push_str(&names.join(","));
    out.push('\n');
    for (i, v) in field.values().iter().enumerate() {
        for x in grid.point(i) {
            out.push_str(&fmt17(x));
            out.push(',');
        }
        out.push_str(&fmt17(*v));
        out.push('\n');
    }
    out
}

pub fn write_field_csv(grid: &Grid, field: &Field, path: &Path) -> io::Result<()> {
    std::fs::write(path, field_csv(grid, field))
}

/// Reads a field dump back; coordinates must match the grid.
pub fn read_field_csv(grid: &Grid, path: &Path) -> Result<Field, DiagnosticsError> {
    let text = std::fs::read_to_string(path)?;
    parse_field_csv(grid, &text)
}

pub fn parse_field_csv(grid: &Grid, text: &str) -> Result<Field, DiagnosticsError> {
    let bad = |msg: String| DiagnosticsError::FieldFile(msg);
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
    let columns = grid.dimension() + 1;
    if header.split(',').count() != columns {
        return Err(bad(format!("header must have {columns} columns")));
    }
    let mut values = Vec::with_capacity(grid.len());
    for (i, line) in lines.enumerate() {
        if i >= grid.len() {
            return Err(bad(format!("more than {} data rows", grid.len())));
        }
        let cells: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| bad(format!("row {}: {e}", i + 1)))?;
        if cells.len() != columns {
            return Err(bad(format!("row {}: expected {columns} columns", i + 1)));
        }
        for (d, x) in grid.point(i).iter().enumerate() {
            let tol = 1e-9 * grid.spacing(d);
            if (cells[d] - x).abs() > tol {
                return Err(bad(format!(
                    "row {}: coordinate {} does not match grid node {x}",
                    i + 1,
                    cells[d]
                )));
            }
        }
        values.push(cells[columns - 1]);
    }
    if values.len() != grid.len() {
        return Err(bad(format!("expected {} data rows, got {}", grid.len(), values.len())));
    }
    Ok(grid.field(values)?)
}
