//! Run configuration: strict JSON documents, named presets, cross-field
//! validation.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::diagnostics::{RunMode, Tolerances};
use crate::domain::{DomainError, DomainSpec};
use crate::solver::{SolverConfig, DEFAULT_CFL, DEFAULT_DT_MIN, DEFAULT_U_BLOW};
use crate::source::{SourceError, SourceModel, DEFAULT_SAMPLES, DEFAULT_U_MAX};
use crate::spectral::DEFAULT_TOL;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("invalid value at `{path}`: {message}")]
    Validation { path: String, message: String },
}

impl ConfigError {
    pub fn path(&self) -> &str {
        match self {
            ConfigError::Schema { path, .. } | ConfigError::Validation { path, .. } => path,
        }
    }

    fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Validation {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Auto {
    #[serde(rename = "auto")]
    Auto,
}

/// A number or the keyword `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NumberOrAuto {
    Value(f64),
    Auto(Auto),
}

impl NumberOrAuto {
    pub fn value(self) -> Option<f64> {
        match self {
            NumberOrAuto::Value(v) => Some(v),
            NumberOrAuto::Auto(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    #[serde(default)]
    pub alpha: f64,
    /// `"auto"` picks the endpoint `λ₁(α-ℓ-1)/(ℓ+1)` of the admissible range.
    #[serde(default = "auto")]
    pub beta: NumberOrAuto,
    #[serde(default)]
    pub theta: f64,
}

impl Default for ParamsSection {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            beta: auto(),
            theta: 0.0,
        }
    }
}

fn auto() -> NumberOrAuto {
    NumberOrAuto::Auto(Auto::Auto)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSection {
    /// `c φ₁`; with `"auto"` the scale is `(1 + headroom)` times the largest
    /// root of `c ↦ J(c φ₁)`.
    Eigenfield {
        #[serde(default = "auto")]
        scale: NumberOrAuto,
        #[serde(default = "default_headroom")]
        headroom: f64,
    },
    Bump {
        scale: f64,
    },
    File {
        path: PathBuf,
    },
}

fn default_headroom() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub t_end: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_u_blow")]
    pub u_blow: f64,
    #[serde(default = "default_dt_min")]
    pub dt_min: f64,
    #[serde(default = "one")]
    pub sample_every: usize,
    pub initial: InitialSection,
}

fn default_cfl() -> f64 {
    DEFAULT_CFL
}
fn default_u_blow() -> f64 {
    DEFAULT_U_BLOW
}
fn default_dt_min() -> f64 {
    DEFAULT_DT_MIN
}
fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "yes")]
    pub csv: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            csv: true,
        }
    }
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}
fn yes() -> bool {
    true
}

/// Overrides for [`Tolerances`]; absent keys keep the defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesSection {
    pub j_rel: Option<f64>,
    pub concavity_rel: Option<f64>,
    pub scale_floor: Option<f64>,
    pub blowup_margin: Option<f64>,
    pub mass_rel: Option<f64>,
    pub final_mass_rel: Option<f64>,
    pub warmup: Option<usize>,
}

impl TolerancesSection {
    pub fn resolve(&self) -> Tolerances {
        let d = Tolerances::default();
        Tolerances {
            j_rel: self.j_rel.unwrap_or(d.j_rel),
            concavity_rel: self.concavity_rel.unwrap_or(d.concavity_rel),
            scale_floor: self.scale_floor.unwrap_or(d.scale_floor),
            blowup_margin: self.blowup_margin.unwrap_or(d.blowup_margin),
            mass_rel: self.mass_rel.unwrap_or(d.mass_rel),
            final_mass_rel: self.final_mass_rel.unwrap_or(d.final_mass_rel),
            warmup: self.warmup.unwrap_or(d.warmup),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksSection {
    #[serde(default = "default_u_max")]
    pub u_max: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

impl Default for ChecksSection {
    fn default() -> Self {
        Self {
            u_max: DEFAULT_U_MAX,
            samples: DEFAULT_SAMPLES,
        }
    }
}

fn default_u_max() -> f64 {
    DEFAULT_U_MAX
}
fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenSection {
    #[serde(default = "default_eigen_tol")]
    pub tol: f64,
    /// Random probes for the Poincaré check.
    #[serde(default = "default_trials")]
    pub trials: usize,
}

impl Default for EigenSection {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            trials: default_trials(),
        }
    }
}

fn default_eigen_tol() -> f64 {
    DEFAULT_TOL
}
fn default_trials() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub gamma: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSection {
    /// Interior node counts per axis, coarse to fine.
    pub levels: Vec<usize>,
}

/// A fully parsed and validated run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub mode: RunMode,
    pub domain: DomainSpec,
    pub ell: f64,
    pub source: SourceModel,
    #[serde(default)]
    pub params: ParamsSection,
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: TolerancesSection,
    #[serde(default)]
    pub checks: ChecksSection,
    #[serde(default)]
    pub eigen: EigenSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceSection>,
}

impl RunConfig {
    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            ell: self.ell,
            source: self.source.clone(),
            t_end: self.solver.t_end,
            cfl: self.solver.cfl,
            u_blow: self.solver.u_blow,
            dt_min: self.solver.dt_min,
            sample_every: self.solver.sample_every,
        }
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tolerances.resolve()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.domain.validate().map_err(domain_error)?;
        if !(self.ell.is_finite() && self.ell >= 1.0) {
            return Err(ConfigError::validation("ell", format!("ell must be >= 1, got {}", self.ell)));
        }
        self.source.validate().map_err(source_error)?;

        let s = &self.solver;
        if !(s.t_end.is_finite() && s.t_end > 0.0) {
            return Err(ConfigError::validation("solver.t_end", "must be finite and > 0"));
        }
        if !(s.cfl > 0.0 && s.cfl <= 1.0) {
            return Err(ConfigError::validation("solver.cfl", "must lie in (0, 1]"));
        }
        if !(s.u_blow > 0.0) {
            return Err(ConfigError::validation("solver.u_blow", "must be > 0"));
        }
        if !(s.dt_min.is_finite() && s.dt_min >= 0.0) {
            return Err(ConfigError::validation("solver.dt_min", "must be finite and >= 0"));
        }
        if s.sample_every == 0 {
            return Err(ConfigError::validation("solver.sample_every", "must be >= 1"));
        }
        match &s.initial {
            InitialSection::Eigenfield { scale, headroom } => {
                if let Some(c) = scale.value() {
                    if !(c.is_finite() && c > 0.0) {
                        return Err(ConfigError::validation("solver.initial.scale", "must be finite and > 0"));
                    }
                }
                if !(headroom.is_finite() && *headroom >= 0.0) {
                    return Err(ConfigError::validation("solver.initial.headroom", "must be finite and >= 0"));
                }
            }
            InitialSection::Bump { scale } => {
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(ConfigError::validation("solver.initial.scale", "must be finite and > 0"));
                }
            }
            InitialSection::File { .. } => {}
        }

        let p = &self.params;
        if !(p.alpha.is_finite() && p.theta.is_finite()) {
            return Err(ConfigError::validation("params", "alpha and theta must be finite"));
        }
        if let Some(beta) = p.beta.value() {
            if !beta.is_finite() {
                return Err(ConfigError::validation("params.beta", "must be finite"));
            }
        }
        let ell = self.ell;
        match self.mode {
            RunMode::BlowUp => {
                if p.alpha <= ell + 1.0 {
                    return Err(ConfigError::validation(
                        "params.alpha",
                        format!("blow-up mode requires alpha > ell + 1 = {}, got {}", ell + 1.0, p.alpha),
                    ));
                }
                if p.theta <= 0.0 {
                    return Err(ConfigError::validation("params.theta", "blow-up mode requires theta > 0"));
                }
                if matches!(p.beta.value(), Some(b) if b <= 0.0) {
                    return Err(ConfigError::validation("params.beta", "blow-up mode requires beta > 0"));
                }
            }
            RunMode::Global => {
                if p.alpha > 0.0 {
                    return Err(ConfigError::validation("params.alpha", "global mode requires alpha <= 0"));
                }
                if p.theta < 0.0 {
                    return Err(ConfigError::validation("params.theta", "global mode requires theta >= 0"));
                }
            }
            RunMode::SimulateOnly => {}
        }
        if self.mode != RunMode::SimulateOnly && self.source.is_zero() {
            return Err(ConfigError::validation(
                "source.terms",
                "blow-up and global modes need at least one source term",
            ));
        }

        let c = &self.checks;
        if !(c.u_max.is_finite() && c.u_max > 0.0) {
            return Err(ConfigError::validation("checks.u_max", "must be finite and > 0"));
        }
        if c.samples < 2 {
            return Err(ConfigError::validation("checks.samples", "must be >= 2"));
        }
        if !(self.eigen.tol > 0.0 && self.eigen.tol < 1.0) {
            return Err(ConfigError::validation("eigen.tol", "must lie in (0, 1)"));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.gamma.is_empty() {
                return Err(ConfigError::validation("sweep.gamma", "must not be empty"));
            }
            if let Some(i) = sweep.gamma.iter().position(|g| !(g.is_finite() && *g >= 0.0)) {
                return Err(ConfigError::validation(format!("sweep.gamma[{i}]"), "must be finite and >= 0"));
            }
        }
        if let Some(conv) = &self.convergence {
            if conv.levels.len() < 2 {
                return Err(ConfigError::validation("convergence.levels", "needs at least two levels"));
            }
            if let Some(i) = conv.levels.windows(2).position(|w| w[1] <= w[0]) {
                return Err(ConfigError::validation(
                    format!("convergence.levels[{}]", i + 1),
                    "levels must be strictly increasing",
                ));
            }
            if conv.levels[0] == 0 {
                return Err(ConfigError::validation("convergence.levels[0]", "must be >= 1"));
            }
        }
        let t = self.tolerances();
        for (name, v) in [
            ("j_rel", t.j_rel),
            ("concavity_rel", t.concavity_rel),
            ("scale_floor", t.scale_floor),
            ("blowup_margin", t.blowup_margin),
            ("mass_rel", t.mass_rel),
            ("final_mass_rel", t.final_mass_rel),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ConfigError::validation(format!("tolerances.{name}"), "must be finite and >= 0"));
            }
        }
        Ok(())
    }
}

fn domain_error(e: DomainError) -> ConfigError {
    let path = match &e {
        DomainError::BadGamma(_) => "domain.gamma".to_string(),
        DomainError::BadDimension { .. } => "domain.m".to_string(),
        DomainError::DomainSplit { .. } => "domain.extents[0]".to_string(),
        DomainError::BadExtent { axis, .. } => format!("domain.extents[{axis}]"),
        DomainError::BadNodeCount { axis } => format!("domain.nodes[{axis}]"),
        DomainError::AxisCountMismatch { what, .. } => format!("domain.{what}"),
        _ => "domain".to_string(),
    };
    ConfigError::validation(path, e.to_string())
}

fn source_error(e: SourceError) -> ConfigError {
    let path = match &e {
        SourceError::BadCoefficient { index, .. } => format!("source.terms[{index}].c"),
        SourceError::BadPower { index, .. } => format!("source.terms[{index}].p"),
        _ => "source".to_string(),
    };
    ConfigError::validation(path, e.to_string())
}

/// Overlays `patch` onto `base`, recursing into objects. Objects carrying a
/// `kind` tag replace their counterpart whole.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() && v.get("kind").is_none() => {
                        merge(slot, v)
                    }
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, p) => *slot = p,
    }
}

/// Parses a JSON document. A `"preset"` key loads that preset first and
/// overlays the rest of the document on it.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ConfigError::Schema {
        path: String::new(),
        message: e.to_string(),
    })?;
    parse_value(value)
}

pub fn parse_value(mut value: Value) -> Result<RunConfig, ConfigError> {
    let Some(obj) = value.as_object() else {
        return Err(ConfigError::Schema {
            path: String::new(),
            message: "document must be a JSON object".into(),
        });
    };
    if let Some(name) = obj.get("preset") {
        let Some(name) = name.as_str() else {
            return Err(ConfigError::Schema {
                path: "preset".into(),
                message: "must be a string".into(),
            });
        };
        let Some(doc) = preset(name) else {
            return Err(ConfigError::validation(
                "preset",
                format!("unknown preset `{name}`; known: {}", PRESET_NAMES.join(", ")),
            ));
        };
        let mut base: Value = serde_json::from_str(doc).expect("built-in preset is valid JSON");
        merge(&mut base, value);
        value = base;
    }
    let config: RunConfig = serde_path_to_error::deserialize(value).map_err(|e| ConfigError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    config.validate()?;
    Ok(config)
}

pub const PRESET_NAMES: [&str; 5] = [
    "blowup-p3",
    "global-linear",
    "heat-decay",
    "eigen-gamma-sweep",
    "convergence-operator",
];

const BLOWUP_P3: &str = r#"{
  "preset": "blowup-p3",
  "mode": "blow-up",
  "domain": { "m": 1, "k": 1, "gamma": 1.0, "extents": [[0.0, 1.0], [0.0, 1.0]], "nodes": [31, 31] },
  "ell": 1.0,
  "source": { "terms": [{ "c": 1.0, "p": 3.0 }] },
  "params": { "alpha": 4.0, "beta": "auto", "theta": 0.01 },
  "solver": {
    "t_end": 5.0,
    "cfl": 0.5,
    "u_blow": 1e8,
    "dt_min": 1e-14,
    "sample_every": 1,
    "initial": { "kind": "eigenfield", "scale": "auto", "headroom": 0.1 }
  },
  "output": { "dir": "out/blowup-p3", "csv": true },
  "seed": 20240601
}
"#;

const GLOBAL_LINEAR: &str = r#"{
  "preset": "global-linear",
  "mode": "global",
  "domain": { "m": 1, "k": 1, "gamma": 1.0, "extents": [[0.0, 1.0], [0.0, 1.0]], "nodes": [31, 31] },
  "ell": 1.0,
  "source": { "terms": [{ "c": 1.0, "p": 1.0 }] },
  "params": { "alpha": 0.0, "beta": -1.0, "theta": 0.0 },
  "solver": {
    "t_end": 5.0,
    "cfl": 0.5,
    "u_blow": 1e8,
    "dt_min": 1e-14,
    "sample_every": 1,
    "initial": { "kind": "eigenfield", "scale": 1.0 }
  },
  "output": { "dir": "out/global-linear", "csv": true },
  "seed": 20240601
}
"#;

const HEAT_DECAY: &str = r#"{
  "preset": "heat-decay",
  "mode": "simulate-only",
  "domain": { "m": 1, "k": 1, "gamma": 0.0, "extents": [[0.0, 1.0], [0.0, 1.0]], "nodes": [15, 15] },
  "ell": 1.0,
  "source": { "terms": [] },
  "solver": {
    "t_end": 0.1,
    "cfl": 0.1,
    "sample_every": 1,
    "initial": { "kind": "eigenfield", "scale": 1.0 }
  },
  "output": { "dir": "out/heat-decay", "csv": true },
  "seed": 20240601
}
"#;

const EIGEN_GAMMA_SWEEP: &str = r#"{
  "preset": "eigen-gamma-sweep",
  "mode": "simulate-only",
  "domain": { "m": 1, "k": 1, "gamma": 1.0, "extents": [[0.0, 1.0], [0.0, 1.0]], "nodes": [31, 31] },
  "ell": 1.0,
  "source": { "terms": [] },
  "solver": { "t_end": 1.0, "initial": { "kind": "eigenfield", "scale": 1.0 } },
  "output": { "dir": "out/eigen-gamma-sweep", "csv": true },
  "seed": 20240601,
  "eigen": { "tol": 1e-10, "trials": 100 },
  "sweep": { "gamma": [0.0, 0.5, 1.0, 1.5, 2.0] }
}
"#;

const CONVERGENCE_OPERATOR: &str = r#"{
  "preset": "convergence-operator",
  "mode": "simulate-only",
  "domain": { "m": 1, "k": 1, "gamma": 0.0, "extents": [[0.0, 1.0], [0.0, 1.0]], "nodes": [15, 15] },
  "ell": 1.0,
  "source": { "terms": [] },
  "solver": { "t_end": 1.0, "initial": { "kind": "eigenfield", "scale": 1.0 } },
  "output": { "dir": "out/convergence-operator", "csv": true },
  "seed": 20240601,
  "convergence": { "levels": [7, 15, 31, 63] }
}
"#;

/// Built-in document for `name`, verbatim.
pub fn preset(name: &str) -> Option<&'static str> {
    match name {
        "blowup-p3" => Some(BLOWUP_P3),
        "global-linear" => Some(GLOBAL_LINEAR),
        "heat-decay" => Some(HEAT_DECAY),
        "eigen-gamma-sweep" => Some(EIGEN_GAMMA_SWEEP),
        "convergence-operator" => Some(CONVERGENCE_OPERATOR),
        _ => None,
    }
}

pub fn presets() -> Vec<(&'static str, &'static str)> {
    PRESET_NAMES
        .iter()
        .map(|&n| (n, preset(n).expect("listed preset exists")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exactly_five_presets_that_parse() {
        let all = presets();
        assert_eq!(all.len(), 5);
        for (name, doc) in all {
            let cfg = parse_config(doc).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(cfg.preset.as_deref(), Some(name));
        }
    }

    #[test]
    fn minimal_preset_document_fills_defaults() {
        let cfg = parse_config(r#"{"preset": "blowup-p3"}"#).unwrap();
        assert_eq!(cfg.mode, RunMode::BlowUp);
        assert_eq!(cfg.params.alpha, 4.0);
        assert_eq!(cfg.params.beta, auto());
        assert_eq!(cfg.checks.samples, DEFAULT_SAMPLES);
        assert_eq!(cfg.tolerances(), Tolerances::default());
    }

    #[test]
    fn overlay_replaces_nested_keys() {
        let cfg = parse_config(r#"{"preset": "global-linear", "solver": {"cfl": 0.25}, "seed": 7}"#).unwrap();
        assert_eq!(cfg.solver.cfl, 0.25);
        assert_eq!(cfg.solver.t_end, 5.0);
        assert_eq!(cfg.seed, 7);
    }

    #[test]
    fn negative_gamma_is_rejected_at_its_path() {
        let err = parse_config(r#"{"preset": "blowup-p3", "domain": {"gamma": -1.0}}"#).unwrap_err();
        assert!(matches!(err, ConfigError::Validation { .. }));
        assert_eq!(err.path(), "domain.gamma");
    }

    #[test]
    fn blowup_mode_needs_large_alpha() {
        let err = parse_config(r#"{"preset": "blowup-p3", "params": {"alpha": 1.0}}"#).unwrap_err();
        assert_eq!(err.path(), "params.alpha");
        assert!(err.to_string().contains("alpha > ell + 1"));
    }

    #[test]
    fn unknown_keys_fail() {
        let err = parse_config(r#"{"preset": "blowup-p3", "solver": {"cfll": 0.1}}"#).unwrap_err();
        assert!(matches!(err, ConfigError::Schema { .. }));
        assert!(err.to_string().contains("cfll"));
        let err = parse_config(r#"{"preset": "blowup-p3", "colour": 1}"#).unwrap_err();
        assert!(matches!(err, ConfigError::Schema { .. }));
        let err = parse_config(
            r#"{"preset": "blowup-p3", "solver": {"initial": {"kind": "bump", "scale": 1.0, "size": 2}}}"#,
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::Schema { .. }));
    }

    #[test]
    fn tagged_initial_replaces_whole() {
        let cfg = parse_config(
            r#"{"preset": "blowup-p3", "solver": {"initial": {"kind": "bump", "scale": 2.0}}}"#,
        )
        .unwrap();
        assert_eq!(cfg.solver.initial, InitialSection::Bump { scale: 2.0 });
    }

    #[test]
    fn type_errors_carry_their_path() {
        let err = parse_config(r#"{"preset": "blowup-p3", "domain": {"nodes": [31, "x"]}}"#).unwrap_err();
        assert!(matches!(err, ConfigError::Schema { .. }));
        assert_eq!(err.path(), "domain.nodes[1]");
    }

    #[test]
    fn unknown_preset_and_non_object() {
        assert!(parse_config(r#"{"preset": "nope"}"#).is_err());
        assert!(parse_config("[1, 2]").is_err());
        assert!(parse_config("{").is_err());
    }

    #[test]
    fn global_mode_rejects_positive_alpha() {
        let err = parse_config(r#"{"preset": "global-linear", "params": {"alpha": 0.5}}"#).unwrap_err();
        assert_eq!(err.path(), "params.alpha");
    }

    #[test]
    fn round_trip_through_serialization() {
        for (_, doc) in presets() {
            let cfg = parse_config(doc).unwrap();
            let text = serde_json::to_string(&cfg).unwrap();
            assert_eq!(parse_config(&text).unwrap(), cfg);
        }
    }
}
