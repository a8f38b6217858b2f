//! Computational domain: axis-aligned boxes in `R^{m+k}`, the tensor grid of
//! interior nodes, and the quadrature used for every domain integral.
//!
//! Axes are ordered x-axes first (`m` of them), then y-axes (`k` of them).
//! Only interior nodes are stored; Dirichlet values on the boundary are zero.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported `m + k`.
pub const MAX_DIMENSION: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("x-interval ({a}, {b}) contains 0: removing the plane x = 0 splits the domain in two")]
    DomainSplit { a: f64, b: f64 },
    #[error("axis {axis}: extent ({a}, {b}) is not a finite interval with a < b")]
    BadExtent { axis: usize, a: f64, b: f64 },
    #[error("dimension (m = {m}, k = {k}) unsupported: need m >= 1, k >= 1, m + k <= {MAX_DIMENSION}")]
    BadDimension { m: usize, k: usize },
    #[error("gamma must be finite and >= 0, got {0}")]
    BadGamma(f64),
    #[error("axis {axis}: interior node count must be positive")]
    BadNodeCount { axis: usize },
    #[error("expected {expected} per-axis entries for {what}, got {got}")]
    AxisCountMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("field has {got} values but the grid has {expected} interior nodes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value {value} at node {index}")]
    NonFinite { index: usize, value: f64 },
}

/// Box domain `D = Π (a_d, b_d)` together with its resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub m: usize,
    pub k: usize,
    pub gamma: f64,
    pub extents: Vec<(f64, f64)>,
    pub nodes: Vec<usize>,
}

impl DomainSpec {
    pub fn dimension(&self) -> usize {
        self.m + self.k
    }

    /// Checks the dimension cap, the extents, `gamma >= 0`, and that
    /// `D \ {x = 0}` stays connected.
    pub fn validate(&self) -> Result<(), DomainError> {
        validate_domain(self)
    }

    /// Homogeneous dimension `Q = m + (1 + gamma) k`. Metadata only.
    pub fn homogeneous_dimension(&self) -> f64 {
        homogeneous_dimension(self)
    }
}

pub fn validate_domain(spec: &DomainSpec) -> Result<(), DomainError> {
    let (m, k) = (spec.m, spec.k);
    if m < 1 || k < 1 || m + k > MAX_DIMENSION {
        return Err(DomainError::BadDimension { m, k });
    }
    if !spec.gamma.is_finite() || spec.gamma < 0.0 {
        return Err(DomainError::BadGamma(spec.gamma));
    }
    let dim = m + k;
    if spec.extents.len() != dim {
        return Err(DomainError::AxisCountMismatch {
            what: "extents",
            expected: dim,
            got: spec.extents.len(),
        });
    }
    if spec.nodes.len() != dim {
        return Err(DomainError::AxisCountMismatch {
            what: "nodes",
            expected: dim,
            got: spec.nodes.len(),
        });
    }
    for (axis, &(a, b)) in spec.extents.iter().enumerate() {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(DomainError::BadExtent { axis, a, b });
        }
    }
    if let Some(axis) = spec.nodes.iter().position(|&n| n == 0) {
        return Err(DomainError::BadNodeCount { axis });
    }
    if m == 1 {
        let (a, b) = spec.extents[0];
        if a < 0.0 && 0.0 < b {
            return Err(DomainError::DomainSplit { a, b });
        }
    }
    Ok(())
}

pub fn homogeneous_dimension(spec: &DomainSpec) -> f64 {
    spec.m as f64 + (1.0 + spec.gamma) * spec.k as f64
}

/// Uniform tensor grid of interior nodes, flattened row-major (last axis
/// fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    spec: DomainSpec,
    spacings: Vec<f64>,
    coords: Vec<Vec<f64>>,
    cell_volume: f64,
    strides: Vec<usize>,
    len: usize,
}

impl Grid {
    pub fn new(spec: DomainSpec) -> Result<Self, DomainError> {
        validate_domain(&spec)?;
        let spacings: Vec<f64> = spec
            .extents
            .iter()
            .zip(&spec.nodes)
            .map(|(&(a, b), &n)| (b - a) / (n + 1) as f64)
            .collect();
        let coords = spec
            .extents
            .iter()
            .zip(&spec.nodes)
            .zip(&spacings)
            .map(|((&(a, _), &n), &h)| (0..n).map(|i| a + (i + 1) as f64 * h).collect())
            .collect();
        let cell_volume = spacings.iter().product();
        let mut strides = vec![1; spec.nodes.len()];
        for d in (0..spec.nodes.len().saturating_sub(1)).rev() {
            strides[d] = strides[d + 1] * spec.nodes[d + 1];
        }
        let len = spec.nodes.iter().product();
        Ok(Self {
            spec,
            spacings,
            coords,
            cell_volume,
            strides,
            len,
        })
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn m(&self) -> usize {
        self.spec.m
    }

    pub fn k(&self) -> usize {
        self.spec.k
    }

    pub fn gamma(&self) -> f64 {
        self.spec.gamma
    }

    pub fn dimension(&self) -> usize {
        self.spec.dimension()
    }

    /// Number of interior nodes.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn spacings(&self) -> &[f64] {
        &self.spacings
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.spacings[axis]
    }

    pub fn coords(&self, axis: usize) -> &[f64] {
        &self.coords[axis]
    }

    pub fn nodes(&self, axis: usize) -> usize {
        self.spec.nodes[axis]
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    /// Volume of `D` as seen by the quadrature (`len * cell_volume`).
    pub fn quadrature_volume(&self) -> f64 {
        self.len as f64 * self.cell_volume
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        debug_assert_eq!(multi.len(), self.dimension());
        multi
            .iter()
            .zip(&self.strides)
            .map(|(&i, &s)| i * s)
            .sum()
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        debug_assert!(flat < self.len);
        self.strides
            .iter()
            .map(|&s| {
                let i = flat / s;
                flat %= s;
                i
            })
            .collect()
    }

    /// Coordinates of a node, x-axes first.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(d, &i)| self.coords[d][i])
            .collect()
    }

    /// Euclidean norm of the x-part of a node.
    pub fn x_norm(&self, flat: usize) -> f64 {
        self.x_norm_sq(flat).sqrt()
    }

    pub(crate) fn x_norm_sq(&self, flat: usize) -> f64 {
        let mut rem = flat;
        let mut acc = 0.0;
        for d in 0..self.spec.m {
            let i = rem / self.strides[d];
            rem %= self.strides[d];
            let x = self.coords[d][i];
            acc += x * x;
        }
        acc
    }

    /// Samples `g` at every interior node.
    pub fn sample<F>(&self, mut g: F) -> Field
    where
        F: FnMut(&[f64]) -> f64,
    {
        let values = (0..self.len).map(|i| g(&self.point(i))).collect();
        Field { values }
    }

    /// Wraps node values as a field, checking length and finiteness.
    pub fn field(&self, values: Vec<f64>) -> Result<Field, DomainError> {
        if values.len() != self.len {
            return Err(DomainError::LengthMismatch {
                expected: self.len,
                got: values.len(),
            });
        }
        Field::new(values)
    }

    pub fn zeros(&self) -> Field {
        Field {
            values: vec![0.0; self.len],
        }
    }

    /// `cell_volume * Σ values`.
    pub fn integrate(&self, field: &Field) -> Result<f64, DomainError> {
        if field.len() != self.len {
            return Err(DomainError::LengthMismatch {
                expected: self.len,
                got: field.len(),
            });
        }
        integrate_values(self.cell_volume, &field.values)
    }

    /// Discrete L² inner product `cell_volume * Σ u_i v_i`.
    pub fn inner(&self, u: &Field, v: &Field) -> f64 {
        self.cell_volume * dot(&u.values, &v.values)
    }
}

pub fn build_grid(spec: DomainSpec) -> Result<Grid, DomainError> {
    Grid::new(spec)
}

pub(crate) fn integrate_values(cell_volume: f64, values: &[f64]) -> Result<f64, DomainError> {
    let mut sum = 0.0;
    for (index, &value) in values.iter().enumerate() {
        if !value.is_finite() {
            return Err(DomainError::NonFinite { index, value });
        }
        sum += value;
    }
    Ok(cell_volume * sum)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Real values on the interior nodes. Always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    values: Vec<f64>,
}

impl Field {
    pub fn new(values: Vec<f64>) -> Result<Self, DomainError> {
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(DomainError::NonFinite { index, value });
        }
        Ok(Self { values })
    }

    /// Skips the finiteness scan; callers guarantee it.
    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn map<F: FnMut(f64) -> f64>(&self, g: F) -> Result<Field, DomainError> {
        Field::new(self.values.iter().copied().map(g).collect())
    }

    pub fn scaled(&self, c: f64) -> Result<Field, DomainError> {
        self.map(|v| c * v)
    }

    /// `a * self + b * other`.
    pub fn axpby(&self, a: f64, other: &Field, b: f64) -> Result<Field, DomainError> {
        if other.len() != self.len() {
            return Err(DomainError::LengthMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Field::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(u, v)| a * u + b * v)
                .collect(),
        )
    }
}
