//! Discrete Dirichlet Baouendi-Grushin operator `Δ_x + |x|^{2γ} Δ_y`.
//!
//! Central second differences along every axis. Along a y-axis the stencil is
//! scaled by `|ξ|^{2γ}` where `ξ` is the x-part of the node; `ξ` is constant
//! along each y-line, so entries `(i, j)` and `(j, i)` come out of the same
//! arithmetic and the matrix is exactly symmetric.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::domain::{dot, Field, Grid};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error("dimension mismatch: operator has {expected} rows, field has {got} values")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Square sparse matrix in compressed-row form. Column indices are sorted
/// within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    cell_volume: f64,
    symmetric: bool,
}

impl SparseOperator {
    /// Builds from row-ordered triplets. Rows must be nondecreasing.
    pub fn from_rows(dim: usize, rows: Vec<Vec<(usize, f64)>>, cell_volume: f64) -> Self {
        assert_eq!(rows.len(), dim);
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(j, _)| j);
            for (j, v) in row {
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        let mut op = Self {
            dim,
            row_ptr,
            col_idx,
            values,
            cell_volume,
            symmetric: false,
        };
        op.symmetric = op.symmetry_defect() == 0.0;
        op
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// Entry `(i, j)`, zero when not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[span.clone()].binary_search(&j) {
            Ok(pos) => self.values[span.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// `max_i |A_ii|`.
    pub fn max_abs_diagonal(&self) -> f64 {
        self.diagonal().iter().fold(0.0, |acc, d| acc.max(d.abs()))
    }

    /// `max |A_ij - A_ji|` over stored entries.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// `out = A v` on raw slices; fixed left-to-right summation per row.
    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        for (i, slot) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * v[self.col_idx[k]];
            }
            *slot = acc;
        }
    }

    fn check_dim(&self, len: usize) -> Result<(), OperatorError> {
        if len != self.dim {
            return Err(OperatorError::DimensionMismatch {
                expected: self.dim,
                got: len,
            });
        }
        Ok(())
    }

    pub fn apply(&self, v: &Field) -> Result<Field, OperatorError> {
        self.check_dim(v.len())?;
        let mut out = vec![0.0; self.dim];
        self.apply_into(v.values(), &mut out);
        Ok(Field::from_vec_unchecked(out))
    }

    /// Dirichlet energy `∫ |∇_γ v|² := -cell_volume * vᵀ A v`.
    pub fn grad_energy(&self, v: &Field) -> Result<f64, OperatorError> {
        self.check_dim(v.len())?;
        Ok(self.grad_energy_values(v.values()))
    }

    pub(crate) fn grad_energy_values(&self, v: &[f64]) -> f64 {
        let mut av = vec![0.0; self.dim];
        self.apply_into(v, &mut av);
        -self.cell_volume * dot(v, &av)
    }

    /// Coordinate text dump: `row col value` per line, 17 significant digits.
    pub fn to_coordinate_text(&self) -> String {
        let mut out = String::with_capacity(self.nnz() * 40);
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                let _ = writeln!(out, "{i} {j} {v:.16e}");
            }
        }
        out
    }

    pub fn write_coordinate(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, self.to_coordinate_text())
    }
}

/// Assembles the Dirichlet Baouendi-Grushin matrix on `grid`.
pub fn assemble(grid: &Grid) -> SparseOperator {
    let dim = grid.dimension();
    let m = grid.m();
    let gamma = grid.gamma();
    let inv_h2: Vec<f64> = grid.spacings().iter().map(|h| 1.0 / (h * h)).collect();

    let mut rows = Vec::with_capacity(grid.len());
    let mut multi = vec![0usize; dim];
    for flat in 0..grid.len() {
        // multi-index advanced incrementally in row-major order
        if flat > 0 {
            for d in (0..dim).rev() {
                multi[d] += 1;
                if multi[d] < grid.nodes(d) {
                    break;
                }
                multi[d] = 0;
            }
        }
        let y_weight = grid.x_norm_sq(flat).powf(gamma);
        let mut row = Vec::with_capacity(2 * dim + 1);
        let mut diag = 0.0;
        for d in 0..dim {
            let c = if d < m { inv_h2[d] } else { y_weight * inv_h2[d] };
            diag -= 2.0 * c;
            if c == 0.0 {
                continue;
            }
            let stride = grid.stride(d);
            if multi[d] > 0 {
                row.push((flat - stride, c));
            }
            if multi[d] + 1 < grid.nodes(d) {
                row.push((flat + stride, c));
            }
        }
        row.push((flat, diag));
        rows.push(row);
    }
    SparseOperator::from_rows(grid.len(), rows, grid.cell_volume())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainSpec;
    use std::f64::consts::PI;

    fn square(gamma: f64, n: usize) -> Grid {
        Grid::new(DomainSpec {
            m: 1,
            k: 1,
            gamma,
            extents: vec![(0.0, 1.0), (0.0, 1.0)],
            nodes: vec![n, n],
        })
        .unwrap()
    }

    #[test]
    fn gamma_zero_is_five_point_laplacian() {
        let grid = square(0.0, 5);
        let a = assemble(&grid);
        let h = grid.spacing(0);
        let inv = 1.0 / (h * h);
        for i in 0..grid.len() {
            assert_eq!(a.get(i, i), -4.0 * inv);
            let p = grid.multi_index(i);
            let mut neighbours = 0;
            for (j, v) in a.row(i) {
                if j != i {
                    assert_eq!(v, inv);
                    neighbours += 1;
                }
            }
            let expected = [p[0] > 0, p[0] < 4, p[1] > 0, p[1] < 4]
                .iter()
                .filter(|&&b| b)
                .count();
            assert_eq!(neighbours, expected);
        }
    }

    #[test]
    fn y_coupling_scales_with_x_squared() {
        // x = 0.5 is the middle node of n = 3 on (0, 1), h_y = 0.25
        let grid = square(1.0, 3);
        let a = assemble(&grid);
        let centre = grid.flat_index(&[1, 1]);
        let up = grid.flat_index(&[1, 2]);
        assert_eq!(a.get(centre, up), 4.0);
        assert_eq!(a.get(up, centre), 4.0);
    }

    #[test]
    fn exactly_symmetric() {
        for gamma in [0.0, 0.5, 1.0, 2.7] {
            let a = assemble(&square(gamma, 9));
            assert_eq!(a.symmetry_defect(), 0.0);
            assert!(a.is_symmetric());
        }
    }

    #[test]
    fn sign_structure() {
        let a = assemble(&square(1.5, 6));
        for i in 0..a.dim() {
            for (j, v) in a.row(i) {
                if i == j {
                    assert!(v < 0.0);
                } else {
                    assert!(v >= 0.0);
                }
            }
        }
    }

    #[test]
    fn apply_zero_and_dimension_mismatch() {
        let grid = square(1.0, 4);
        let a = assemble(&grid);
        assert!(a.apply(&grid.zeros()).unwrap().is_zero());
        let short = Field::new(vec![1.0; 3]).unwrap();
        assert!(matches!(
            a.apply(&short),
            Err(OperatorError::DimensionMismatch { .. })
        ));
        assert!(a.grad_energy(&short).is_err());
        assert_eq!(a.grad_energy(&grid.zeros()).unwrap(), 0.0);
    }

    #[test]
    fn discrete_eigenmode_of_laplacian() {
        let grid = square(0.0, 3);
        let a = assemble(&grid);
        let h = grid.spacing(0);
        let lambda = 8.0 / (h * h) * (PI * h / 2.0).sin().powi(2);
        assert!((lambda - 18.745).abs() < 1e-3);
        let v = grid.sample(|p| (PI * p[0]).sin() * (PI * p[1]).sin());
        let av = a.apply(&v).unwrap();
        for (x, y) in av.values().iter().zip(v.values()) {
            assert!((x + lambda * y).abs() < 1e-12 * lambda);
        }
    }

    #[test]
    fn degenerate_nodes_get_no_y_coupling() {
        // m = 2 with x-extents symmetric about 0: the centre x-node sits at x = 0
        let grid = Grid::new(DomainSpec {
            m: 2,
            k: 1,
            gamma: 1.0,
            extents: vec![(-1.0, 1.0), (-1.0, 1.0), (0.0, 1.0)],
            nodes: vec![3, 3, 3],
        })
        .unwrap();
        let a = assemble(&grid);
        let i = grid.flat_index(&[1, 1, 1]);
        let j = grid.flat_index(&[1, 1, 2]);
        assert_eq!(a.get(i, j), 0.0);
        assert!(a.get(i, i) < 0.0);
    }

    #[test]
    fn coordinate_dump_format() {
        let grid = square(0.0, 1);
        let a = assemble(&grid);
        assert_eq!(a.to_coordinate_text(), "0 0 -1.6000000000000000e1\n");
    }
}
