//! Oracles shared by the integration suites. Nothing here calls into the
//! quantities it is used to check.

#![allow(dead_code)]

use grushin_pme::domain::{DomainSpec, Field, Grid};

pub fn square(gamma: f64, n: usize) -> Grid {
    Grid::new(DomainSpec {
        m: 1,
        k: 1,
        gamma,
        extents: vec![(0.0, 1.0), (0.0, 1.0)],
        nodes: vec![n, n],
    })
    .unwrap()
}

/// Adaptive Simpson on `[a, b]`.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// `(2ℓ/(ℓ+1)) ∫₀ᵘ s^{ℓ-1} Σ c s^p ds` by quadrature. The substitution
/// `s = u t²` removes the endpoint singularity of `s^{ℓ-1}`.
pub fn big_f_quadrature(terms: &[(f64, f64)], ell: f64, u: f64) -> f64 {
    let integrand = |t: f64| {
        let s = u * t * t;
        let f: f64 = terms.iter().map(|&(c, p)| c * s.powf(p)).sum();
        s.powf(ell - 1.0) * f * 2.0 * u * t
    };
    let scale: f64 = terms.iter().map(|&(c, p)| c * u.powf(p + ell) / (p + ell)).sum();
    2.0 * ell / (ell + 1.0) * simpson(&integrand, 0.0, 1.0, 1e-14 * scale.max(1e-300))
}

/// `cell_volume Σ_edges w (Δv/h)²` over every grid edge, including the edges
/// to the zero boundary. `w = 1` on x-edges and `|ξ|^{2γ}` on y-edges.
pub fn edge_energy(grid: &Grid, v: &Field) -> f64 {
    let dim = grid.dimension();
    let vals = v.values();
    let mut total = 0.0;
    for d in 0..dim {
        let h = grid.spacing(d);
        for i in 0..grid.len() {
            let idx = grid.multi_index(i);
            let p = grid.point(i);
            let weight = if d < grid.m() {
                1.0
            } else {
                let xi2: f64 = p[..grid.m()].iter().map(|x| x * x).sum();
                xi2.powf(grid.gamma())
            };
            // edge from this node to its upper neighbour
            let up = if idx[d] + 1 < grid.nodes(d) {
                let mut j = idx.clone();
                j[d] += 1;
                vals[grid.flat_index(&j)]
            } else {
                0.0
            };
            let diff = (up - vals[i]) / h;
            total += weight * diff * diff;
            // edge from the lower boundary to the first node of the line
            if idx[d] == 0 {
                let diff = vals[i] / h;
                total += weight * diff * diff;
            }
        }
    }
    grid.cell_volume() * total
}

/// Node-wise `Π sin(π (x_d - a_d)/(b_d - a_d))`: the exact discrete first
/// Dirichlet eigenvector of the Laplacian on a box.
pub fn sine_mode(grid: &Grid) -> Field {
    let extents = grid.spec().extents.clone();
    grid.sample(|p| {
        p.iter()
            .zip(&extents)
            .map(|(x, (a, b))| (std::f64::consts::PI * (x - a) / (b - a)).sin())
            .product()
    })
}

/// `Σ_d (4/h_d²) sin²(π h_d/(2 L_d))`.
pub fn laplacian_lambda1(grid: &Grid) -> f64 {
    grid.spec()
        .extents
        .iter()
        .enumerate()
        .map(|(d, (a, b))| {
            let h = grid.spacing(d);
            (4.0 / (h * h)) * (std::f64::consts::PI * h / (2.0 * (b - a))).sin().powi(2)
        })
        .sum()
}
