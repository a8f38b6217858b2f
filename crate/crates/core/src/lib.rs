//! Degenerate porous medium equation `u_t = Δ_γ(u^ℓ) + f(u)` with
//! Baouendi-Grushin diffusion on a box: operator assembly, first Dirichlet
//! eigenvalue, structural conditions on `f`, explicit time stepping and
//! monitoring of the energy inequalities that decide blow-up versus global
//! existence.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod domain;
pub mod operator;
pub mod pipeline;
pub mod solver;
pub mod source;
pub mod spectral;
