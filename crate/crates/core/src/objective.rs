//! Weights, regularizer and objective of the convexified likelihood program.
//!
//! Two equivalent forms are used. The likelihood form maximizes
//! `c_A Σ_{a_ij=1} y_ij − c_Ac Σ_{a_ij=0} y_ij − ρ√n ‖Y‖_*` over the box
//! `0 ≤ Y ≤ 1`; the decomposition form minimizes `λ‖C∘S‖₁ + ‖Y‖_*` subject
//! to `Y + S = A` with `λ = 1/(ρ√n)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphmodel::Adjacency;
use crate::linalg::{self, Matrix};

/// Default regularization scale in the likelihood form.
pub const DEFAULT_RHO: f64 = 48.0;

/// Absolute slack allowed on the box constraint when evaluating objectives.
pub const BOX_TOLERANCE: f64 = 1e-6;

/// Edge and non-edge weights derived from the resolution threshold `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub t: f64,
    /// Weight on observed edges, `sqrt((1 − t)/t)`.
    pub c_a: f64,
    /// Weight on missing edges, `sqrt(t/(1 − t))`.
    pub c_ac: f64,
    pub rho: f64,
    pub n: usize,
}

impl Weights {
    /// Nuclear-norm coefficient `ρ√n` of the likelihood form.
    pub fn nuclear_coefficient(&self) -> f64 {
        self.rho * (self.n as f64).sqrt()
    }

    /// `λ = 1/(ρ√n)` of the decomposition form.
    pub fn lambda(&self) -> f64 {
        1.0 / self.nuclear_coefficient()
    }
}

pub fn make_weights(t: f64, n: usize, rho: f64) -> Result<Weights> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::params(format!("threshold t = {t} must lie in (0, 1)")));
    }
    if n == 0 {
        return Err(Error::params("graph must have at least one node"));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::params(format!("regularization scale rho = {rho} must be positive")));
    }
    Ok(Weights { t, c_a: ((1.0 - t) / t).sqrt(), c_ac: (t / (1.0 - t)).sqrt(), rho, n })
}

/// `C` with `c_ij = c_A` on edges (diagonal included) and `c_Ac` elsewhere.
pub fn weight_matrix(a: &Adjacency, w: &Weights) -> Matrix {
    Matrix::from_fn(a.n(), a.n(), |i, j| if a.get(i, j) { w.c_a } else { w.c_ac })
}

fn check_box(y: &Matrix) -> Result<()> {
    for j in 0..y.ncols() {
        for i in 0..y.nrows() {
            let v = y[(i, j)];
            if !(v >= -BOX_TOLERANCE && v <= 1.0 + BOX_TOLERANCE) {
                return Err(Error::Infeasible { row: i, col: j, value: v });
            }
        }
    }
    Ok(())
}

fn check_dims(a: &Adjacency, y: &Matrix) -> Result<()> {
    if y.nrows() != a.n() || y.ncols() != a.n() {
        return Err(Error::DimensionMismatch { expected: a.n(), actual: y.nrows().max(y.ncols()) });
    }
    Ok(())
}

/// Linear part `c_A Σ_{a=1} y − c_Ac Σ_{a=0} y` of the likelihood form.
fn likelihood_term(a: &Adjacency, y: &Matrix, w: &Weights) -> f64 {
    let n = a.n();
    let (mut on_edges, mut off_edges) = (0.0, 0.0);
    for j in 0..n {
        for i in 0..n {
            if a.get(i, j) {
                on_edges += y[(i, j)];
            } else {
                off_edges += y[(i, j)];
            }
        }
    }
    w.c_a * on_edges - w.c_ac * off_edges
}

/// Likelihood-form objective (to be maximized). The nuclear norm comes from
/// a full singular value decomposition.
pub fn objective_value(a: &Adjacency, y: &Matrix, w: &Weights) -> Result<f64> {
    check_dims(a, y)?;
    check_box(y)?;
    Ok(likelihood_term(a, y, w) - w.nuclear_coefficient() * linalg::nuclear_norm(y)?)
}

/// `λ‖C∘S‖₁ + ‖Y‖_*` for an arbitrary weight matrix.
pub fn decomposition_objective(y: &Matrix, s: &Matrix, c: &Matrix, lambda: f64) -> Result<f64> {
    let mut l1 = 0.0;
    for j in 0..s.ncols() {
        for i in 0..s.nrows() {
            l1 += c[(i, j)] * s[(i, j)].abs();
        }
    }
    Ok(lambda * l1 + linalg::nuclear_norm(y)?)
}

/// Decomposition-form objective (to be minimized) at the feasible pair
/// `(Y, A − Y)`.
pub fn penalized_objective(a: &Adjacency, y: &Matrix, w: &Weights) -> Result<f64> {
    check_dims(a, y)?;
    check_box(y)?;
    let am = a.to_matrix();
    let s = linalg::zip_map(&am, y, |x, z| x - z);
    decomposition_objective(y, &s, &weight_matrix(a, w), w.lambda())
}
