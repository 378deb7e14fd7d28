//! Augmented Lagrange multiplier solver for
//!
//! ```text
//! min  λ‖C∘S‖₁ + ‖Y‖_*   s.t.  Y + S = A,  0 ≤ y_ij ≤ 1
//! ```
//!
//! Each sweep thresholds the singular values of `A − S + M/μ`,
//! soft-thresholds `A − Y + M/μ` entrywise by `λC/μ`, takes a multiplier
//! step on the residual `A − Y − S` and grows the penalty `μ`
//! geometrically up to a cap.
//!
//! The box enters through one of two steps (see [`BoxStep`]). The default
//! clamps `S` to `[A − 1, A]`, which keeps `A − S` in the box and makes the
//! sparse step the exact proximal map; the alternative clips `Y` right
//! after thresholding. Both return a clipped `Ŷ`.
//!
//! Every iterate stays symmetric, so singular value thresholding runs on a
//! symmetric eigendecomposition.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphmodel::{complement_graph, Adjacency};
use crate::linalg::{self, Matrix};
use crate::objective::{decomposition_objective, weight_matrix, Weights};

pub const DEFAULT_ALPHA: f64 = 1.6;
pub const DEFAULT_TOL_PRIMAL: f64 = 1e-7;
pub const DEFAULT_MAX_ITER: usize = 500;
/// Initial penalty is `MU0_SCALE / ‖A‖₂` unless set explicitly.
pub const MU0_SCALE: f64 = 1.25;
/// The penalty stops growing at `DEFAULT_MU_MAX_FACTOR · μ₀`.
pub const DEFAULT_MU_MAX_FACTOR: f64 = 10.0;
pub const DEFAULT_TOL_DUAL: f64 = 1e-6;

/// Where the unit-box constraint on `Y` is enforced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxStep {
    /// Clamp `S` to `[A − 1, A]` after soft-thresholding.
    #[default]
    Sparse,
    /// Clip `Y` to `[0, 1]` after singular value thresholding.
    LowRank,
}

/// Extra directions sampled by the truncated decomposition.
const RANK_OVERSAMPLE: usize = 10;
const POWER_ITERATIONS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub weights: Weights,
    /// Initial penalty; `None` selects `1.25/‖A‖₂`.
    pub mu0: Option<f64>,
    /// Geometric growth factor of the penalty.
    pub alpha: f64,
    /// Cap on the penalty as a multiple of `μ₀`; `f64::INFINITY` disables it.
    pub mu_max_factor: f64,
    /// Stop once `‖A − Y − S‖_F / ‖A‖_F` falls to this level ...
    pub tol_primal: f64,
    /// ... and `μ‖S − S_prev‖_F / ‖A‖_F` falls to this one.
    pub tol_dual: f64,
    pub box_step: BoxStep,
    pub max_iter: usize,
    /// Expected rank of the singular value thresholding output. When set,
    /// a randomized partial eigendecomposition replaces the full one,
    /// falling back to the full decomposition when the hint is too small.
    pub svd_rank_hint: Option<usize>,
}

impl SolverConfig {
    pub fn new(weights: Weights) -> Self {
        Self {
            weights,
            mu0: None,
            alpha: DEFAULT_ALPHA,
            mu_max_factor: DEFAULT_MU_MAX_FACTOR,
            tol_primal: DEFAULT_TOL_PRIMAL,
            tol_dual: DEFAULT_TOL_DUAL,
            box_step: BoxStep::default(),
            max_iter: DEFAULT_MAX_ITER,
            svd_rank_hint: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(mu0) = self.mu0 {
            if !(mu0 > 0.0 && mu0.is_finite()) {
                return Err(Error::params(format!("mu0 = {mu0} must be positive")));
            }
        }
        if !(self.alpha > 1.0 && self.alpha.is_finite()) {
            return Err(Error::params(format!("alpha = {} must exceed 1", self.alpha)));
        }
        if !(self.mu_max_factor >= 1.0) {
            return Err(Error::params(format!("mu_max_factor = {} must be at least 1", self.mu_max_factor)));
        }
        if !(self.tol_primal > 0.0) {
            return Err(Error::params(format!("tol_primal = {} must be positive", self.tol_primal)));
        }
        if !(self.tol_dual > 0.0) {
            return Err(Error::params(format!("tol_dual = {} must be positive", self.tol_dual)));
        }
        if self.max_iter == 0 {
            return Err(Error::params("max_iter must be at least 1"));
        }
        if self.svd_rank_hint == Some(0) {
            return Err(Error::params("svd_rank_hint must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    /// Low-rank part, inside the unit box.
    pub y_hat: Matrix,
    /// Sparse part.
    pub s_hat: Matrix,
    /// Lagrange multiplier `M`.
    pub multiplier: Matrix,
    pub iterations: usize,
    /// `‖A − Ŷ − Ŝ‖_F / ‖A‖_F` for the returned pair.
    pub primal_residual: f64,
    /// `μ‖Ŝ − S_prev‖_F / ‖A‖_F` at the last sweep.
    pub dual_residual: f64,
    /// `λ‖C∘(A − Ŷ)‖₁ + ‖Ŷ‖_*`, the decomposition objective at the
    /// feasible pair `(Ŷ, A − Ŷ)`.
    pub objective: f64,
    pub converged: bool,
}

/// Singular value thresholding: shrinks every singular value of `x` by
/// `eps`, flooring at zero. Works for any square or rectangular input.
pub fn svt(x: &Matrix, eps: f64) -> Result<Matrix> {
    let (u, s, v) = linalg::svd(x)?;
    let kept: Vec<usize> = (0..s.len()).filter(|&i| s[i] > eps).collect();
    let uk = Matrix::from_fn(x.nrows(), kept.len(), |i, c| u[(i, kept[c])] * (s[kept[c]] - eps));
    let vk = Matrix::from_fn(x.ncols(), kept.len(), |i, c| v[(i, kept[c])]);
    Ok(&uk * vk.transpose())
}

/// [`svt`] for symmetric input, via an eigendecomposition: each
/// eigenvalue keeps its sign and loses `eps` of its magnitude.
pub fn svt_symmetric(x: &Matrix, eps: f64) -> Result<Matrix> {
    let (values, vectors) = linalg::symmetric_eigen(x)?;
    Ok(recompose_shrunk(&values, &vectors, eps))
}

fn recompose_shrunk(values: &[f64], vectors: &Matrix, eps: f64) -> Matrix {
    let n = vectors.nrows();
    let kept: Vec<usize> = (0..values.len()).filter(|&i| values[i].abs() > eps).collect();
    let shrunk: Vec<f64> = kept.iter().map(|&i| values[i].signum() * (values[i].abs() - eps)).collect();
    let uk = Matrix::from_fn(n, kept.len(), |i, c| vectors[(i, kept[c])]);
    let scaled = Matrix::from_fn(n, kept.len(), |i, c| vectors[(i, kept[c])] * shrunk[c]);
    let mut out = &scaled * uk.transpose();
    linalg::symmetrize(&mut out);
    out
}

/// Symmetric thresholding with a randomized partial eigendecomposition of
/// `rank + oversample` directions. Returns `None` when the sampled subspace
/// does not capture every eigenvalue above `eps`.
fn svt_symmetric_partial(x: &Matrix, eps: f64, rank: usize) -> Result<Option<Matrix>> {
    let n = x.nrows();
    let k = (rank + RANK_OVERSAMPLE).min(n);
    if k >= n {
        return Ok(None);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let omega = Matrix::from_fn(n, k, |_, _| rng.random_range(-1.0..1.0));
    let mut q = (x * &omega).qr().compute_thin_Q();
    for _ in 0..POWER_ITERATIONS {
        q = (x * &q).qr().compute_thin_Q();
    }
    let mut small = q.transpose() * x * &q;
    linalg::symmetrize(&mut small);
    let (values, vectors) = linalg::symmetric_eigen(&small)?;
    let smallest = values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if smallest > eps {
        return Ok(None);
    }
    let lifted = &q * &vectors;
    Ok(Some(recompose_shrunk(&values, &lifted, eps)))
}

fn threshold_step(x: &Matrix, eps: f64, rank_hint: Option<usize>) -> Result<Matrix> {
    if let Some(rank) = rank_hint {
        if let Some(out) = svt_symmetric_partial(x, eps, rank)? {
            return Ok(out);
        }
    }
    svt_symmetric(x, eps)
}

/// Entrywise shrinkage of `x_ij` toward zero by `eps · c_ij`.
pub fn soft_threshold_weighted(x: &Matrix, eps: f64, c: &Matrix) -> Matrix {
    linalg::zip_map(x, c, |v, w| shrink(v, eps * w))
}

/// Unweighted shrinkage by `eps`.
pub fn soft_threshold(x: &Matrix, eps: f64) -> Matrix {
    linalg::map(x, |v| shrink(v, eps))
}

#[inline]
fn shrink(v: f64, by: f64) -> f64 {
    if v > by {
        v - by
    } else if v < -by {
        v + by
    } else {
        0.0
    }
}

/// Solves the weighted program for `a` with weights from `cfg.weights`.
pub fn solve(a: &Adjacency, cfg: &SolverConfig) -> Result<SolveResult> {
    if cfg.weights.n != a.n() {
        return Err(Error::DimensionMismatch { expected: a.n(), actual: cfg.weights.n });
    }
    let c = weight_matrix(a, &cfg.weights);
    solve_weighted(a, &c, cfg.weights.lambda(), cfg)
}

/// Heterophily reduction: solves on the complement graph. `cfg.weights`
/// must already carry the complement-side threshold.
pub fn solve_heterophily(a: &Adjacency, cfg: &SolverConfig) -> Result<SolveResult> {
    solve(&complement_graph(a), cfg)
}

/// Runs the iteration with an explicit weight matrix `c` and sparsity
/// weight `lambda`. Only the iteration controls of `cfg` are used; its
/// `weights` field is ignored.
pub fn solve_weighted(a: &Adjacency, c: &Matrix, lambda: f64, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate()?;
    let n = a.n();
    if c.nrows() != n || c.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: c.nrows() });
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::params(format!("lambda = {lambda} must be positive")));
    }
    let am = a.to_matrix();
    let a_norm = linalg::frobenius_norm(&am);
    let mu0 = match cfg.mu0 {
        Some(mu0) => mu0,
        None => {
            let spectral = linalg::symmetric_eigenvalues(&am)?
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()));
            MU0_SCALE / spectral
        }
    };
    let mu_max = mu0 * cfg.mu_max_factor;
    let mut mu = mu0;

    let mut y = Matrix::zeros(n, n);
    let mut s = Matrix::zeros(n, n);
    let mut m = Matrix::zeros(n, n);
    let mut target = Matrix::zeros(n, n);
    let mut dual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    for k in 0..cfg.max_iter {
        iterations = k + 1;
        let inv_mu = 1.0 / mu;

        for j in 0..n {
            for i in 0..n {
                target[(i, j)] = am[(i, j)] - s[(i, j)] + inv_mu * m[(i, j)];
            }
        }
        y = threshold_step(&target, inv_mu, cfg.svd_rank_hint)?;
        if cfg.box_step == BoxStep::LowRank {
            y = linalg::map(&y, |v| v.clamp(0.0, 1.0));
        }

        let mut step_sq = 0.0;
        let mut residual_sq = 0.0;
        for j in 0..n {
            for i in 0..n {
                let aij = am[(i, j)];
                let mut sij = shrink(aij - y[(i, j)] + inv_mu * m[(i, j)], lambda * c[(i, j)] * inv_mu);
                if cfg.box_step == BoxStep::Sparse {
                    sij = sij.clamp(aij - 1.0, aij);
                }
                let ds = sij - s[(i, j)];
                step_sq += ds * ds;
                s[(i, j)] = sij;
                let r = aij - y[(i, j)] - sij;
                m[(i, j)] += mu * r;
                residual_sq += r * r;
            }
        }
        let residual = residual_sq.sqrt() / a_norm;
        dual = mu * step_sq.sqrt() / a_norm;
        mu = (mu * cfg.alpha).min(mu_max);

        if !residual.is_finite() || !linalg::is_all_finite(&m) || !linalg::is_all_finite(&y) {
            return Err(Error::NonFinite { iteration: iterations });
        }
        if residual <= cfg.tol_primal && dual <= cfg.tol_dual {
            converged = true;
            break;
        }
    }

    // Clipping moves Y toward A − S whenever A − S lies in the box, so the
    // reported residual never exceeds the one tested above.
    let y_hat = linalg::map(&y, |v| v.clamp(0.0, 1.0));
    let primal_residual = linalg::frobenius_norm(&(&am - &y_hat - &s)) / a_norm;
    let feasible_sparse = linalg::zip_map(&am, &y_hat, |x, z| x - z);
    let objective = decomposition_objective(&y_hat, &feasible_sparse, c, lambda)?;
    Ok(SolveResult {
        y_hat,
        s_hat: s,
        multiplier: m,
        iterations,
        primal_residual,
        dual_residual: dual,
        objective,
        converged,
    })
}
