//! Spectral estimation of the blockmodel parameters and the resolution
//! threshold `t`, plus the recovery-condition quantities.
//!
//! For the standard blockmodel (equal sizes `K`, no outliers, unit
//! diagonal) the expected adjacency has eigenvalues
//! `K(p−q) + nq + (1−p)` once, `K(p−q) + (1−p)` with multiplicity `r − 1`
//! and `1 − p` for the rest. The estimator inverts these tiers using the
//! observed spectrum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphmodel::Adjacency;
use crate::linalg::{self, Matrix};

/// Bounds applied to the estimated threshold; the weights are singular at
/// `t ∈ {0, 1}`.
pub const T_CLAMP: (f64, f64) = (1e-6, 1.0 - 1e-6);

/// A spectral gap below this fraction of `max(|λ₁|, 1)` counts as absent.
const GAP_RELATIVE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    /// Eigenvalues of `A`, descending.
    pub eigenvalues: Vec<f64>,
    pub r_hat: usize,
    /// `n / r̂`; not necessarily an integer.
    pub k_hat: f64,
    /// Estimates clamped to `[0, 1]`.
    pub p_hat: f64,
    pub q_hat: f64,
    /// Unclamped estimates.
    pub p_raw: f64,
    pub q_raw: f64,
    /// `(p̂ + q̂)/2`, clamped to [`T_CLAMP`].
    pub t: f64,
}

/// Estimates `(r, K, p, q, t)` from the spectrum of `a`.
///
/// `r̂` is the position of the largest consecutive eigenvalue gap
/// `λ̂ᵢ − λ̂ᵢ₊₁` over `i = 2, …, n−1` (ties go to the smallest `i`).
pub fn estimate_parameters(a: &Adjacency) -> Result<EstimationResult> {
    estimate_from_matrix(&a.to_matrix())
}

/// Same estimator for any symmetric matrix, e.g. an expected adjacency.
pub fn estimate_from_matrix(m: &Matrix) -> Result<EstimationResult> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: m.ncols() });
    }
    if n < 3 {
        return Err(Error::params(format!("estimation needs at least 3 nodes, got {n}")));
    }
    if !linalg::is_symmetric(m, 1e-12) {
        return Err(Error::params("estimation needs a symmetric matrix"));
    }
    let mut eigenvalues = linalg::symmetric_eigenvalues(m)?;
    eigenvalues.reverse();

    // 1-based index i maps to eigenvalues[i - 1].
    let mut r_hat = 2;
    let mut best_gap = f64::NEG_INFINITY;
    for i in 2..n {
        let gap = eigenvalues[i - 1] - eigenvalues[i];
        if gap > best_gap {
            best_gap = gap;
            r_hat = i;
        }
    }
    let scale = eigenvalues[0].abs().max(1.0);
    if best_gap <= GAP_RELATIVE_FLOOR * scale {
        return Err(Error::DegenerateSpectrum(format!(
            "no eigenvalue gap after the leading eigenvalue (largest gap {best_gap:.3e})"
        )));
    }

    let nf = n as f64;
    let k_hat = nf / r_hat as f64;
    if k_hat <= 1.0 {
        return Err(Error::DegenerateSpectrum(format!("estimated cluster size {k_hat} is at most 1")));
    }
    let (l1, l2) = (eigenvalues[0], eigenvalues[1]);
    let p_raw = (k_hat * l1 + (nf - k_hat) * l2 - nf) / (nf * (k_hat - 1.0));
    let q_raw = (l1 - l2) / nf;
    let p_hat = p_raw.clamp(0.0, 1.0);
    let q_hat = q_raw.clamp(0.0, 1.0);
    let t = (0.5 * (p_hat + q_hat)).clamp(T_CLAMP.0, T_CLAMP.1);

    Ok(EstimationResult { eigenvalues, r_hat, k_hat, p_hat, q_hat, p_raw, q_raw, t })
}

/// Raw quantities of the sufficient and necessary recovery conditions,
/// without their unspecified absolute constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// `(p − q) / sqrt(p(1 − q))`.
    pub lhs: f64,
    /// `max{√n/K, log²n/√K}` with the natural logarithm.
    pub thm1_bound: f64,
    /// `lhs / thm1_bound`.
    pub margin: f64,
    /// `1/√n`: below this no algorithm can recover the clusters (up to a
    /// constant) when `K` and the outlier count are proportional to `n`.
    pub thm2_bound: f64,
}

impl ConditionReport {
    /// Necessary condition with its constant set to one.
    pub fn necessary_condition_met(&self) -> bool {
        self.lhs >= self.thm2_bound
    }
}

/// Condition quantities for homophily, `0 ≤ q < p ≤ 1`.
pub fn condition_report(p: f64, q: f64, n: usize, k: usize) -> Result<ConditionReport> {
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) || p <= q {
        return Err(Error::params(format!("condition needs 0 <= q < p <= 1, got p = {p}, q = {q}")));
    }
    if n < 2 || k == 0 || k > n {
        return Err(Error::params(format!("condition needs 1 <= K <= n and n >= 2, got n = {n}, K = {k}")));
    }
    let (nf, kf) = (n as f64, k as f64);
    let lhs = (p - q) / (p * (1.0 - q)).sqrt();
    let log_n = nf.ln();
    let thm1_bound = (nf.sqrt() / kf).max(log_n * log_n / kf.sqrt());
    Ok(ConditionReport { lhs, thm1_bound, margin: lhs / thm1_bound, thm2_bound: 1.0 / nf.sqrt() })
}

/// Condition quantities for heterophily (`p < q`), evaluated on the
/// complement densities `(1 − p, 1 − q)`.
pub fn heterophily_condition_report(p: f64, q: f64, n: usize, k: usize) -> Result<ConditionReport> {
    condition_report(1.0 - p, 1.0 - q, n, k)
}

/// Admissible range `[p/4 + 3q/4, 3p/4 + q/4]` for the threshold (ordered
/// so the first element is the smaller).
pub fn t_window(p: f64, q: f64) -> (f64, f64) {
    let a = 0.25 * p + 0.75 * q;
    let b = 0.75 * p + 0.25 * q;
    (a.min(b), a.max(b))
}
