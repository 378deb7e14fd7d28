//! Dual certificate for the optimality of a planted cluster matrix.
//!
//! Given the truth `Y* = U₀Σ₀U₀ᵀ`, the certificate is
//! `W = W₁ + W₂ + W₃ + W₄` where, with `R = supp(Y*)`, `𝒜 = supp(A)` and
//! `E` the diagonal,
//!
//! ```text
//! W₁ = −P_{R∩𝒜ᶜ}(U₀U₀ᵀ) + (1−p)/p · P_{R∩𝒜}(U₀U₀ᵀ)
//! W₂ = (1+ε)λc_Ac · [−P_{R∩𝒜ᶜ}(11ᵀ) + (1−p)/p · P_{R∩𝒜}(11ᵀ)]
//! W₃ = (1+ε)λc_A  · [P_{Rᶜ∩Eᶜ∩𝒜}(11ᵀ) − q/(1−q) · P_{Rᶜ∩Eᶜ∩𝒜ᶜ}(11ᵀ)]
//! W₄ = (1+ε)λc_A  · P_{Rᶜ}(I)
//! ```
//!
//! `Y*` is the unique optimum when (a) `‖W‖ ≤ 1`, (b)
//! `‖P_T(W)‖_∞ ≤ (ε/2)λ min{c_A, c_Ac}` and (c) two entrywise equalities
//! and two entrywise inequalities hold, for some `0 < ε < 1`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphmodel::{Adjacency, BinaryMatrix, ClusterMatrix};
use crate::linalg::{self, Matrix};
use crate::objective::Weights;

/// Absolute tolerance on the equalities of condition (c).
pub const EQUALITY_TOLERANCE: f64 = 1e-9;

/// Constant in the default perturbation size `ε`.
pub const EPSILON_CONSTANT: f64 = 48.0;

/// Which of the four index classes an entry `(i, j)` falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// `R ∩ 𝒜`
    InClusterEdge,
    /// `R ∩ 𝒜ᶜ`
    InClusterNonEdge,
    /// `Rᶜ ∩ 𝒜`
    OutsideEdge,
    /// `Rᶜ ∩ 𝒜ᶜ`
    OutsideNonEdge,
}

#[derive(Debug, Clone)]
pub struct Certificate {
    pub w: Matrix,
    /// `W₁ … W₄`.
    pub parts: [Matrix; 4],
    pub epsilon: f64,
    /// Orthonormal basis `U₀` of the column space of `Y*` (one column per
    /// cluster).
    pub basis: Matrix,
    /// `U₀U₀ᵀ`.
    pub projector: Matrix,
    /// `R = supp(Y*)`.
    pub in_cluster: BinaryMatrix,
    /// `𝒜 = supp(A)`; the diagonal set `E` is implicit.
    pub adjacency: Adjacency,
}

impl Certificate {
    pub fn n(&self) -> usize {
        self.adjacency.n()
    }

    pub fn region(&self, i: usize, j: usize) -> Region {
        match (self.in_cluster.get(i, j), self.adjacency.get(i, j)) {
            (true, true) => Region::InClusterEdge,
            (true, false) => Region::InClusterNonEdge,
            (false, true) => Region::OutsideEdge,
            (false, false) => Region::OutsideNonEdge,
        }
    }
}

/// `U₀`: column `m` is the indicator of cluster `m` scaled by `1/√k_m`.
pub fn cluster_basis(truth: &ClusterMatrix) -> Matrix {
    let assignment = truth.assignment();
    let sizes = assignment.sizes();
    let labels = assignment.labels();
    Matrix::from_fn(truth.n(), assignment.r(), |i, m| {
        if labels[i] == m + 1 {
            1.0 / (sizes[m] as f64).sqrt()
        } else {
            0.0
        }
    })
}

/// `U₀U₀ᵀ = Σ_m (1/k_m) · 1_{R_m}`.
pub fn cluster_projector(truth: &ClusterMatrix) -> Matrix {
    let assignment = truth.assignment();
    let sizes = assignment.sizes();
    let labels = assignment.labels();
    Matrix::from_fn(truth.n(), truth.n(), |i, j| {
        if truth.get(i, j) {
            1.0 / sizes[labels[i] - 1] as f64
        } else {
            0.0
        }
    })
}

/// `P_T(M) = U₀U₀ᵀM + MU₀U₀ᵀ − U₀U₀ᵀMU₀U₀ᵀ` for an orthonormal `basis`.
pub fn project_t(m: &Matrix, basis: &Matrix) -> Matrix {
    let ut_m = basis.transpose() * m; // r × n
    let left = basis * &ut_m;
    let m_u = m * basis; // n × r
    let right = &m_u * basis.transpose();
    let core = &ut_m * basis; // r × r
    let both = basis * &core * basis.transpose();
    &left + &right - &both
}

/// Default `ε = 48/√(t(1−t)) · max{√n/K, √(log⁴n/K)}`.
pub fn default_epsilon(t: f64, n: usize, k: usize) -> f64 {
    let (nf, kf) = (n as f64, k as f64);
    let log_n = nf.ln();
    EPSILON_CONSTANT / (t * (1.0 - t)).sqrt() * (nf.sqrt() / kf).max((log_n.powi(4) / kf).sqrt())
}

/// Builds `W₁ … W₄` from the graph, the truth and homogeneous
/// probabilities `p > q`.
pub fn build_certificate(
    a: &Adjacency,
    truth: &ClusterMatrix,
    w: &Weights,
    p: f64,
    q: f64,
    epsilon_override: Option<f64>,
) -> Result<Certificate> {
    let n = a.n();
    if truth.n() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: truth.n() });
    }
    if w.n != n {
        return Err(Error::DimensionMismatch { expected: n, actual: w.n });
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::params(format!("certificate needs 0 < p <= 1, got p = {p}")));
    }
    if !(q >= 0.0 && q < 1.0) {
        return Err(Error::params(format!("certificate needs 0 <= q < 1, got q = {q}")));
    }
    if p <= q {
        return Err(Error::params(format!("certificate needs p > q, got p = {p}, q = {q}")));
    }
    let epsilon = match epsilon_override {
        Some(e) => e,
        None => {
            let k = truth.assignment().min_cluster_size().ok_or_else(|| {
                Error::params("default epsilon needs at least one cluster; pass an override")
            })?;
            default_epsilon(w.t, n, k)
        }
    };

    let lambda = w.lambda();
    let basis = cluster_basis(truth);
    let projector = cluster_projector(truth);
    let odds_p = (1.0 - p) / p;
    let odds_q = q / (1.0 - q);
    let w2_scale = (1.0 + epsilon) * lambda * w.c_ac;
    let w34_scale = (1.0 + epsilon) * lambda * w.c_a;

    let mut parts = [Matrix::zeros(n, n), Matrix::zeros(n, n), Matrix::zeros(n, n), Matrix::zeros(n, n)];
    for j in 0..n {
        for i in 0..n {
            let edge = a.get(i, j);
            if truth.get(i, j) {
                let u = projector[(i, j)];
                if edge {
                    parts[0][(i, j)] = odds_p * u;
                    parts[1][(i, j)] = w2_scale * odds_p;
                } else {
                    parts[0][(i, j)] = -u;
                    parts[1][(i, j)] = -w2_scale;
                }
            } else if i != j {
                parts[2][(i, j)] = if edge { w34_scale } else { -w34_scale * odds_q };
            } else {
                parts[3][(i, j)] = w34_scale;
            }
        }
    }
    let w_total = &parts[0] + &parts[1] + &parts[2] + &parts[3];

    Ok(Certificate {
        w: w_total,
        parts,
        epsilon,
        basis,
        projector,
        in_cluster: truth.as_binary().clone(),
        adjacency: a.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub epsilon: f64,
    pub lambda: f64,
    /// Spectral norm `‖W‖`.
    pub norm_w: f64,
    /// `‖P_T(W)‖_∞`.
    pub pt_w_inf: f64,
    /// `(ε/2)λ min{c_A, c_Ac}`.
    pub pt_bound: f64,
    pub epsilon_valid: bool,
    pub condition_a_pass: bool,
    pub condition_b_pass: bool,
    pub condition_c_pass: bool,
    pub c_equalities_max_violation: f64,
    /// Smallest slack of the two inequalities; `+∞` when both index sets
    /// are empty.
    pub c_inequalities_min_slack: f64,
}

impl CertificateReport {
    /// True when the certificate proves that `Y*` is the unique optimum.
    pub fn all_pass(&self) -> bool {
        self.epsilon_valid && self.condition_a_pass && self.condition_b_pass && self.condition_c_pass
    }

    pub fn to_key_values(&self) -> Vec<(&'static str, String)> {
        vec![
            ("epsilon", self.epsilon.to_string()),
            ("lambda", self.lambda.to_string()),
            ("norm_w", self.norm_w.to_string()),
            ("pt_w_inf", self.pt_w_inf.to_string()),
            ("pt_bound", self.pt_bound.to_string()),
            ("epsilon_valid", self.epsilon_valid.to_string()),
            ("condition_a_pass", self.condition_a_pass.to_string()),
            ("condition_b_pass", self.condition_b_pass.to_string()),
            ("condition_c_pass", self.condition_c_pass.to_string()),
            ("c_equalities_max_violation", self.c_equalities_max_violation.to_string()),
            ("c_inequalities_min_slack", self.c_inequalities_min_slack.to_string()),
            ("certificate_pass", self.all_pass().to_string()),
        ]
    }
}

impl fmt::Display for CertificateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (key, value) in self.to_key_values() {
            writeln!(f, "{key}={value}")?;
        }
        Ok(())
    }
}

/// Evaluates conditions (a)–(c) for `cert` under weights `w`.
pub fn check_certificate(cert: &Certificate, w: &Weights) -> Result<CertificateReport> {
    let n = cert.n();
    let lambda = w.lambda();
    let eps = cert.epsilon;

    let norm_w = linalg::spectral_norm(&cert.w)?;
    let pt_w_inf = linalg::max_abs(&project_t(&cert.w, &cert.basis));
    let pt_bound = 0.5 * eps * lambda * w.c_a.min(w.c_ac);

    let mut max_violation = 0.0f64;
    let mut min_slack = f64::INFINITY;
    for j in 0..n {
        for i in 0..n {
            let wij = cert.w[(i, j)];
            let uw = cert.projector[(i, j)] + wij;
            match cert.region(i, j) {
                Region::InClusterNonEdge => {
                    max_violation = max_violation.max((-(1.0 + eps) * lambda * w.c_ac - uw).abs());
                }
                Region::OutsideEdge => {
                    max_violation = max_violation.max((-(1.0 + eps) * lambda * w.c_a + wij).abs());
                }
                Region::InClusterEdge => {
                    min_slack = min_slack.min((1.0 - eps) * lambda * w.c_a - uw);
                }
                Region::OutsideNonEdge => {
                    min_slack = min_slack.min((1.0 - eps) * lambda * w.c_ac + wij);
                }
            }
        }
    }

    Ok(CertificateReport {
        epsilon: eps,
        lambda,
        norm_w,
        pt_w_inf,
        pt_bound,
        epsilon_valid: eps > 0.0 && eps < 1.0,
        condition_a_pass: norm_w <= 1.0,
        condition_b_pass: pt_w_inf <= pt_bound,
        condition_c_pass: max_violation <= EQUALITY_TOLERANCE && min_slack >= 0.0,
        c_equalities_max_violation: max_violation,
        c_inequalities_min_slack: min_slack,
    })
}
