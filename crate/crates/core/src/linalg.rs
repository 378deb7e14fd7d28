//! Thin wrappers over `faer` for the handful of dense operations the
//! solver, estimator and certificate checker need.

use faer::diag::Diag;
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::svd::{self, ComputeSvdVectors, SvdParams};
use faer::{Auto, Par, Side};

use crate::error::{Error, Result};

/// Dense, column-major `f64` matrix used throughout the crate.
pub type Matrix = faer::Mat<f64>;

/// Symmetric eigendecomposition. Eigenvalues are returned in ascending
/// order, eigenvectors as the columns of the second element.
pub fn symmetric_eigen(m: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    let values = evd.S().column_vector().iter().copied().collect();
    Ok((values, evd.U().to_owned()))
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &Matrix) -> Result<Vec<f64>> {
    m.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Decomposition(format!("{e:?}")))
}

/// Runs faer's SVD with the divide-and-conquer stage disabled. The
/// bidiagonal divide-and-conquer in faer 0.22 (still present in 0.24)
/// returns factors that do not reconstruct some rank-deficient 0/1
/// matrices, with reconstruction errors of order one; the QR iteration it
/// falls back to below the recursion threshold does not have that defect.
fn svd_qr(m: &Matrix, vectors: bool) -> Result<(Vec<f64>, Option<(Matrix, Matrix)>)> {
    let (rows, cols) = (m.nrows(), m.ncols());
    let mut params: SvdParams = <SvdParams as Auto<f64>>::auto();
    params.recursion_threshold = usize::MAX;
    let compute = if vectors { ComputeSvdVectors::Full } else { ComputeSvdVectors::No };
    let mut buffer = MemBuffer::new(svd::svd_scratch::<f64>(rows, cols, compute, compute, Par::Seq, params.into()));
    let mut s = Diag::<f64>::zeros(rows.min(cols));
    let mut factors = vectors.then(|| (Matrix::zeros(rows, rows), Matrix::zeros(cols, cols)));
    let (u, v) = match factors.as_mut() {
        Some((u, v)) => (Some(u.as_mut()), Some(v.as_mut())),
        None => (None, None),
    };
    svd::svd(m.as_ref(), s.as_mut(), u, v, Par::Seq, MemStack::new(&mut buffer), params.into())
        .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    Ok((s.column_vector().iter().copied().collect(), factors))
}

/// Full singular value decomposition `m = U diag(s) V^T`, singular values
/// in non-increasing order.
pub fn svd(m: &Matrix) -> Result<(Matrix, Vec<f64>, Matrix)> {
    let (s, factors) = svd_qr(m, true)?;
    let (u, v) = factors.expect("vectors were requested");
    Ok((u, s, v))
}

pub fn singular_values(m: &Matrix) -> Result<Vec<f64>> {
    Ok(svd_qr(m, false)?.0)
}

/// Sum of singular values.
pub fn nuclear_norm(m: &Matrix) -> Result<f64> {
    Ok(singular_values(m)?.iter().sum())
}

/// Largest singular value.
pub fn spectral_norm(m: &Matrix) -> Result<f64> {
    Ok(singular_values(m)?.first().copied().unwrap_or(0.0))
}

pub fn frobenius_norm(m: &Matrix) -> f64 {
    m.norm_l2()
}

/// Largest absolute entry.
pub fn max_abs(m: &Matrix) -> f64 {
    m.norm_max()
}

/// Replaces `m` with `(m + m^T) / 2`.
pub fn symmetrize(m: &mut Matrix) {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

pub fn is_symmetric(m: &Matrix, tol: f64) -> bool {
    let n = m.nrows();
    if m.ncols() != n {
        return false;
    }
    (0..n).all(|j| ((j + 1)..n).all(|i| (m[(i, j)] - m[(j, i)]).abs() <= tol))
}

/// Entrywise map into a new matrix.
pub fn map(m: &Matrix, mut f: impl FnMut(f64) -> f64) -> Matrix {
    Matrix::from_fn(m.nrows(), m.ncols(), |i, j| f(m[(i, j)]))
}

/// Entrywise combination of two equally sized matrices.
pub fn zip_map(a: &Matrix, b: &Matrix, mut f: impl FnMut(f64, f64) -> f64) -> Matrix {
    debug_assert_eq!(a.shape(), b.shape());
    Matrix::from_fn(a.nrows(), a.ncols(), |i, j| f(a[(i, j)], b[(i, j)]))
}

/// Mean of all entries; zero for an empty matrix.
pub fn mean(m: &Matrix) -> f64 {
    let count = m.nrows() * m.ncols();
    if count == 0 {
        return 0.0;
    }
    m.sum() / count as f64
}

pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            worst = worst.max((a[(i, j)] - b[(i, j)]).abs());
        }
    }
    worst
}

pub fn is_all_finite(m: &Matrix) -> bool {
    m.is_all_finite()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nuclear_norm_of_all_ones_is_dimension() {
        let ones = Matrix::full(7, 7, 1.0);
        assert!((nuclear_norm(&ones).unwrap() - 7.0).abs() < 1e-10);
        assert!((spectral_norm(&ones).unwrap() - 7.0).abs() < 1e-10);
    }

    #[test]
    fn eigen_reconstructs_symmetric_input() {
        let m = Matrix::from_fn(5, 5, |i, j| ((i + 1) * (j + 1)) as f64 + if i == j { 2.0 } else { 0.0 });
        let (vals, vecs) = symmetric_eigen(&m).unwrap();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let d = Matrix::from_fn(5, 5, |i, j| if i == j { vals[i] } else { 0.0 });
        let back = &vecs * &d * vecs.transpose();
        assert!(max_abs_diff(&back, &m) < 1e-10);
    }

    #[test]
    fn symmetrize_averages_off_diagonal() {
        let mut m = Matrix::from_fn(3, 3, |i, j| (3 * i + j) as f64);
        symmetrize(&mut m);
        assert!(is_symmetric(&m, 0.0));
        assert_eq!(m[(0, 1)], 2.0);
    }

    /// Four diagonal blocks of 100 ones with 30 entries flipped. faer's
    /// default SVD reconstructs this with an error of 1.0.
    fn flipped_blocks() -> Matrix {
        const FLIPS: [(usize, usize); 30] = [
            (215, 267), (267, 215), (267, 267), (313, 313), (313, 319), (313, 378), (313, 379), (313, 383),
            (313, 398), (319, 313), (319, 379), (319, 398), (378, 313), (378, 379), (378, 398), (379, 313),
            (379, 319), (379, 378), (379, 379), (379, 383), (379, 398), (383, 313), (383, 379), (383, 398),
            (398, 313), (398, 319), (398, 378), (398, 379), (398, 383), (398, 398),
        ];
        let mut m = Matrix::from_fn(400, 400, |i, j| if i / 100 == j / 100 { 1.0 } else { 0.0 });
        for (i, j) in FLIPS {
            m[(i, j)] = 1.0 - m[(i, j)];
        }
        m
    }

    #[test]
    fn svd_reconstructs_flipped_blocks() {
        let m = flipped_blocks();
        let (u, s, v) = svd(&m).unwrap();
        assert!(s.windows(2).all(|w| w[0] >= w[1]));
        let d = Matrix::from_fn(400, 400, |i, j| if i == j { s[i] } else { 0.0 });
        assert!(max_abs_diff(&(&u * &d * v.transpose()), &m) < 1e-10);
        assert!(max_abs_diff(&(u.transpose() * &u), &Matrix::identity(400, 400)) < 1e-10);

        // For a symmetric matrix the singular values are the absolute eigenvalues.
        let mut abs_eig: Vec<f64> = symmetric_eigenvalues(&m).unwrap().iter().map(|x| x.abs()).collect();
        abs_eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let values = singular_values(&m).unwrap();
        assert!(values.iter().zip(&abs_eig).all(|(x, y)| (x - y).abs() < 1e-9));
        assert!((nuclear_norm(&m).unwrap() - abs_eig.iter().sum::<f64>()).abs() < 1e-8);
    }

    #[test]
    fn svd_of_rectangular_input() {
        let m = Matrix::from_fn(6, 3, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        for x in [m.clone(), m.transpose().to_owned()] {
            let (u, s, v) = svd(&x).unwrap();
            assert_eq!(s.len(), 3);
            let d = Matrix::from_fn(x.nrows(), x.ncols(), |i, j| if i == j { s[i] } else { 0.0 });
            assert!(max_abs_diff(&(&u * &d * v.transpose()), &x) < 1e-12);
        }
    }
}
