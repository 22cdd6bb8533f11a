//! Small dense helpers on top of nalgebra that behave sensibly on
//! zero-sized matrices (nodes of dimension 0 are legal).

use nalgebra::{Cholesky, SymmetricEigen, SVD};

use crate::Mat;

/// Default rank tolerance `sqrt(eps) * sigma_max`. Kernels here are taken of
/// stacked products that already carry rounding from earlier projections,
/// so the one-shot `max(rows, cols) * eps * sigma_max` rule is too tight.
pub fn default_rank_tol(sigma_max: f64) -> f64 {
    f64::EPSILON.sqrt() * sigma_max
}

pub fn is_empty(m: &Mat) -> bool {
    m.nrows() == 0 || m.ncols() == 0
}

/// Largest singular value; 0 for empty matrices.
pub fn spectral_norm(m: &Mat) -> f64 {
    if is_empty(m) {
        return 0.0;
    }
    SVD::new(m.clone(), false, false)
        .singular_values
        .iter()
        .fold(0.0_f64, |a, &s| a.max(s))
}

/// Induced 1-norm (max absolute column sum).
pub fn norm_1(m: &Mat) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Induced infinity-norm (max absolute row sum).
pub fn norm_inf(m: &Mat) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn sym(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

/// Eigenvalues of the symmetric part, ascending.
pub fn sym_eigenvalues(m: &Mat) -> Vec<f64> {
    if is_empty(m) {
        return Vec::new();
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(sym(m)).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn max_eigenvalue(m: &Mat) -> f64 {
    sym_eigenvalues(m).last().copied().unwrap_or(f64::NEG_INFINITY)
}

pub fn min_eigenvalue(m: &Mat) -> f64 {
    sym_eigenvalues(m).first().copied().unwrap_or(f64::INFINITY)
}

/// Eigenvector for the largest eigenvalue of the symmetric part.
pub fn top_eigenvector(m: &Mat) -> Option<(f64, crate::Vector)> {
    if is_empty(m) {
        return None;
    }
    let eig = SymmetricEigen::new(sym(m));
    let (i, &lam) = eig.eigenvalues.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
    Some((lam, eig.eigenvectors.column(i).into_owned()))
}

/// Outcome of a numerical rank decision.
#[derive(Debug, Clone)]
pub struct RankDecision {
    /// Orthonormal basis of the numerical kernel (n × k).
    pub kernel: Mat,
    /// Orthonormal basis of the numerical row space (n × (n-k)).
    pub range: Mat,
    pub tol: f64,
    /// Some singular value lies within a factor 10 of the threshold.
    pub ambiguous: bool,
}

/// Kernel and row space of `m` via a full SVD. Singular values `<= tol` are
/// treated as zero; `tol = None` selects [`default_rank_tol`].
pub fn rank_decision(m: &Mat, tol: Option<f64>) -> RankDecision {
    let n = m.ncols();
    if n == 0 {
        return RankDecision {
            kernel: Mat::zeros(0, 0),
            range: Mat::zeros(0, 0),
            tol: 0.0,
            ambiguous: false,
        };
    }
    if m.nrows() == 0 {
        return RankDecision {
            kernel: Mat::identity(n, n),
            range: Mat::zeros(n, 0),
            tol: tol.unwrap_or(0.0),
            ambiguous: false,
        };
    }
    // Pad with zero rows so the thin SVD returns all n right singular vectors.
    let rows = m.nrows().max(n);
    let mut padded = Mat::zeros(rows, n);
    padded.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let svd = SVD::new(padded, false, true);
    let vt = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.iter().fold(0.0_f64, |a, &s| a.max(s));
    let tol = tol.unwrap_or_else(|| default_rank_tol(smax));
    let mut ker = Vec::new();
    let mut rng = Vec::new();
    let mut ambiguous = false;
    for (i, &s) in svd.singular_values.iter().enumerate() {
        let v = vt.row(i).transpose();
        if s <= tol {
            ker.push(v);
        } else {
            rng.push(v);
        }
        if s > 0.0 && tol > 0.0 && s > tol / 10.0 && s < tol * 10.0 {
            ambiguous = true;
        }
    }
    RankDecision {
        kernel: columns(n, &ker),
        range: columns(n, &rng),
        tol,
        ambiguous,
    }
}

fn columns(n: usize, cols: &[crate::Vector]) -> Mat {
    let mut out = Mat::zeros(n, cols.len());
    for (j, c) in cols.iter().enumerate() {
        out.set_column(j, c);
    }
    out
}

/// Orthonormal basis of the orthogonal complement of `span(basis)` in R^n.
pub fn orth_complement(basis: &Mat, n: usize) -> Mat {
    if basis.ncols() == 0 {
        return Mat::identity(n, n);
    }
    rank_decision(&basis.transpose(), Some(1e-8)).kernel
}

/// Orthonormalize the columns of `m` (drops numerically dependent columns).
pub fn orthonormalize(m: &Mat, tol: Option<f64>) -> Mat {
    if m.ncols() == 0 {
        return Mat::zeros(m.nrows(), 0);
    }
    rank_decision(&m.transpose(), tol).range
}

/// Sine of the largest principal angle between two subspaces given by
/// orthonormal bases. Returns 1 if dimensions differ.
pub fn subspace_distance(a: &Mat, b: &Mat) -> f64 {
    if a.ncols() != b.ncols() {
        return 1.0;
    }
    if a.ncols() == 0 {
        return 0.0;
    }
    let proj = b * (b.transpose() * a);
    spectral_norm(&(a - proj))
}

/// Block-diagonal matrix.
pub fn block_diag(blocks: &[&Mat]) -> Mat {
    let r: usize = blocks.iter().map(|b| b.nrows()).sum();
    let c: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(r, c);
    let (mut i, mut j) = (0, 0);
    for b in blocks {
        out.view_mut((i, j), (b.nrows(), b.ncols())).copy_from(b);
        i += b.nrows();
        j += b.ncols();
    }
    out
}

pub fn hstack(a: &Mat, b: &Mat) -> Mat {
    debug_assert_eq!(a.nrows(), b.nrows());
    let mut out = Mat::zeros(a.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    out
}

pub fn vstack(a: &Mat, b: &Mat) -> Mat {
    debug_assert_eq!(a.ncols(), b.ncols());
    let mut out = Mat::zeros(a.nrows() + b.nrows(), a.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), 0), b.shape()).copy_from(b);
    out
}

/// Solve `H X = R` for symmetric positive definite `H`; `None` if the
/// Cholesky factorization fails.
pub fn spd_solve(h: &Mat, r: &Mat) -> Option<Mat> {
    if h.nrows() == 0 {
        return Some(Mat::zeros(0, r.ncols()));
    }
    let chol = Cholesky::new(sym(h))?;
    Some(chol.solve(r))
}

/// Spectral radius of a square matrix (0 for the empty matrix).
pub fn spectral_radius(m: &Mat) -> f64 {
    if is_empty(m) {
        return 0.0;
    }
    m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &Mat, b: &Mat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kernel_of_rank_one() {
        let m = Mat::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        let rd = rank_decision(&m, None);
        assert_eq!(rd.kernel.ncols(), 2);
        assert_eq!(rd.range.ncols(), 1);
        assert!((m * &rd.kernel).norm() < 1e-12);
    }

    #[test]
    fn empty_matrices_are_harmless() {
        assert_eq!(spectral_norm(&Mat::zeros(0, 3)), 0.0);
        assert_eq!(spectral_radius(&Mat::zeros(0, 0)), 0.0);
        let rd = rank_decision(&Mat::zeros(0, 2), None);
        assert_eq!(rd.kernel.ncols(), 2);
    }

    #[test]
    fn complement_and_distance() {
        let b = Mat::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let c = orth_complement(&b, 3);
        assert_eq!(c.ncols(), 2);
        assert!((b.transpose() * &c).norm() < 1e-12);
        assert_relative_eq!(subspace_distance(&b, &b), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn induced_norms() {
        let m = Mat::from_row_slice(2, 2, &[1.0, -2.0, 3.0, 4.0]);
        assert_eq!(norm_1(&m), 6.0);
        assert_eq!(norm_inf(&m), 7.0);
        assert_relative_eq!(
            spectral_radius(&Mat::from_row_slice(2, 2, &[0.0, -2.0, 2.0, 0.0])),
            2.0,
            epsilon = 1e-12
        );
    }
}
