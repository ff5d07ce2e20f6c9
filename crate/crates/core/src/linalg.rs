//! Dense complex linear algebra used by the perturbation engines.
//!
//! Superoperators use column-stacking vectorization throughout:
//! `vec(X)[i + j * rows] = X[i, j]`, so that `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

use faer::sparse::{SparseColMat, Triplet};
use faer::{c64, Col, ColRef, Mat, MatRef, Side};

use crate::error::{Error, Result};

pub type ComplexMatrix = Mat<c64>;
pub type ComplexVector = Col<c64>;
pub type SparseMatrix = SparseColMat<usize, c64>;

/// Default relative singular-value cutoff for [`pinv`].
pub const DEFAULT_PINV_REL_TOL: f64 = 1e-12;

/// Relative tolerance on `max|a - a†| / max|a|` for Hermitian preconditions.
pub const HERMITIAN_TOL: f64 = 1e-10;

pub fn identity(n: usize) -> ComplexMatrix {
    Mat::from_fn(n, n, |i, j| if i == j { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) })
}

pub fn zeros(rows: usize, cols: usize) -> ComplexMatrix {
    Mat::zeros(rows, cols)
}

pub fn from_real_diagonal(diag: &[f64]) -> ComplexMatrix {
    let n = diag.len();
    Mat::from_fn(n, n, |i, j| if i == j { c64::new(diag[i], 0.0) } else { c64::new(0.0, 0.0) })
}

pub fn ensure_finite(a: MatRef<'_, c64>) -> Result<()> {
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let z = a[(i, j)];
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
    }
    Ok(())
}

/// Kronecker product: `kron(a, b)[(i * rb + k, j * cb + l)] = a[i, j] * b[k, l]`.
pub fn kron(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> ComplexMatrix {
    let (rb, cb) = (b.nrows(), b.ncols());
    Mat::from_fn(a.nrows() * rb, a.ncols() * cb, |r, c| {
        a[(r / rb, c / cb)] * b[(r % rb, c % cb)]
    })
}

/// Stacks the columns of `a` top to bottom.
pub fn vec(a: MatRef<'_, c64>) -> ComplexVector {
    let rows = a.nrows();
    Col::from_fn(rows * a.ncols(), |k| a[(k % rows, k / rows)])
}

/// Inverse of [`vec`].
pub fn unvec(v: ColRef<'_, c64>, rows: usize, cols: usize) -> Result<ComplexMatrix> {
    if v.nrows() != rows * cols {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} cannot be reshaped to {rows}x{cols}",
            v.nrows()
        )));
    }
    Ok(Mat::from_fn(rows, cols, |i, j| v[i + j * rows]))
}

pub fn trace(a: MatRef<'_, c64>) -> c64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)]).sum()
}

/// Hilbert–Schmidt inner product `Tr(x† y)`.
pub fn inner(x: MatRef<'_, c64>, y: MatRef<'_, c64>) -> c64 {
    debug_assert_eq!((x.nrows(), x.ncols()), (y.nrows(), y.ncols()));
    let mut acc = c64::new(0.0, 0.0);
    for j in 0..x.ncols() {
        for i in 0..x.nrows() {
            acc += x[(i, j)].conj() * y[(i, j)];
        }
    }
    acc
}

pub fn max_abs(a: MatRef<'_, c64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

pub fn frobenius_norm(a: MatRef<'_, c64>) -> f64 {
    a.norm_l2()
}

/// `(a + a†) / 2`.
pub fn hermitian_part(a: MatRef<'_, c64>) -> ComplexMatrix {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

/// `max|a - a†| / max|a|`, zero for the zero matrix.
pub fn hermiticity_deviation(a: MatRef<'_, c64>) -> f64 {
    let scale = max_abs(a);
    if scale == 0.0 {
        return 0.0;
    }
    let mut dev = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            dev = dev.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    dev / scale
}

/// Checks the Hermitian precondition and returns the symmetrized matrix.
pub fn require_hermitian(a: MatRef<'_, c64>) -> Result<ComplexMatrix> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    ensure_finite(a)?;
    let deviation = hermiticity_deviation(a);
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(hermitian_part(a))
}

/// Moore–Penrose pseudoinverse together with the data used to build it.
#[derive(Debug, Clone)]
pub struct Pinv {
    pub matrix: ComplexMatrix,
    pub rank: usize,
    /// Relative cutoff the pseudoinverse was built with.
    pub rel_tol: f64,
    /// Absolute cutoff, `rel_tol * sigma_max`.
    pub singular_tol: f64,
    pub singular_values: Vec<f64>,
}

impl Pinv {
    pub fn apply(&self, x: ColRef<'_, c64>) -> ComplexVector {
        &self.matrix * x
    }
}

/// SVD-based pseudoinverse `A⁺ = V D⁺ U†`. Singular values at or below
/// `rel_tol * sigma_max` are treated as zero.
pub fn pinv(a: MatRef<'_, c64>, rel_tol: f64) -> Result<Pinv> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::InvalidArgument(format!("rel_tol must lie in (0, 1), got {rel_tol}")));
    }
    ensure_finite(a)?;
    let svd = a.thin_svd().map_err(|_| Error::SvdFailed)?;
    let s: Vec<f64> = svd.S().column_vector().iter().map(|z| z.re).collect();
    let sigma_max = s.iter().copied().fold(0.0, f64::max);
    let singular_tol = rel_tol * sigma_max;
    let rank = s.iter().filter(|&&x| x > singular_tol).count();

    let (u, v) = (svd.U(), svd.V());
    // V_r diag(1/s_r), then times U_r†
    let v_scaled = Mat::from_fn(v.nrows(), rank, |i, k| v[(i, k)] * (1.0 / s[k]));
    let matrix = &v_scaled * u.subcols(0, rank).adjoint();
    Ok(Pinv {
        matrix,
        rank,
        rel_tol,
        singular_tol,
        singular_values: s,
    })
}

/// Lower-triangular Cholesky factor `L` with real positive diagonal and
/// `L L† = a`. Pivots at or below `n * eps * max(a_ii)` are rejected.
pub fn cholesky_lower(a: MatRef<'_, c64>) -> Result<ComplexMatrix> {
    let a = require_hermitian(a)?;
    let n = a.nrows();
    let max_diag = (0..n).map(|i| a[(i, i)].re).fold(0.0, f64::max);
    let floor = n as f64 * f64::EPSILON * max_diag;
    let mut l = zeros(n, n);
    for j in 0..n {
        let mut pivot = a[(j, j)].re;
        for k in 0..j {
            pivot -= l[(j, k)].norm_sqr();
        }
        if !(pivot > floor) {
            return Err(Error::NotPositiveDefinite { index: j, pivot });
        }
        let ljj = pivot.sqrt();
        l[(j, j)] = c64::new(ljj, 0.0);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Eigenvalues of the Hermitian part of `a`, ascending.
pub fn hermitian_eigenvalues(a: MatRef<'_, c64>) -> Result<Vec<f64>> {
    let h = require_hermitian(a)?;
    let mut ev = h
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| Error::EigenFailed)?;
    ev.sort_by(|x, y| x.total_cmp(y));
    Ok(ev)
}

pub fn min_eigenvalue_hermitian(a: MatRef<'_, c64>) -> Result<f64> {
    Ok(hermitian_eigenvalues(a)?[0])
}

/// Sum of singular values.
pub fn trace_norm(a: MatRef<'_, c64>) -> Result<f64> {
    let s = a.singular_values().map_err(|_| Error::SvdFailed)?;
    Ok(s.iter().sum())
}

/// 2-norm condition number `sigma_max / sigma_min`.
pub fn condition_number(a: MatRef<'_, c64>) -> Result<f64> {
    let s = a.singular_values().map_err(|_| Error::SvdFailed)?;
    let max = s.iter().copied().fold(0.0, f64::max);
    let min = s.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(if min == 0.0 { f64::INFINITY } else { max / min })
}

/// Nonzero entries of a dense matrix as `(row, col, value)`.
pub fn nonzeros(a: MatRef<'_, c64>) -> Vec<(usize, usize, c64)> {
    let mut out = Vec::new();
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let z = a[(i, j)];
            if z.re != 0.0 || z.im != 0.0 {
                out.push((i, j, z));
            }
        }
    }
    out
}

/// Triplets of `scale * kron(a, b)` where `a` and `b` are given by their
/// nonzero entries and `b` has shape `rb x cb`.
pub fn kron_triplets(
    a: &[(usize, usize, c64)],
    b: &[(usize, usize, c64)],
    rb: usize,
    cb: usize,
    scale: c64,
    out: &mut Vec<Triplet<usize, usize, c64>>,
) {
    out.reserve(a.len() * b.len());
    for &(i, j, x) in a {
        for &(k, l, y) in b {
            out.push(Triplet::new(i * rb + k, j * cb + l, scale * x * y));
        }
    }
}

/// Builds a CSC matrix, summing duplicate entries.
pub fn sparse_from_triplets(
    rows: usize,
    cols: usize,
    triplets: &[Triplet<usize, usize, c64>],
) -> Result<SparseMatrix> {
    SparseColMat::try_new_from_triplets(rows, cols, triplets)
        .map_err(|e| Error::Factorization(format!("{e:?}")))
}

/// `y = A x` for a CSC matrix.
pub fn sparse_matvec(a: &SparseMatrix, x: ColRef<'_, c64>) -> ComplexVector {
    let mut y = Col::<c64>::zeros(a.nrows());
    let sym = a.symbolic();
    let (col_ptr, row_idx, val) = (sym.col_ptr(), sym.row_idx(), a.val());
    for j in 0..a.ncols() {
        let xj = x[j];
        if xj.re == 0.0 && xj.im == 0.0 {
            continue;
        }
        for p in col_ptr[j]..col_ptr[j + 1] {
            y[row_idx[p]] += val[p] * xj;
        }
    }
    y
}

/// `y = A† x` for a CSC matrix.
pub fn sparse_adjoint_matvec(a: &SparseMatrix, x: ColRef<'_, c64>) -> ComplexVector {
    let sym = a.symbolic();
    let (col_ptr, row_idx, val) = (sym.col_ptr(), sym.row_idx(), a.val());
    Col::from_fn(a.ncols(), |j| {
        let mut acc = c64::new(0.0, 0.0);
        for p in col_ptr[j]..col_ptr[j + 1] {
            acc += val[p].conj() * x[row_idx[p]];
        }
        acc
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_hermitian, random_matrix, rng};

    fn c(re: f64) -> c64 {
        c64::new(re, 0.0)
    }

    fn max_diff(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
        max_abs((a - b).as_ref())
    }

    #[test]
    fn kron_identity_and_diagonal() {
        let i2 = identity(2);
        assert_eq!(kron(i2.as_ref(), i2.as_ref()), identity(4));
        let a = from_real_diagonal(&[1.0, 2.0]);
        let b = from_real_diagonal(&[3.0, 4.0]);
        assert_eq!(kron(a.as_ref(), b.as_ref()), from_real_diagonal(&[3.0, 4.0, 6.0, 8.0]));
    }

    #[test]
    fn kron_mixed_product() {
        let mut r = rng(1);
        let m: Vec<_> = (0..4).map(|_| random_matrix(&mut r, 3, 3)).collect();
        let lhs = kron(m[0].as_ref(), m[1].as_ref()) * kron(m[2].as_ref(), m[3].as_ref());
        let rhs = kron((&m[0] * &m[2]).as_ref(), (&m[1] * &m[3]).as_ref());
        assert!(max_diff(lhs.as_ref(), rhs.as_ref()) < 1e-12);
    }

    #[test]
    fn vec_is_column_stacking() {
        let a = Mat::from_fn(2, 2, |i, j| c((2 * i + j + 1) as f64));
        let v = vec(a.as_ref());
        let got: Vec<f64> = v.iter().map(|z| z.re).collect();
        assert_eq!(got, vec![1.0, 3.0, 2.0, 4.0]);
        assert!(unvec(v.as_ref(), 3, 2).is_err());
    }

    #[test]
    fn vec_of_product_is_kron_action() {
        let mut r = rng(2);
        for _ in 0..5 {
            let (x, y, z) = (
                random_matrix(&mut r, 2, 2),
                random_matrix(&mut r, 2, 2),
                random_matrix(&mut r, 2, 2),
            );
            let lhs = vec((&x * &y * &z).as_ref());
            let rhs = kron(z.transpose(), x.as_ref()) * vec(y.as_ref());
            assert!((lhs - rhs).norm_l2() < 1e-12);
        }
    }

    #[test]
    fn pinv_of_singular_diagonal() {
        let p = pinv(from_real_diagonal(&[2.0, 0.0]).as_ref(), DEFAULT_PINV_REL_TOL).unwrap();
        assert_eq!(p.rank, 1);
        assert!(max_diff(p.matrix.as_ref(), from_real_diagonal(&[0.5, 0.0]).as_ref()) < 1e-15);
    }

    #[test]
    fn pinv_rejects_bad_tolerance() {
        let a = identity(2);
        assert!(pinv(a.as_ref(), 0.0).is_err());
        assert!(pinv(a.as_ref(), 1.0).is_err());
    }

    #[test]
    fn pinv_matches_inverse_for_invertible() {
        let mut r = rng(3);
        let a = random_matrix(&mut r, 5, 5);
        let p = pinv(a.as_ref(), DEFAULT_PINV_REL_TOL).unwrap();
        let inv = faer::linalg::solvers::DenseSolveCore::inverse(&a.partial_piv_lu());
        assert_eq!(p.rank, 5);
        assert!(max_diff(p.matrix.as_ref(), inv.as_ref()) <= 1e-10);
    }

    #[test]
    fn pinv_projector_is_range_projector() {
        let mut r = rng(4);
        let b = random_matrix(&mut r, 6, 3);
        let c = random_matrix(&mut r, 3, 6);
        let a = &b * &c;
        let p = pinv(a.as_ref(), DEFAULT_PINV_REL_TOL).unwrap();
        assert_eq!(p.rank, 3);
        let proj = &a * &p.matrix;
        // independent projector from the left singular vectors of the range
        let svd = a.thin_svd().unwrap();
        let u3 = svd.U().subcols(0, 3);
        let oracle = u3 * u3.adjoint();
        assert!(max_diff(proj.as_ref(), oracle.as_ref()) < 1e-10);
        assert!(max_diff((&proj * &proj).as_ref(), proj.as_ref()) < 1e-10);
    }

    #[test]
    fn cholesky_identity_and_diagonal() {
        assert_eq!(cholesky_lower(identity(3).as_ref()).unwrap(), identity(3));
        let l = cholesky_lower(from_real_diagonal(&[4.0, 9.0]).as_ref()).unwrap();
        assert!(max_diff(l.as_ref(), from_real_diagonal(&[2.0, 3.0]).as_ref()) < 1e-15);
    }

    #[test]
    fn cholesky_reconstructs_random_positive_matrix() {
        let mut r = rng(5);
        let b = random_matrix(&mut r, 8, 8);
        let a = &b * b.adjoint() + identity(8) * faer::Scale(c(1e-3));
        let l = cholesky_lower(a.as_ref()).unwrap();
        for i in 0..8 {
            assert!(l[(i, i)].im == 0.0 && l[(i, i)].re > 0.0);
            for j in i + 1..8 {
                assert_eq!(l[(i, j)], c(0.0));
            }
        }
        assert!(max_diff((&l * l.adjoint()).as_ref(), a.as_ref()) <= 1e-12);
        // uniqueness: refactoring L L† gives L back
        let l2 = cholesky_lower((&l * l.adjoint()).as_ref()).unwrap();
        assert!(max_diff(l2.as_ref(), l.as_ref()) < 1e-10);
    }

    #[test]
    fn cholesky_rejects_singular_and_non_hermitian() {
        let pure = from_real_diagonal(&[1.0, 0.0]);
        assert!(matches!(
            cholesky_lower(pure.as_ref()),
            Err(Error::NotPositiveDefinite { index: 1, .. })
        ));
        let mut a = identity(2);
        a[(0, 1)] = c(0.5);
        assert!(matches!(cholesky_lower(a.as_ref()), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn min_eigenvalue_simple_cases() {
        assert!((min_eigenvalue_hermitian(identity(3).as_ref()).unwrap() - 1.0).abs() < 1e-15);
        let d = from_real_diagonal(&[0.3, -0.1]);
        assert!((min_eigenvalue_hermitian(d.as_ref()).unwrap() + 0.1).abs() < 1e-15);
    }

    #[test]
    fn min_eigenvalue_matches_full_spectrum() {
        let mut r = rng(6);
        let h = random_hermitian(&mut r, 10);
        let full = h.eigenvalues().unwrap();
        let oracle = full.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        let got = min_eigenvalue_hermitian(h.as_ref()).unwrap();
        assert!((got - oracle).abs() < 1e-12);
    }

    #[test]
    fn sparse_kron_matches_dense() {
        let mut r = rng(7);
        let a = random_matrix(&mut r, 3, 2);
        let b = random_matrix(&mut r, 2, 4);
        let mut t = Vec::new();
        kron_triplets(&nonzeros(a.as_ref()), &nonzeros(b.as_ref()), 2, 4, c(2.0), &mut t);
        // duplicate entries are summed
        t.push(Triplet::new(0, 0, c(1.0)));
        let s = sparse_from_triplets(6, 8, &t).unwrap();
        let mut dense = kron(a.as_ref(), b.as_ref()) * faer::Scale(c(2.0));
        dense[(0, 0)] += c(1.0);
        assert!(max_diff(s.to_dense().as_ref(), dense.as_ref()) < 1e-14);
        let x = Col::from_fn(8, |k| c64::new(k as f64, 1.0));
        assert!((sparse_matvec(&s, x.as_ref()) - &dense * &x).norm_l2() < 1e-12);
        let y = Col::from_fn(6, |k| c64::new(1.0, k as f64));
        assert!((sparse_adjoint_matvec(&s, y.as_ref()) - dense.adjoint() * &y).norm_l2() < 1e-12);
    }

    #[test]
    fn trace_norm_of_hermitian_is_abs_eigen_sum() {
        let d = from_real_diagonal(&[0.5, -0.25, 0.0]);
        assert!((trace_norm(d.as_ref()).unwrap() - 0.75).abs() < 1e-15);
    }
}
