//! Amplitude-matrix perturbation theory.
//!
//! The steady state is written as `ρ = ζζ†` with lower-triangular `ζ`. The
//! series `ζ = Σ α^j ζ⁽ʲ⁾` starts from the Cholesky factor of `ρ⁽⁰⁾ + c𝟙` and
//! each higher order solves `Z₀ζ⁽ʲ⁾ = ρ⁽ʲ⁾ - Σ_{k=1}^{j-1} ζ⁽ᵏ⁾ζ⁽ʲ⁻ᵏ⁾†`
//! with `Z₀X = ζ⁽⁰⁾X† + Xζ⁽⁰⁾†`. The reconstruction `N[ζ̃ζ̃†]` is positive
//! semidefinite for any truncation.

use faer::sparse::linalg::triangular_solve::{
    solve_lower_triangular_in_place, solve_lower_triangular_transpose_in_place,
};
use faer::sparse::{SparseColMat, Triplet};
use faer::{c64, Col, Conj, Mat, MatRef, Par};

use crate::error::{Error, Result};
use crate::linalg::{self, cholesky_lower, hermitian_part, hermiticity_deviation, identity, ComplexMatrix};

/// A diagonal entry of `ζ⁽⁰⁾` at or below this fraction of the largest one
/// makes `Z₀` singular.
pub const Z0_PIVOT_TOL: f64 = 1e-14;

/// Allowed relative anti-Hermitian part of the right-hand side at each order.
pub const RHS_HERMITIAN_TOL: f64 = 1e-9;

/// Regularization used when `ρ⁽⁰⁾` is (numerically) rank deficient.
pub const DEFAULT_REG_C: f64 = 1e-9;

/// Growth of the corrections, when `c` shrinks a hundredfold, above which
/// the series is declared to have no power-series solution.
pub const BREAKDOWN_GROWTH: f64 = 3.0;

#[derive(Debug, Clone)]
pub struct AmplitudeSeries {
    pub order: usize,
    /// `ζ⁽⁰⁾ … ζ⁽ᴹ⁾`, all lower-triangular with real diagonals.
    pub corrections: Vec<ComplexMatrix>,
    pub reg_c: f64,
    /// 1-norm condition estimate of the real `Z₀` system.
    pub z0_condition: f64,
    /// Basis ordering: position `k` of the corrections is original index
    /// `permutation[k]`.
    pub permutation: Vec<usize>,
}

impl AmplitudeSeries {
    /// `Σ_{j≤M} α^j ζ⁽ʲ⁾` in the original basis.
    pub fn amplitude_at(&self, alpha: f64) -> ComplexMatrix {
        let d = self.corrections[0].nrows();
        let mut acc = Mat::<c64>::zeros(d, d);
        let mut p = 1.0;
        for z in &self.corrections {
            acc += z * faer::Scale(c64::new(p, 0.0));
            p *= alpha;
        }
        unpermute(acc.as_ref(), &self.permutation)
    }

    pub fn is_reordered(&self) -> bool {
        self.permutation.iter().enumerate().any(|(k, &i)| k != i)
    }
}

/// Basis ordering for the amplitude series of `rho0`: identity if greedy
/// diagonal pivoting never meets a negligible pivot, otherwise the pivots
/// that carry the support of `rho0` followed by the rest in natural order.
pub fn support_first_ordering(rho0: MatRef<'_, c64>) -> Vec<usize> {
    let d = rho0.nrows();
    let mut work = hermitian_part(rho0);
    let mut diag: Vec<f64> = (0..d).map(|i| work[(i, i)].re).collect();
    let scale = diag.iter().cloned().fold(0.0f64, f64::max);
    let tol = 1e-10 * scale.max(f64::MIN_POSITIVE);
    let mut chosen = vec![false; d];
    let mut order = Vec::with_capacity(d);
    for _ in 0..d {
        let mut best: Option<usize> = None;
        for i in 0..d {
            if !chosen[i] && best.map_or(true, |b| diag[i] > diag[b]) {
                best = Some(i);
            }
        }
        let p = best.expect("remaining index");
        if diag[p] <= tol {
            break;
        }
        chosen[p] = true;
        order.push(p);
        let piv = diag[p].sqrt();
        let col: Vec<c64> = (0..d).map(|i| if chosen[i] { c64::new(0.0, 0.0) } else { work[(i, p)] / piv }).collect();
        for j in 0..d {
            if chosen[j] || col[j] == c64::new(0.0, 0.0) {
                continue;
            }
            for i in 0..d {
                if !chosen[i] {
                    work[(i, j)] -= col[i] * col[j].conj();
                }
            }
            diag[j] = work[(j, j)].re;
        }
    }
    if order.len() == d {
        return (0..d).collect();
    }
    order.extend((0..d).filter(|&i| !chosen[i]));
    order
}

fn permute(a: MatRef<'_, c64>, perm: &[usize]) -> ComplexMatrix {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(perm[i], perm[j])])
}

fn unpermute(a: MatRef<'_, c64>, perm: &[usize]) -> ComplexMatrix {
    let mut out = Mat::<c64>::zeros(a.nrows(), a.ncols());
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            out[(perm[i], perm[j])] = a[(i, j)];
        }
    }
    out
}

/// `ρ⁽⁰⁾ + c𝟙 = ζ⁽⁰⁾ζ⁽⁰⁾†` with `ζ⁽⁰⁾` lower-triangular.
pub fn seed_amplitude(rho0: MatRef<'_, c64>, c: f64) -> Result<ComplexMatrix> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::InvalidArgument(format!("correction parameter c must be >= 0, got {c}")));
    }
    let shifted = rho0.to_owned() + identity(rho0.nrows()) * faer::Scale(c64::new(c, 0.0));
    cholesky_lower(shifted.as_ref())
}

/// `c = 0` for a full-rank seed state, [`DEFAULT_REG_C`] otherwise.
pub fn default_reg_c(rho0: MatRef<'_, c64>) -> Result<f64> {
    let min = linalg::min_eigenvalue_hermitian(rho0)?;
    Ok(if min > 1e-8 { 0.0 } else { DEFAULT_REG_C })
}

/// Real coordinates of lower-triangular matrices with real diagonal (and,
/// equally, of Hermitian matrices through their lower triangle). Column `j`
/// contributes `Re X_jj` followed by `Re X_ij, Im X_ij` for `i > j`.
#[derive(Debug, Clone)]
struct Coords {
    d: usize,
    offset: Vec<usize>,
}

impl Coords {
    fn new(d: usize) -> Self {
        let mut offset = Vec::with_capacity(d + 1);
        let mut acc = 0;
        for j in 0..d {
            offset.push(acc);
            acc += 1 + 2 * (d - 1 - j);
        }
        offset.push(acc);
        Self { d, offset }
    }

    fn len(&self) -> usize {
        self.d * self.d
    }

    fn diag(&self, j: usize) -> usize {
        self.offset[j]
    }

    /// Index of `Re X_ij`; `Im X_ij` follows it.
    fn off(&self, i: usize, j: usize) -> usize {
        self.offset[j] + 1 + 2 * (i - j - 1)
    }

    fn pack(&self, h: MatRef<'_, c64>) -> Col<f64> {
        let mut v = Col::<f64>::zeros(self.len());
        for j in 0..self.d {
            v[self.diag(j)] = h[(j, j)].re;
            for i in j + 1..self.d {
                let k = self.off(i, j);
                v[k] = h[(i, j)].re;
                v[k + 1] = h[(i, j)].im;
            }
        }
        v
    }

    fn unpack_lower(&self, v: &Col<f64>) -> ComplexMatrix {
        let mut x = Mat::<c64>::zeros(self.d, self.d);
        for j in 0..self.d {
            x[(j, j)] = c64::new(v[self.diag(j)], 0.0);
            for i in j + 1..self.d {
                let k = self.off(i, j);
                x[(i, j)] = c64::new(v[k], v[k + 1]);
            }
        }
        x
    }
}

/// The real-linear map `X ↦ ζ⁽⁰⁾X† + Xζ⁽⁰⁾†` from lower-triangular `X`
/// with real diagonal to Hermitian matrices.
///
/// In the coordinate order of column-by-column traversal the map is lower
/// triangular with diagonal entries `2ζ⁽⁰⁾_jj` and `ζ⁽⁰⁾_jj`, so it is
/// solved by sparse forward substitution.
#[derive(Debug, Clone)]
pub struct Z0System {
    zeta0: ComplexMatrix,
    real_linear_matrix: SparseColMat<usize, f64>,
    coords: Coords,
}

/// Assembles the `d² x d²` real system for `ζ⁽⁰⁾`.
pub fn build_z0_system(zeta0: MatRef<'_, c64>) -> Result<Z0System> {
    let d = zeta0.nrows();
    if zeta0.ncols() != d || d == 0 {
        return Err(Error::DimensionMismatch(format!(
            "zeta0 must be square, got {}x{}",
            zeta0.nrows(),
            zeta0.ncols()
        )));
    }
    linalg::ensure_finite(zeta0)?;
    for j in 0..d {
        if zeta0[(j, j)].im != 0.0 {
            return Err(Error::InvalidArgument(format!("zeta0[{j},{j}] is not real")));
        }
        for i in 0..j {
            if zeta0[(i, j)] != c64::new(0.0, 0.0) {
                return Err(Error::InvalidArgument("zeta0 is not lower-triangular".into()));
            }
        }
    }
    let coords = Coords::new(d);
    let mut t: Vec<Triplet<usize, usize, f64>> = Vec::new();
    let mut out: Vec<(usize, usize, c64)> = Vec::with_capacity(2 * d);
    // image of each real basis element E = v|p⟩⟨q|
    for q in 0..d {
        for p in q..d {
            let units: &[(c64, usize)] = if p == q {
                &[(c64::new(1.0, 0.0), 0)]
            } else {
                &[(c64::new(1.0, 0.0), 0), (c64::new(0.0, 1.0), 1)]
            };
            for &(v, part) in units {
                let col = if p == q { coords.diag(q) } else { coords.off(p, q) + part };
                out.clear();
                // ζE†: column p, rows r ≥ p
                for r in p..d {
                    out.push((r, p, zeta0[(r, q)] * v.conj()));
                }
                // Eζ†: row p, columns q ≤ s ≤ p
                for s in q..=p {
                    out.push((p, s, v * zeta0[(s, q)].conj()));
                }
                for &(r, s, z) in &out {
                    let entries = if r == s {
                        [(coords.diag(r), z.re), (usize::MAX, 0.0)]
                    } else {
                        let k = coords.off(r, s);
                        [(k, z.re), (k + 1, z.im)]
                    };
                    // structural zeros above the diagonal (Re/Im of the
                    // same entry) are dropped to keep the matrix triangular
                    for (row, val) in entries {
                        if row != usize::MAX && row >= col {
                            t.push(Triplet::new(row, col, val));
                        }
                    }
                }
            }
        }
    }
    let n = coords.len();
    let real_linear_matrix = SparseColMat::try_new_from_triplets(n, n, &t)
        .map_err(|e| Error::Internal(format!("Z0 assembly failed: {e:?}")))?;
    Ok(Z0System { zeta0: zeta0.to_owned(), real_linear_matrix, coords })
}

impl Z0System {
    pub fn zeta0(&self) -> &ComplexMatrix {
        &self.zeta0
    }

    pub fn dim(&self) -> usize {
        self.coords.d
    }

    /// The `d² x d²` real system in sparse form.
    pub fn real_linear_matrix(&self) -> &SparseColMat<usize, f64> {
        &self.real_linear_matrix
    }

    pub fn real_linear_matrix_dense(&self) -> Mat<f64> {
        self.real_linear_matrix.to_dense()
    }

    /// `ζ⁽⁰⁾X† + Xζ⁽⁰⁾†`.
    pub fn apply(&self, x: MatRef<'_, c64>) -> ComplexMatrix {
        &self.zeta0 * x.adjoint() + x * self.zeta0.adjoint()
    }

    fn check_pivots(&self) -> Result<()> {
        let d = self.dim();
        let max = (0..d).map(|j| self.zeta0[(j, j)].re.abs()).fold(0.0, f64::max);
        for j in 0..d {
            let pivot = self.zeta0[(j, j)].re;
            if !(pivot.abs() > Z0_PIVOT_TOL * max) {
                return Err(Error::SingularZ0 { index: j, pivot });
            }
        }
        Ok(())
    }

    /// Lower-triangular `X` with real diagonal such that `Z₀X = h`.
    pub fn solve(&self, h: MatRef<'_, c64>) -> Result<ComplexMatrix> {
        let d = self.dim();
        if h.nrows() != d || h.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side is {}x{}, expected {d}x{d}",
                h.nrows(),
                h.ncols()
            )));
        }
        self.check_pivots()?;
        let mut v = self.coords.pack(h);
        solve_lower_triangular_in_place(self.real_linear_matrix.as_ref(), Conj::No, v.as_mat_mut(), Par::Seq);
        Ok(self.coords.unpack_lower(&v))
    }

    fn solve_real(&self, v: &mut Col<f64>, transpose: bool) {
        let m = self.real_linear_matrix.as_ref();
        if transpose {
            solve_lower_triangular_transpose_in_place(m, Conj::No, v.as_mat_mut(), Par::Seq);
        } else {
            solve_lower_triangular_in_place(m, Conj::No, v.as_mat_mut(), Par::Seq);
        }
    }

    /// 1-norm condition number estimate (Hager's method); infinite when a
    /// pivot vanishes.
    pub fn condition_estimate(&self) -> f64 {
        if self.check_pivots().is_err() {
            return f64::INFINITY;
        }
        let m = &self.real_linear_matrix;
        let n = m.ncols();
        let sym = m.symbolic();
        let norm1 = (0..n)
            .map(|j| m.val()[sym.col_ptr()[j]..sym.col_ptr()[j + 1]].iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let mut x = Col::<f64>::from_fn(n, |_| 1.0 / n as f64);
        let mut est = 0.0;
        for _ in 0..5 {
            let mut y = x.clone();
            self.solve_real(&mut y, false);
            est = y.iter().map(|v| v.abs()).sum::<f64>();
            let mut z = Col::<f64>::from_fn(n, |i| if y[i] >= 0.0 { 1.0 } else { -1.0 });
            self.solve_real(&mut z, true);
            let (jmax, zmax) = z
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc });
            let ztx: f64 = z.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
            if zmax <= ztx {
                break;
            }
            x = Col::<f64>::zeros(n);
            x[jmax] = 1.0;
        }
        norm1 * est
    }
}

fn check_seed_state(rho0: MatRef<'_, c64>) -> Result<()> {
    let tr = linalg::trace(rho0);
    if (tr - c64::new(1.0, 0.0)).norm() > 1e-10 {
        return Err(Error::InvalidArgument(format!("seed state has trace {tr}, expected 1")));
    }
    let min = linalg::min_eigenvalue_hermitian(rho0)?;
    if min < -1e-12 {
        return Err(Error::InvalidArgument(format!(
            "seed state is not positive semidefinite (min eigenvalue {min:.3e})"
        )));
    }
    Ok(())
}

/// Amplitude corrections `ζ⁽⁰⁾ … ζ⁽ᴹ⁾` from density corrections
/// `ρ⁽⁰⁾ … ρ⁽ᴹ⁾` with correction-matrix parameter `c`.
pub fn amp_pt_corrections(rho_corrections: &[ComplexMatrix], c: f64) -> Result<AmplitudeSeries> {
    if rho_corrections.is_empty() {
        return Err(Error::InvalidArgument("no density corrections given".into()));
    }
    let rhos: Vec<ComplexMatrix> = rho_corrections
        .iter()
        .map(|r| linalg::require_hermitian(r.as_ref()))
        .collect::<Result<_>>()?;
    check_seed_state(rhos[0].as_ref())?;
    let permutation = support_first_ordering(rhos[0].as_ref());
    amp_pt_in_ordering(&rhos, c, permutation)
}

/// [`amp_pt_corrections`] in the natural basis ordering, without reordering.
pub fn amp_pt_corrections_unordered(rho_corrections: &[ComplexMatrix], c: f64) -> Result<AmplitudeSeries> {
    let rhos: Vec<ComplexMatrix> = rho_corrections
        .iter()
        .map(|r| linalg::require_hermitian(r.as_ref()))
        .collect::<Result<_>>()?;
    let first = rhos.first().ok_or_else(|| Error::InvalidArgument("no density corrections given".into()))?;
    check_seed_state(first.as_ref())?;
    let d = first.nrows();
    amp_pt_in_ordering(&rhos, c, (0..d).collect())
}

fn amp_pt_in_ordering(rhos: &[ComplexMatrix], c: f64, permutation: Vec<usize>) -> Result<AmplitudeSeries> {
    let rhos: Vec<ComplexMatrix> = rhos.iter().map(|r| permute(r.as_ref(), &permutation)).collect();
    let rho0 = &rhos[0];
    let d = rho0.nrows();

    let zeta0 = seed_amplitude(rhos[0].as_ref(), c).map_err(|e| match e {
        Error::NotPositiveDefinite { index, pivot } => Error::SingularZ0 { index, pivot },
        other => other,
    })?;
    let system = build_z0_system(zeta0.as_ref())?;
    let mut zetas = vec![zeta0];
    for j in 1..rhos.len() {
        let mut rhs = rhos[j].clone();
        for k in 1..j {
            rhs -= &zetas[k] * zetas[j - k].adjoint();
        }
        let dev = hermiticity_deviation(rhs.as_ref());
        if dev > RHS_HERMITIAN_TOL {
            return Err(Error::Internal(format!(
                "right-hand side at order {j} is not Hermitian (deviation {dev:.3e})"
            )));
        }
        debug_assert_eq!(rhs.nrows(), d);
        zetas.push(system.solve(rhs.as_ref())?);
    }
    Ok(AmplitudeSeries {
        order: rhos.len() - 1,
        corrections: zetas,
        reg_c: c,
        z0_condition: system.condition_estimate(),
        permutation,
    })
}

/// [`amp_pt_corrections`] followed by a check that the corrections stay
/// bounded when `c` is reduced a hundredfold. Unbounded growth means the
/// amplitude has no power series in `α` and is reported as
/// [`Error::AmplitudeSeriesBreakdown`].
pub fn amp_pt_checked(rho_corrections: &[ComplexMatrix], c: f64) -> Result<AmplitudeSeries> {
    let series = amp_pt_corrections(rho_corrections, c)?;
    if c == 0.0 {
        return Ok(series);
    }
    let probe = amp_pt_corrections(rho_corrections, c / 100.0)?;
    let scale = series.corrections[0].norm_l2();
    let mut growth = 1.0f64;
    for (a, b) in series.corrections.iter().zip(&probe.corrections).skip(1) {
        let (na, nb) = (a.norm_l2(), b.norm_l2());
        if na.max(nb) <= 1e-12 * scale {
            continue;
        }
        growth = growth.max(nb / na.max(1e-300));
    }
    if growth > BREAKDOWN_GROWTH {
        return Err(Error::AmplitudeSeriesBreakdown { growth });
    }
    Ok(series)
}

/// `N[ζ̃ζ̃†]` with `ζ̃ = Σ_{j≤M} α^j ζ⁽ʲ⁾`.
pub fn reconstruct_density(series: &AmplitudeSeries, alpha: f64) -> Result<ComplexMatrix> {
    let z = series.amplitude_at(alpha);
    let rho = hermitian_part((&z * z.adjoint()).as_ref());
    crate::dm_pt::normalize(rho).map_err(|_| Error::Internal("amplitude series vanished".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{from_real_diagonal, max_abs};
    use crate::random::{random_hermitian, random_matrix, rng};

    fn r(x: f64) -> c64 {
        c64::new(x, 0.0)
    }

    fn random_lower(g: &mut crate::random::TestRng, d: usize) -> ComplexMatrix {
        let mut z = random_matrix(g, d, d);
        for j in 0..d {
            z[(j, j)] = r(1.0 + z[(j, j)].re.abs());
            for i in 0..j {
                z[(i, j)] = r(0.0);
            }
        }
        z
    }

    #[test]
    fn seed_of_diagonal_state() {
        let z = seed_amplitude(from_real_diagonal(&[0.25, 0.75]).as_ref(), 0.0).unwrap();
        assert!(max_abs((&z - from_real_diagonal(&[0.5, 0.75f64.sqrt()])).as_ref()) < 1e-15);
    }

    #[test]
    fn pure_seed_needs_regularization() {
        let pure = from_real_diagonal(&[1.0, 0.0]);
        assert!(matches!(seed_amplitude(pure.as_ref(), 0.0), Err(Error::NotPositiveDefinite { .. })));
        let z = seed_amplitude(pure.as_ref(), 1e-9).unwrap();
        assert!(max_abs((&z * z.adjoint() - &pure).as_ref()) <= 2e-9);
        assert!(matches!(
            amp_pt_corrections(&[pure], 0.0),
            Err(Error::SingularZ0 { index: 1, .. })
        ));
    }

    #[test]
    fn one_dimensional_system() {
        let s = build_z0_system(from_real_diagonal(&[0.3f64.sqrt()]).as_ref()).unwrap();
        let m = s.real_linear_matrix_dense();
        assert_eq!((m.nrows(), m.ncols()), (1, 1));
        assert!((m[(0, 0)] - 2.0 * 0.3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn identity_seed_gives_lower_part() {
        let mut g = rng(5);
        let h = random_hermitian(&mut g, 4);
        let s = build_z0_system(identity(4).as_ref()).unwrap();
        let x = s.solve(h.as_ref()).unwrap();
        for j in 0..4 {
            assert!((x[(j, j)] - h[(j, j)] * 0.5).norm() < 1e-15);
            for i in 0..4 {
                let expect = if i > j { h[(i, j)] } else if i < j { r(0.0) } else { x[(j, j)] };
                assert!((x[(i, j)] - expect).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn random_seed_residual_and_dense_agreement() {
        let mut g = rng(8);
        for d in [2, 4, 6] {
            let z0 = random_lower(&mut g, d);
            let s = build_z0_system(z0.as_ref()).unwrap();
            let h = random_hermitian(&mut g, d);
            let x = s.solve(h.as_ref()).unwrap();
            assert!(max_abs((s.apply(x.as_ref()) - &h).as_ref()) < 1e-10);
            // the assembled real matrix reproduces the map on random inputs
            let xr = random_lower(&mut g, d);
            let dense = s.real_linear_matrix_dense();
            let lhs = &dense * s.coords.pack(xr.as_ref());
            let rhs = s.coords.pack(s.apply(xr.as_ref()).as_ref());
            assert!((&lhs - &rhs).norm_l2() < 1e-12);
            // and is lower-triangular
            for j in 0..d * d {
                for i in 0..j {
                    assert_eq!(dense[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn condition_estimate_matches_dense_one_norm_condition() {
        let mut g = rng(21);
        let z0 = random_lower(&mut g, 4);
        let s = build_z0_system(z0.as_ref()).unwrap();
        let dense = s.real_linear_matrix_dense();
        let inv = faer::linalg::solvers::DenseSolveCore::inverse(&dense.partial_piv_lu());
        let norm1 = |m: &Mat<f64>| {
            (0..m.ncols()).map(|j| m.col(j).iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
        };
        let exact = norm1(&dense) * norm1(&inv);
        let est = s.condition_estimate();
        assert!(est <= exact * (1.0 + 1e-10) && est >= exact / 10.0, "est {est} exact {exact}");
    }

    #[test]
    fn zero_pivot_is_singular() {
        let z0 = from_real_diagonal(&[1.0, 0.0]);
        let s = build_z0_system(z0.as_ref()).unwrap();
        assert!(matches!(s.solve(identity(2).as_ref()), Err(Error::SingularZ0 { index: 1, .. })));
        assert!(s.condition_estimate().is_infinite());
    }

    #[test]
    fn null_perturbation() {
        let rho0 = from_real_diagonal(&[0.6, 0.4]);
        let zero = Mat::<c64>::zeros(2, 2);
        let s = amp_pt_corrections(&[rho0, zero.clone(), zero], 0.0).unwrap();
        assert_eq!(max_abs(s.corrections[1].as_ref()), 0.0);
        assert_eq!(max_abs(s.corrections[2].as_ref()), 0.0);
    }

    #[test]
    fn diagonal_toy_first_order() {
        let rho0 = from_real_diagonal(&[0.75, 0.25]);
        let rho1 = from_real_diagonal(&[-0.25, 0.25]);
        let s = amp_pt_corrections(&[rho0, rho1], 0.0).unwrap();
        let z1 = &s.corrections[1];
        assert!((z1[(0, 0)].re - (-0.25 / (2.0 * 0.75f64.sqrt()))).abs() < 1e-15);
        assert!((z1[(1, 1)].re - 0.25).abs() < 1e-15);
        assert!((z1[(0, 0)].re + 0.1443).abs() < 1e-4);
    }

    #[test]
    fn order_zero_reconstruction_is_shifted_seed() {
        let rho0 = from_real_diagonal(&[1.0, 0.0, 0.0]);
        let c = 1e-3;
        let s = amp_pt_corrections(&[rho0.clone()], c).unwrap();
        let rho = reconstruct_density(&s, 0.7).unwrap();
        let expect = (rho0 + identity(3) * faer::Scale(r(c))) * faer::Scale(r(1.0 / (1.0 + 3.0 * c)));
        assert!(max_abs((&rho - &expect).as_ref()) < 1e-15);
    }

    #[test]
    fn correction_rhs_mismatch_is_rejected() {
        let rho0 = from_real_diagonal(&[0.5, 0.5]);
        let mut bad = Mat::<c64>::zeros(2, 2);
        bad[(0, 1)] = r(1.0);
        assert!(matches!(amp_pt_corrections(&[rho0, bad], 0.0), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn default_c_policy() {
        assert_eq!(default_reg_c(from_real_diagonal(&[0.5, 0.5]).as_ref()).unwrap(), 0.0);
        assert_eq!(default_reg_c(from_real_diagonal(&[1.0, 0.0]).as_ref()).unwrap(), DEFAULT_REG_C);
    }

    fn rank_two_family() -> [ComplexMatrix; 3] {
        // ρ(α) = B(α)B(α)† with B(α) = B₀ + αB₁ of rank two, B₀ supported on {0, 2}
        let mut g = rng(17);
        let mut b0 = Mat::<c64>::zeros(3, 3);
        b0[(0, 0)] = r(0.8);
        b0[(2, 0)] = c64::new(0.3, 0.2);
        b0[(2, 2)] = r(0.4);
        let tr0 = linalg::trace((&b0 * b0.adjoint()).as_ref()).re;
        b0 = b0 * faer::Scale(r(1.0 / tr0.sqrt()));
        let mut b1 = random_matrix(&mut g, 3, 3);
        for i in 0..3 {
            b1[(i, 1)] = r(0.0);
        }
        let rho0 = hermitian_part((&b0 * b0.adjoint()).as_ref());
        let rho1 = hermitian_part((&b0 * b1.adjoint() + &b1 * b0.adjoint()).as_ref());
        let rho2 = hermitian_part((&b1 * b1.adjoint()).as_ref());
        [rho0, rho1, rho2]
    }

    #[test]
    fn support_first_ordering_of_interleaved_state() {
        let [rho0, ..] = rank_two_family();
        assert_eq!(support_first_ordering(rho0.as_ref()), vec![0, 2, 1]);
        assert_eq!(support_first_ordering(from_real_diagonal(&[0.5, 0.5]).as_ref()), vec![0, 1]);
        assert_eq!(support_first_ordering(from_real_diagonal(&[0.0, 1.0]).as_ref()), vec![1, 0]);
    }

    #[test]
    fn ordering_keeps_corrections_bounded_as_c_shrinks() {
        let rhos = rank_two_family();
        let norm = |c: f64, ordered: bool| {
            let s = if ordered {
                amp_pt_corrections(&rhos, c).unwrap()
            } else {
                amp_pt_corrections_unordered(&rhos, c).unwrap()
            };
            s.corrections[1].norm_l2() + s.corrections[2].norm_l2()
        };
        assert!((norm(1e-6, true) - norm(1e-10, true)).abs() < 1e-2);
        assert!(norm(1e-10, false) > 10.0 * norm(1e-6, false));
        let s = amp_pt_corrections(&rhos, 1e-10).unwrap();
        assert!(s.is_reordered());
        let alpha = 0.05;
        let exact = crate::dm_pt::normalize(
            &rhos[0] + &rhos[1] * faer::Scale(r(alpha)) + &rhos[2] * faer::Scale(r(alpha * alpha)),
        )
        .unwrap();
        let rho = reconstruct_density(&s, alpha).unwrap();
        let err = max_abs((&rho - &exact).as_ref());
        assert!(err < alpha * alpha, "{err}");
    }

    #[test]
    fn pumped_qubit_has_no_amplitude_series() {
        use crate::dm_pt::{pt_steady_state, PTSplit};
        use crate::liouville::{dissipator_superop, sigma_minus, HilbertSpace};
        let hs = HilbertSpace::new(vec![2]).unwrap();
        let sm = sigma_minus();
        let l0 = dissipator_superop(sm.as_ref(), &hs).unwrap();
        let l1 = dissipator_superop(sm.adjoint().to_owned().as_ref(), &hs).unwrap();
        let split = PTSplit::new(l0, l1, 0.01).unwrap();
        let series = pt_steady_state(&split, 2).unwrap();
        assert!(matches!(
            amp_pt_checked(&series.state_corrections, 1e-9),
            Err(Error::AmplitudeSeriesBreakdown { .. })
        ));
    }
}
