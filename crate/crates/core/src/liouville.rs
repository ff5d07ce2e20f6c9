//! Lindblad generators as superoperator matrices, their bi-orthonormal
//! eigensystems and exact steady states.

use std::cmp::Ordering;

use faer::linalg::solvers::DenseSolveCore;
use faer::prelude::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::Triplet;
use faer::{c64, Col, ColRef, Mat, MatRef};

use crate::error::{Error, Result};
use crate::linalg::{
    self, hermitian_part, identity, inner, kron_triplets, nonzeros, sparse_adjoint_matvec,
    sparse_from_triplets, sparse_matvec, trace, unvec, ComplexMatrix, ComplexVector, SparseMatrix,
};

/// Eigenvector matrices with a 2-norm condition number above this are
/// reported as defective.
pub const DEFECTIVE_CONDITION: f64 = 1e10;

/// Two eigenvalues closer than this (relative to `‖ℒ‖`) are degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// Tensor-product structure of the system Hilbert space.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct HilbertSpace {
    subsystem_dims: Vec<usize>,
}

impl HilbertSpace {
    pub fn new(subsystem_dims: Vec<usize>) -> Result<Self> {
        if subsystem_dims.is_empty() || subsystem_dims.iter().any(|&d| d < 2) {
            return Err(Error::InvalidArgument(format!(
                "subsystem dimensions must all be >= 2, got {subsystem_dims:?}"
            )));
        }
        Ok(Self { subsystem_dims })
    }

    pub fn subsystem_dims(&self) -> &[usize] {
        &self.subsystem_dims
    }

    pub fn dim(&self) -> usize {
        self.subsystem_dims.iter().product()
    }

    pub fn liouville_dim(&self) -> usize {
        self.dim() * self.dim()
    }

    /// `1 ⊗ … ⊗ op ⊗ … ⊗ 1` with `op` acting on subsystem `site`.
    pub fn embed(&self, op: MatRef<'_, c64>, site: usize) -> Result<ComplexMatrix> {
        let ds = *self.subsystem_dims.get(site).ok_or_else(|| {
            Error::InvalidArgument(format!("site {site} out of range"))
        })?;
        if op.nrows() != ds || op.ncols() != ds {
            return Err(Error::DimensionMismatch(format!(
                "operator is {}x{}, subsystem {site} has dimension {ds}",
                op.nrows(),
                op.ncols()
            )));
        }
        let mut out = identity(1);
        for (k, &d) in self.subsystem_dims.iter().enumerate() {
            out = if k == site {
                linalg::kron(out.as_ref(), op)
            } else {
                linalg::kron(out.as_ref(), identity(d).as_ref())
            };
        }
        Ok(out)
    }

    fn check_operator(&self, op: MatRef<'_, c64>) -> Result<()> {
        let d = self.dim();
        if op.nrows() != d || op.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "operator is {}x{}, Hilbert space has dimension {d}",
                op.nrows(),
                op.ncols()
            )));
        }
        linalg::ensure_finite(op)
    }
}

#[derive(Debug, Clone)]
pub struct Channel {
    pub collapse: ComplexMatrix,
    /// Non-negative rate (angular frequency).
    pub rate: f64,
}

/// Hamiltonian plus dissipative channels, `ℒρ = -i[H, ρ] + Σ_k γ_k 𝔻[c_k]ρ`.
#[derive(Debug, Clone)]
pub struct LindbladSpec {
    pub hilbert: HilbertSpace,
    pub hamiltonian: ComplexMatrix,
    pub channels: Vec<Channel>,
}

/// A superoperator stored as a sparse `D x D` matrix acting on `vec(ρ)`.
#[derive(Debug, Clone)]
pub struct SuperOp {
    matrix: SparseMatrix,
    hilbert: HilbertSpace,
}

impl SuperOp {
    pub fn from_sparse(matrix: SparseMatrix, hilbert: HilbertSpace) -> Result<Self> {
        let dim = hilbert.liouville_dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "superoperator must be {dim}x{dim}, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { matrix, hilbert })
    }

    pub fn from_dense(matrix: MatRef<'_, c64>, hilbert: HilbertSpace) -> Result<Self> {
        let triplets: Vec<_> = nonzeros(matrix)
            .into_iter()
            .map(|(i, j, v)| Triplet::new(i, j, v))
            .collect();
        let n = matrix.nrows();
        Self::from_sparse(sparse_from_triplets(n, matrix.ncols(), &triplets)?, hilbert)
    }

    pub fn zero(hilbert: HilbertSpace) -> Self {
        let n = hilbert.liouville_dim();
        let matrix = sparse_from_triplets(n, n, &[]).expect("empty triplet list");
        Self { matrix, hilbert }
    }

    pub fn hilbert(&self) -> &HilbertSpace {
        &self.hilbert
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn to_dense(&self) -> ComplexMatrix {
        self.matrix.to_dense()
    }

    pub fn apply_vec(&self, x: ColRef<'_, c64>) -> ComplexVector {
        sparse_matvec(&self.matrix, x)
    }

    pub fn apply_adjoint_vec(&self, x: ColRef<'_, c64>) -> ComplexVector {
        sparse_adjoint_matvec(&self.matrix, x)
    }

    /// `ℒ ρ` as a `d x d` matrix.
    pub fn apply(&self, rho: MatRef<'_, c64>) -> Result<ComplexMatrix> {
        let d = self.hilbert.dim();
        if rho.nrows() != d || rho.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "state is {}x{}, expected {d}x{d}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        unvec(self.apply_vec(linalg::vec(rho).as_ref()).as_ref(), d, d)
    }

    /// Frobenius norm of the superoperator matrix.
    pub fn norm(&self) -> f64 {
        self.matrix.val().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `Σ_k c_k 𝕃_k` over superoperators on the same space.
    pub fn linear_combination(terms: &[(c64, &SuperOp)]) -> Result<SuperOp> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty linear combination".into()))?;
        let hilbert = first.1.hilbert.clone();
        let mut triplets = Vec::new();
        for (coef, op) in terms {
            if op.hilbert != hilbert {
                return Err(Error::DimensionMismatch(
                    "superoperators act on different spaces".into(),
                ));
            }
            for t in op.matrix.triplet_iter() {
                triplets.push(Triplet::new(t.row, t.col, *coef * *t.val));
            }
        }
        let n = hilbert.liouville_dim();
        Ok(SuperOp {
            matrix: sparse_from_triplets(n, n, &triplets)?,
            hilbert,
        })
    }

    /// `max_j |(vec(𝟙)† ℒ)_j|`; zero for a trace-preserving generator.
    pub fn trace_preservation_defect(&self) -> f64 {
        let d = self.hilbert.dim();
        let ident = linalg::vec(identity(d).as_ref());
        let row = self.apply_adjoint_vec(ident.as_ref());
        row.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Same matrix with every entry negated; used for mutation tests.
    pub fn negated(&self) -> SuperOp {
        SuperOp::linear_combination(&[(c64::new(-1.0, 0.0), self)]).expect("single term")
    }
}

/// `-i(1 ⊗ H - Hᵀ ⊗ 1)`, the matrix of `ρ ↦ -i[H, ρ]`.
pub fn hamiltonian_superop(h: MatRef<'_, c64>, hilbert: &HilbertSpace) -> Result<SuperOp> {
    hilbert.check_operator(h)?;
    let d = hilbert.dim();
    let id = nonzeros(identity(d).as_ref());
    let hz = nonzeros(h);
    let ht = nonzeros(h.transpose());
    let mut t = Vec::new();
    kron_triplets(&id, &hz, d, d, c64::new(0.0, -1.0), &mut t);
    kron_triplets(&ht, &id, d, d, c64::new(0.0, 1.0), &mut t);
    SuperOp::from_sparse(sparse_from_triplets(d * d, d * d, &t)?, hilbert.clone())
}

/// Matrix of `𝔻[c]ρ = cρc† - ½c†cρ - ½ρc†c`:
/// `conj(c) ⊗ c - ½ 1 ⊗ c†c - ½ (c†c)ᵀ ⊗ 1`.
pub fn dissipator_superop(c: MatRef<'_, c64>, hilbert: &HilbertSpace) -> Result<SuperOp> {
    hilbert.check_operator(c)?;
    let d = hilbert.dim();
    let id = nonzeros(identity(d).as_ref());
    let cdc = c.adjoint() * c;
    let mut t = Vec::new();
    kron_triplets(&nonzeros(c.conjugate().to_owned().as_ref()), &nonzeros(c), d, d, c64::new(1.0, 0.0), &mut t);
    kron_triplets(&id, &nonzeros(cdc.as_ref()), d, d, c64::new(-0.5, 0.0), &mut t);
    kron_triplets(&nonzeros(cdc.transpose()), &id, d, d, c64::new(-0.5, 0.0), &mut t);
    SuperOp::from_sparse(sparse_from_triplets(d * d, d * d, &t)?, hilbert.clone())
}

pub fn build_liouvillian(spec: &LindbladSpec) -> Result<SuperOp> {
    let h = linalg::require_hermitian(spec.hamiltonian.as_ref())?;
    let mut parts = vec![(c64::new(1.0, 0.0), hamiltonian_superop(h.as_ref(), &spec.hilbert)?)];
    for ch in &spec.channels {
        if !(ch.rate >= 0.0) || !ch.rate.is_finite() {
            return Err(Error::InvalidArgument(format!("channel rate must be >= 0, got {}", ch.rate)));
        }
        if ch.rate > 0.0 {
            parts.push((c64::new(ch.rate, 0.0), dissipator_superop(ch.collapse.as_ref(), &spec.hilbert)?));
        }
    }
    let refs: Vec<(c64, &SuperOp)> = parts.iter().map(|(c, s)| (*c, s)).collect();
    SuperOp::linear_combination(&refs)
}

/// One mode of a generator: eigenvalue with right and left eigenstates,
/// normalized so that `⟨left, right⟩ = 1`.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: c64,
    pub right: ComplexMatrix,
    pub left: ComplexMatrix,
}

fn spectral_order(a: &c64, b: &c64) -> Ordering {
    b.re.total_cmp(&a.re)
        .then(a.im.abs().total_cmp(&b.im.abs()))
        .then(b.im.total_cmp(&a.im))
}

/// Complete bi-orthonormal eigensystem of a (dense-sized) generator.
///
/// Left eigenstates are the rows of the inverse right-eigenvector matrix,
/// so `⟨σ^μ, ρ^ν⟩ = δ_{μν}` holds by construction. Pairs are sorted by
/// descending real part, then ascending `|Im λ|`. When the leading
/// eigenvalue is zero its right eigenstate is returned Hermitian with unit
/// trace.
pub fn eig_biorthonormal(sop: &SuperOp) -> Result<Vec<EigenPair>> {
    let d = sop.hilbert.dim();
    let dense = sop.to_dense();
    let evd = dense.eigen().map_err(|_| Error::EigenFailed)?;
    let n = dense.nrows();
    let values: Vec<c64> = evd.S().column_vector().iter().copied().collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| spectral_order(&values[a], &values[b]));

    // unit-norm right eigenvectors, columns in spectral order
    let u = evd.U();
    let y = Mat::from_fn(n, n, |i, k| u[(i, order[k])]);
    let y = {
        let norms: Vec<f64> = (0..n).map(|k| y.col(k).norm_l2()).collect();
        Mat::from_fn(n, n, |i, k| y[(i, k)] / norms[k])
    };
    let condition = linalg::condition_number(y.as_ref())?;
    if !(condition <= DEFECTIVE_CONDITION) {
        return Err(Error::Defective { condition });
    }
    let w = y.partial_piv_lu().inverse();

    let norm = sop.norm();
    let mut pairs = Vec::with_capacity(n);
    for k in 0..n {
        let value = values[order[k]];
        let mut right = unvec(y.col(k), d, d)?;
        // row k of Y⁻¹ holds conj(vec(σ))
        let mut left = Mat::from_fn(d, d, |i, j| w[(k, i + j * d)].conj());
        if k == 0 && value.norm() <= 1e-10 * norm.max(1.0) {
            let tr = trace(right.as_ref());
            right = hermitian_part((right * faer::Scale(c64::new(1.0, 0.0) / tr)).as_ref());
            left *= faer::Scale(tr.conj());
        }
        // keep ⟨σ, ρ⟩ = 1 exactly after any rescaling
        let ov = inner(left.as_ref(), right.as_ref());
        left *= faer::Scale(1.0 / ov.conj());
        pairs.push(EigenPair { value, right, left });
    }
    Ok(pairs)
}

/// Distance from `pairs[index]` to the nearest other eigenvalue.
pub fn eigenvalue_gap(values: &[c64], index: usize) -> f64 {
    values
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != index)
        .map(|(_, v)| (v - values[index]).norm())
        .fold(f64::INFINITY, f64::min)
}

/// Eigenvalues only, in the same order as [`eig_biorthonormal`].
pub fn eigenvalues(sop: &SuperOp) -> Result<Vec<c64>> {
    let mut v = sop.to_dense().eigenvalues().map_err(|_| Error::EigenFailed)?;
    v.sort_by(spectral_order);
    Ok(v)
}

/// Sparse LU of a trace-preserving generator whose first equation (the
/// `ρ_00` component, implied by the others through `vec(𝟙)†ℒ = 0`) is
/// replaced by the trace functional.
///
/// With a one-dimensional kernel this system is nonsingular. It yields the
/// unit-trace steady state and, for right-hand sides in the range of `ℒ`,
/// the minimum-norm solution `ℒ⁺b` without forming the pseudoinverse.
pub struct BorderedGenerator {
    lu: Lu<usize, c64>,
    d: usize,
    steady: ComplexVector,
    steady_norm_sqr: f64,
}

impl BorderedGenerator {
    pub fn new(sop: &SuperOp) -> Result<Self> {
        let d = sop.hilbert.dim();
        let n = d * d;
        let mut t: Vec<Triplet<usize, usize, c64>> = sop
            .matrix
            .triplet_iter()
            .filter(|e| e.row != 0)
            .map(|e| Triplet::new(e.row, e.col, *e.val))
            .collect();
        for i in 0..d {
            t.push(Triplet::new(0, i * (d + 1), c64::new(1.0, 0.0)));
        }
        let mut row_used = vec![false; n];
        let mut col_used = vec![false; n];
        for e in &t {
            if e.val.norm() != 0.0 {
                row_used[e.row] = true;
                col_used[e.col] = true;
            }
        }
        if row_used.iter().chain(&col_used).any(|&u| !u) {
            return Err(Error::NonUniqueSteadyState {
                detail: "bordered generator is structurally singular".into(),
            });
        }
        let a = sparse_from_triplets(n, n, &t)?;
        let lu = a
            .sp_lu()
            .map_err(|e| Error::NonUniqueSteadyState { detail: format!("sparse LU failed: {e:?}") })?;
        let mut rhs = Col::<c64>::zeros(n);
        rhs[0] = c64::new(1.0, 0.0);
        lu.solve_in_place(rhs.as_mat_mut());
        let steady_norm_sqr = rhs.squared_norm_l2();
        if !steady_norm_sqr.is_finite() {
            return Err(Error::NonUniqueSteadyState {
                detail: "bordered generator is singular".into(),
            });
        }
        Ok(Self { lu, d, steady: rhs, steady_norm_sqr })
    }

    /// Unit-trace kernel vector, as returned by the solve (not symmetrized).
    pub fn steady_vec(&self) -> ColRef<'_, c64> {
        self.steady.as_ref()
    }

    /// Solves `ℒx = b` with `Tr x = 0` and then removes the kernel component,
    /// giving the minimum-norm solution. Requires `Tr b = 0`.
    pub fn pinv_apply(&self, b: ColRef<'_, c64>) -> ComplexVector {
        let mut x = b.to_owned();
        x[0] = c64::new(0.0, 0.0);
        self.lu.solve_in_place(x.as_mat_mut());
        let overlap = self.steady.adjoint() * &x;
        x - &self.steady * faer::Scale(overlap / self.steady_norm_sqr)
    }

    pub fn dim(&self) -> usize {
        self.d
    }
}

/// Relative tolerance on `‖ℒρ_s‖ / ‖ℒ‖` accepted for an exact steady state.
pub const STEADY_RESIDUAL_TOL: f64 = 1e-10;

/// Unit-trace steady state of a trace-preserving generator.
///
/// Uniqueness is checked a posteriori: a degenerate kernel makes the
/// bordered system singular, which shows up as a non-finite solution, a
/// solution that is not a density matrix (Frobenius norm above one or
/// negative eigenvalues), or a large residual.
pub fn steady_state_exact(sop: &SuperOp) -> Result<ComplexMatrix> {
    let solver = BorderedGenerator::new(sop)?;
    steady_state_from(sop, &solver)
}

pub(crate) fn steady_state_from(sop: &SuperOp, solver: &BorderedGenerator) -> Result<ComplexMatrix> {
    let d = sop.hilbert.dim();
    let x = solver.steady_vec();
    let rho = hermitian_part(unvec(x, d, d)?.as_ref());
    let frob = rho.norm_l2();
    let residual = sop.apply_vec(linalg::vec(rho.as_ref()).as_ref()).norm_l2();
    let scale = sop.norm().max(f64::MIN_POSITIVE);
    if !(frob <= 1.0 + 1e-8) || !(residual <= STEADY_RESIDUAL_TOL * scale) {
        return Err(Error::NonUniqueSteadyState {
            detail: format!("kernel solve gave ‖ρ‖_F = {frob:.3e}, residual {residual:.3e}"),
        });
    }
    let min_eig = linalg::min_eigenvalue_hermitian(rho.as_ref())?;
    if min_eig < -1e-10 {
        return Err(Error::NonUniqueSteadyState {
            detail: format!("kernel vector is not positive (min eigenvalue {min_eig:.3e})"),
        });
    }
    Ok(rho)
}

/// Spectral gap `-Re λ_1` from a dense eigenvalue computation.
pub fn spectral_gap(sop: &SuperOp) -> Result<f64> {
    let v = eigenvalues(sop)?;
    Ok(v.get(1).map(|z| -z.re).unwrap_or(f64::INFINITY))
}

/// `Tr(op ρ)`.
pub fn expectation(rho: MatRef<'_, c64>, op: MatRef<'_, c64>) -> Result<c64> {
    if rho.nrows() != op.ncols() || rho.ncols() != op.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "state {}x{} vs operator {}x{}",
            rho.nrows(),
            rho.ncols(),
            op.nrows(),
            op.ncols()
        )));
    }
    let mut acc = c64::new(0.0, 0.0);
    for i in 0..op.nrows() {
        for k in 0..op.ncols() {
            acc += op[(i, k)] * rho[(k, i)];
        }
    }
    Ok(acc)
}

/// Qubit lowering operator `σ⁻ = |0⟩⟨1|` (ground state `|0⟩`).
pub fn sigma_minus() -> ComplexMatrix {
    let mut s = linalg::zeros(2, 2);
    s[(0, 1)] = c64::new(1.0, 0.0);
    s
}

/// Truncated bosonic annihilation operator with `√n` matrix elements.
pub fn annihilation(levels: usize) -> ComplexMatrix {
    let mut a = linalg::zeros(levels, levels);
    for n in 1..levels {
        a[(n - 1, n)] = c64::new((n as f64).sqrt(), 0.0);
    }
    a
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::linalg::{max_abs, trace as tr};
    use crate::random::{random_density, random_hermitian, random_matrix, rng};

    fn r(x: f64) -> c64 {
        c64::new(x, 0.0)
    }

    fn qubit() -> HilbertSpace {
        HilbertSpace::new(vec![2]).unwrap()
    }

    fn proj(k: usize) -> ComplexMatrix {
        let mut p = linalg::zeros(2, 2);
        p[(k, k)] = r(1.0);
        p
    }

    fn decaying_qubit(gamma: f64) -> SuperOp {
        build_liouvillian(&LindbladSpec {
            hilbert: qubit(),
            hamiltonian: linalg::zeros(2, 2),
            channels: vec![Channel { collapse: sigma_minus(), rate: gamma }],
        })
        .unwrap()
    }

    pub(crate) fn driven_qubit(delta: f64, eps: f64, gamma: f64) -> SuperOp {
        let sm = sigma_minus();
        let sp = sm.adjoint().to_owned();
        let h = &sp * &sm * faer::Scale(r(delta)) + (&sp + &sm) * faer::Scale(r(eps));
        build_liouvillian(&LindbladSpec {
            hilbert: qubit(),
            hamiltonian: h,
            channels: vec![Channel { collapse: sm, rate: gamma }],
        })
        .unwrap()
    }

    #[test]
    fn dissipator_on_basis_states() {
        let dsup = dissipator_superop(sigma_minus().as_ref(), &qubit()).unwrap();
        let out = dsup.apply(proj(1).as_ref()).unwrap();
        assert!(max_abs((&out - (proj(0) - proj(1))).as_ref()) < 1e-15);
        let out = dsup.apply(proj(0).as_ref()).unwrap();
        assert_eq!(max_abs(out.as_ref()), 0.0);
    }

    #[test]
    fn dissipator_is_traceless_and_matches_definition() {
        let mut g = rng(11);
        let h4 = HilbertSpace::new(vec![4]).unwrap();
        for _ in 0..5 {
            let c = random_matrix(&mut g, 4, 4);
            let rho = random_density(&mut g, 4);
            let out = dissipator_superop(c.as_ref(), &h4).unwrap().apply(rho.as_ref()).unwrap();
            assert!(tr(out.as_ref()).norm() < 1e-13);
            let cdc = c.adjoint() * &c;
            let direct = &c * &rho * c.adjoint() - (&cdc * &rho + &rho * &cdc) * faer::Scale(r(0.5));
            assert!(max_abs((&out - &direct).as_ref()) < 1e-13);
        }
    }

    #[test]
    fn liouvillian_preserves_trace_and_hermiticity() {
        let mut g = rng(12);
        let h4 = HilbertSpace::new(vec![2, 2]).unwrap();
        let spec = LindbladSpec {
            hilbert: h4,
            hamiltonian: random_hermitian(&mut g, 4),
            channels: (0..3)
                .map(|k| Channel { collapse: random_matrix(&mut g, 4, 4), rate: 0.3 * (k + 1) as f64 })
                .collect(),
        };
        let l = build_liouvillian(&spec).unwrap();
        assert!(l.trace_preservation_defect() < 1e-10);
        let h = random_hermitian(&mut g, 4);
        let out = l.apply(h.as_ref()).unwrap();
        assert!(linalg::hermiticity_deviation(out.as_ref()) < 1e-10);
    }

    #[test]
    fn non_hermitian_hamiltonian_rejected() {
        let mut h = linalg::zeros(2, 2);
        h[(0, 1)] = r(1.0);
        let spec = LindbladSpec { hilbert: qubit(), hamiltonian: h, channels: vec![] };
        assert!(matches!(build_liouvillian(&spec), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn decaying_qubit_spectrum() {
        let gamma = 0.7;
        let pairs = eig_biorthonormal(&decaying_qubit(gamma)).unwrap();
        let vals: Vec<c64> = pairs.iter().map(|p| p.value).collect();
        let expect = [0.0, -gamma / 2.0, -gamma / 2.0, -gamma];
        for (v, e) in vals.iter().zip(expect) {
            assert!((v - r(e)).norm() < 1e-12, "{vals:?}");
        }
        assert!(max_abs((&pairs[0].right - proj(0)).as_ref()) < 1e-12);
        // identity is the left eigenstate of the zero mode
        let left0 = &pairs[0].left;
        assert!(max_abs((left0 - identity(2)).as_ref()) < 1e-12);
        let ss = steady_state_exact(&decaying_qubit(gamma)).unwrap();
        assert!(max_abs((&ss - proj(0)).as_ref()) < 1e-14);
    }

    #[test]
    fn driven_qubit_excited_population_is_one_third() {
        let l = driven_qubit(0.0, 0.5, 1.0);
        let ss = steady_state_exact(&l).unwrap();
        // null-space oracle: dense SVD kernel of ℒ
        let svd = l.to_dense().svd().unwrap();
        let kernel = svd.V().col(3).to_owned();
        let mut k = unvec(kernel.as_ref(), 2, 2).unwrap();
        let t = tr(k.as_ref());
        k = k * faer::Scale(r(1.0) / t);
        assert!(max_abs((&ss - &k).as_ref()) < 1e-10);
        assert!((ss[(1, 1)].re - 1.0 / 3.0).abs() < 1e-12);
        let pairs = eig_biorthonormal(&l).unwrap();
        assert!(max_abs((&pairs[0].right - &k).as_ref()) < 1e-10);
        assert!((tr(ss.as_ref()) - r(1.0)).norm() < 1e-15);
    }

    #[test]
    fn biorthonormality_and_completeness_random_generator() {
        let mut g = rng(13);
        let hs = HilbertSpace::new(vec![4]).unwrap();
        let spec = LindbladSpec {
            hilbert: hs,
            hamiltonian: random_hermitian(&mut g, 4),
            channels: (0..2)
                .map(|_| Channel { collapse: random_matrix(&mut g, 4, 4), rate: 0.5 })
                .collect(),
        };
        let l = build_liouvillian(&spec).unwrap();
        let pairs = eig_biorthonormal(&l).unwrap();
        assert_eq!(pairs.len(), 16);
        let norm = l.norm();
        for (m, pm) in pairs.iter().enumerate() {
            assert!(pm.value.re <= 1e-10 * norm);
            let res = l.apply(pm.right.as_ref()).unwrap() - &pm.right * faer::Scale(pm.value);
            assert!(res.norm_l2() <= 1e-9 * norm * pm.right.norm_l2());
            for (n, pn) in pairs.iter().enumerate() {
                let expect = if m == n { 1.0 } else { 0.0 };
                assert!((inner(pm.left.as_ref(), pn.right.as_ref()) - r(expect)).norm() < 1e-8);
            }
            // conjugate closure
            assert!(pairs.iter().any(|p| (p.value - pm.value.conj()).norm() < 1e-8));
        }
        let x = random_matrix(&mut g, 4, 4);
        let mut rebuilt = linalg::zeros(4, 4);
        for p in &pairs {
            rebuilt += &p.right * faer::Scale(inner(p.left.as_ref(), x.as_ref()));
        }
        assert!(max_abs((&rebuilt - &x).as_ref()) < 1e-8);
    }

    #[test]
    fn degenerate_kernel_reported() {
        // two decoupled qubits, only one of them damped: kernel is 2-dimensional
        let hs = HilbertSpace::new(vec![2, 2]).unwrap();
        let sm = hs.embed(sigma_minus().as_ref(), 0).unwrap();
        let spec = LindbladSpec {
            hilbert: hs,
            hamiltonian: linalg::zeros(4, 4),
            channels: vec![Channel { collapse: sm, rate: 1.0 }],
        };
        let l = build_liouvillian(&spec).unwrap();
        assert!(matches!(steady_state_exact(&l), Err(Error::NonUniqueSteadyState { .. })));
    }

    #[test]
    fn expectation_values() {
        let sm = sigma_minus();
        let n = sm.adjoint() * &sm;
        assert_eq!(expectation(proj(0).as_ref(), n.as_ref()).unwrap(), r(0.0));
        let mixed = identity(3) * faer::Scale(r(1.0 / 3.0));
        assert!((expectation(mixed.as_ref(), identity(3).as_ref()).unwrap() - r(1.0)).norm() < 1e-15);
        assert!(expectation(mixed.as_ref(), n.as_ref()).is_err());
    }

    #[test]
    fn expectation_matches_eigenbasis_sum() {
        let mut g = rng(14);
        let rho = random_density(&mut g, 5);
        let op = random_hermitian(&mut g, 5);
        let evd = rho.self_adjoint_eigen(faer::Side::Lower).unwrap();
        let mut acc = r(0.0);
        for k in 0..5 {
            let v = evd.U().col(k);
            let p = evd.S().column_vector()[k];
            acc += p * (v.adjoint() * &op * v);
        }
        let got = expectation(rho.as_ref(), op.as_ref()).unwrap();
        assert!((got - acc).norm() < 1e-12);
    }

    #[test]
    fn bordered_pinv_matches_svd_pinv_on_range() {
        let l = driven_qubit(0.3, 0.4, 1.0);
        let solver = BorderedGenerator::new(&l).unwrap();
        let p = linalg::pinv(l.to_dense().as_ref(), linalg::DEFAULT_PINV_REL_TOL).unwrap();
        let mut g = rng(15);
        let x = random_matrix(&mut g, 2, 2);
        let b = l.apply_vec(linalg::vec(x.as_ref()).as_ref());
        let via_lu = solver.pinv_apply(b.as_ref());
        let via_svd = p.apply(b.as_ref());
        assert!((via_lu - via_svd).norm_l2() < 1e-12);
    }

    #[test]
    fn embed_places_operator() {
        let hs = HilbertSpace::new(vec![2, 3]).unwrap();
        let a = annihilation(3);
        let e = hs.embed(a.as_ref(), 1).unwrap();
        assert_eq!(e.nrows(), 6);
        assert_eq!(e[(0, 1)], r(1.0));
        assert_eq!(e[(3, 4)], r(1.0));
        assert!(hs.embed(a.as_ref(), 0).is_err());
        assert!(HilbertSpace::new(vec![1, 2]).is_err());
    }
}
