//! Density-matrix perturbation theory for `ℒ = ℒ₀ + αℒ₁`.
//!
//! Corrections to an eigenpair of `ℒ₀` are generated order by order with the
//! pseudoinverse of `ℒ₀ - λ⁽⁰⁾`. For the steady state the eigenvalue
//! corrections vanish and the recursion reduces to
//! `ρ⁽ʲ⁾ = -ℒ₀⁺ ℒ₁ ρ⁽ʲ⁻¹⁾`.

use faer::{c64, Mat, MatRef};

use crate::error::{Error, Result};
use crate::linalg::{
    self, hermitian_part, hermiticity_deviation, identity, inner, trace, unvec, ComplexMatrix,
    ComplexVector, Pinv, DEFAULT_PINV_REL_TOL,
};
use crate::liouville::{self, BorderedGenerator, EigenPair, SuperOp, DEGENERACY_TOL};

/// Allowed `|⟨σ⁽⁰⁾, f_j⟩| / (‖σ⁽⁰⁾‖ ‖f_j‖)` before a pseudoinverse solve.
pub const SOLVABILITY_TOL: f64 = 1e-8;

/// Allowed relative anti-Hermitian part of a steady-state correction.
pub const CORRECTION_HERMITIAN_TOL: f64 = 1e-10;

/// Largest Liouville dimension for which the steady-state recursion uses an
/// explicit SVD pseudoinverse under [`InverseStrategy::Auto`].
pub const DENSE_PINV_MAX_DIM: usize = 1024;

/// `ℒ = ℒ₀ + alpha ℒ₁` with both parts trace-preserving.
#[derive(Debug, Clone)]
pub struct PTSplit {
    pub l0: SuperOp,
    pub l1: SuperOp,
    /// Physical coupling multiplying `ℒ₁`.
    pub alpha: f64,
}

impl PTSplit {
    pub fn new(l0: SuperOp, l1: SuperOp, alpha: f64) -> Result<Self> {
        if l0.hilbert() != l1.hilbert() {
            return Err(Error::DimensionMismatch("l0 and l1 act on different spaces".into()));
        }
        if !alpha.is_finite() {
            return Err(Error::InvalidArgument(format!("coupling must be finite, got {alpha}")));
        }
        for (name, op) in [("l0", &l0), ("l1", &l1)] {
            let defect = op.trace_preservation_defect();
            if defect > 1e-10 * op.norm().max(1.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} is not trace-preserving (defect {defect:.3e})"
                )));
            }
        }
        Ok(Self { l0, l1, alpha })
    }

    /// `ℒ₀ + αℒ₁` at an arbitrary coupling.
    pub fn full_at(&self, alpha: f64) -> SuperOp {
        SuperOp::linear_combination(&[(c64::new(1.0, 0.0), &self.l0), (c64::new(alpha, 0.0), &self.l1)])
            .expect("parts share a Hilbert space")
    }

    pub fn full(&self) -> SuperOp {
        self.full_at(self.alpha)
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self { alpha, ..self.clone() }
    }

    pub fn dim(&self) -> usize {
        self.l0.hilbert().dim()
    }
}

/// Corrections `λ⁽ʲ⁾`, `ρ⁽ʲ⁾` for `j = 0..=order`.
#[derive(Debug, Clone)]
pub struct PTSeries {
    /// Position of the seed in the spectrally ordered eigensystem of `ℒ₀`
    /// (0 is the steady state), when known.
    pub mu_label: usize,
    pub alpha: f64,
    pub order: usize,
    pub eigvalue_corrections: Vec<c64>,
    pub state_corrections: Vec<ComplexMatrix>,
    /// Largest relative solvability residual met during the recursion.
    pub solvability_max: f64,
}

impl PTSeries {
    pub fn is_steady_state(&self) -> bool {
        self.mu_label == 0
    }

    /// `Σ_{j≤M} α^j λ⁽ʲ⁾`.
    pub fn eigenvalue_at(&self, alpha: f64) -> c64 {
        let mut acc = c64::new(0.0, 0.0);
        let mut p = 1.0;
        for l in &self.eigvalue_corrections {
            acc += l * p;
            p *= alpha;
        }
        acc
    }

    /// Unnormalized partial sum `Σ_{j≤M} α^j ρ⁽ʲ⁾`.
    pub fn state_sum_at(&self, alpha: f64) -> ComplexMatrix {
        let d = self.state_corrections[0].nrows();
        let mut acc = Mat::<c64>::zeros(d, d);
        let mut p = 1.0;
        for r in &self.state_corrections {
            acc += r * faer::Scale(c64::new(p, 0.0));
            p *= alpha;
        }
        acc
    }

    /// Keeps only the corrections up to `order`.
    pub fn truncated(&self, order: usize) -> PTSeries {
        let m = order.min(self.order);
        PTSeries {
            order: m,
            eigvalue_corrections: self.eigvalue_corrections[..=m].to_vec(),
            state_corrections: self.state_corrections[..=m].to_vec(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InverseStrategy {
    /// SVD pseudoinverse up to [`DENSE_PINV_MAX_DIM`], bordered LU above.
    #[default]
    Auto,
    Dense,
    Bordered,
}

/// `ℒ₀⁺` for a generator with a unique steady state, together with that
/// steady state.
pub struct SteadyStateSolver {
    bordered: BorderedGenerator,
    pinv: Option<Pinv>,
    rho0: ComplexMatrix,
}

impl SteadyStateSolver {
    pub fn new(l0: &SuperOp, strategy: InverseStrategy) -> Result<Self> {
        let bordered = BorderedGenerator::new(l0)?;
        let rho0 = liouville::steady_state_from(l0, &bordered)?;
        let dense = match strategy {
            InverseStrategy::Auto => l0.dim() <= DENSE_PINV_MAX_DIM,
            InverseStrategy::Dense => true,
            InverseStrategy::Bordered => false,
        };
        let pinv = if dense {
            let p = linalg::pinv(l0.to_dense().as_ref(), DEFAULT_PINV_REL_TOL)?;
            if p.rank + 1 != l0.dim() {
                return Err(Error::NonUniqueSteadyState {
                    detail: format!("generator has rank {} of {}", p.rank, l0.dim()),
                });
            }
            Some(p)
        } else {
            None
        };
        Ok(Self { bordered, pinv, rho0 })
    }

    /// Unit-trace Hermitian steady state of `ℒ₀`.
    pub fn rho0(&self) -> &ComplexMatrix {
        &self.rho0
    }

    pub fn is_dense(&self) -> bool {
        self.pinv.is_some()
    }

    /// Minimum-norm solution of `ℒ₀x = b` for traceless `b`.
    pub fn pinv_apply(&self, b: faer::ColRef<'_, c64>) -> ComplexVector {
        match &self.pinv {
            Some(p) => p.apply(b),
            None => self.bordered.pinv_apply(b),
        }
    }
}

fn relative_solvability(sigma0: MatRef<'_, c64>, f: MatRef<'_, c64>) -> f64 {
    let fnorm = f.norm_l2();
    if fnorm == 0.0 {
        return 0.0;
    }
    inner(sigma0, f).norm() / (sigma0.norm_l2() * fnorm)
}

fn check_solvability(order: usize, sigma0: MatRef<'_, c64>, f: MatRef<'_, c64>) -> Result<f64> {
    let r = relative_solvability(sigma0, f);
    if !(r <= SOLVABILITY_TOL) {
        return Err(Error::SolvabilityViolation {
            order,
            residual: r * sigma0.norm_l2() * f.norm_l2(),
            allowed: SOLVABILITY_TOL * sigma0.norm_l2() * f.norm_l2(),
        });
    }
    Ok(r)
}

/// Corrections to a non-degenerate eigenpair of `ℒ₀` up to `order`.
///
/// `λ⁽ʲ⁾ = ⟨σ⁽⁰⁾, ℒ₁ρ⁽ʲ⁻¹⁾⟩ - Σ_{k=1}^{j-1} λ⁽ᵏ⁾⟨σ⁽⁰⁾, ρ⁽ʲ⁻ᵏ⁾⟩` and
/// `ρ⁽ʲ⁾ = (ℒ₀ - λ⁽⁰⁾)⁺ f_j` with
/// `f_j = -ℒ₁ρ⁽ʲ⁻¹⁾ + Σ_{k=1}^{j} λ⁽ᵏ⁾ρ⁽ʲ⁻ᵏ⁾`.
/// The pseudoinverse is formed densely, so this is meant for Liouville
/// dimensions of a few thousand at most.
pub fn pt_eigenpair(split: &PTSplit, seed: &EigenPair, order: usize) -> Result<PTSeries> {
    let d = split.dim();
    let big_d = d * d;
    if seed.right.nrows() != d || seed.left.nrows() != d {
        return Err(Error::DimensionMismatch(format!(
            "seed eigenstates are {}x{}, expected {d}x{d}",
            seed.right.nrows(),
            seed.right.ncols()
        )));
    }
    let norm = split.l0.norm();
    let spectrum = liouville::eigenvalues(&split.l0)?;
    let mut dist: Vec<(usize, f64)> = spectrum
        .iter()
        .enumerate()
        .map(|(k, v)| (k, (v - seed.value).norm()))
        .collect();
    dist.sort_by(|a, b| a.1.total_cmp(&b.1));
    if dist[0].1 > 1e-8 * norm.max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "seed value {} is not an eigenvalue of l0 (distance {:.3e})",
            seed.value, dist[0].1
        )));
    }
    let mu_label = dist[0].0;
    let gap = dist.get(1).map(|x| x.1).unwrap_or(f64::INFINITY);
    if gap < DEGENERACY_TOL * norm {
        return Err(Error::Degenerate { value: seed.value, gap });
    }

    let mut shifted = split.l0.to_dense();
    for i in 0..big_d {
        shifted[(i, i)] -= seed.value;
    }
    let p = linalg::pinv(shifted.as_ref(), DEFAULT_PINV_REL_TOL)?;
    if p.rank + 1 != big_d {
        return Err(Error::Degenerate { value: seed.value, gap: 0.0 });
    }

    let sigma0 = seed.left.as_ref();
    let mut lambdas = vec![seed.value];
    let mut states = vec![seed.right.clone()];
    let mut solvability_max = 0.0f64;
    for j in 1..=order {
        let l1rho = split.l1.apply(states[j - 1].as_ref())?;
        let mut lj = inner(sigma0, l1rho.as_ref());
        for k in 1..j {
            lj -= lambdas[k] * inner(sigma0, states[j - k].as_ref());
        }
        lambdas.push(lj);
        let mut f = -l1rho;
        for k in 1..=j {
            f += &states[j - k] * faer::Scale(lambdas[k]);
        }
        solvability_max = solvability_max.max(check_solvability(j, sigma0, f.as_ref())?);
        let x = p.apply(linalg::vec(f.as_ref()).as_ref());
        states.push(unvec(x.as_ref(), d, d)?);
    }
    Ok(PTSeries {
        mu_label,
        alpha: split.alpha,
        order,
        eigvalue_corrections: lambdas,
        state_corrections: states,
        solvability_max,
    })
}

/// Steady-state corrections `ρ⁽ʲ⁾ = -ℒ₀⁺ℒ₁ρ⁽ʲ⁻¹⁾`, `j = 1..=order`.
pub fn pt_steady_state(split: &PTSplit, order: usize) -> Result<PTSeries> {
    let solver = SteadyStateSolver::new(&split.l0, InverseStrategy::Auto)?;
    pt_steady_state_with(split, &solver, order)
}

/// As [`pt_steady_state`], reusing a prepared solver for `ℒ₀`.
pub fn pt_steady_state_with(
    split: &PTSplit,
    solver: &SteadyStateSolver,
    order: usize,
) -> Result<PTSeries> {
    pt_steady_state_shifted(split, solver, order, &[])
}

/// Steady-state recursion with the homogeneous freedom fixed differently:
/// `ρ⁽ʲ⁾ = -ℒ₀⁺ℒ₁ρ⁽ʲ⁻¹⁾ + c_j ρ⁽⁰⁾` with `c_j = shifts[j-1]` (0 when
/// absent). Every choice gives the same normalized steady state up to
/// `O(α^{M+1})`.
pub fn pt_steady_state_shifted(
    split: &PTSplit,
    solver: &SteadyStateSolver,
    order: usize,
    shifts: &[f64],
) -> Result<PTSeries> {
    let d = split.dim();
    let ident = identity(d);
    let mut states = vec![solver.rho0().clone()];
    let mut solvability_max = 0.0f64;
    for j in 1..=order {
        let f = -split.l1.apply(states[j - 1].as_ref())?;
        solvability_max = solvability_max.max(check_solvability(j, ident.as_ref(), f.as_ref())?);
        let x = solver.pinv_apply(linalg::vec(f.as_ref()).as_ref());
        let rho = unvec(x.as_ref(), d, d)?;
        let dev = hermiticity_deviation(rho.as_ref());
        if dev > CORRECTION_HERMITIAN_TOL {
            return Err(Error::Internal(format!(
                "steady-state correction of order {j} is not Hermitian (deviation {dev:.3e})"
            )));
        }
        let mut rho = hermitian_part(rho.as_ref());
        if let Some(&c) = shifts.get(j - 1) {
            rho += solver.rho0() * faer::Scale(c64::new(c, 0.0));
        }
        states.push(rho);
    }
    Ok(PTSeries {
        mu_label: 0,
        alpha: split.alpha,
        order,
        eigvalue_corrections: vec![c64::new(0.0, 0.0); order + 1],
        state_corrections: states,
        solvability_max,
    })
}

/// `N[Σ_{j≤M} α^j ρ⁽ʲ⁾]` at the series' own coupling.
///
/// The result has unit trace (and is Hermitian for steady-state series) but
/// need not be positive.
pub fn assemble_truncated(series: &PTSeries) -> Result<ComplexMatrix> {
    assemble_truncated_at(series, series.alpha)
}

/// `N[Σ_{j≤M} α^j ρ⁽ʲ⁾]` at an arbitrary coupling.
pub fn assemble_truncated_at(series: &PTSeries, alpha: f64) -> Result<ComplexMatrix> {
    let sum = series.state_sum_at(alpha);
    let sum = if series.is_steady_state() { hermitian_part(sum.as_ref()) } else { sum };
    normalize(sum)
}

pub(crate) fn normalize(a: ComplexMatrix) -> Result<ComplexMatrix> {
    let tr = trace(a.as_ref());
    let scale = a.norm_l2();
    if !(tr.norm() > 1e-14 * scale) || !tr.is_finite() {
        return Err(Error::NormalizationFailure);
    }
    let out = a * faer::Scale(c64::new(1.0, 0.0) / tr);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PositivityReport {
    pub min_eig: f64,
    pub positive: bool,
}

/// Smallest eigenvalue of a Hermitian state; `positive` tolerates `-1e-12`.
pub fn positivity_report(rho: MatRef<'_, c64>) -> Result<PositivityReport> {
    let min_eig = linalg::min_eigenvalue_hermitian(rho)?;
    Ok(PositivityReport { min_eig, positive: min_eig >= -1e-12 })
}
