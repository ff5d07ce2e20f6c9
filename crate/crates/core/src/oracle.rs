//! Reference results: exact steady states over parameter sweeps, the
//! closed-form driven two-level system, continuity tracking of eigenpairs
//! and convergence-slope fits. The same sweep driver also evaluates the
//! perturbative methods point by point.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use faer::{c64, Mat};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amp_pt::{self, amp_pt_checked, reconstruct_density};
use crate::dm_pt::{self, assemble_truncated, positivity_report, InverseStrategy, PTSplit, SteadyStateSolver};
use crate::error::{Error, Result};
use crate::linalg::{self, inner, ComplexMatrix};
use crate::liouville::{self, eig_biorthonormal, EigenPair};
use crate::models::ModelSpec;

/// Largest Liouville dimension [`exact_sweep`] accepts by default.
pub const EXACT_DIM_CAP: usize = 4096;

/// Overlap below which eigenpair tracking gives up.
pub const TRACKING_OVERLAP_MIN: f64 = 0.7;

/// Errors at or below this are treated as numerical noise by
/// [`convergence_slope`].
pub const NOISE_FLOOR: f64 = 100.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Order0,
    DmPt,
    AmpPt,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Exact, Method::Order0, Method::DmPt, Method::AmpPt];

    pub fn tag(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Order0 => "order0",
            Method::DmPt => "dm_pt",
            Method::AmpPt => "amp_pt",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method {s:?} (expected exact, order0, dm_pt or amp_pt)")))
    }
}

/// Settings shared by all points of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepOptions {
    pub methods: Vec<Method>,
    pub order: usize,
    /// Correction-matrix parameter; `None` applies the default policy.
    pub reg_c: Option<f64>,
    pub inverse: InverseStrategySetting,
    pub exact_dim_cap: usize,
}

/// Serializable mirror of [`InverseStrategy`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InverseStrategySetting {
    #[default]
    Auto,
    Dense,
    Bordered,
}

impl From<InverseStrategySetting> for InverseStrategy {
    fn from(s: InverseStrategySetting) -> Self {
        match s {
            InverseStrategySetting::Auto => InverseStrategy::Auto,
            InverseStrategySetting::Dense => InverseStrategy::Dense,
            InverseStrategySetting::Bordered => InverseStrategy::Bordered,
        }
    }
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            order: 2,
            reg_c: None,
            inverse: InverseStrategySetting::Auto,
            exact_dim_cap: EXACT_DIM_CAP,
        }
    }
}

/// Diagnostics recorded at one grid point.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PointDiagnostics {
    pub value: f64,
    pub min_eig_dm_pt: Option<f64>,
    pub min_eig_amp_pt: Option<f64>,
    pub solvability_max: Option<f64>,
    pub z0_condition: Option<f64>,
    pub reg_c: Option<f64>,
    /// Per-method failure messages.
    pub errors: BTreeMap<String, String>,
}

/// Results of one grid point for every requested method.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub observables: BTreeMap<Method, Vec<c64>>,
    pub states: BTreeMap<Method, ComplexMatrix>,
    pub diagnostics: PointDiagnostics,
}

/// One method's curves over a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub grid: Vec<f64>,
    /// Observable name to values, one per grid point (NaN where the point
    /// failed).
    pub observables: BTreeMap<String, Vec<c64>>,
    pub method_tag: Method,
    pub metadata: serde_json::Value,
}

/// Evaluates the requested methods at a single parameter point. Failures of
/// individual methods are recorded in the diagnostics, not returned.
pub fn evaluate_point(model: &ModelSpec, value: f64, opts: &SweepOptions) -> PointResult {
    let mut out = PointResult {
        observables: BTreeMap::new(),
        states: BTreeMap::new(),
        diagnostics: PointDiagnostics { value, ..Default::default() },
    };
    let prepared = match model.prepare() {
        Ok(p) => p,
        Err(e) => {
            for m in &opts.methods {
                out.diagnostics.errors.insert(m.tag().into(), e.to_string());
            }
            return out;
        }
    };
    let record = |out: &mut PointResult, m: Method, rho: Result<ComplexMatrix>| match rho
        .and_then(|rho| prepared.observe(rho.as_ref()).map(|o| (rho, o)))
    {
        Ok((rho, o)) => {
            out.observables.insert(m, o);
            out.states.insert(m, rho);
        }
        Err(e) => {
            out.diagnostics.errors.insert(m.tag().into(), e.to_string());
        }
    };

    if opts.methods.contains(&Method::Exact) {
        let split = &prepared.split;
        let rho = if split.l0.dim() > opts.exact_dim_cap {
            Err(Error::InvalidConfig(format!(
                "Liouville dimension {} exceeds the exact-solve cap {}",
                split.l0.dim(),
                opts.exact_dim_cap
            )))
        } else {
            liouville::steady_state_exact(&split.full())
        };
        record(&mut out, Method::Exact, rho);
    }

    let wants_pt = opts.methods.iter().any(|m| *m != Method::Exact);
    if !wants_pt {
        return out;
    }
    let pt = SteadyStateSolver::new(&prepared.split.l0, opts.inverse.into())
        .and_then(|solver| dm_pt::pt_steady_state_with(&prepared.split, &solver, opts.order));
    let series = match pt {
        Ok(s) => s,
        Err(e) => {
            for m in opts.methods.iter().filter(|m| **m != Method::Exact) {
                out.diagnostics.errors.insert(m.tag().into(), e.to_string());
            }
            return out;
        }
    };
    out.diagnostics.solvability_max = Some(series.solvability_max);
    if opts.methods.contains(&Method::Order0) {
        record(&mut out, Method::Order0, Ok(series.state_corrections[0].clone()));
    }
    if opts.methods.contains(&Method::DmPt) {
        let rho = assemble_truncated(&series);
        if let Ok(r) = &rho {
            out.diagnostics.min_eig_dm_pt = positivity_report(r.as_ref()).ok().map(|p| p.min_eig);
        }
        record(&mut out, Method::DmPt, rho);
    }
    if opts.methods.contains(&Method::AmpPt) {
        let rho = opts
            .reg_c
            .map(Ok)
            .unwrap_or_else(|| amp_pt::default_reg_c(series.state_corrections[0].as_ref()))
            .and_then(|c| {
                out.diagnostics.reg_c = Some(c);
                amp_pt_checked(&series.state_corrections, c)
            })
            .and_then(|amp| {
                out.diagnostics.z0_condition = Some(amp.z0_condition);
                reconstruct_density(&amp, series.alpha)
            });
        if let Ok(r) = &rho {
            out.diagnostics.min_eig_amp_pt = positivity_report(r.as_ref()).ok().map(|p| p.min_eig);
        }
        record(&mut out, Method::AmpPt, rho);
    }
    out
}

/// Evaluates every grid point (in parallel on the current rayon pool) and
/// returns the points in grid order.
pub fn sweep_points(model: &ModelSpec, parameter: &str, grid: &[f64], opts: &SweepOptions) -> Result<Vec<PointResult>> {
    let specs: Vec<ModelSpec> = grid.iter().map(|&v| model.with_parameter(parameter, v)).collect::<Result<_>>()?;
    Ok(specs
        .par_iter()
        .zip(grid.par_iter())
        .map(|(spec, &v)| evaluate_point(spec, v, opts))
        .collect())
}

/// Collects per-method curves from evaluated points.
pub fn collect_sweeps(
    model: &ModelSpec,
    grid: &[f64],
    points: &[PointResult],
    opts: &SweepOptions,
) -> Vec<SweepResult> {
    let names = model.observable_names();
    let nan = c64::new(f64::NAN, f64::NAN);
    opts.methods
        .iter()
        .map(|&m| {
            let mut observables = BTreeMap::new();
            for (k, name) in names.iter().enumerate() {
                let series = points
                    .iter()
                    .map(|p| p.observables.get(&m).map(|o| o[k]).unwrap_or(nan))
                    .collect();
                observables.insert(name.to_string(), series);
            }
            SweepResult {
                grid: grid.to_vec(),
                observables,
                method_tag: m,
                metadata: serde_json::json!({
                    "model": model,
                    "order": opts.order,
                    "reg_c": opts.reg_c,
                }),
            }
        })
        .collect()
}

/// Exact steady-state observables over a sweep of one model parameter.
pub fn exact_sweep(model: &ModelSpec, parameter: &str, grid: &[f64]) -> Result<SweepResult> {
    let opts = SweepOptions { methods: vec![Method::Exact], ..Default::default() };
    let points = sweep_points(model, parameter, grid, &opts)?;
    for p in &points {
        if let Some(e) = p.diagnostics.errors.get("exact") {
            return Err(Error::InvalidConfig(format!("exact solve failed at {parameter} = {}: {e}", p.diagnostics.value)));
        }
    }
    Ok(collect_sweeps(model, grid, &points, &opts).remove(0))
}

/// Steady state of a driven damped two-level system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TlsSteadyState {
    pub sigma_minus: c64,
    pub pop_e: f64,
}

impl TlsSteadyState {
    /// Density matrix in the basis (ground, excited).
    pub fn density_matrix(&self) -> ComplexMatrix {
        let mut rho = Mat::<c64>::zeros(2, 2);
        rho[(0, 0)] = c64::new(1.0 - self.pop_e, 0.0);
        rho[(1, 1)] = c64::new(self.pop_e, 0.0);
        rho[(1, 0)] = self.sigma_minus;
        rho[(0, 1)] = self.sigma_minus.conj();
        rho
    }
}

/// Closed-form steady state of `H = δω σ⁺σ⁻ + ε(σ⁺ + σ⁻)` with decay `γ𝔻[σ⁻]`.
///
/// From `d⟨σ⁻⟩/dt = -(iδω + γ/2)⟨σ⁻⟩ + iε(2p - 1)` and
/// `dp/dt = -2ε Im⟨σ⁻⟩ - γp`:
/// `p = ε² / (δω² + γ²/4 + 2ε²)` and `⟨σ⁻⟩ = iε(2p - 1) / (iδω + γ/2)`.
pub fn tls_steady_analytic(delta_omega: f64, epsilon: f64, gamma: f64) -> Result<TlsSteadyState> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("gamma must be > 0, got {gamma}")));
    }
    let e2 = epsilon * epsilon;
    let pop_e = e2 / (delta_omega * delta_omega + gamma * gamma / 4.0 + 2.0 * e2);
    let sigma_minus = c64::new(0.0, epsilon * (2.0 * pop_e - 1.0)) / c64::new(gamma / 2.0, delta_omega);
    Ok(TlsSteadyState { sigma_minus, pop_e })
}

/// An eigenpair followed to coupling `alpha`, with the overlap that
/// selected it.
#[derive(Debug, Clone)]
pub struct TrackedPair {
    pub alpha: f64,
    pub pair: EigenPair,
    pub overlap: f64,
}

fn normalized_overlap(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    inner(a.as_ref(), b.as_ref()).norm() / (a.norm_l2() * b.norm_l2())
}

/// Follows `seed` through the spectra of `ℒ₀ + αℒ₁` for ascending `alphas`
/// (starting at 0), choosing at each step the eigenpair whose right
/// eigenstate overlaps most with the previous one.
pub fn track_eigenpair(split: &PTSplit, seed: &EigenPair, alphas: &[f64]) -> Result<Vec<TrackedPair>> {
    if alphas.windows(2).any(|w| !(w[1] > w[0])) || alphas.first().is_some_and(|a| *a < 0.0) {
        return Err(Error::InvalidArgument("alphas must be ascending and non-negative".into()));
    }
    let mut prev = seed.clone();
    let mut out = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        if alpha == 0.0 {
            out.push(TrackedPair { alpha, pair: seed.clone(), overlap: 1.0 });
            continue;
        }
        let pairs = eig_biorthonormal(&split.full_at(alpha))?;
        let (best, overlap) = pairs
            .iter()
            .map(|p| normalized_overlap(&prev.right, &p.right))
            .enumerate()
            .fold((0, -1.0), |acc, (k, o)| if o > acc.1 { (k, o) } else { acc });
        if overlap < TRACKING_OVERLAP_MIN {
            return Err(Error::TrackingLost { alpha, overlap });
        }
        prev = pairs[best].clone();
        out.push(TrackedPair { alpha, pair: prev.clone(), overlap });
    }
    Ok(out)
}

/// Least-squares slope of `log error` against `log alpha`.
pub fn convergence_slope(alphas: &[f64], errors: &[f64]) -> Result<f64> {
    if alphas.len() != errors.len() || alphas.len() < 5 {
        return Err(Error::InvalidArgument("need at least five (alpha, error) samples".into()));
    }
    let max_error = errors.iter().copied().fold(0.0, f64::max);
    if errors.iter().any(|e| !(*e > NOISE_FLOOR)) {
        return Err(Error::ErrorFloor { max_error });
    }
    if alphas.iter().any(|a| !(*a > 0.0)) {
        return Err(Error::InvalidArgument("alphas must be positive".into()));
    }
    let xs: Vec<f64> = alphas.iter().map(|a| a.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// `n` logarithmically spaced points from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| (lo.ln() + (hi.ln() - lo.ln()) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Trace-norm error of the order-`order` density-matrix series against the
/// exact steady state at each coupling.
pub fn steady_state_errors(split: &PTSplit, order: usize, alphas: &[f64]) -> Result<Vec<f64>> {
    let series = dm_pt::pt_steady_state(split, order)?;
    alphas
        .iter()
        .map(|&a| {
            let exact = liouville::steady_state_exact(&split.full_at(a))?;
            let approx = dm_pt::assemble_truncated_at(&series, a)?;
            linalg::trace_norm((&approx - &exact).as_ref())
        })
        .collect()
}
