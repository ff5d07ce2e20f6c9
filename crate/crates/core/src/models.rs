//! The two benchmark systems: a driven dissipative spin ring and a qubit
//! coupled to a driven three-resonator ring (treated in a displaced frame).

use std::f64::consts::PI;

use faer::{c64, MatRef};
use serde::{Deserialize, Serialize};

use crate::dm_pt::PTSplit;
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix};
use crate::liouville::{
    annihilation, build_liouvillian, expectation, hamiltonian_superop, sigma_minus, Channel,
    HilbertSpace, LindbladSpec, SuperOp,
};

fn r(x: f64) -> c64 {
    c64::new(x, 0.0)
}

fn scaled(a: &ComplexMatrix, s: c64) -> ComplexMatrix {
    a * faer::Scale(s)
}

fn dagger(a: &ComplexMatrix) -> ComplexMatrix {
    a.adjoint().to_owned()
}

/// `N` two-level systems on a ring with flip-flop coupling `t`, each driven
/// with strength `ε` at detuning `δω` and relaxing at rate `γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinRingSpec {
    pub n_sites: usize,
    pub delta_omega: f64,
    pub epsilon: f64,
    pub t_coupling: f64,
    pub gamma: f64,
}

impl SpinRingSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 {
            return Err(Error::InvalidConfig(format!("spin ring needs >= 2 sites, got {}", self.n_sites)));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidConfig(format!("gamma must be > 0, got {}", self.gamma)));
        }
        for (name, v) in [("delta_omega", self.delta_omega), ("epsilon", self.epsilon), ("t", self.t_coupling)] {
            if !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    pub fn hilbert(&self) -> HilbertSpace {
        HilbertSpace::new(vec![2; self.n_sites]).expect("qubit sites")
    }

    fn site_ops(&self) -> (Vec<ComplexMatrix>, Vec<ComplexMatrix>) {
        let hs = self.hilbert();
        let sm: Vec<_> = (0..self.n_sites)
            .map(|n| hs.embed(sigma_minus().as_ref(), n).expect("site in range"))
            .collect();
        let sp = sm.iter().map(dagger).collect();
        (sm, sp)
    }

    fn single_site_hamiltonian(&self, sm: &[ComplexMatrix], sp: &[ComplexMatrix]) -> ComplexMatrix {
        let d = 1 << self.n_sites;
        let mut h = linalg::zeros(d, d);
        for n in 0..self.n_sites {
            h += scaled(&(&sp[n] * &sm[n]), r(self.delta_omega));
            h += scaled(&(&sp[n] + &sm[n]), r(self.epsilon));
        }
        h
    }

    /// `Σ_n (σ⁺_n σ⁻_{n+1} + h.c.)` with periodic boundary.
    fn hopping(&self, sm: &[ComplexMatrix], sp: &[ComplexMatrix]) -> ComplexMatrix {
        let d = 1 << self.n_sites;
        let mut h = linalg::zeros(d, d);
        for n in 0..self.n_sites {
            let m = (n + 1) % self.n_sites;
            h += &sp[n] * &sm[m] + &sm[n] * &sp[m];
        }
        h
    }

    fn channels(&self, sm: &[ComplexMatrix]) -> Vec<Channel> {
        sm.iter().map(|s| Channel { collapse: s.clone(), rate: self.gamma }).collect()
    }

    /// `ℒ = ℒ₀ + tℒ₁` with `ℒ₀` the uncoupled driven spins and
    /// `ℒ₁ = -i[Σ_n(σ⁺_nσ⁻_{n+1} + h.c.), ·]`.
    pub fn split(&self) -> Result<PTSplit> {
        self.validate()?;
        let (sm, sp) = self.site_ops();
        let hs = self.hilbert();
        let l0 = build_liouvillian(&LindbladSpec {
            hilbert: hs.clone(),
            hamiltonian: self.single_site_hamiltonian(&sm, &sp),
            channels: self.channels(&sm),
        })?;
        let l1 = hamiltonian_superop(self.hopping(&sm, &sp).as_ref(), &hs)?;
        PTSplit::new(l0, l1, self.t_coupling)
    }

    /// The full generator built in one shot from the coupled Hamiltonian.
    pub fn liouvillian(&self) -> Result<SuperOp> {
        self.validate()?;
        let (sm, sp) = self.site_ops();
        let h = self.single_site_hamiltonian(&sm, &sp) + scaled(&self.hopping(&sm, &sp), r(self.t_coupling));
        build_liouvillian(&LindbladSpec { hilbert: self.hilbert(), hamiltonian: h, channels: self.channels(&sm) })
    }

    /// `σ⁻` and `σ⁺σ⁻` on the given site.
    pub fn site_observables(&self, site: usize) -> Result<(ComplexMatrix, ComplexMatrix)> {
        let hs = self.hilbert();
        let sm = hs.embed(sigma_minus().as_ref(), site)?;
        let n = dagger(&sm) * &sm;
        Ok((sm, n))
    }
}

pub fn spin_ring_split(spec: &SpinRingSpec) -> Result<PTSplit> {
    spec.split()
}

/// A qubit coupled (strength `g`) to site 2 of a three-resonator ring with
/// hopping `κ`, where site 1 is driven with strength `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitRingSpec {
    /// Fock levels kept per displaced mode.
    pub fock_cutoff: usize,
    pub delta_omega: f64,
    pub epsilon: f64,
    pub kappa: f64,
    pub g: f64,
    pub gamma_a: f64,
    pub gamma_q: f64,
}

impl QubitRingSpec {
    pub fn validate(&self) -> Result<()> {
        if self.fock_cutoff < 2 {
            return Err(Error::InvalidConfig(format!("fock cutoff must be >= 2, got {}", self.fock_cutoff)));
        }
        if !(self.gamma_a > 0.0) || !(self.gamma_q > 0.0) {
            return Err(Error::InvalidConfig("gamma_a and gamma_q must be > 0".into()));
        }
        for (name, v) in [
            ("delta_omega", self.delta_omega),
            ("epsilon", self.epsilon),
            ("kappa", self.kappa),
            ("g", self.g),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    /// Qubit first, then the three displaced eigenmodes.
    pub fn hilbert(&self) -> HilbertSpace {
        let m = self.fock_cutoff;
        HilbertSpace::new(vec![2, m, m, m]).expect("valid cutoff")
    }

    /// Frequency of ring eigenmode `μ`: `δω + 2κ cos(2πμ/3)`.
    pub fn mode_frequency(&self, mu: usize) -> f64 {
        self.delta_omega + 2.0 * self.kappa * (2.0 * PI * mu as f64 / 3.0).cos()
    }
}

/// Coherent amplitudes of the uncoupled ring and the resulting drive on the
/// qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DisplacedFrame {
    /// `α̃_μ`, `μ = 0, 1, 2`.
    pub mode_amplitudes: [c64; 3],
    /// `α_n` for sites `n = 1, 2, 3`.
    pub site_amplitudes: [c64; 3],
    pub eps_eff: c64,
}

fn phase(theta: f64) -> c64 {
    c64::new(theta.cos(), theta.sin())
}

/// `α̃_μ = -(ε/√3) e^{i2πμ/3} / (δω + 2κcos(2πμ/3) - iγ_a/2)`,
/// `α_n = (1/√3) Σ_μ α̃_μ e^{-i2πμn/3}`, `ε_eff = g α_2`.
pub fn displaced_amplitudes(spec: &QubitRingSpec) -> DisplacedFrame {
    let s3 = 3f64.sqrt();
    let mut mode = [c64::new(0.0, 0.0); 3];
    for (mu, a) in mode.iter_mut().enumerate() {
        let denom = c64::new(spec.mode_frequency(mu), -spec.gamma_a / 2.0);
        *a = r(-spec.epsilon / s3) * phase(2.0 * PI * mu as f64 / 3.0) / denom;
    }
    let mut site = [c64::new(0.0, 0.0); 3];
    for (k, a) in site.iter_mut().enumerate() {
        let n = (k + 1) as f64;
        *a = (0..3).map(|mu| mode[mu] * phase(-2.0 * PI * mu as f64 * n / 3.0)).sum::<c64>() / s3;
    }
    let eps_eff = r(spec.g / s3) * (0..3).map(|mu| mode[mu] * phase(-4.0 * PI * mu as f64 / 3.0)).sum::<c64>();
    DisplacedFrame { mode_amplitudes: mode, site_amplitudes: site, eps_eff }
}

/// Operators on the truncated displaced space.
struct QubitRingOps {
    sm: ComplexMatrix,
    modes: [ComplexMatrix; 3],
}

impl QubitRingOps {
    fn new(spec: &QubitRingSpec) -> Self {
        let hs = spec.hilbert();
        let a = annihilation(spec.fock_cutoff);
        let sm = hs.embed(sigma_minus().as_ref(), 0).expect("qubit site");
        let modes = [0, 1, 2].map(|mu| hs.embed(a.as_ref(), mu + 1).expect("mode site"));
        Self { sm, modes }
    }

    /// Displaced site operator `a'_n = (1/√3) Σ_μ e^{-i2πμn/3} ã'_μ`, `n = 1, 2, 3`.
    fn site(&self, n: usize) -> ComplexMatrix {
        let d = self.sm.nrows();
        let mut out = linalg::zeros(d, d);
        for (mu, m) in self.modes.iter().enumerate() {
            out += scaled(m, phase(-2.0 * PI * (mu * n) as f64 / 3.0) / 3f64.sqrt());
        }
        out
    }
}

/// `ℒ = ℒ₀ + gℒ₁` in the displaced frame, where `ℒ₀` holds the displaced
/// eigenmodes and the qubit driven by `ε_eff`, and
/// `ℒ₁ = -i[(1/√3) Σ_μ (e^{-i4πμ/3} ã'_μ σ⁺ + h.c.), ·]`.
pub fn qubit_ring_split(spec: &QubitRingSpec) -> Result<(PTSplit, DisplacedFrame)> {
    spec.validate()?;
    let frame = displaced_amplitudes(spec);
    let ops = QubitRingOps::new(spec);
    let hs = spec.hilbert();
    let d = hs.dim();
    let sp = dagger(&ops.sm);

    let mut h0 = scaled(&(&sp * &ops.sm), r(spec.delta_omega));
    h0 += scaled(&sp, frame.eps_eff) + scaled(&ops.sm, frame.eps_eff.conj());
    let mut channels = vec![Channel { collapse: ops.sm.clone(), rate: spec.gamma_q }];
    let mut h1 = linalg::zeros(d, d);
    for (mu, a) in ops.modes.iter().enumerate() {
        h0 += scaled(&(dagger(a) * a), r(spec.mode_frequency(mu)));
        channels.push(Channel { collapse: a.clone(), rate: spec.gamma_a });
        let term = scaled(&(a * &sp), phase(-4.0 * PI * mu as f64 / 3.0) / 3f64.sqrt());
        h1 += &term + dagger(&term);
    }
    let l0 = build_liouvillian(&LindbladSpec { hilbert: hs.clone(), hamiltonian: h0, channels })?;
    let l1 = hamiltonian_superop(h1.as_ref(), &hs)?;
    Ok((PTSplit::new(l0, l1, spec.g)?, frame))
}

/// The full generator assembled directly from the site-basis Hamiltonian
/// with every resonator operator replaced by `a'_n + α_n`, including the
/// drive and the displaced collapse operators. When the frame amplitudes
/// cancel the linear terms this equals `ℒ₀ + gℒ₁` of [`qubit_ring_split`].
pub fn qubit_ring_liouvillian_direct(spec: &QubitRingSpec, frame: &DisplacedFrame) -> Result<SuperOp> {
    spec.validate()?;
    let ops = QubitRingOps::new(spec);
    let hs = spec.hilbert();
    let d = hs.dim();
    let id = linalg::identity(d);
    let lab: Vec<ComplexMatrix> =
        (0..3).map(|k| ops.site(k + 1) + scaled(&id, frame.site_amplitudes[k])).collect();
    let sp = dagger(&ops.sm);
    let mut h = scaled(&(&sp * &ops.sm), r(spec.delta_omega));
    for n in 0..3 {
        let next = (n + 1) % 3;
        h += scaled(&(dagger(&lab[n]) * &lab[n]), r(spec.delta_omega));
        // normal ordered, so the truncated modes see no commutator remainder
        let hop = dagger(&lab[n]) * &lab[next];
        h += scaled(&(dagger(&hop) + hop), r(spec.kappa));
    }
    h += scaled(&(&lab[0] + dagger(&lab[0])), r(spec.epsilon));
    h += scaled(&(&lab[1] * &sp + dagger(&lab[1]) * &ops.sm), r(spec.g));
    let mut channels = vec![Channel { collapse: ops.sm.clone(), rate: spec.gamma_q }];
    for a in lab {
        channels.push(Channel { collapse: a, rate: spec.gamma_a });
    }
    build_liouvillian(&LindbladSpec { hilbert: hs, hamiltonian: linalg::hermitian_part(h.as_ref()), channels })
}

/// Lab-frame expectation values at site 1 and of the qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LabObservables {
    pub a1: c64,
    pub n1: f64,
    pub sigma_minus: c64,
}

/// Observables of a displaced-frame state: `⟨a₁⟩ = ⟨a'₁⟩ + α₁`,
/// `⟨n₁⟩ = ⟨a'₁†a'₁⟩ + 2Re(α₁*⟨a'₁⟩) + |α₁|²`, `⟨σ⁻⟩` directly.
pub fn lab_frame_observables(
    spec: &QubitRingSpec,
    rho_displaced: MatRef<'_, c64>,
    frame: &DisplacedFrame,
) -> Result<LabObservables> {
    let ops = QubitRingOps::new(spec);
    let a1 = ops.site(1);
    let n_op = dagger(&a1) * &a1;
    let alpha = frame.site_amplitudes[0];
    let a1_disp = expectation(rho_displaced, a1.as_ref())?;
    let n_disp = expectation(rho_displaced, n_op.as_ref())?;
    let n1 = n_disp + r(2.0 * (alpha.conj() * a1_disp).re + alpha.norm_sqr());
    Ok(LabObservables {
        a1: a1_disp + alpha,
        n1: n1.re,
        sigma_minus: expectation(rho_displaced, ops.sm.as_ref())?,
    })
}

/// Which benchmark system a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    SpinRing(SpinRingSpec),
    QubitRing(QubitRingSpec),
}

pub const SPIN_RING_OBSERVABLES: [&str; 2] = ["sigma_minus_1", "n_sigma_1"];
pub const QUBIT_RING_OBSERVABLES: [&str; 3] = ["a_1", "n_1", "sigma_minus"];

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::SpinRing(_) => "spin_ring",
            ModelSpec::QubitRing(_) => "qubit_ring",
        }
    }

    pub fn observable_names(&self) -> &'static [&'static str] {
        match self {
            ModelSpec::SpinRing(_) => &SPIN_RING_OBSERVABLES,
            ModelSpec::QubitRing(_) => &QUBIT_RING_OBSERVABLES,
        }
    }

    pub fn sweep_parameters(&self) -> &'static [&'static str] {
        match self {
            ModelSpec::SpinRing(_) => &["delta_omega", "epsilon", "t", "gamma"],
            ModelSpec::QubitRing(_) => &["delta_omega", "epsilon", "kappa", "g", "gamma_a", "gamma_q"],
        }
    }

    /// Copy with one named parameter replaced.
    pub fn with_parameter(&self, name: &str, value: f64) -> Result<ModelSpec> {
        let mut out = *self;
        let slot = match &mut out {
            ModelSpec::SpinRing(s) => match name {
                "delta_omega" => &mut s.delta_omega,
                "epsilon" => &mut s.epsilon,
                "t" => &mut s.t_coupling,
                "gamma" => &mut s.gamma,
                _ => return Err(Error::InvalidConfig(format!("spin_ring has no parameter {name:?}"))),
            },
            ModelSpec::QubitRing(s) => match name {
                "delta_omega" => &mut s.delta_omega,
                "epsilon" => &mut s.epsilon,
                "kappa" => &mut s.kappa,
                "g" => &mut s.g,
                "gamma_a" => &mut s.gamma_a,
                "gamma_q" => &mut s.gamma_q,
                _ => return Err(Error::InvalidConfig(format!("qubit_ring has no parameter {name:?}"))),
            },
        };
        *slot = value;
        Ok(out)
    }

    pub fn prepare(&self) -> Result<PreparedModel> {
        match self {
            ModelSpec::SpinRing(s) => {
                let split = s.split()?;
                let (sm, n) = s.site_observables(0)?;
                Ok(PreparedModel { split, readout: Readout::Spin { sm, n } })
            }
            ModelSpec::QubitRing(s) => {
                let (split, frame) = qubit_ring_split(s)?;
                Ok(PreparedModel { split, readout: Readout::Qubit { spec: *s, frame } })
            }
        }
    }
}

enum Readout {
    Spin { sm: ComplexMatrix, n: ComplexMatrix },
    Qubit { spec: QubitRingSpec, frame: DisplacedFrame },
}

/// A model's split generator together with its observables.
pub struct PreparedModel {
    pub split: PTSplit,
    readout: Readout,
}

impl PreparedModel {
    /// Observables in the order of [`ModelSpec::observable_names`].
    pub fn observe(&self, rho: MatRef<'_, c64>) -> Result<Vec<c64>> {
        match &self.readout {
            Readout::Spin { sm, n } => Ok(vec![expectation(rho, sm.as_ref())?, expectation(rho, n.as_ref())?]),
            Readout::Qubit { spec, frame } => {
                let o = lab_frame_observables(spec, rho, frame)?;
                Ok(vec![o.a1, r(o.n1), o.sigma_minus])
            }
        }
    }

    pub fn frame(&self) -> Option<&DisplacedFrame> {
        match &self.readout {
            Readout::Qubit { frame, .. } => Some(frame),
            Readout::Spin { .. } => None,
        }
    }
}
