//! The correction-matrix parameter c: the qubit ring's rank-deficient seed
//! gives observables that settle as c shrinks, while a pumped qubit (whose
//! amplitude has no power series in the coupling) is flagged.

use liouville_pt::amp_pt::{amp_pt_checked, reconstruct_density};
use liouville_pt::dm_pt::{pt_steady_state, PTSplit};
use liouville_pt::liouville::{dissipator_superop, sigma_minus, HilbertSpace};
use liouville_pt::models::{lab_frame_observables, qubit_ring_split, QubitRingSpec};

fn main() -> liouville_pt::Result<()> {
    let spec = QubitRingSpec { fock_cutoff: 3, delta_omega: 0.0, epsilon: 1.0, kappa: 10.0, g: 0.5, gamma_a: 0.05, gamma_q: 0.05 };
    let (split, frame) = qubit_ring_split(&spec)?;
    let series = pt_steady_state(&split, 2)?;
    for c in [1e-6, 1e-8, 1e-9, 1e-10] {
        let amp = amp_pt_checked(&series.state_corrections, c)?;
        let rho = reconstruct_density(&amp, split.alpha)?;
        let o = lab_frame_observables(&spec, rho.as_ref(), &frame)?;
        println!(
            "c = {c:.0e}: <sigma-> = {:.9}, <n_1> = {:.9}, |zeta1| = {:.4}, |zeta2| = {:.4}, reordered basis {}",
            o.sigma_minus,
            o.n1,
            amp.corrections[1].norm_l2(),
            amp.corrections[2].norm_l2(),
            amp.is_reordered()
        );
    }

    let hs = HilbertSpace::new(vec![2])?;
    let sm = sigma_minus();
    let pumped = PTSplit::new(
        dissipator_superop(sm.as_ref(), &hs)?,
        dissipator_superop(sm.adjoint().to_owned().as_ref(), &hs)?,
        0.01,
    )?;
    let series = pt_steady_state(&pumped, 2)?;
    match amp_pt_checked(&series.state_corrections, 1e-9) {
        Ok(_) => println!("pumped qubit: unexpectedly regular"),
        Err(e) => println!("pumped qubit: {e}"),
    }
    Ok(())
}
