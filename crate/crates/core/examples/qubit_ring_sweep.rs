//! Qubit coupled to a driven three-resonator ring, solved in the displaced
//! frame. Prints |<sigma->|, |<a_1>| and <n_1> for each method.
//!
//! cargo run --release --example qubit_ring_sweep [points]

use liouville_pt::models::{displaced_amplitudes, ModelSpec, QubitRingSpec};
use liouville_pt::oracle::{sweep_points, Method, SweepOptions};

fn main() -> liouville_pt::Result<()> {
    let points: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(13);
    let spec = QubitRingSpec { fock_cutoff: 3, delta_omega: 0.0, epsilon: 1.0, kappa: 10.0, g: 0.5, gamma_a: 0.05, gamma_q: 0.05 };
    let frame = displaced_amplitudes(&spec);
    println!("mode amplitudes at dw = 0: {:?}", frame.mode_amplitudes.map(|a| format!("{:.5}", a.norm())));
    println!("effective qubit drive: {:.5}", frame.eps_eff);

    let model = ModelSpec::QubitRing(spec);
    let grid: Vec<f64> = (0..points).map(|k| -3.0 + 6.0 * k as f64 / (points - 1) as f64).collect();
    let opts = SweepOptions { reg_c: Some(1e-9), ..Default::default() };
    let results = sweep_points(&model, "delta_omega", &grid, &opts)?;

    for (k, name) in model.observable_names().iter().enumerate() {
        println!("\n|{name}|");
        println!("{:>7} {:>11} {:>11} {:>11} {:>11}", "dw/eps", "exact", "order0", "dm_pt", "amp_pt");
        for p in &results {
            let get = |m: Method| p.observables.get(&m).map(|o| o[k].norm()).unwrap_or(f64::NAN);
            println!(
                "{:>7.2} {:>11.6} {:>11.6} {:>11.6} {:>11.6}",
                p.diagnostics.value,
                get(Method::Exact),
                get(Method::Order0),
                get(Method::DmPt),
                get(Method::AmpPt)
            );
        }
    }
    Ok(())
}
