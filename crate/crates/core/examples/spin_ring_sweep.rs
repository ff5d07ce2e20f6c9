//! Four-spin ring: |<sigma-_1>| over a detuning sweep from the exact steady
//! state, the uncoupled product state, second-order density-matrix PT and
//! amplitude-matrix PT.
//!
//! cargo run --release --example spin_ring_sweep [points]

use liouville_pt::models::{ModelSpec, SpinRingSpec};
use liouville_pt::oracle::{sweep_points, Method, SweepOptions};

fn main() -> liouville_pt::Result<()> {
    let points: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(41);
    let model = ModelSpec::SpinRing(SpinRingSpec { n_sites: 4, delta_omega: 0.0, epsilon: 0.8, t_coupling: 0.4, gamma: 1.0 });
    let grid: Vec<f64> = (0..points).map(|k| -3.0 + 6.0 * k as f64 / (points - 1) as f64).collect();
    let opts = SweepOptions::default();
    let results = sweep_points(&model, "delta_omega", &grid, &opts)?;

    println!("{:>8} {:>10} {:>10} {:>10} {:>10} {:>11}", "dw/g", "exact", "order0", "dm_pt", "amp_pt", "min eig dm");
    for p in &results {
        let get = |m: Method| p.observables.get(&m).map(|o| o[0].norm()).unwrap_or(f64::NAN);
        println!(
            "{:>8.3} {:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>11.2e}",
            p.diagnostics.value,
            get(Method::Exact),
            get(Method::Order0),
            get(Method::DmPt),
            get(Method::AmpPt),
            p.diagnostics.min_eig_dm_pt.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
