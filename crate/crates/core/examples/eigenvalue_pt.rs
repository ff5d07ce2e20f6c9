//! Perturbation series for a decaying eigenvalue of a two-spin ring,
//! compared against the exact eigenvalue tracked by continuity in t.

use liouville_pt::dm_pt::pt_eigenpair;
use liouville_pt::liouville::eig_biorthonormal;
use liouville_pt::models::SpinRingSpec;
use liouville_pt::oracle::{convergence_slope, log_grid, track_eigenpair};

fn main() -> liouville_pt::Result<()> {
    let spec = SpinRingSpec { n_sites: 2, delta_omega: 0.5, epsilon: 0.8, t_coupling: 0.0, gamma: 1.0 };
    let split = spec.split()?;
    let pairs = eig_biorthonormal(&split.l0)?;

    // first decaying mode that is not degenerate
    let (seed, series) = pairs
        .iter()
        .filter(|p| p.value.re < -1e-9)
        .find_map(|p| pt_eigenpair(&split, p, 3).ok().map(|s| (p, s)))
        .expect("a non-degenerate decaying mode");
    println!("seed eigenvalue {:.6}", seed.value);
    for (j, l) in series.eigvalue_corrections.iter().enumerate() {
        println!("  lambda({j}) = {l:.6e}");
    }

    let mut ts = vec![0.0];
    ts.extend(log_grid(1e-3, 0.1, 21));
    let tracked = track_eigenpair(&split, seed, &ts)?;
    let fit: Vec<_> = tracked.iter().filter(|p| p.alpha >= 0.01 - 1e-12).collect();
    let xs: Vec<f64> = fit.iter().map(|p| p.alpha).collect();
    for m in 1..=3 {
        let s = series.truncated(m);
        let errs: Vec<f64> = fit.iter().map(|p| (s.eigenvalue_at(p.alpha) - p.pair.value).norm()).collect();
        println!("M = {m}: error at t = 0.1 is {:.2e}, slope {:.3}", errs[errs.len() - 1], convergence_slope(&xs, &errs)?);
    }
    Ok(())
}
