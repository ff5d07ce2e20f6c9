//! Trace-norm error of the truncated steady-state series against the exact
//! steady state of a three-spin ring, with log-log slopes in t.

use liouville_pt::models::SpinRingSpec;
use liouville_pt::oracle::{convergence_slope, log_grid, steady_state_errors};

fn main() -> liouville_pt::Result<()> {
    let split = SpinRingSpec { n_sites: 3, delta_omega: 0.5, epsilon: 0.8, t_coupling: 0.0, gamma: 1.0 }.split()?;
    let ts = log_grid(0.01, 0.1, 6);
    print!("{:>6}", "t");
    for t in &ts {
        print!(" {t:>10.4}");
    }
    println!("  slope");
    for m in 0..=3 {
        let errs = steady_state_errors(&split, m, &ts)?;
        print!("{:>6}", format!("M={m}"));
        for e in &errs {
            print!(" {e:>10.3e}");
        }
        println!("  {:.3}", convergence_slope(&ts, &errs)?);
    }
    Ok(())
}
