//! Truncated density-matrix PT can produce negative eigenvalues; the
//! amplitude-matrix reconstruction of the same series cannot.

use liouville_pt::amp_pt::{amp_pt_corrections, reconstruct_density};
use liouville_pt::dm_pt::{assemble_truncated, positivity_report, pt_steady_state};
use liouville_pt::linalg::trace_norm;
use liouville_pt::liouville::steady_state_exact;
use liouville_pt::models::SpinRingSpec;

fn main() -> liouville_pt::Result<()> {
    println!("{:>5} {:>6} {:>12} {:>12} {:>10} {:>10}", "t", "dw", "min eig dm", "min eig amp", "err dm", "err amp");
    for t in [0.4, 0.8, 1.0] {
        for dw in [-1.5, 0.0, 0.6] {
            let split = SpinRingSpec { n_sites: 4, delta_omega: dw, epsilon: 0.8, t_coupling: t, gamma: 1.0 }.split()?;
            let series = pt_steady_state(&split, 2)?;
            let dm = assemble_truncated(&series)?;
            let amp = reconstruct_density(&amp_pt_corrections(&series.state_corrections, 0.0)?, t)?;
            let exact = steady_state_exact(&split.full())?;
            println!(
                "{t:>5.1} {dw:>6.2} {:>12.3e} {:>12.3e} {:>10.3e} {:>10.3e}",
                positivity_report(dm.as_ref())?.min_eig,
                positivity_report(amp.as_ref())?.min_eig,
                trace_norm((&dm - &exact).as_ref())?,
                trace_norm((&amp - &exact).as_ref())?
            );
        }
    }
    Ok(())
}
