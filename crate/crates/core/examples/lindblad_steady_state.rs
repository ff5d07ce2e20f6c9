//! Builds the Liouvillian of a driven, damped two-level system, solves for
//! its steady state and compares with the closed form.

use faer::{c64, Scale};
use liouville_pt::liouville::{
    build_liouvillian, eigenvalues, sigma_minus, steady_state_exact, Channel, HilbertSpace, LindbladSpec,
};
use liouville_pt::oracle::tls_steady_analytic;

fn main() -> liouville_pt::Result<()> {
    let (delta, eps, gamma) = (0.5, 0.8, 1.0);
    let sm = sigma_minus();
    let sp = sm.adjoint().to_owned();
    let h = &sp * &sm * Scale(c64::new(delta, 0.0)) + (&sp + &sm) * Scale(c64::new(eps, 0.0));
    let l = build_liouvillian(&LindbladSpec {
        hilbert: HilbertSpace::new(vec![2])?,
        hamiltonian: h,
        channels: vec![Channel { collapse: sm, rate: gamma }],
    })?;

    let rho = steady_state_exact(&l)?;
    let tls = tls_steady_analytic(delta, eps, gamma)?;
    println!("excited population: {:.12} (closed form {:.12})", rho[(1, 1)].re, tls.pop_e);
    println!("<sigma->:           {:.12} (closed form {:.12})", rho[(1, 0)], tls.sigma_minus);
    println!("spectrum of L:");
    for v in eigenvalues(&l)? {
        println!("  {:+.6} {:+.6}i", v.re, v.im);
    }
    Ok(())
}
