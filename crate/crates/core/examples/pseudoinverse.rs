//! Moore-Penrose pseudoinverse of a rank-deficient matrix and the four
//! Penrose conditions.

use liouville_pt::linalg::{max_abs, pinv, DEFAULT_PINV_REL_TOL};
use liouville_pt::random::{random_rank_deficient, rng};

fn main() -> liouville_pt::Result<()> {
    let mut g = rng(7);
    let a = random_rank_deficient(&mut g, 6, 6, 3);
    let p = pinv(a.as_ref(), DEFAULT_PINV_REL_TOL)?;
    println!("rank {} of 6, cutoff {:.2e}", p.rank, p.singular_tol);
    println!("singular values: {:?}", p.singular_values.iter().map(|s| format!("{s:.3e}")).collect::<Vec<_>>());

    let x = &p.matrix;
    let ax = &a * x;
    let xa = x * &a;
    println!("|A X A - A|     = {:.2e}", max_abs((&ax * &a - &a).as_ref()));
    println!("|X A X - X|     = {:.2e}", max_abs((&xa * x - x).as_ref()));
    println!("|(A X)^H - A X| = {:.2e}", max_abs((ax.adjoint() - &ax).as_ref()));
    println!("|(X A)^H - X A| = {:.2e}", max_abs((xa.adjoint() - &xa).as_ref()));
    println!("|(A X)^2 - A X| = {:.2e}", max_abs((&ax * &ax - &ax).as_ref()));
    Ok(())
}
