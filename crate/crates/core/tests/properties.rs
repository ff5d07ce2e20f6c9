use faer::c64;
use proptest::prelude::*;

use liouville_pt::amp_pt::{amp_pt_corrections, build_z0_system, reconstruct_density};
use liouville_pt::linalg::{cholesky_lower, frobenius_norm, hermiticity_deviation, min_eigenvalue_hermitian, pinv, trace};
use liouville_pt::liouville::{build_liouvillian, steady_state_exact, Channel, HilbertSpace, LindbladSpec};
use liouville_pt::random::{random_density, random_hermitian, random_matrix, random_rank_deficient, rng};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pinv_satisfies_penrose(seed in any::<u64>(), rows in 1usize..9, cols in 1usize..9, rank in 1usize..9) {
        let mut r = rng(seed);
        let a = random_rank_deficient(&mut r, rows, cols, rank.min(rows).min(cols));
        let p = pinv(a.as_ref(), 1e-10).unwrap();
        let x = &p.matrix;
        let scale = frobenius_norm(a.as_ref()).max(1.0) * frobenius_norm(x.as_ref()).max(1.0);
        let ax = &a * x;
        let xa = x * &a;
        prop_assert!(frobenius_norm((&ax * &a - &a).as_ref()) < 1e-10 * scale);
        prop_assert!(frobenius_norm((&xa * x - x).as_ref()) < 1e-10 * scale * scale);
        prop_assert!(frobenius_norm((ax.adjoint() - &ax).as_ref()) < 1e-10 * scale);
        prop_assert!(frobenius_norm((xa.adjoint() - &xa).as_ref()) < 1e-10 * scale);
        prop_assert_eq!(p.rank, rank.min(rows).min(cols));
    }

    #[test]
    fn z0_solve_inverts_the_map(seed in any::<u64>(), d in 1usize..7) {
        let mut r = rng(seed);
        let zeta0 = cholesky_lower(random_density(&mut r, d).as_ref()).unwrap();
        let sys = build_z0_system(zeta0.as_ref()).unwrap();
        let h = random_hermitian(&mut r, d);
        let x = sys.solve(h.as_ref()).unwrap();
        let residual = frobenius_norm((sys.apply(x.as_ref()) - &h).as_ref());
        prop_assert!(residual < 1e-8 * frobenius_norm(h.as_ref()).max(1.0) * sys.condition_estimate().max(1.0));
        for i in 0..d {
            prop_assert!(x[(i, i)].im.abs() < 1e-12);
            for j in i + 1..d {
                prop_assert_eq!(x[(i, j)], c64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn amplitude_reconstruction_is_a_state(seed in any::<u64>(), d in 1usize..6, alpha in -2.0f64..2.0) {
        let mut r = rng(seed);
        let rho0 = random_density(&mut r, d);
        let mut h1 = random_hermitian(&mut r, d);
        let mut h2 = random_hermitian(&mut r, d);
        // traceless corrections
        for h in [&mut h1, &mut h2] {
            let t = trace(h.as_ref()) * (1.0 / d as f64);
            for i in 0..d {
                h[(i, i)] -= t;
            }
        }
        let series = amp_pt_corrections(&[rho0, h1, h2], 0.0).unwrap();
        let rho = reconstruct_density(&series, alpha).unwrap();
        prop_assert!((trace(rho.as_ref()) - c64::new(1.0, 0.0)).norm() < 1e-10);
        prop_assert!(hermiticity_deviation(rho.as_ref()) < 1e-12);
        prop_assert!(min_eigenvalue_hermitian(rho.as_ref()).unwrap() > -1e-12);
    }

    #[test]
    fn exact_steady_state_is_a_state(seed in any::<u64>(), d in 2usize..6) {
        let mut r = rng(seed);
        let hilbert = HilbertSpace::new(vec![d]).unwrap();
        let channels = (0..2).map(|_| Channel { collapse: random_matrix(&mut r, d, d), rate: 0.5 }).collect();
        let spec = LindbladSpec { hilbert, hamiltonian: random_hermitian(&mut r, d), channels };
        let l = build_liouvillian(&spec).unwrap();
        let rho = steady_state_exact(&l).unwrap();
        prop_assert!((trace(rho.as_ref()) - c64::new(1.0, 0.0)).norm() < 1e-10);
        prop_assert!(hermiticity_deviation(rho.as_ref()) < 1e-10);
        prop_assert!(min_eigenvalue_hermitian(rho.as_ref()).unwrap() > -1e-10);
    }
}
