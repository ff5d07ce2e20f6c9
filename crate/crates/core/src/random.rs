//! Seeded random matrices for tests, diagnostics and the verification suite.

use faer::{c64, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{hermitian_part, trace, ComplexMatrix};

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries with real and imaginary parts uniform in [-1, 1].
pub fn random_matrix(rng: &mut TestRng, rows: usize, cols: usize) -> ComplexMatrix {
    Mat::from_fn(rows, cols, |_, _| {
        c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

pub fn random_hermitian(rng: &mut TestRng, n: usize) -> ComplexMatrix {
    hermitian_part(random_matrix(rng, n, n).as_ref())
}

/// Full-rank density matrix `B B† / Tr(B B†)`.
pub fn random_density(rng: &mut TestRng, n: usize) -> ComplexMatrix {
    let b = random_matrix(rng, n, n);
    let rho = &b * b.adjoint();
    let tr = trace(rho.as_ref());
    hermitian_part((rho * faer::Scale(c64::new(1.0 / tr.re, 0.0))).as_ref())
}

/// Matrix of the given rank, built as a product of random factors.
pub fn random_rank_deficient(rng: &mut TestRng, rows: usize, cols: usize, rank: usize) -> ComplexMatrix {
    let b = random_matrix(rng, rows, rank);
    let c = random_matrix(rng, rank, cols);
    &b * &c
}
