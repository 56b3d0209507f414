//! Fixtures shared by the benchmarks.

use adfd_core::linalg::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seeded matrix with entries uniform on [-1, 1].
pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..=1.0))
}

/// Seeded symmetric positive semidefinite matrix `BᵀB`.
pub fn random_psd(n: usize, seed: u64) -> DenseMatrix {
    random_matrix(n, n, seed).gram()
}
