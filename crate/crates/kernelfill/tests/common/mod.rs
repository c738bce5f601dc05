//! Shared deterministic matrix generators for the integration tests.

use kernelfill::matcore::SymMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[allow(dead_code)] // not every test file uses every generator
pub fn random_symmetric(dim: usize, rng: &mut ChaCha8Rng) -> SymMatrix {
    SymMatrix::from_fn(dim, |_, _| rng.random_range(-1.0..1.0))
}

/// Random Gram construction `X X^T` with uniform `[-1, 1]` rows, shifted just
/// enough to keep test instances comfortably conditioned.
pub fn random_pd(dim: usize, shift: f64, rng: &mut ChaCha8Rng) -> SymMatrix {
    let rows: Vec<Vec<f64>> = (0..dim)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    SymMatrix::from_fn(dim, |i, j| {
        let dot: f64 = (0..dim).map(|k| rows[i][k] * rows[j][k]).sum();
        if i == j {
            dot + shift
        } else {
            dot
        }
    })
}
