//! Executable cohomology at desk scale: finite groups acting on
//! finite-dimensional modules and matrix Lie groups, averaging splittings,
//! conjugation retractions witnessing discrete cohomology, relative
//! (projective) cocycles over a central circle, Hochschild cohomology with
//! separability-idempotent splittings, and conjugation of nearby
//! operator-algebra morphisms.

pub mod abelcoh;
pub mod error;
pub mod finitegroup;
mod intlat;
pub mod matnum;
pub mod hochschild;
pub mod nonabcoh;
pub mod relcoh;

pub use error::{Error, Result};

/// Deterministic RNG for the test suites.
#[cfg(test)]
pub(crate) fn testrng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}
