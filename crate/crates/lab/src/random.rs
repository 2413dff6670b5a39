//! Seeded random lattice states.

use ertl_core::lattice::LatticeState;
use ertl_core::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

/// Generator for case `index` of a sweep seeded with `seed`; cases are
/// independent of how the sweep is split across threads.
pub fn case_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn polar(rng: &mut impl Rng, lo: f64, hi: f64) -> C64 {
    C64::from_polar(rng.random_range(lo..hi), rng.random_range(0.0..core::f64::consts::TAU))
}

/// Complex state with `|β_n| ∈ [0.5, 2)` and `|α_n| ∈ [0.05, 1)`.
pub fn generic_state(rng: &mut impl Rng, sites: usize, p: C64, q: C64) -> Result<LatticeState> {
    let beta = (0..sites).map(|_| polar(rng, 0.5, 2.0)).collect();
    let alpha = (1..sites).map(|_| polar(rng, 0.05, 1.0)).collect();
    Ok(LatticeState::finite(p, q, 0.0, beta, alpha)?)
}

/// Real state with `β_n ∈ [0.5, 2)` and `α_n ∈ [0.1, 1)`.
pub fn positive_state(rng: &mut impl Rng, sites: usize, p: C64, q: C64) -> Result<LatticeState> {
    let beta = (0..sites).map(|_| C64::new(rng.random_range(0.5..2.0), 0.0)).collect();
    let alpha = (1..sites).map(|_| C64::new(rng.random_range(0.1..1.0), 0.0)).collect();
    Ok(LatticeState::finite(p, q, 0.0, beta, alpha)?)
}

/// Generic complex `(p, q)` with moduli in `[0.2, 2)`.
pub fn generic_parameters(rng: &mut impl Rng) -> (C64, C64) {
    (polar(rng, 0.2, 2.0), polar(rng, 0.2, 2.0))
}
