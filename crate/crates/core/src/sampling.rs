//! Seeded random draws used by verification sweeps and tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{FrequencyTriple, PUParams, StateVector};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Frequencies uniform in `[lo, hi]`, redrawn until every pair of squares
/// differs by at least `min_gap`.
pub fn random_frequencies<R: Rng>(rng: &mut R, lo: f64, hi: f64, min_gap: f64) -> FrequencyTriple {
    loop {
        let w = [
            rng.gen_range(lo..=hi),
            rng.gen_range(lo..=hi),
            rng.gen_range(lo..=hi),
        ];
        let f = FrequencyTriple::new(w).expect("positive draw");
        let [a, b, c] = f.squares();
        if (a - b).abs() >= min_gap && (a - c).abs() >= min_gap && (b - c).abs() >= min_gap {
            return f;
        }
    }
}

/// Non-degenerate parameters from frequencies in `[0.5, 3]`.
pub fn random_params<R: Rng>(rng: &mut R) -> (FrequencyTriple, PUParams) {
    let f = random_frequencies(rng, 0.5, 3.0, 0.1);
    (f, f.params())
}

/// State with every component uniform in `[-1, 1]`.
pub fn random_state<R: Rng>(rng: &mut R) -> StateVector {
    StateVector::from_fn(|_, _| rng.gen_range(-1.0..=1.0))
}
