use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::CcnNoise;
use crate::data::Dataset;
use crate::error::Result;

/// A corrupted copy of a dataset together with the ground-truth flip mask.
#[derive(Debug, Clone)]
pub struct Injection {
    pub data: Dataset,
    /// `flipped[i]` is true when example `i` had its sensitive bit changed.
    pub flipped: Vec<bool>,
}

impl Injection {
    /// Flips that went `1 → 0`.
    pub fn flips_from_positive(&self, clean: &Dataset) -> usize {
        self.count(clean, true)
    }

    /// Flips that went `0 → 1`.
    pub fn flips_from_negative(&self, clean: &Dataset) -> usize {
        self.count(clean, false)
    }

    fn count(&self, clean: &Dataset, from: bool) -> usize {
        clean
            .examples()
            .iter()
            .zip(&self.flipped)
            .filter(|(e, &f)| f && e.sensitive == from)
            .count()
    }
}

/// Flips each sensitive bit independently: `1 → 0` with probability `ρ⁺`,
/// `0 → 1` with probability `ρ⁻`.
///
/// Randomness comes from a ChaCha8 stream seeded with `seed`. Exactly one
/// uniform draw is consumed per example, in example order, whatever the
/// example's group, so the output for a prefix of the data does not depend
/// on what follows it.
pub fn inject_ccn_with_mask(data: &Dataset, noise: CcnNoise, seed: u64) -> Injection {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut flipped = Vec::with_capacity(data.len());
    let bits: Vec<bool> = data
        .examples()
        .iter()
        .map(|e| {
            let u: f64 = rng.random();
            let flip = u < noise.flip_rate(e.sensitive);
            flipped.push(flip);
            e.sensitive ^ flip
        })
        .collect();
    Injection {
        data: data.with_sensitive(&bits),
        flipped,
    }
}

pub fn inject_ccn(data: &Dataset, noise: CcnNoise, seed: u64) -> Dataset {
    inject_ccn_with_mask(data, noise, seed).data
}

/// Censoring noise: `A = 0` examples appear as `A = 1` with probability
/// `rho_minus`; `A = 1` is never flipped.
pub fn inject_pu(data: &Dataset, rho_minus: f64, seed: u64) -> Result<Dataset> {
    Ok(inject_ccn(data, CcnNoise::censoring(rho_minus)?, seed))
}
