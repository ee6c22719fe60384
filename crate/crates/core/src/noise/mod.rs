//! Noise on the sensitive attribute.
//!
//! The general model is mutual contamination: the observed group-conditional
//! distributions are mixtures of the clean ones,
//!
//! ```text
//! D(A_corr = 1) = (1 − α)·D(A = 1) + α·D(A = 0)
//! D(A_corr = 0) =      β·D(A = 1) + (1 − β)·D(A = 0)
//! ```
//!
//! with `α + β < 1`. Class-conditional flipping ([`CcnNoise`]) and censoring
//! (PU) are special cases. Under this model every mean-difference score
//! shrinks by exactly `1 − α − β`, so a tolerance `τ` on clean data is
//! equivalent to `τ·(1 − α − β)` on corrupted data.
//!
//! `α + β > 1` is rejected. Callers in that regime can swap the two group
//! labels, which maps `(α, β)` to `(1 − α, 1 − β)`.

mod convert;
mod inject;
mod population;
mod privacy;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use convert::{ccn_to_mc, ccn_to_mc_from_corrupted, clean_positive_rates, mc_to_eo, McConversion};
pub use inject::{inject_ccn, inject_ccn_with_mask, inject_pu, Injection};
pub use population::corrupt_population;
pub use privacy::{dp_epsilon_for_rho, dp_rho_for_epsilon, DpParams};

fn check_pair(name: &str, a: f64, b: f64) -> Result<()> {
    let in_unit = |v: f64| (0.0..1.0).contains(&v);
    if !in_unit(a) || !in_unit(b) {
        return Err(Error::InvalidNoise(format!(
            "{name} rates must lie in [0, 1), got ({a}, {b})"
        )));
    }
    if a + b >= 1.0 {
        return Err(Error::InvalidNoise(format!(
            "{name} rates must sum below 1, got {a} + {b}"
        )));
    }
    Ok(())
}

/// Anything that shrinks mean-difference scores by a known factor.
pub trait NoiseRates {
    /// `1 − α − β`, in `(0, 1]`.
    fn retention(&self) -> f64;
}

/// Mutual-contamination weights `(α, β)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McNoise {
    alpha: f64,
    beta: f64,
}

impl McNoise {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        check_pair("MC", alpha, beta)?;
        Ok(McNoise { alpha, beta })
    }

    pub const NONE: McNoise = McNoise { alpha: 0.0, beta: 0.0 };

    /// Weight of the clean `A = 0` distribution inside the observed `A = 1` group.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Weight of the clean `A = 1` distribution inside the observed `A = 0` group.
    pub fn beta(&self) -> f64 {
        self.beta
    }
}

impl NoiseRates for McNoise {
    fn retention(&self) -> f64 {
        1.0 - self.alpha - self.beta
    }
}

/// Class-conditional flip rates: `1 → 0` with probability `ρ⁺`,
/// `0 → 1` with probability `ρ⁻`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CcnNoise {
    rho_plus: f64,
    rho_minus: f64,
}

impl CcnNoise {
    pub fn new(rho_plus: f64, rho_minus: f64) -> Result<Self> {
        check_pair("CCN", rho_plus, rho_minus)?;
        Ok(CcnNoise { rho_plus, rho_minus })
    }

    pub const NONE: CcnNoise = CcnNoise {
        rho_plus: 0.0,
        rho_minus: 0.0,
    };

    /// Symmetric flipping, as used by randomized response.
    pub fn symmetric(rho: f64) -> Result<Self> {
        Self::new(rho, rho)
    }

    /// Censoring: members of `A = 0` sometimes appear as `A = 1`, never the reverse.
    pub fn censoring(rho_minus: f64) -> Result<Self> {
        Self::new(0.0, rho_minus)
    }

    pub fn rho_plus(&self) -> f64 {
        self.rho_plus
    }

    pub fn rho_minus(&self) -> f64 {
        self.rho_minus
    }

    /// Flip probability for an example whose clean bit is `sensitive`.
    pub fn flip_rate(&self, sensitive: bool) -> f64 {
        if sensitive {
            self.rho_plus
        } else {
            self.rho_minus
        }
    }
}

/// Mixture weights `(α′, β′)` of the `Y = 1` slices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EoConditionalNoise {
    alpha_prime: f64,
    beta_prime: f64,
}

impl EoConditionalNoise {
    pub fn new(alpha_prime: f64, beta_prime: f64) -> Result<Self> {
        check_pair("EO-conditional", alpha_prime, beta_prime)?;
        Ok(EoConditionalNoise {
            alpha_prime,
            beta_prime,
        })
    }

    pub fn alpha_prime(&self) -> f64 {
        self.alpha_prime
    }

    pub fn beta_prime(&self) -> f64 {
        self.beta_prime
    }

    /// The same weights viewed as an MC model on the `Y = 1` sub-population.
    pub fn as_mc(&self) -> McNoise {
        McNoise {
            alpha: self.alpha_prime,
            beta: self.beta_prime,
        }
    }
}

impl NoiseRates for EoConditionalNoise {
    fn retention(&self) -> f64 {
        1.0 - self.alpha_prime - self.beta_prime
    }
}

/// `τ·(1 − α − β)`: the tolerance to enforce on corrupted data so that the
/// clean constraint holds at `τ`.
pub fn scale_tolerance(tau: f64, noise: &impl NoiseRates) -> f64 {
    tau * noise.retention()
}
