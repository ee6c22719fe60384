//! Randomized response on the sensitive bit.
//!
//! Flipping the bit with probability `ρ` on both sides bounds the likelihood
//! ratio of any released bit by `(1 − ρ)/ρ`, which gives `(ε, 0)`-differential
//! privacy whenever `ρ ≥ 1/(exp(ε) + 1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pure `(ε, 0)` differential privacy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpParams {
    epsilon: f64,
}

impl DpParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::NonPositiveEpsilon(epsilon));
        }
        Ok(DpParams { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        0.0
    }

    /// The smallest symmetric flip rate achieving this guarantee.
    pub fn min_flip_rate(&self) -> f64 {
        1.0 / (self.epsilon.exp() + 1.0)
    }
}

/// Minimal symmetric flip rate `1/(exp(ε) + 1)`.
pub fn dp_rho_for_epsilon(epsilon: f64) -> Result<f64> {
    Ok(DpParams::new(epsilon)?.min_flip_rate())
}

/// The tightest `ε = ln((1 − ρ)/ρ)` for flip rate `ρ ∈ (0, 0.5)`.
///
/// `ρ = 0.5` is rejected: it destroys every bit of group information, so a
/// reported `ε = 0` would invite fairness training on pure noise.
pub fn dp_epsilon_for_rho(rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho < 0.5) {
        return Err(Error::OutOfRangeRho(rho));
    }
    Ok(((1.0 - rho) / rho).ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_one() {
        let rho = dp_rho_for_epsilon(1.0).unwrap();
        assert!((rho - 1.0 / (std::f64::consts::E + 1.0)).abs() < 1e-15);
        assert!((rho - 0.268_941_421_369_995).abs() < 1e-12);
        assert!((dp_epsilon_for_rho(rho).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn large_epsilon_needs_no_noise() {
        assert!(dp_rho_for_epsilon(50.0).unwrap() < 1e-20);
    }

    #[test]
    fn near_half_reveals_nothing() {
        let eps = dp_epsilon_for_rho(0.499_999).unwrap();
        assert!(eps > 0.0 && eps < 1e-5);
    }

    #[test]
    fn out_of_range() {
        assert!(matches!(dp_rho_for_epsilon(0.0), Err(Error::NonPositiveEpsilon(_))));
        assert!(matches!(dp_rho_for_epsilon(-1.0), Err(Error::NonPositiveEpsilon(_))));
        for rho in [0.0, 0.5, 0.6, -0.1, f64::NAN] {
            assert!(matches!(dp_epsilon_for_rho(rho), Err(Error::OutOfRangeRho(_))));
        }
    }
}
