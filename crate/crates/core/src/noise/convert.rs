use serde::{Deserialize, Serialize};

use super::{CcnNoise, EoConditionalNoise, McNoise};
use crate::error::{Error, Result};

/// MC weights induced by CCN flipping, with the corrupted base rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConversion {
    pub noise: McNoise,
    /// `P[A_corr = 1]`.
    pub corrupted_base_rate: f64,
    /// `P[A = 1]`.
    pub clean_base_rate: f64,
}

/// Converts flip rates to MC weights given the clean base rate `π_a`:
///
/// ```text
/// π_corr = (1 − ρ⁺)·π_a + ρ⁻·(1 − π_a)
/// α      = ρ⁻·(1 − π_a) / π_corr
/// β      = ρ⁺·π_a / (1 − π_corr)
/// ```
pub fn ccn_to_mc(noise: CcnNoise, pi_a: f64) -> Result<McConversion> {
    if !(pi_a > 0.0 && pi_a < 1.0) {
        return Err(Error::InvalidBaseRate(pi_a));
    }
    let (rp, rm) = (noise.rho_plus(), noise.rho_minus());
    let pi_corr = (1.0 - rp) * pi_a + rm * (1.0 - pi_a);
    if !(pi_corr > 0.0 && pi_corr < 1.0) {
        return Err(Error::DegenerateBaseRate(pi_corr));
    }
    let alpha = rm * (1.0 - pi_a) / pi_corr;
    let beta = rp * pi_a / (1.0 - pi_corr);
    Ok(McConversion {
        noise: McNoise::new(alpha, beta)?,
        corrupted_base_rate: pi_corr,
        clean_base_rate: pi_a,
    })
}

/// Like [`ccn_to_mc`], but starting from the observable corrupted base rate.
/// The clean rate is recovered as `(π_corr − ρ⁻) / (1 − ρ⁺ − ρ⁻)`; an implied
/// rate outside `(0, 1)` means the flip rates cannot have produced `π_corr`.
pub fn ccn_to_mc_from_corrupted(noise: CcnNoise, pi_corr: f64) -> Result<McConversion> {
    if !(pi_corr > 0.0 && pi_corr < 1.0) {
        return Err(Error::DegenerateBaseRate(pi_corr));
    }
    let pi_a = (pi_corr - noise.rho_minus()) / (1.0 - noise.rho_plus() - noise.rho_minus());
    if !(pi_a > 0.0 && pi_a < 1.0) {
        return Err(Error::DegenerateBaseRate(pi_a));
    }
    ccn_to_mc(noise, pi_a)
}

/// The weights `(α′, β′)` that describe how the `Y = 1` slices mix:
///
/// ```text
/// α′ = α·p₀ / ((1 − α)·p₁ + α·p₀)
/// β′ = β·p₁ / (β·p₁ + (1 − β)·p₀)
/// ```
///
/// where `p_a = P[Y = 1 | A = a]` on clean data.
pub fn mc_to_eo(noise: McNoise, p_y1_given_a1: f64, p_y1_given_a0: f64) -> Result<EoConditionalNoise> {
    let (p1, p0) = (p_y1_given_a1, p_y1_given_a0);
    for p in [p1, p0] {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidBaseRate(p));
        }
    }
    let (a, b) = (noise.alpha(), noise.beta());
    let den_alpha = (1.0 - a) * p1 + a * p0;
    let den_beta = b * p1 + (1.0 - b) * p0;
    if den_alpha <= 0.0 || den_beta <= 0.0 {
        return Err(Error::DegenerateConditional);
    }
    EoConditionalNoise::new(a * p0 / den_alpha, b * p1 / den_beta)
}

/// Recovers the clean `(P[Y=1|A=1], P[Y=1|A=0])` from the corrupted ones by
/// inverting the 2×2 mixing matrix, whose determinant is `1 − α − β`.
/// Results are clamped to `[0, 1]`, since sampling error can push them out.
pub fn clean_positive_rates(noise: McNoise, corrupted_given_a1: f64, corrupted_given_a0: f64) -> (f64, f64) {
    let (a, b) = (noise.alpha(), noise.beta());
    let det = 1.0 - a - b;
    let (q1, q0) = (corrupted_given_a1, corrupted_given_a0);
    let p1 = ((1.0 - b) * q1 - a * q0) / det;
    let p0 = ((1.0 - a) * q0 - b * q1) / det;
    (p1.clamp(0.0, 1.0), p0.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_noise() {
        let c = ccn_to_mc(CcnNoise::NONE, 0.3).unwrap();
        assert_eq!(c.noise, McNoise::NONE);
        assert!((c.corrupted_base_rate - 0.3).abs() < 1e-15);
    }

    #[test]
    fn symmetric_balanced() {
        let c = ccn_to_mc(CcnNoise::symmetric(0.15).unwrap(), 0.5).unwrap();
        assert!((c.corrupted_base_rate - 0.5).abs() < 1e-15);
        assert!((c.noise.alpha() - 0.15).abs() < 1e-15);
        assert!((c.noise.beta() - 0.15).abs() < 1e-15);
    }

    #[test]
    fn censoring_balanced() {
        let c = ccn_to_mc(CcnNoise::censoring(0.2).unwrap(), 0.5).unwrap();
        assert!((c.corrupted_base_rate - 0.6).abs() < 1e-15);
        assert!((c.noise.alpha() - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(c.noise.beta(), 0.0);
    }

    #[test]
    fn from_corrupted_inverts() {
        let noise = CcnNoise::new(0.1, 0.25).unwrap();
        let forward = ccn_to_mc(noise, 0.35).unwrap();
        let back = ccn_to_mc_from_corrupted(noise, forward.corrupted_base_rate).unwrap();
        assert!((back.clean_base_rate - 0.35).abs() < 1e-14);
        assert!((back.noise.alpha() - forward.noise.alpha()).abs() < 1e-14);
        assert!(ccn_to_mc_from_corrupted(CcnNoise::censoring(0.3).unwrap(), 0.2).is_err());
    }

    #[test]
    fn eo_weights() {
        let mc = McNoise::new(0.2, 0.0).unwrap();
        let eo = mc_to_eo(mc, 0.5, 0.25).unwrap();
        assert!((eo.alpha_prime() - 1.0 / 9.0).abs() < 1e-15);
        assert_eq!(eo.beta_prime(), 0.0);

        let mc = McNoise::new(0.17, 0.31).unwrap();
        let eo = mc_to_eo(mc, 0.4, 0.4).unwrap();
        assert!((eo.alpha_prime() - 0.17).abs() < 1e-15);
        assert!((eo.beta_prime() - 0.31).abs() < 1e-15);

        let eo = mc_to_eo(McNoise::NONE, 0.3, 0.8).unwrap();
        assert_eq!((eo.alpha_prime(), eo.beta_prime()), (0.0, 0.0));
        assert!(mc_to_eo(mc, 0.0, 0.5).is_err());
    }

    #[test]
    fn clean_rates_roundtrip() {
        let mc = McNoise::new(0.2, 0.15).unwrap();
        let (p1, p0) = (0.7, 0.3);
        let q1 = 0.8 * p1 + 0.2 * p0;
        let q0 = 0.15 * p1 + 0.85 * p0;
        let (r1, r0) = clean_positive_rates(mc, q1, q0);
        assert!((r1 - p1).abs() < 1e-14 && (r0 - p0).abs() < 1e-14);
    }
}
