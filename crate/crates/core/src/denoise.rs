//! Rank-based relabeling of a corrupted sensitive attribute (a simplified
//! confident-learning baseline).
//!
//! A posterior `η̂(x, y) ≈ P[A_corr = 1 | x, y]` ranks the examples. The
//! apparent `A = 1` group holds a fraction `α` of clean-`A = 0` members and
//! the apparent `A = 0` group a fraction `β` of clean-`A = 1` members. So
//! the `⌈α·|A_corr = 1|⌉` lowest-ranked examples of the first group are moved
//! to `A = 0` and the `⌈β·|A_corr = 0|⌉` highest-ranked of the second to
//! `A = 1`, with `(α, β)` derived from the flip rates and the observed
//! group share.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Slice};
use crate::error::{Error, Result};
use crate::estimation::{fit_posterior, PosteriorConfig};
use crate::noise::CcnNoise;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DenoiseConfig {
    pub posterior: PosteriorConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenoiseReport {
    /// Apparent `A = 1` examples moved to `A = 0`.
    pub relabeled_to_negative: usize,
    /// Apparent `A = 0` examples moved to `A = 1`.
    pub relabeled_to_positive: usize,
    pub total: usize,
    /// Some apparent group was relabeled in its entirety.
    pub entire_group: bool,
}

impl DenoiseReport {
    pub fn fraction_relabeled(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            (self.relabeled_to_negative + self.relabeled_to_positive) as f64 / self.total as f64
        }
    }
}

/// Contamination of each apparent group, `(α, β)`, clamped to `[0, 1]`.
/// Rates that cannot have produced the observed share saturate at 1.
fn contamination(rates: CcnNoise, pi_corr: f64) -> (f64, f64) {
    let (rp, rm) = (rates.rho_plus(), rates.rho_minus());
    let pi = ((pi_corr - rm) / (1.0 - rp - rm)).clamp(0.0, 1.0);
    let alpha = if pi_corr > 0.0 { rm * (1.0 - pi) / pi_corr } else { 0.0 };
    let beta = if pi_corr < 1.0 { rp * pi / (1.0 - pi_corr) } else { 0.0 };
    (alpha.clamp(0.0, 1.0), beta.clamp(0.0, 1.0))
}

/// `⌈share·size⌉` without a spurious extra example from rounding.
fn ceil_count(share: f64, size: usize) -> usize {
    let raw = share * size as f64;
    let nearest = raw.round();
    let count = if (raw - nearest).abs() < 1e-9 {
        nearest
    } else {
        raw.ceil()
    };
    (count as usize).min(size)
}

/// Returns a copy of `data` with some sensitive bits flipped back, and a
/// summary of the changes. Features and targets are untouched.
pub fn denoise_ccn(data: &Dataset, rates: CcnNoise, config: &DenoiseConfig) -> Result<(Dataset, DenoiseReport)> {
    data.require_nonempty()?;
    data.require_slice(Slice::group(true))?;
    data.require_slice(Slice::group(false))?;
    let n1 = data.count(Slice::group(true));
    let n0 = data.len() - n1;
    let (alpha, beta) = contamination(rates, n1 as f64 / data.len() as f64);
    let k1 = ceil_count(alpha, n1);
    let k0 = ceil_count(beta, n0);

    let mut bits = data.sensitive_bits();
    if k1 + k0 > 0 {
        let posterior = fit_posterior(data, false, &config.posterior)?;
        let scored: Vec<(usize, f64, bool)> = data
            .examples()
            .iter()
            .enumerate()
            .map(|(i, e)| (i, posterior.logit(&e.features, e.target), e.sensitive))
            .collect();
        if scored.iter().any(|s| s.1.is_nan()) {
            return Err(Error::DegenerateConditional);
        }

        let mut ones: Vec<&(usize, f64, bool)> = scored.iter().filter(|s| s.2).collect();
        ones.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        let mut zeros: Vec<&(usize, f64, bool)> = scored.iter().filter(|s| !s.2).collect();
        zeros.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

        for s in ones.iter().take(k1) {
            bits[s.0] = false;
        }
        for s in zeros.iter().take(k0) {
            bits[s.0] = true;
        }
    }

    let report = DenoiseReport {
        relabeled_to_negative: k1,
        relabeled_to_positive: k0,
        total: data.len(),
        entire_group: (k1 > 0 && k1 == n1) || (k0 > 0 && k0 == n0),
    };
    Ok((data.with_sensitive(&bits), report))
}
