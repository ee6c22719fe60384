//! Estimating flip rates from corrupted data alone.
//!
//! Under class-conditional flipping the corrupted posterior is an affine
//! image of the clean one,
//!
//! ```text
//! P[A_corr = 1 | x] = ρ⁻ + (1 − ρ⁺ − ρ⁻)·P[A = 1 | x],
//! ```
//!
//! so on anchor points (where the clean posterior is 0 or 1) it equals `ρ⁻`
//! or `1 − ρ⁺`. The estimator fits a logistic posterior for `A_corr`,
//! recalibrates its score with a noise-aware link whose floor and ceiling
//! are free (fit by EM), and reads the rates off low and high quantiles of
//! the calibrated posterior over the sample.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Slice};
use crate::error::{Error, Result};
use crate::logistic::{fit_logistic, sigmoid, LogisticOptions, Standardizer};
use crate::noise::{ccn_to_mc_from_corrupted, CcnNoise, EoConditionalNoise};
use crate::scorer::{LinearScorer, Scorer};

pub const PROBABILITY_FLOOR: f64 = 1e-6;

/// Margin kept below `ρ̂⁺ + ρ̂⁻ = 1` when estimates are shrunk.
pub const RATE_SUM_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PosteriorConfig {
    /// L2 penalty; `None` means `1/n`.
    pub l2: Option<f64>,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
}

impl Default for PosteriorConfig {
    fn default() -> Self {
        PosteriorConfig {
            l2: None,
            max_iterations: 1000,
            gradient_tolerance: 1e-6,
        }
    }
}

/// A fitted estimate of `P[A_corr = 1 | x]` (or `| x, y` when the target
/// is used as an extra feature).
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorModel {
    /// Linear logit on raw features, with `y ∈ {0, 1}` appended when
    /// `uses_target` is set.
    pub scorer: LinearScorer,
    pub uses_target: bool,
    pub iterations: usize,
    pub final_loss: f64,
    /// False when the iteration cap was hit with the gradient above tolerance.
    pub converged: bool,
}

impl PosteriorModel {
    pub fn logit(&self, features: &[f64], target: bool) -> f64 {
        if self.uses_target {
            let mut x = features.to_vec();
            x.push(if target { 1.0 } else { 0.0 });
            self.scorer.score(&x)
        } else {
            self.scorer.score(features)
        }
    }

    /// Posterior probability, clamped away from 0 and 1.
    pub fn probability(&self, features: &[f64], target: bool) -> f64 {
        clamp_probability(sigmoid(self.logit(features, target)))
    }
}

fn clamp_probability(p: f64) -> f64 {
    p.clamp(PROBABILITY_FLOOR, 1.0 - PROBABILITY_FLOOR)
}

/// Fits a regularized logistic model of the observed sensitive bit.
///
/// With `condition_on_y1` the fit uses only the `Y = 1` examples and the
/// features alone; otherwise it uses every example with `Y` as an extra
/// feature. Fitting is deterministic given the data order.
pub fn fit_posterior(data: &Dataset, condition_on_y1: bool, config: &PosteriorConfig) -> Result<PosteriorModel> {
    data.require_nonempty()?;
    let selected: Vec<_> = if condition_on_y1 {
        data.require_slice(Slice::target(true))?;
        data.examples().iter().filter(|e| e.target).collect()
    } else {
        data.examples().iter().collect()
    };
    let uses_target = !condition_on_y1;
    let rows: Vec<Vec<f64>> = selected
        .iter()
        .map(|e| {
            let mut x = e.features.clone();
            if uses_target {
                x.push(if e.target { 1.0 } else { 0.0 });
            }
            x
        })
        .collect();
    let dim = rows[0].len();
    let standardizer = Standardizer::fit(rows.iter().map(Vec::as_slice), dim);
    let z: Vec<Vec<f64>> = rows.iter().map(|r| standardizer.transform(r)).collect();
    let targets: Vec<f64> = selected.iter().map(|e| if e.sensitive { 1.0 } else { 0.0 }).collect();
    let options = LogisticOptions {
        l2: config.l2.unwrap_or(1.0 / z.len() as f64),
        max_iterations: config.max_iterations,
        tolerance: config.gradient_tolerance,
        step: 1.0,
    };
    let fit = fit_logistic(&z, &targets, &vec![1.0; z.len()], &options, None);
    Ok(PosteriorModel {
        scorer: standardizer.unstandardize(&fit.scorer),
        uses_target,
        iterations: fit.iterations,
        final_loss: fit.loss,
        converged: fit.converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimationConfig {
    pub posterior: PosteriorConfig,
    /// Quantile of the calibrated posterior read as `ρ̂⁻`.
    pub low_quantile: f64,
    /// `1 −` this quantile is read as `ρ̂⁺`.
    pub high_quantile: f64,
    pub calibration_iterations: usize,
    pub calibration_tolerance: f64,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        EstimationConfig {
            posterior: PosteriorConfig::default(),
            low_quantile: 0.005,
            high_quantile: 0.995,
            calibration_iterations: 500,
            calibration_tolerance: 1e-10,
        }
    }
}

/// The corrupted posterior `floor + (1 − floor − ceiling_gap)·σ(a·s + c)`
/// on top of a posterior logit `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibratedPosterior {
    pub base: PosteriorModel,
    pub slope: f64,
    pub offset: f64,
    /// Fitted `P[A_corr = 1]` where the clean posterior is 0.
    pub floor: f64,
    /// Fitted `P[A_corr = 0]` where the clean posterior is 1.
    pub ceiling_gap: f64,
    pub iterations: usize,
}

impl CalibratedPosterior {
    /// Estimated clean posterior `P[A = 1 | x]`.
    pub fn clean_probability(&self, features: &[f64], target: bool) -> f64 {
        sigmoid(self.slope * self.base.logit(features, target) + self.offset)
    }

    /// Estimated corrupted posterior `P[A_corr = 1 | x]`.
    pub fn probability(&self, features: &[f64], target: bool) -> f64 {
        let clean = self.clean_probability(features, target);
        clamp_probability(self.floor + (1.0 - self.floor - self.ceiling_gap) * clean)
    }
}

/// Fits the noise-aware link by EM on the latent clean bit.
pub fn calibrate_posterior(
    data: &Dataset,
    base: PosteriorModel,
    config: &EstimationConfig,
) -> Result<CalibratedPosterior> {
    let examples: Vec<_> = data
        .examples()
        .iter()
        .filter(|e| base.uses_target || e.target)
        .collect();
    if examples.is_empty() {
        return Err(Error::EmptySlice(if base.uses_target {
            Slice::ALL
        } else {
            Slice::target(true)
        }));
    }
    let scores: Vec<Vec<f64>> = examples
        .iter()
        .map(|e| vec![base.logit(&e.features, e.target)])
        .collect();
    let observed: Vec<bool> = examples.iter().map(|e| e.sensitive).collect();
    let n = scores.len() as f64;

    let mut link = LinearScorer::new(vec![1.0], 0.0);
    let (mut rho_plus, mut rho_minus) = (0.1, 0.1);
    let link_options = LogisticOptions {
        l2: 0.0,
        max_iterations: 5,
        tolerance: 1e-10,
        step: 1.0,
    };
    let log_likelihood = |link: &LinearScorer, rp: f64, rm: f64| -> f64 {
        scores
            .iter()
            .zip(&observed)
            .map(|(s, &a)| {
                let p1 = clamp_probability(rm + (1.0 - rp - rm) * sigmoid(link.score(s)));
                if a {
                    p1.ln()
                } else {
                    (1.0 - p1).ln()
                }
            })
            .sum::<f64>()
    };

    let mut ll = log_likelihood(&link, rho_plus, rho_minus);
    let mut responsibilities = vec![0.0; scores.len()];
    let mut iterations = 0;
    while iterations < config.calibration_iterations {
        iterations += 1;
        // E-step: P[A = 1 | A_corr, s].
        for ((r, s), &a) in responsibilities.iter_mut().zip(&scores).zip(&observed) {
            let prior = sigmoid(link.score(s));
            let (with_one, with_zero) = if a {
                (prior * (1.0 - rho_plus), (1.0 - prior) * rho_minus)
            } else {
                (prior * rho_plus, (1.0 - prior) * (1.0 - rho_minus))
            };
            let total = with_one + with_zero;
            *r = if total > 0.0 { with_one / total } else { prior };
        }
        // M-step.
        let (mut one, mut one_seen_zero, mut zero, mut zero_seen_one) = (0.0, 0.0, 0.0, 0.0);
        for (&r, &a) in responsibilities.iter().zip(&observed) {
            one += r;
            zero += 1.0 - r;
            if a {
                zero_seen_one += 1.0 - r;
            } else {
                one_seen_zero += r;
            }
        }
        rho_plus = if one > 0.0 { one_seen_zero / one } else { 0.0 };
        rho_minus = if zero > 0.0 { zero_seen_one / zero } else { 0.0 };
        if rho_plus + rho_minus >= 1.0 - RATE_SUM_MARGIN {
            let shrink = (1.0 - RATE_SUM_MARGIN) / (rho_plus + rho_minus);
            rho_plus *= shrink;
            rho_minus *= shrink;
        }
        link = fit_logistic(
            &scores,
            &responsibilities,
            &vec![1.0; scores.len()],
            &link_options,
            Some(&link),
        )
        .scorer;

        let next = log_likelihood(&link, rho_plus, rho_minus);
        let gain = (next - ll) / n;
        ll = next;
        if gain.abs() < config.calibration_tolerance {
            break;
        }
    }

    Ok(CalibratedPosterior {
        base,
        slope: link.weights[0],
        offset: link.intercept,
        floor: rho_minus,
        ceiling_gap: rho_plus,
        iterations,
    })
}

/// Estimated flip rates plus diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct RateEstimate {
    pub rates: CcnNoise,
    /// The raw quantile estimates summed to at least `1 − 1e-3` and were
    /// shrunk proportionally.
    pub clamped: bool,
    /// The posterior fit met its gradient tolerance.
    pub posterior_converged: bool,
    pub calibrated: CalibratedPosterior,
}

/// Linear-interpolation sample quantile of unsorted values.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn estimate_rates(data: &Dataset, condition_on_y1: bool, config: &EstimationConfig) -> Result<RateEstimate> {
    let slice_of = |a| {
        if condition_on_y1 {
            Slice::group_positive(a)
        } else {
            Slice::group(a)
        }
    };
    data.require_slice(slice_of(true))?;
    data.require_slice(slice_of(false))?;

    let base = fit_posterior(data, condition_on_y1, &config.posterior)?;
    let posterior_converged = base.converged;
    let calibrated = calibrate_posterior(data, base, config)?;
    let eta: Vec<f64> = data
        .examples()
        .iter()
        .filter(|e| !condition_on_y1 || e.target)
        .map(|e| calibrated.probability(&e.features, e.target))
        .collect();

    let mut rho_minus = quantile(&eta, config.low_quantile).max(0.0);
    let mut rho_plus = (1.0 - quantile(&eta, config.high_quantile)).max(0.0);
    let limit = 1.0 - RATE_SUM_MARGIN;
    let clamped = rho_plus + rho_minus >= limit;
    if clamped {
        let shrink = limit / (rho_plus + rho_minus);
        rho_plus *= shrink;
        rho_minus *= shrink;
    }
    Ok(RateEstimate {
        rates: CcnNoise::new(rho_plus, rho_minus)?,
        clamped,
        posterior_converged,
        calibrated,
    })
}

/// Estimates `(ρ⁺, ρ⁻)` from a dataset whose sensitive bits are corrupted.
pub fn estimate_ccn_rates(data: &Dataset, config: &EstimationConfig) -> Result<RateEstimate> {
    estimate_rates(data, false, config)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EoEstimate {
    pub noise: EoConditionalNoise,
    /// Flip rates estimated on the `Y = 1` slice.
    pub slice_rates: RateEstimate,
    /// Observed `P[A_corr = 1 | Y = 1]`.
    pub corrupted_base_rate: f64,
}

/// Estimates `(α′, β′)` directly from the `Y = 1` slice.
pub fn estimate_eo_rates(data: &Dataset, config: &EstimationConfig) -> Result<EoEstimate> {
    let slice_rates = estimate_rates(data, true, config)?;
    let n1 = data.count(Slice::target(true));
    let corrupted_base_rate = data.count(Slice::group_positive(true)) as f64 / n1 as f64;
    let conversion = ccn_to_mc_from_corrupted(slice_rates.rates, corrupted_base_rate)?;
    Ok(EoEstimate {
        noise: EoConditionalNoise::new(conversion.noise.alpha(), conversion.noise.beta())?,
        slice_rates,
        corrupted_base_rate,
    })
}
