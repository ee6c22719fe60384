//! Fairness-constrained training, its noise-aware wrapper, and conversions
//! between the mean-difference score and the per-group-versus-overall
//! constraint used by reduction-style trainers.

mod model_file;
mod reduction;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, WeightedRows};
use crate::error::{Error, Result};
use crate::estimation::{estimate_ccn_rates, estimate_eo_rates, EstimationConfig};
use crate::metrics::{positive_rate, Criterion, FairnessSpec};
use crate::noise::{
    ccn_to_mc_from_corrupted, clean_positive_rates, mc_to_eo, scale_tolerance, CcnNoise, EoConditionalNoise, McNoise,
    NoiseRates,
};
use crate::scorer::Scorer;

pub use model_file::{load_model, parse_model, save_model, write_model};
pub use reduction::{
    train_fair, train_unconstrained, FairClassifier, IterateRecord, IterateSelection, NoiseAdjustment, TrainConfig,
    TrainWarning, TrainingTrace,
};

/// Where the noise level for [`train_fair_noisy`] comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseSource {
    Mc(McNoise),
    /// Only valid for equal opportunity.
    EoConditional(EoConditionalNoise),
    /// Flip rates on the sensitive bit; converted using the observed base rate.
    Ccn(CcnNoise),
    /// Flip rates estimated from the corrupted data itself.
    Estimate(EstimationConfig),
}

/// Positive rates `P[Y=1 | A_corr = a]` observed on corrupted data, as `(a=1, a=0)`.
fn observed_positive_rates(data: &Dataset) -> Result<(f64, f64)> {
    Ok((data.positive_rate_given(true)?, data.positive_rate_given(false)?))
}

/// Fraction of the criterion's base slice carrying `A_corr = 1`.
fn observed_group_rate(data: &Dataset, criterion: Criterion) -> Result<f64> {
    let base = data.count(criterion.base_slice());
    if base == 0 {
        return Err(Error::EmptySlice(criterion.base_slice()));
    }
    Ok(data.count(criterion.group_slice(true)) as f64 / base as f64)
}

fn resolve_noise(data: &Dataset, criterion: Criterion, source: &NoiseSource) -> Result<NoiseAdjustment> {
    let adjustment = |retention: f64, rates: Option<(f64, f64)>, estimate_clamped: bool| NoiseAdjustment {
        requested_tolerance: f64::NAN,
        retention,
        rates,
        estimate_clamped,
    };
    let from_ccn = |rates: CcnNoise, clamped: bool| -> Result<NoiseAdjustment> {
        let conversion = ccn_to_mc_from_corrupted(rates, observed_group_rate(data, criterion)?)?;
        Ok(adjustment(
            conversion.noise.retention(),
            Some((rates.rho_plus(), rates.rho_minus())),
            clamped,
        ))
    };
    match (criterion, source) {
        (Criterion::DemographicParity, NoiseSource::Mc(n)) => Ok(adjustment(n.retention(), None, false)),
        (Criterion::DemographicParity, NoiseSource::EoConditional(_)) => Err(Error::InvalidConfig(
            "EO-conditional noise weights only apply to equal opportunity".into(),
        )),
        (Criterion::EqualOpportunity, NoiseSource::Mc(n)) => {
            let (q1, q0) = observed_positive_rates(data)?;
            let (p1, p0) = clean_positive_rates(*n, q1, q0);
            Ok(adjustment(mc_to_eo(*n, p1, p0)?.retention(), None, false))
        }
        (Criterion::EqualOpportunity, NoiseSource::EoConditional(n)) => Ok(adjustment(n.retention(), None, false)),
        (_, NoiseSource::Ccn(rates)) => from_ccn(*rates, false),
        (Criterion::DemographicParity, NoiseSource::Estimate(cfg)) => {
            let est = estimate_ccn_rates(data, cfg)?;
            from_ccn(est.rates, est.clamped)
        }
        (Criterion::EqualOpportunity, NoiseSource::Estimate(cfg)) => {
            let est = estimate_eo_rates(data, cfg)?;
            let r = est.slice_rates.rates;
            Ok(adjustment(
                est.noise.retention(),
                Some((r.rho_plus(), r.rho_minus())),
                est.slice_rates.clamped,
            ))
        }
    }
}

/// Trains on data with a corrupted sensitive attribute by enforcing the
/// shrunk tolerance `τ·(1 − α − β)` on the corrupted data. The enforced and
/// requested tolerances are both recorded in the trace.
pub fn train_fair_noisy(
    data_corrupted: &Dataset,
    spec: &FairnessSpec,
    noise: &NoiseSource,
    config: &TrainConfig,
) -> Result<FairClassifier> {
    let mut adjustment = resolve_noise(data_corrupted, spec.criterion, noise)?;
    adjustment.requested_tolerance = spec.tolerance;
    let scaled = spec.with_tolerance(spec.tolerance * adjustment.retention)?;
    let mut classifier = train_fair(data_corrupted, &scaled, config)?;
    classifier.trace.noise = Some(adjustment);
    Ok(classifier)
}

/// `max_a |E[c_f | group a] − E[c_f]|` over the criterion's base slice, where
/// `c_f` is the positive-prediction indicator.
pub fn reduction_constraint_value<D, S>(data: &D, scorer: &S, criterion: Criterion) -> Result<f64>
where
    D: WeightedRows,
    S: Scorer + ?Sized,
{
    let overall = positive_rate(data, criterion.base_slice(), scorer)?;
    let mut worst: f64 = 0.0;
    for a in [false, true] {
        let rate = positive_rate(data, criterion.group_slice(a), scorer)?;
        worst = worst.max((rate - overall).abs());
    }
    Ok(worst)
}

/// `max(P[A=0], P[A=1])` within the criterion's base slice.
pub fn reduction_weight<D: WeightedRows>(data: &D, criterion: Criterion) -> Result<f64> {
    let base = criterion.base_slice();
    let total = data.slice_weight(base);
    if !(total > 0.0) {
        return Err(Error::EmptySlice(base));
    }
    let share1 = data.slice_weight(criterion.group_slice(true)) / total;
    Ok(share1.max(1.0 - share1))
}

/// The mean-difference score implied by a reduction-style constraint value,
/// `value / max(P[A=0], P[A=1])`.
pub fn mean_diff_from_reduction(value: f64, pi_weight: f64) -> Result<f64> {
    if !(0.5..=1.0).contains(&pi_weight) {
        return Err(Error::OutOfRangeWeight(pi_weight));
    }
    Ok(value / pi_weight)
}

/// `τ·(1 − α − β)/2`: a reduction-style tolerance on corrupted data that
/// keeps the clean constraint at `τ` even if group proportions shift.
pub fn conservative_half_tolerance(tau: f64, noise: &impl NoiseRates) -> f64 {
    0.5 * scale_tolerance(tau, noise)
}
