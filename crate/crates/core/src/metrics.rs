//! Accuracy risk and the mean-difference fairness scores.
//!
//! All functions accept any [`WeightedRows`] source, so the same code path
//! evaluates an empirical [`Dataset`](crate::Dataset) (count-weighted) and an
//! exact [`DiscretePopulation`](crate::DiscretePopulation) (mass-weighted).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{CompensatedSum, Slice, WeightedRows};
use crate::error::{Error, Result};
use crate::scorer::Scorer;

/// The per-example loss whose group means are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FairnessLoss {
    /// `1[sign(s) != 1]`: charged whenever the prediction is negative.
    PredictNonPositive,
    /// `1[sign(s) != y]`.
    ZeroOne,
}

impl FairnessLoss {
    pub fn eval(self, predicted: bool, target: bool) -> f64 {
        let charged = match self {
            FairnessLoss::PredictNonPositive => !predicted,
            FairnessLoss::ZeroOne => predicted != target,
        };
        if charged {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    DemographicParity,
    EqualOpportunity,
}

impl Criterion {
    /// The loss each criterion is normally paired with.
    pub fn default_loss(self) -> FairnessLoss {
        match self {
            Criterion::DemographicParity => FairnessLoss::PredictNonPositive,
            Criterion::EqualOpportunity => FairnessLoss::ZeroOne,
        }
    }

    /// The slice of group `a` whose losses are compared.
    pub fn group_slice(self, sensitive: bool) -> Slice {
        match self {
            Criterion::DemographicParity => Slice::group(sensitive),
            Criterion::EqualOpportunity => Slice::group_positive(sensitive),
        }
    }

    /// The population the groups partition: everything for DP, `Y = 1` for EO.
    pub fn base_slice(self) -> Slice {
        match self {
            Criterion::DemographicParity => Slice::ALL,
            Criterion::EqualOpportunity => Slice::target(true),
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::DemographicParity => "dp",
            Criterion::EqualOpportunity => "eo",
        })
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dp" | "demographic_parity" => Ok(Criterion::DemographicParity),
            "eo" | "equal_opportunity" => Ok(Criterion::EqualOpportunity),
            other => Err(Error::InvalidConfig(format!("unknown criterion `{other}`"))),
        }
    }
}

impl fmt::Display for FairnessLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FairnessLoss::PredictNonPositive => "predict_non_positive",
            FairnessLoss::ZeroOne => "zero_one",
        })
    }
}

impl FromStr for FairnessLoss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "predict_non_positive" | "nonpositive" => Ok(FairnessLoss::PredictNonPositive),
            "zero_one" | "01" => Ok(FairnessLoss::ZeroOne),
            other => Err(Error::InvalidConfig(format!("unknown fairness loss `{other}`"))),
        }
    }
}

/// A fairness criterion, the loss it averages, and the tolerance `τ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FairnessSpec {
    pub criterion: Criterion,
    pub fairness_loss: FairnessLoss,
    pub tolerance: f64,
}

impl FairnessSpec {
    pub fn new(criterion: Criterion, fairness_loss: FairnessLoss, tolerance: f64) -> Result<Self> {
        if !(tolerance >= 0.0 && tolerance.is_finite()) {
            return Err(Error::InvalidConfig(format!("tolerance must be >= 0, got {tolerance}")));
        }
        Ok(FairnessSpec {
            criterion,
            fairness_loss,
            tolerance,
        })
    }

    pub fn demographic_parity(tolerance: f64) -> Result<Self> {
        Self::new(
            Criterion::DemographicParity,
            FairnessLoss::PredictNonPositive,
            tolerance,
        )
    }

    pub fn equal_opportunity(tolerance: f64) -> Result<Self> {
        Self::new(Criterion::EqualOpportunity, FairnessLoss::ZeroOne, tolerance)
    }

    /// False when the loss is not the criterion's usual partner. Such specs
    /// are legal but worth a warning.
    pub fn is_standard_pairing(&self) -> bool {
        self.criterion.default_loss() == self.fairness_loss
    }

    pub fn with_tolerance(self, tolerance: f64) -> Result<Self> {
        Self::new(self.criterion, self.fairness_loss, tolerance)
    }

    /// The unfairness of `scorer` on `data` under this spec.
    pub fn disparity<D: WeightedRows, S: Scorer + ?Sized>(&self, data: &D, scorer: &S) -> Result<f64> {
        match self.criterion {
            Criterion::DemographicParity => ddp(data, scorer, self.fairness_loss),
            Criterion::EqualOpportunity => deo(data, scorer, self.fairness_loss),
        }
    }
}

/// Weighted mean of the fairness loss over `slice`.
pub fn mean_fairness_loss<D, S>(data: &D, slice: Slice, scorer: &S, loss: FairnessLoss) -> Result<f64>
where
    D: WeightedRows,
    S: Scorer + ?Sized,
{
    let mut num = CompensatedSum::default();
    let mut den = CompensatedSum::default();
    for row in data.rows().filter(|r| slice.contains(r.sensitive, r.target)) {
        den.add(row.weight);
        num.add(row.weight * loss.eval(scorer.predict(row.features), row.target));
    }
    let den = den.total();
    if den <= 0.0 {
        return Err(Error::EmptySlice(slice));
    }
    Ok((num.total() / den).clamp(0.0, 1.0))
}

/// Signed `L̄(A=0 slice) − L̄(A=1 slice)` for the criterion's slices.
pub fn signed_disparity<D, S>(data: &D, scorer: &S, criterion: Criterion, loss: FairnessLoss) -> Result<f64>
where
    D: WeightedRows,
    S: Scorer + ?Sized,
{
    let l0 = mean_fairness_loss(data, criterion.group_slice(false), scorer, loss)?;
    let l1 = mean_fairness_loss(data, criterion.group_slice(true), scorer, loss)?;
    Ok(l0 - l1)
}

/// Disparity of demographic parity.
pub fn ddp<D, S>(data: &D, scorer: &S, loss: FairnessLoss) -> Result<f64>
where
    D: WeightedRows,
    S: Scorer + ?Sized,
{
    signed_disparity(data, scorer, Criterion::DemographicParity, loss).map(f64::abs)
}

/// Disparity of equality of opportunity (group gap on the `Y = 1` slices).
pub fn deo<D, S>(data: &D, scorer: &S, loss: FairnessLoss) -> Result<f64>
where
    D: WeightedRows,
    S: Scorer + ?Sized,
{
    signed_disparity(data, scorer, Criterion::EqualOpportunity, loss).map(f64::abs)
}

/// Mean 0-1 loss of the sign-threshold prediction against `Y`.
pub fn accuracy_risk<D, S>(data: &D, scorer: &S) -> Result<f64>
where
    D: WeightedRows,
    S: Scorer + ?Sized,
{
    mean_fairness_loss(data, Slice::ALL, scorer, FairnessLoss::ZeroOne).map_err(|e| match e {
        Error::EmptySlice(_) => Error::EmptyDataset,
        e => e,
    })
}

/// Weighted rate of positive predictions over `slice`.
pub fn positive_rate<D, S>(data: &D, slice: Slice, scorer: &S) -> Result<f64>
where
    D: WeightedRows,
    S: Scorer + ?Sized,
{
    mean_fairness_loss(data, slice, scorer, FairnessLoss::PredictNonPositive).map(|l| 1.0 - l)
}
