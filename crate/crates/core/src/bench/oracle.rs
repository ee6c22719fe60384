use serde::{Deserialize, Serialize};

use crate::data::DiscretePopulation;
use crate::error::Result;
use crate::metrics::{accuracy_risk, ddp, deo, FairnessLoss};
use crate::scorer::Scorer;

/// Exact population metrics, each with its criterion's default fairness loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleMetrics {
    pub ddp: f64,
    pub deo: f64,
    pub risk: f64,
}

/// Mass-weighted `ddp` (predict-non-positive loss), `deo` (0-1 loss) and
/// 0-1 risk of `scorer` on `pop`.
pub fn population_oracle<S: Scorer + ?Sized>(pop: &DiscretePopulation, scorer: &S) -> Result<OracleMetrics> {
    Ok(OracleMetrics {
        ddp: ddp(pop, scorer, FairnessLoss::PredictNonPositive)?,
        deo: deo(pop, scorer, FairnessLoss::ZeroOne)?,
        risk: accuracy_risk(pop, scorer)?,
    })
}
