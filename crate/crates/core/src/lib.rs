//! Fair binary classification when the sensitive attribute is only
//! observed through noise.

pub mod bench;
pub mod data;
pub mod denoise;
pub mod error;
pub mod estimation;
pub mod fairtrain;
pub mod logistic;
pub mod metrics;
pub mod noise;
pub mod scorer;

pub use data::{Cell, Dataset, DiscretePopulation, Example, Slice, WeightedRows};
pub use error::{Error, Result};
pub use fairtrain::{train_fair, train_fair_noisy, FairClassifier, NoiseSource, TrainConfig};
pub use metrics::{accuracy_risk, ddp, deo, mean_fairness_loss, Criterion, FairnessLoss, FairnessSpec};
pub use noise::{CcnNoise, DpParams, EoConditionalNoise, McNoise, NoiseRates};
pub use scorer::{LinearScorer, Scorer};
