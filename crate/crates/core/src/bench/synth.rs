use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Example};
use crate::error::{Error, Result};

/// Gaussian class-conditional data, one component per `(A, Y)` cell.
///
/// Cells are indexed `2·a + y`: `(0,0), (0,1), (1,0), (1,1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub means: [Vec<f64>; 4],
    /// Shared per-coordinate variance.
    pub variance: f64,
    pub proportions: [f64; 4],
    pub n: usize,
    pub seed: u64,
}

pub fn cell_index(sensitive: bool, target: bool) -> usize {
    2 * usize::from(sensitive) + usize::from(target)
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let dim = self.means[0].len();
        if dim == 0 || self.means.iter().any(|m| m.len() != dim) {
            return Err(Error::InvalidConfig(
                "cell means must share a positive dimension".into(),
            ));
        }
        if !(self.variance > 0.0 && self.variance.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "variance must be positive, got {}",
                self.variance
            )));
        }
        if self.proportions.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::InvalidConfig("cell proportions must be nonnegative".into()));
        }
        let total: f64 = self.proportions.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("cell proportions sum to {total}, not 1")));
        }
        if self.n == 0 {
            return Err(Error::InvalidConfig("sample size must be at least 1".into()));
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.means[0].len()
    }

    /// The benchmark default. Feature 0 carries the label and leaks group
    /// membership, feature 1 is a pure group proxy, feature 2 is noise. Group
    /// base rates of the label differ (0.3 vs 0.7), so an unconstrained
    /// classifier has a demographic-parity gap near 0.4.
    pub fn benchmark(n: usize, seed: u64) -> Self {
        let pi_a = 0.5;
        let (p0, p1) = (0.3, 0.7);
        SyntheticConfig {
            means: [
                vec![-1.0, -0.5, 0.0],
                vec![1.0, -0.5, 0.0],
                vec![-0.6, 0.5, 0.0],
                vec![1.4, 0.5, 0.0],
            ],
            variance: 1.0,
            proportions: [
                (1.0 - pi_a) * (1.0 - p0),
                (1.0 - pi_a) * p0,
                pi_a * (1.0 - p1),
                pi_a * p1,
            ],
            n,
            seed,
        }
    }

    /// Strong label/group association: the unconstrained classifier's
    /// parity gap is well above the benchmark default.
    pub fn high_disparity(n: usize, seed: u64) -> Self {
        SyntheticConfig {
            means: [vec![-1.2, -1.0], vec![1.2, -1.0], vec![-1.2, 1.0], vec![1.2, 1.0]],
            variance: 1.0,
            proportions: [0.4, 0.1, 0.1, 0.4],
            n,
            seed,
        }
    }

    /// Groups separated by 5σ along feature 0, so the clean posterior of `A`
    /// is numerically 0 or 1 in both tails (anchor points). Feature 1
    /// carries the label and is independent of the group.
    pub fn anchor_points(n: usize, seed: u64) -> Self {
        SyntheticConfig {
            means: [vec![-2.5, -1.0], vec![-2.5, 1.0], vec![2.5, -1.0], vec![2.5, 1.0]],
            variance: 1.0,
            proportions: [0.25; 4],
            n,
            seed,
        }
    }
}

/// Draws `n` examples: a cell from the proportions, then Gaussian features.
/// Uses a ChaCha8 stream seeded with `config.seed`.
pub fn synth_generate(config: &SyntheticConfig) -> Result<Dataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let sd = config.variance.sqrt();
    let mut cumulative = [0.0; 4];
    let mut acc = 0.0;
    for (c, p) in cumulative.iter_mut().zip(config.proportions) {
        acc += p;
        *c = acc;
    }
    let examples = (0..config.n)
        .map(|_| {
            let u: f64 = rng.random::<f64>() * acc;
            // Last cell with positive proportion absorbs rounding at the top.
            let cell = cumulative
                .iter()
                .position(|&c| u < c)
                .unwrap_or_else(|| config.proportions.iter().rposition(|&p| p > 0.0).unwrap_or(3));
            let features = config.means[cell]
                .iter()
                .map(|m| m + sd * rng.sample::<f64, _>(StandardNormal))
                .collect();
            Example::new(features, cell >= 2, cell % 2 == 1)
        })
        .collect();
    Dataset::new(config.dimension(), examples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Slice;

    #[test]
    fn single_cell() {
        let mut c = SyntheticConfig::anchor_points(500, 1);
        c.proportions = [1.0, 0.0, 0.0, 0.0];
        let d = synth_generate(&c).unwrap();
        assert!(d.examples().iter().all(|e| !e.sensitive && !e.target));
    }

    #[test]
    fn cell_fractions_concentrate() {
        let d = synth_generate(&SyntheticConfig::anchor_points(100_000, 2)).unwrap();
        for a in [false, true] {
            for y in [false, true] {
                let slice = Slice {
                    sensitive: Some(a),
                    target: Some(y),
                };
                let frac = d.count(slice) as f64 / d.len() as f64;
                assert!((frac - 0.25).abs() < 0.01, "{frac}");
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let c = SyntheticConfig::benchmark(200, 9);
        assert_eq!(synth_generate(&c).unwrap(), synth_generate(&c).unwrap());
    }

    #[test]
    fn invalid_configs() {
        let mut c = SyntheticConfig::benchmark(10, 0);
        c.proportions = [0.5, 0.5, 0.5, 0.0];
        assert!(synth_generate(&c).is_err());
        let mut c = SyntheticConfig::benchmark(10, 0);
        c.variance = 0.0;
        assert!(synth_generate(&c).is_err());
        let mut c = SyntheticConfig::benchmark(0, 0);
        c.n = 0;
        assert!(synth_generate(&c).is_err());
    }
}
