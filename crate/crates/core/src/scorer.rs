/// A real-valued score function. Prediction thresholds at zero and a score
/// of exactly `0.0` predicts class 0.
pub trait Scorer {
    fn score(&self, features: &[f64]) -> f64;

    fn predict(&self, features: &[f64]) -> bool {
        self.score(features) > 0.0
    }
}

impl<F> Scorer for F
where
    F: Fn(&[f64]) -> f64,
{
    fn score(&self, features: &[f64]) -> f64 {
        self(features)
    }
}

/// `w · x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearScorer {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl LinearScorer {
    pub fn new(weights: Vec<f64>, intercept: f64) -> Self {
        LinearScorer { weights, intercept }
    }

    /// A scorer that ignores its input.
    pub fn constant(dimension: usize, value: f64) -> Self {
        LinearScorer::new(vec![0.0; dimension], value)
    }

    pub fn dimension(&self) -> usize {
        self.weights.len()
    }
}

impl Scorer for LinearScorer {
    fn score(&self, features: &[f64]) -> f64 {
        debug_assert_eq!(features.len(), self.weights.len());
        self.weights.iter().zip(features).map(|(w, x)| w * x).sum::<f64>() + self.intercept
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_score_predicts_negative() {
        let s = LinearScorer::constant(2, 0.0);
        assert!(!s.predict(&[1.0, 2.0]));
        assert!(LinearScorer::constant(2, 1e-300).predict(&[1.0, 2.0]));
    }

    #[test]
    fn closures_are_scorers() {
        let s = |x: &[f64]| x[0] - 1.0;
        assert!(s.predict(&[2.0]));
        assert!(!s.predict(&[1.0]));
    }
}
