//! Weighted, L2-regularized logistic regression fit by damped Newton steps.
//!
//! Minimizes
//!
//! ```text
//! (1/W)·Σ wᵢ·[log(1 + exp(zᵢ)) − tᵢ·zᵢ] + (λ/2)·‖w‖²,   zᵢ = w·xᵢ + b
//! ```
//!
//! with soft targets `tᵢ ∈ [0, 1]` and nonnegative example weights `wᵢ`.
//! The intercept is not penalized.

use nalgebra::{DMatrix, DVector};

use crate::scorer::LinearScorer;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticOptions {
    /// L2 penalty on the coefficients.
    pub l2: f64,
    pub max_iterations: usize,
    /// Convergence threshold on the gradient norm.
    pub tolerance: f64,
    /// Initial fraction of the Newton step tried by the line search.
    pub step: f64,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        LogisticOptions {
            l2: 1e-4,
            max_iterations: 100,
            tolerance: 1e-8,
            step: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    pub scorer: LinearScorer,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub loss: f64,
    pub converged: bool,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z))` without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

struct Problem<'a> {
    rows: &'a [Vec<f64>],
    targets: &'a [f64],
    weights: &'a [f64],
    total_weight: f64,
    l2: f64,
    dim: usize,
}

impl Problem<'_> {
    fn margin(&self, theta: &DVector<f64>, x: &[f64]) -> f64 {
        x.iter().zip(theta.iter()).map(|(a, b)| a * b).sum::<f64>() + theta[self.dim]
    }

    fn loss(&self, theta: &DVector<f64>) -> f64 {
        let mut data = 0.0;
        for ((x, &t), &w) in self.rows.iter().zip(self.targets).zip(self.weights) {
            if w == 0.0 {
                continue;
            }
            let z = self.margin(theta, x);
            data += w * (softplus(z) - t * z);
        }
        let penalty: f64 = theta.iter().take(self.dim).map(|v| v * v).sum();
        data / self.total_weight + 0.5 * self.l2 * penalty
    }

    fn gradient_and_hessian(&self, theta: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let p = self.dim + 1;
        let mut grad = DVector::zeros(p);
        let mut hess = DMatrix::zeros(p, p);
        let mut ext = vec![1.0; p];
        for ((x, &t), &w) in self.rows.iter().zip(self.targets).zip(self.weights) {
            if w == 0.0 {
                continue;
            }
            ext[..self.dim].copy_from_slice(x);
            let s = sigmoid(self.margin(theta, x));
            let r = w * (s - t);
            let c = w * s * (1.0 - s);
            for j in 0..p {
                grad[j] += r * ext[j];
                let cj = c * ext[j];
                for k in 0..=j {
                    hess[(j, k)] += cj * ext[k];
                }
            }
        }
        grad /= self.total_weight;
        hess /= self.total_weight;
        for j in 0..p {
            for k in 0..j {
                hess[(k, j)] = hess[(j, k)];
            }
        }
        for j in 0..self.dim {
            grad[j] += self.l2 * theta[j];
            hess[(j, j)] += self.l2;
        }
        hess[(self.dim, self.dim)] += 1e-12;
        (grad, hess)
    }
}

/// Fits the model. `init` warm-starts the solver; otherwise it starts at zero.
///
/// Panics if the slices disagree in length.
pub fn fit_logistic(
    rows: &[Vec<f64>],
    targets: &[f64],
    weights: &[f64],
    options: &LogisticOptions,
    init: Option<&LinearScorer>,
) -> LogisticFit {
    assert_eq!(rows.len(), targets.len());
    assert_eq!(rows.len(), weights.len());
    let dim = rows.first().map_or_else(|| init.map_or(0, |s| s.dimension()), Vec::len);
    let total_weight: f64 = weights.iter().sum();

    let mut theta = DVector::zeros(dim + 1);
    if let Some(s) = init {
        for (j, &w) in s.weights.iter().enumerate() {
            theta[j] = w;
        }
        theta[dim] = s.intercept;
    }
    let to_scorer = |theta: &DVector<f64>| LinearScorer::new(theta.iter().take(dim).copied().collect(), theta[dim]);

    if !(total_weight > 0.0) {
        return LogisticFit {
            scorer: to_scorer(&theta),
            iterations: 0,
            gradient_norm: 0.0,
            loss: 0.0,
            converged: true,
        };
    }

    let problem = Problem {
        rows,
        targets,
        weights,
        total_weight,
        l2: options.l2,
        dim,
    };
    let mut loss = problem.loss(&theta);
    let mut gradient_norm = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < options.max_iterations {
        let (grad, hess) = problem.gradient_and_hessian(&theta);
        gradient_norm = grad.norm();
        if gradient_norm <= options.tolerance {
            converged = true;
            break;
        }
        iterations += 1;
        let direction = match hess.cholesky() {
            Some(ch) => -ch.solve(&grad),
            None => -grad.clone(),
        };
        let slope = grad.dot(&direction);
        let mut t = options.step;
        let mut accepted = false;
        for _ in 0..40 {
            let candidate = &theta + &direction * t;
            let cand_loss = problem.loss(&candidate);
            if cand_loss <= loss + 1e-4 * t * slope {
                theta = candidate;
                loss = cand_loss;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // No decrease is representable; we are at the floating-point optimum.
            converged = gradient_norm <= options.tolerance.max(1e-6);
            break;
        }
    }
    if !converged && iterations >= options.max_iterations {
        let (grad, _) = problem.gradient_and_hessian(&theta);
        gradient_norm = grad.norm();
        converged = gradient_norm <= options.tolerance;
    }

    LogisticFit {
        scorer: to_scorer(&theta),
        iterations,
        gradient_norm,
        loss,
        converged,
    }
}

/// Per-feature affine standardization, `(x − mean) / scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// Column means and standard deviations; constant columns get scale 1.
    pub fn fit<'a>(rows: impl Iterator<Item = &'a [f64]> + Clone, dim: usize) -> Self {
        let mut n = 0.0;
        let mut mean = vec![0.0; dim];
        for r in rows.clone() {
            n += 1.0;
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        if n == 0.0 {
            return Standardizer {
                mean,
                scale: vec![1.0; dim],
            };
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, scale }
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    /// Maps a scorer on standardized inputs to the equivalent scorer on raw inputs.
    pub fn unstandardize(&self, s: &LinearScorer) -> LinearScorer {
        let weights: Vec<f64> = s.weights.iter().zip(&self.scale).map(|(w, sc)| w / sc).collect();
        let shift: f64 = weights.iter().zip(&self.mean).map(|(w, m)| w * m).sum();
        LinearScorer::new(weights, s.intercept - shift)
    }

    /// Inverse of [`Standardizer::unstandardize`].
    pub fn standardize_scorer(&self, s: &LinearScorer) -> LinearScorer {
        let shift: f64 = s.weights.iter().zip(&self.mean).map(|(w, m)| w * m).sum();
        let weights = s.weights.iter().zip(&self.scale).map(|(w, sc)| w * sc).collect();
        LinearScorer::new(weights, s.intercept + shift)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scorer::Scorer;

    #[test]
    fn intercept_only_optimum_is_base_rate() {
        let rows = vec![vec![1.0]; 10];
        let targets: Vec<f64> = (0..10).map(|i| if i < 3 { 1.0 } else { 0.0 }).collect();
        let fit = fit_logistic(&rows, &targets, &[1.0; 10], &LogisticOptions::default(), None);
        assert!(fit.converged);
        let p = sigmoid(fit.scorer.score(&[1.0]));
        assert!((p - 0.3).abs() < 1e-10, "{p}");
    }

    #[test]
    fn weights_act_as_replication() {
        let rows = vec![vec![0.0], vec![1.0], vec![2.0]];
        let t = [0.0, 1.0, 1.0];
        let a = fit_logistic(&rows, &t, &[2.0, 1.0, 1.0], &LogisticOptions::default(), None);
        let rows_b = vec![vec![0.0], vec![0.0], vec![1.0], vec![2.0]];
        let b = fit_logistic(
            &rows_b,
            &[0.0, 0.0, 1.0, 1.0],
            &[1.0; 4],
            &LogisticOptions::default(),
            None,
        );
        assert!((a.scorer.weights[0] - b.scorer.weights[0]).abs() < 1e-8);
        assert!((a.scorer.intercept - b.scorer.intercept).abs() < 1e-8);
    }

    #[test]
    fn gradient_vanishes_at_solution() {
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()])
            .collect();
        let t: Vec<f64> = rows
            .iter()
            .map(|r| if r[0] + 0.3 * r[1] > 0.1 { 0.9 } else { 0.2 })
            .collect();
        let fit = fit_logistic(&rows, &t, &vec![1.0; 50], &LogisticOptions::default(), None);
        assert!(fit.converged && fit.gradient_norm < 1e-8);
    }

    #[test]
    fn standardizer_roundtrip() {
        let rows = [vec![1.0, 10.0], vec![3.0, 30.0], vec![5.0, 20.0]];
        let st = Standardizer::fit(rows.iter().map(|r| r.as_slice()), 2);
        let raw = LinearScorer::new(vec![0.5, -0.2], 1.5);
        let z = st.standardize_scorer(&raw);
        for r in &rows {
            assert!((z.score(&st.transform(r)) - raw.score(r)).abs() < 1e-12);
        }
        let back = st.unstandardize(&z);
        assert!((back.intercept - raw.intercept).abs() < 1e-12);
    }
}
