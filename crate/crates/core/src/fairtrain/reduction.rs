//! Saddle-point training of a linear classifier under a mean-difference
//! fairness constraint.
//!
//! The constraint `|L̄₀(f) − L̄₁(f)| ≤ τ` is split into two one-sided
//! constraints with multipliers `λ⁺, λ⁻ ≥ 0`, `λ⁺ + λ⁻ ≤ B`. The duals follow
//! exponentiated gradient on the exact 0-1 violation. Against fixed duals,
//! the Lagrangian is a cost-sensitive classification problem. Each
//! example's cost gap becomes a weight and the cheaper label becomes the
//! target of a regularized logistic fit.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::logistic::{fit_logistic, LogisticOptions, Standardizer};
use crate::metrics::{accuracy_risk, signed_disparity, FairnessLoss, FairnessSpec};
use crate::scorer::{LinearScorer, Scorer};

/// Gradient-norm threshold of each base-learner fit.
const BASE_TOLERANCE: f64 = 1e-7;

/// Smallest net multiplier tried when extending the refinement bracket.
const MIN_BRACKET: f64 = 1e-3;

/// How the deployed classifier is formed from the outer iterates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IterateSelection {
    /// Uniform average of all iterates' scores.
    Average,
    /// Lowest-risk iterate whose violation is within `τ + slack`; the
    /// least-violating iterate when none is.
    BestFeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Dual step at the first iteration; iteration `t` uses `η/√t`.
    pub dual_step: f64,
    pub dual_bound: f64,
    /// Starting value of each multiplier.
    pub dual_init: f64,
    pub outer_iterations: usize,
    pub base_iterations: usize,
    /// Initial Newton step fraction of the base learner.
    pub base_step: f64,
    pub regularization: f64,
    /// Recorded for provenance. The trainer itself draws no random numbers.
    pub seed: u64,
    pub selection: IterateSelection,
    pub feasibility_slack: f64,
    /// Bisection steps on the net multiplier after the dual iterations,
    /// under best-feasible selection only.
    pub refinement_steps: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dual_step: 2.0,
            dual_bound: 100.0,
            dual_init: 0.01,
            outer_iterations: 100,
            base_iterations: 50,
            base_step: 1.0,
            regularization: 1e-4,
            seed: 0,
            selection: IterateSelection::BestFeasible,
            feasibility_slack: 0.0,
            refinement_steps: 24,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")))
            }
        };
        positive("dual step", self.dual_step)?;
        positive("dual bound", self.dual_bound)?;
        positive("base-learner step", self.base_step)?;
        if !(self.dual_init > 0.0 && 2.0 * self.dual_init < self.dual_bound) {
            return Err(Error::InvalidConfig(format!(
                "initial multiplier {} must lie in (0, B/2)",
                self.dual_init
            )));
        }
        if self.outer_iterations == 0 || self.base_iterations == 0 {
            return Err(Error::InvalidConfig("iteration counts must be at least 1".into()));
        }
        if !(self.regularization >= 0.0) || !(self.feasibility_slack >= 0.0) {
            return Err(Error::InvalidConfig(
                "regularization and slack must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// One outer iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateRecord {
    pub dual_plus: f64,
    pub dual_minus: f64,
    /// `L̄₀ − L̄₁` of the best response, exact 0-1.
    pub signed_violation: f64,
    pub risk: f64,
    pub lagrangian: f64,
    /// Best-dual-response Lagrangian minus the current Lagrangian.
    pub gap: f64,
    /// Running minimum of `gap`; non-increasing.
    pub best_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseAdjustment {
    pub requested_tolerance: f64,
    /// `1 − α − β` (or `1 − α′ − β′`).
    pub retention: f64,
    /// Flip rates used, when the adjustment came from flip rates.
    pub rates: Option<(f64, f64)>,
    /// Set when rates were estimated and had to be shrunk.
    pub estimate_clamped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainWarning {
    /// No iterate met the tolerance; the least-violating one was returned.
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingTrace {
    /// Tolerance actually enforced on the training data.
    pub tolerance: f64,
    /// Records from this index on come from the bisection refinement.
    pub refinement_start: usize,
    pub iterates: Vec<IterateRecord>,
    /// Index of the returned iterate under best-feasible selection.
    pub selected: Option<usize>,
    pub warning: Option<TrainWarning>,
    pub noise: Option<NoiseAdjustment>,
}

/// A trained scorer: a convex combination of linear scorers.
#[derive(Debug, Clone, PartialEq)]
pub struct FairClassifier {
    members: Vec<(f64, LinearScorer)>,
    pub trace: TrainingTrace,
}

impl FairClassifier {
    /// Weights must be nonnegative and sum to 1 within 1e-9.
    pub fn new(members: Vec<(f64, LinearScorer)>) -> Result<Self> {
        let Some((_, first)) = members.first() else {
            return Err(Error::InvalidConfig("classifier needs at least one member".into()));
        };
        let dim = first.dimension();
        if members.iter().any(|(w, s)| !(*w >= 0.0) || s.dimension() != dim) {
            return Err(Error::InvalidConfig(
                "members need nonnegative weights and equal dimension".into(),
            ));
        }
        let total: f64 = members.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("member weights sum to {total}, not 1")));
        }
        Ok(FairClassifier {
            members,
            trace: TrainingTrace::default(),
        })
    }

    pub fn single(scorer: LinearScorer) -> Self {
        FairClassifier {
            members: vec![(1.0, scorer)],
            trace: TrainingTrace::default(),
        }
    }

    pub fn members(&self) -> &[(f64, LinearScorer)] {
        &self.members
    }

    pub fn dimension(&self) -> usize {
        self.members[0].1.dimension()
    }

    /// Collapses the ensemble into one linear scorer (equal scores up to rounding).
    pub fn flattened(&self) -> LinearScorer {
        let mut weights = vec![0.0; self.dimension()];
        let mut intercept = 0.0;
        for (w, s) in &self.members {
            for (acc, c) in weights.iter_mut().zip(&s.weights) {
                *acc += w * c;
            }
            intercept += w * s.intercept;
        }
        LinearScorer::new(weights, intercept)
    }
}

impl Scorer for FairClassifier {
    fn score(&self, features: &[f64]) -> f64 {
        self.members.iter().map(|(w, s)| w * s.score(features)).sum()
    }
}

/// Per-example pieces of the Lagrangian.
struct Problem {
    rows: Vec<Vec<f64>>,
    targets: Vec<bool>,
    /// `+1/n₀` on the A=0 constraint slice, `−1/n₁` on the A=1 slice, else 0.
    constraint_coef: Vec<f64>,
    n: f64,
    loss: FairnessLoss,
}

impl Problem {
    /// Cost of predicting 0 minus cost of predicting 1 at multiplier `mu`.
    fn cost_gap(&self, i: usize, mu: f64) -> f64 {
        let y = self.targets[i];
        let risk = |p: bool| if p != y { 1.0 / self.n } else { 0.0 };
        let fair = |p: bool| mu * self.constraint_coef[i] * self.loss.eval(p, y);
        (risk(false) + fair(false)) - (risk(true) + fair(true))
    }

    fn best_response(&self, mu: f64, options: &LogisticOptions, warm: &LinearScorer) -> LinearScorer {
        let mut targets = Vec::with_capacity(self.rows.len());
        let mut weights = Vec::with_capacity(self.rows.len());
        for i in 0..self.rows.len() {
            let gap = self.cost_gap(i, mu);
            targets.push(if gap > 0.0 { 1.0 } else { 0.0 });
            weights.push(gap.abs());
        }
        fit_logistic(&self.rows, &targets, &weights, options, Some(warm)).scorer
    }
}

/// `λ = B·exp(θ) / (1 + Σ exp(θ))`, computed without overflow.
fn duals(theta: [f64; 2], bound: f64) -> [f64; 2] {
    let m = theta[0].max(theta[1]).max(0.0);
    let e = [(theta[0] - m).exp(), (theta[1] - m).exp()];
    let den = (-m).exp() + e[0] + e[1];
    [bound * e[0] / den, bound * e[1] / den]
}

/// Trains a classifier that approximately minimizes 0-1 risk subject to
/// `spec`'s disparity being at most its tolerance on `data`.
pub fn train_fair(data: &Dataset, spec: &FairnessSpec, config: &TrainConfig) -> Result<FairClassifier> {
    config.validate()?;
    data.require_nonempty()?;
    let slices = [spec.criterion.group_slice(false), spec.criterion.group_slice(true)];
    for s in slices {
        data.require_slice(s)?;
    }
    let tau = spec.tolerance;

    let standardizer = Standardizer::fit(data.examples().iter().map(|e| e.features.as_slice()), data.dimension());
    let counts = slices.map(|s| data.count(s) as f64);
    let problem = Problem {
        rows: data
            .examples()
            .iter()
            .map(|e| standardizer.transform(&e.features))
            .collect(),
        targets: data.examples().iter().map(|e| e.target).collect(),
        constraint_coef: data
            .examples()
            .iter()
            .map(|e| {
                if slices[0].contains(e.sensitive, e.target) {
                    1.0 / counts[0]
                } else if slices[1].contains(e.sensitive, e.target) {
                    -1.0 / counts[1]
                } else {
                    0.0
                }
            })
            .collect(),
        n: data.len() as f64,
        loss: spec.fairness_loss,
    };
    let options = LogisticOptions {
        l2: config.regularization,
        max_iterations: config.base_iterations,
        tolerance: BASE_TOLERANCE,
        step: config.base_step,
    };

    let bound = config.dual_bound;
    let mut records: Vec<IterateRecord> = Vec::new();
    let mut iterates: Vec<LinearScorer> = Vec::new();
    let mut warm = LinearScorer::constant(data.dimension(), 0.0);
    let evaluate = |records: &mut Vec<IterateRecord>,
                    iterates: &mut Vec<LinearScorer>,
                    lp: f64,
                    lm: f64,
                    warm: &LinearScorer|
     -> Result<(LinearScorer, f64)> {
        let h = problem.best_response(lp - lm, &options, warm);
        let raw = standardizer.unstandardize(&h);
        let gamma = signed_disparity(data, &raw, spec.criterion, spec.fairness_loss)?;
        let risk = accuracy_risk(data, &raw)?;
        let lagrangian = risk + lp * (gamma - tau) + lm * (-gamma - tau);
        let gap = risk + bound * (gamma.abs() - tau).max(0.0) - lagrangian;
        let best_gap = records.last().map_or(gap, |r| r.best_gap.min(gap));
        records.push(IterateRecord {
            dual_plus: lp,
            dual_minus: lm,
            signed_violation: gamma,
            risk,
            lagrangian,
            gap,
            best_gap,
        });
        iterates.push(raw);
        Ok((h, gamma))
    };

    let start = (config.dual_init / (bound - 2.0 * config.dual_init)).ln();
    let mut theta = [start, start];
    for t in 0..config.outer_iterations {
        // The first iterate (λ⁺ = λ⁻) is the unconstrained fit.
        let [lp, lm] = duals(theta, bound);
        let (h, gamma) = evaluate(&mut records, &mut iterates, lp, lm, &warm)?;
        let eta = config.dual_step / ((t + 1) as f64).sqrt();
        theta[0] += eta * (gamma - tau);
        theta[1] += eta * (-gamma - tau);
        warm = h;
    }

    if config.selection == IterateSelection::BestFeasible {
        // Bracket the net multiplier where the violation crosses τ, on the
        // side the unconstrained fit leans to, then bisect. The bracket comes
        // from the dual iterates, extended by doubling up to B if needed.
        let first = records[0].signed_violation;
        if first.abs() > tau {
            let side = first.signum();
            let points: Vec<(f64, bool)> = records
                .iter()
                .map(|r| (side * (r.dual_plus - r.dual_minus), side * r.signed_violation > tau))
                .filter(|(m, _)| *m >= 0.0)
                .collect();
            let mut lo = points.iter().filter(|p| p.1).map(|p| p.0).fold(0.0, f64::max);
            let mut hi = points
                .iter()
                .filter(|p| !p.1 && p.0 > lo)
                .map(|p| p.0)
                .fold(f64::INFINITY, f64::min);
            while !hi.is_finite() && lo < bound {
                let next = (2.0 * lo).max(MIN_BRACKET).min(bound);
                let mu = side * next;
                let (h, gamma) = evaluate(&mut records, &mut iterates, mu.max(0.0), (-mu).max(0.0), &warm)?;
                warm = h;
                if side * gamma > tau {
                    lo = next;
                } else {
                    hi = next;
                }
            }
            if hi.is_finite() {
                for _ in 0..config.refinement_steps {
                    let mid = 0.5 * (lo + hi);
                    let mu = side * mid;
                    let (h, gamma) = evaluate(&mut records, &mut iterates, mu.max(0.0), (-mu).max(0.0), &warm)?;
                    warm = h;
                    if side * gamma > tau {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
            }
        }
    }

    let mut trace = TrainingTrace {
        tolerance: tau,
        refinement_start: config.outer_iterations,
        iterates: records,
        selected: None,
        warning: None,
        noise: None,
    };
    let members = match config.selection {
        IterateSelection::Average => {
            let w = 1.0 / iterates.len() as f64;
            let feasible = trace
                .iterates
                .iter()
                .any(|r| r.signed_violation.abs() <= tau + config.feasibility_slack);
            if !feasible {
                trace.warning = Some(TrainWarning::Infeasible);
            }
            iterates.into_iter().map(|s| (w, s)).collect()
        }
        IterateSelection::BestFeasible => {
            let limit = tau + config.feasibility_slack;
            let feasible = trace
                .iterates
                .iter()
                .enumerate()
                .filter(|(_, r)| r.signed_violation.abs() <= limit)
                .min_by(|a, b| a.1.risk.total_cmp(&b.1.risk).then(a.0.cmp(&b.0)))
                .map(|(i, _)| i);
            let index = feasible.unwrap_or_else(|| {
                trace.warning = Some(TrainWarning::Infeasible);
                trace
                    .iterates
                    .iter()
                    .enumerate()
                    .min_by(|a, b| {
                        a.1.signed_violation
                            .abs()
                            .total_cmp(&b.1.signed_violation.abs())
                            .then(a.1.risk.total_cmp(&b.1.risk))
                    })
                    .map(|(i, _)| i)
                    .expect("at least one iterate")
            });
            trace.selected = Some(index);
            vec![(1.0, iterates.swap_remove(index))]
        }
    };
    Ok(FairClassifier { members, trace })
}

/// Plain regularized logistic regression with the trainer's base-learner
/// settings and no fairness term.
pub fn train_unconstrained(data: &Dataset, config: &TrainConfig) -> Result<LinearScorer> {
    config.validate()?;
    data.require_nonempty()?;
    let standardizer = Standardizer::fit(data.examples().iter().map(|e| e.features.as_slice()), data.dimension());
    let rows: Vec<Vec<f64>> = data
        .examples()
        .iter()
        .map(|e| standardizer.transform(&e.features))
        .collect();
    let targets: Vec<f64> = data
        .examples()
        .iter()
        .map(|e| if e.target { 1.0 } else { 0.0 })
        .collect();
    let options = LogisticOptions {
        l2: config.regularization,
        max_iterations: config.base_iterations,
        tolerance: BASE_TOLERANCE,
        step: config.base_step,
    };
    let fit = fit_logistic(&rows, &targets, &vec![1.0; rows.len()], &options, None);
    Ok(standardizer.unstandardize(&fit.scorer))
}
