//! Labeled samples and exact finite populations.
//!
//! Both [`Dataset`] and [`DiscretePopulation`] expose their rows through
//! [`WeightedRows`], so every metric is written once and evaluated either
//! on an empirical sample (unit weights) or on an exact distribution
//! (probability masses).

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// One `(features, sensitive, target)` triplet.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub features: Vec<f64>,
    pub sensitive: bool,
    pub target: bool,
}

impl Example {
    pub fn new(features: Vec<f64>, sensitive: bool, target: bool) -> Self {
        Example {
            features,
            sensitive,
            target,
        }
    }
}

/// An ordered sample of examples sharing one feature dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dimension: usize,
    examples: Vec<Example>,
}

impl Dataset {
    pub fn new(dimension: usize, examples: Vec<Example>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidConfig("feature dimension must be positive".into()));
        }
        for ex in &examples {
            if ex.features.len() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    found: ex.features.len(),
                });
            }
        }
        Ok(Dataset { dimension, examples })
    }

    /// Builds a dataset whose dimension is taken from the first example.
    pub fn from_examples(examples: Vec<Example>) -> Result<Self> {
        let dimension = examples.first().map(|e| e.features.len()).ok_or(Error::EmptyDataset)?;
        Dataset::new(dimension, examples)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn into_examples(self) -> Vec<Example> {
        self.examples
    }

    /// Same features and targets with the sensitive bits replaced.
    pub fn with_sensitive(&self, sensitive: &[bool]) -> Dataset {
        assert_eq!(sensitive.len(), self.len(), "one bit per example");
        let examples = self
            .examples
            .iter()
            .zip(sensitive)
            .map(|(ex, &a)| Example::new(ex.features.clone(), a, ex.target))
            .collect();
        Dataset {
            dimension: self.dimension,
            examples,
        }
    }

    pub fn sensitive_bits(&self) -> Vec<bool> {
        self.examples.iter().map(|e| e.sensitive).collect()
    }

    /// Examples selected by `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            dimension: self.dimension,
            examples: indices.iter().map(|&i| self.examples[i].clone()).collect(),
        }
    }

    /// Count of examples in `slice`.
    pub fn count(&self, slice: Slice) -> usize {
        self.examples
            .iter()
            .filter(|e| slice.contains(e.sensitive, e.target))
            .count()
    }

    /// Empirical `P[A = 1]`.
    pub fn base_rate(&self) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(self.count(Slice::group(true)) as f64 / self.len() as f64)
    }

    /// Empirical `P[Y = 1 | A = a]`.
    pub fn positive_rate_given(&self, sensitive: bool) -> Result<f64> {
        let n = self.count(Slice::group(sensitive));
        if n == 0 {
            return Err(Error::EmptySlice(Slice::group(sensitive)));
        }
        Ok(self.count(Slice::group_positive(sensitive)) as f64 / n as f64)
    }

    pub(crate) fn require_nonempty(&self) -> Result<()> {
        if self.is_empty() {
            Err(Error::EmptyDataset)
        } else {
            Ok(())
        }
    }

    pub(crate) fn require_slice(&self, slice: Slice) -> Result<()> {
        if self.examples.iter().any(|e| slice.contains(e.sensitive, e.target)) {
            Ok(())
        } else {
            Err(Error::EmptySlice(slice))
        }
    }
}

/// A conditioning event on `(A, Y)`; `None` leaves that bit free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Slice {
    pub sensitive: Option<bool>,
    pub target: Option<bool>,
}

impl Slice {
    pub const ALL: Slice = Slice {
        sensitive: None,
        target: None,
    };

    pub fn group(sensitive: bool) -> Slice {
        Slice {
            sensitive: Some(sensitive),
            target: None,
        }
    }

    pub fn group_positive(sensitive: bool) -> Slice {
        Slice {
            sensitive: Some(sensitive),
            target: Some(true),
        }
    }

    pub fn target(target: bool) -> Slice {
        Slice {
            sensitive: None,
            target: Some(target),
        }
    }

    pub fn contains(&self, sensitive: bool, target: bool) -> bool {
        self.sensitive.is_none_or(|a| a == sensitive) && self.target.is_none_or(|y| y == target)
    }
}

impl fmt::Display for Slice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bit = |b: Option<bool>| match b {
            None => "*",
            Some(true) => "1",
            Some(false) => "0",
        };
        write!(f, "(A={}, Y={})", bit(self.sensitive), bit(self.target))
    }
}

/// A row seen by the metrics: features, bits, and a nonnegative weight.
#[derive(Debug, Clone, Copy)]
pub struct Row<'a> {
    pub features: &'a [f64],
    pub sensitive: bool,
    pub target: bool,
    pub weight: f64,
}

/// Anything that can be enumerated as weighted `(x, a, y)` rows.
pub trait WeightedRows {
    fn rows(&self) -> impl Iterator<Item = Row<'_>>;

    /// Total weight of `slice`.
    fn slice_weight(&self, slice: Slice) -> f64 {
        let mut acc = CompensatedSum::default();
        for r in self.rows().filter(|r| slice.contains(r.sensitive, r.target)) {
            acc.add(r.weight);
        }
        acc.total()
    }
}

impl WeightedRows for Dataset {
    fn rows(&self) -> impl Iterator<Item = Row<'_>> {
        self.examples.iter().map(|e| Row {
            features: &e.features,
            sensitive: e.sensitive,
            target: e.target,
            weight: 1.0,
        })
    }
}

/// One atom of a [`DiscretePopulation`].
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub features: Vec<f64>,
    pub sensitive: bool,
    pub target: bool,
    pub mass: f64,
}

impl Cell {
    pub fn new(features: Vec<f64>, sensitive: bool, target: bool, mass: f64) -> Self {
        Cell {
            features,
            sensitive,
            target,
            mass,
        }
    }
}

/// An exact finite distribution over `(x, a, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePopulation {
    cells: Vec<Cell>,
}

pub const MASS_TOLERANCE: f64 = 1e-12;

impl DiscretePopulation {
    pub fn new(cells: Vec<Cell>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::InvalidPopulation("no cells".into()));
        }
        let dim = cells[0].features.len();
        let mut total = CompensatedSum::default();
        for c in &cells {
            if c.features.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: c.features.len(),
                });
            }
            if !(c.mass >= 0.0 && c.mass.is_finite()) {
                return Err(Error::InvalidPopulation(format!(
                    "mass {} is not a probability",
                    c.mass
                )));
            }
            total.add(c.mass);
        }
        let total = total.total();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidPopulation(format!("masses sum to {total}, not 1")));
        }
        Ok(DiscretePopulation { cells })
    }

    /// Normalizes nonnegative weights to unit total mass.
    pub fn from_weights(cells: Vec<Cell>) -> Result<Self> {
        let mut total = CompensatedSum::default();
        for c in &cells {
            total.add(c.mass);
        }
        let total = total.total();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidPopulation("total weight must be positive".into()));
        }
        let cells = cells
            .into_iter()
            .map(|c| Cell {
                mass: c.mass / total,
                ..c
            })
            .collect();
        DiscretePopulation::new(cells)
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn dimension(&self) -> usize {
        self.cells[0].features.len()
    }

    /// `P[A = 1]`.
    pub fn base_rate(&self) -> f64 {
        self.slice_weight(Slice::group(true))
    }

    /// `P[Y = 1 | A = a]`.
    pub fn positive_rate_given(&self, sensitive: bool) -> Result<f64> {
        let group = self.slice_weight(Slice::group(sensitive));
        if group <= 0.0 {
            return Err(Error::EmptySlice(Slice::group(sensitive)));
        }
        Ok(self.slice_weight(Slice::group_positive(sensitive)) / group)
    }

    /// The distribution of `(x, y)` conditional on `slice`, with atoms that
    /// share identical features and target merged. Keys compare features
    /// bitwise.
    pub fn conditional(&self, slice: Slice) -> Result<BTreeMap<AtomKey, f64>> {
        let total = self.slice_weight(slice);
        if total <= 0.0 {
            return Err(Error::EmptySlice(slice));
        }
        let mut out: BTreeMap<AtomKey, CompensatedSum> = BTreeMap::new();
        for c in self.cells.iter().filter(|c| slice.contains(c.sensitive, c.target)) {
            out.entry(AtomKey::new(&c.features, c.target)).or_default().add(c.mass);
        }
        Ok(out.into_iter().map(|(k, v)| (k, v.total() / total)).collect())
    }

    /// Expands the population into a dataset with `round(mass * denominator)`
    /// copies of each cell. Every mass must be a multiple of
    /// `1 / denominator` (within 1e-9 of an integer count).
    pub fn materialize(&self, denominator: usize) -> Result<Dataset> {
        let mut examples = Vec::with_capacity(denominator);
        for c in &self.cells {
            let exact = c.mass * denominator as f64;
            let count = exact.round();
            if (exact - count).abs() > 1e-9 {
                return Err(Error::InvalidPopulation(format!(
                    "mass {} is not a multiple of 1/{denominator}",
                    c.mass
                )));
            }
            for _ in 0..count as usize {
                examples.push(Example::new(c.features.clone(), c.sensitive, c.target));
            }
        }
        Dataset::new(self.dimension(), examples)
    }
}

impl WeightedRows for DiscretePopulation {
    fn rows(&self) -> impl Iterator<Item = Row<'_>> {
        self.cells.iter().map(|c| Row {
            features: &c.features,
            sensitive: c.sensitive,
            target: c.target,
            weight: c.mass,
        })
    }
}

/// Bitwise identity of an `(x, y)` atom.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AtomKey {
    pub features: Vec<u64>,
    pub target: bool,
}

impl AtomKey {
    pub fn new(features: &[f64], target: bool) -> Self {
        AtomKey {
            features: features.iter().map(|v| v.to_bits()).collect(),
            target,
        }
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::default();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(a: bool, y: bool) -> Example {
        Example::new(vec![0.0], a, y)
    }

    #[test]
    fn dimension_is_enforced() {
        let err = Dataset::new(2, vec![Example::new(vec![1.0], true, false)]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 2, found: 1 }));
    }

    #[test]
    fn base_rates() {
        let d = Dataset::new(
            1,
            vec![ex(true, true), ex(true, false), ex(false, true), ex(false, true)],
        )
        .unwrap();
        assert_eq!(d.base_rate().unwrap(), 0.5);
        assert_eq!(d.positive_rate_given(true).unwrap(), 0.5);
        assert_eq!(d.positive_rate_given(false).unwrap(), 1.0);
    }

    #[test]
    fn population_masses_must_sum_to_one() {
        let cells = vec![
            Cell::new(vec![0.0], true, true, 0.5),
            Cell::new(vec![1.0], false, true, 0.4),
        ];
        assert!(matches!(
            DiscretePopulation::new(cells),
            Err(Error::InvalidPopulation(_))
        ));
    }

    #[test]
    fn materialize_counts() {
        let pop = DiscretePopulation::new(vec![
            Cell::new(vec![0.0], true, true, 0.25),
            Cell::new(vec![1.0], false, false, 0.75),
        ])
        .unwrap();
        let d = pop.materialize(8).unwrap();
        assert_eq!(d.len(), 8);
        assert_eq!(d.count(Slice::group(true)), 2);
        assert!(pop.materialize(3).is_err());
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let acc: CompensatedSum = [1.0, 1e-16, -1.0].into_iter().collect();
        assert_eq!(acc.total(), 1e-16);
    }

    #[test]
    fn slice_display() {
        assert_eq!(Slice::group_positive(false).to_string(), "(A=0, Y=1)");
    }
}
