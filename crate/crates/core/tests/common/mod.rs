//! Random fixtures shared by the integration suites.
#![allow(dead_code)]

use fairnoise::{Cell, Dataset, DiscretePopulation, Example, LinearScorer, McNoise};
use rand::Rng;

/// `4..=max_cells` cells over 2 features. The first four cells cover every
/// `(A, Y)` combination so all group and group-positive slices carry mass.
pub fn random_population(rng: &mut impl Rng, max_cells: usize) -> DiscretePopulation {
    let k = rng.random_range(4..=max_cells.max(4));
    let cells = (0..k)
        .map(|i| {
            let (a, y) = if i < 4 {
                (i >= 2, i % 2 == 1)
            } else {
                (rng.random(), rng.random())
            };
            let x = vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            Cell::new(x, a, y, rng.random_range(0.05..1.0))
        })
        .collect();
    DiscretePopulation::from_weights(cells).unwrap()
}

pub fn random_scorer(rng: &mut impl Rng, dimension: usize) -> LinearScorer {
    let w = (0..dimension).map(|_| rng.random_range(-1.0..1.0)).collect();
    LinearScorer::new(w, rng.random_range(-0.5..0.5))
}

/// `(α, β)` with `α + β ≤ bound`.
pub fn random_mc(rng: &mut impl Rng, bound: f64) -> McNoise {
    let alpha = rng.random_range(0.0..bound);
    let beta = rng.random_range(0.0..=bound - alpha);
    McNoise::new(alpha, beta).unwrap()
}

/// Gaussian-free dataset with every `(A, Y)` cell present at least once.
pub fn random_dataset(rng: &mut impl Rng, n: usize) -> Dataset {
    let ex = (0..n.max(4))
        .map(|i| {
            let (a, y) = if i < 4 {
                (i >= 2, i % 2 == 1)
            } else {
                (rng.random(), rng.random())
            };
            let x = vec![
                rng.random_range(-2.0..2.0) + f64::from(u8::from(y)),
                rng.random_range(-2.0..2.0),
            ];
            Example::new(x, a, y)
        })
        .collect();
    Dataset::new(2, ex).unwrap()
}
