use super::McNoise;
use crate::data::{Cell, DiscretePopulation, Slice, WeightedRows};
use crate::error::{Error, Result};

/// The exact corrupted population.
///
/// Each clean cell is split into an observed `A_corr = 1` part and an
/// observed `A_corr = 0` part so that the conditionals given `A_corr` are
/// the MC mixtures of the clean conditionals given `A`, and
/// `P[A_corr = 1] = target_base_rate`. Zero-mass parts are dropped, so zero
/// noise with the clean base rate returns the input cell for cell.
pub fn corrupt_population(
    pop: &DiscretePopulation,
    noise: McNoise,
    target_base_rate: f64,
) -> Result<DiscretePopulation> {
    if !(target_base_rate > 0.0 && target_base_rate < 1.0) {
        return Err(Error::InvalidBaseRate(target_base_rate));
    }
    let p1 = pop.slice_weight(Slice::group(true));
    let p0 = pop.slice_weight(Slice::group(false));
    if p1 <= 0.0 {
        return Err(Error::EmptySlice(Slice::group(true)));
    }
    if p0 <= 0.0 {
        return Err(Error::EmptySlice(Slice::group(false)));
    }
    let (alpha, beta) = (noise.alpha(), noise.beta());
    let pi = target_base_rate;

    let mut cells = Vec::with_capacity(pop.cells().len() * 2);
    for c in pop.cells() {
        // Mass of this atom inside its clean group-conditional distribution.
        let conditional = if c.sensitive { c.mass / p1 } else { c.mass / p0 };
        let (to_one, to_zero) = if c.sensitive {
            (pi * (1.0 - alpha), (1.0 - pi) * beta)
        } else {
            (pi * alpha, (1.0 - pi) * (1.0 - beta))
        };
        // Keep the atom's own group first so the identity case preserves order.
        let parts = if c.sensitive {
            [(true, to_one), (false, to_zero)]
        } else {
            [(false, to_zero), (true, to_one)]
        };
        for (a, weight) in parts {
            let mass = weight * conditional;
            if mass > 0.0 {
                cells.push(Cell::new(c.features.clone(), a, c.target, mass));
            }
        }
    }
    DiscretePopulation::from_weights(cells)
}
