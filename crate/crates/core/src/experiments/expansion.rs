use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, ExperimentError};
use crate::ann::{exhaustive_min_expansion, measure_expansion, CubeSet, ExpansionParams};
use crate::seeding::{derive_seed, rng_for, streams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionCase {
    pub set_size: u32,
    pub r: u32,
    pub exhaustive_min: u32,
    pub observed_min: u32,
    pub samples: u64,
    pub violations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub d: u32,
    pub cases: Vec<ExpansionCase>,
    pub violations: u64,
    /// Smallest ratio `|Γ_r(V)| / |V|` seen per set size at radius
    /// `epsilon * d`; descriptive only.
    pub measured: Vec<ExpansionParams>,
}

/// Compares neighborhoods of random vertex sets with the exhaustive minimum.
pub fn run_expansion(config: &ExperimentConfig) -> Result<ExpansionReport, ExperimentError> {
    let e = &config.expansion;
    let d = e.d;
    let mut grid = Vec::new();
    for size in 1..=e.max_set_size {
        for &r in &e.radii {
            grid.push((size, r));
        }
    }
    let cases = grid
        .par_iter()
        .enumerate()
        .map(|(idx, &(size, r))| {
            let floor = exhaustive_min_expansion(d, size, r)?;
            let mut rng = rng_for(derive_seed(config.seed, streams::TRIALS, idx as u64));
            let mut observed_min = u32::MAX;
            let mut violations = 0;
            for _ in 0..config.trials {
                let mut set = CubeSet::empty(d)?;
                for v in rand::seq::index::sample(&mut rng, 1 << d, size as usize).iter() {
                    set.insert(v as u32);
                }
                let g = set.neighborhood(r).len() as u32;
                observed_min = observed_min.min(g);
                if g < floor {
                    violations += 1;
                }
            }
            Ok(ExpansionCase {
                set_size: size,
                r,
                exhaustive_min: floor,
                observed_min,
                samples: config.trials,
                violations,
            })
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    let mut rng = rng_for(derive_seed(config.seed, streams::QUERIES, 0));
    let measured = (1..=e.max_set_size)
        .map(|size| {
            measure_expansion(
                d,
                e.epsilon,
                size as usize,
                config.trials as usize,
                &mut rng,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ExpansionReport {
        d,
        violations: cases.iter().map(|c| c.violations).sum(),
        cases,
        measured,
    })
}
