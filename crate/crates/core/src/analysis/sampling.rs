use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::machine::Address;
use crate::seeding::rng_for;

/// Sample `s` cells out of `population` and ask whether a fixed set of `2t`
/// of them is covered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingParams {
    pub population: u64,
    pub sample_size: u64,
    pub probes: u64,
}

impl SamplingParams {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        let two_t = self.probes.checked_mul(2);
        if two_t.is_none_or(|tt| tt > self.sample_size) || self.sample_size > self.population {
            return Err(AnalysisError::SamplingRange {
                population: self.population,
                sample_size: self.sample_size,
                probes: self.probes,
            });
        }
        Ok(())
    }
}

/// `n_i / (100 w)`, rounded down.
pub fn default_sample_size(n_i: u64, word_bits: u32) -> u64 {
    n_i / (100 * u64::from(word_bits))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub exact: f64,
    pub bound: f64,
}

/// `ln C(n, k)` as a difference of log-factorials, summed over the shorter
/// side.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (0..k)
        .map(|j| ((n - j) as f64).ln() - ((j + 1) as f64).ln())
        .sum()
}

/// Probability that a uniform `s`-subset contains `2t` given cells, next to
/// the closed-form lower bound `((s - 2t) / N)^(2t)`.
pub fn resolution_probability(params: &SamplingParams) -> Result<Resolution, AnalysisError> {
    params.validate()?;
    let SamplingParams {
        population: n,
        sample_size: s,
        probes: t,
    } = *params;
    if t == 0 {
        return Ok(Resolution {
            exact: 1.0,
            bound: 1.0,
        });
    }
    let exact = if s == n {
        1.0
    } else {
        (ln_binomial(n - 2 * t, s - 2 * t) - ln_binomial(n, s)).exp()
    };
    let bound = ((s - 2 * t) as f64 / n as f64).powi((2 * t) as i32);
    Ok(Resolution { exact, bound })
}

/// Uniform `s`-subset of `cells`, fixed by `seed`.
pub fn sample_cells(
    cells: &[Address],
    s: usize,
    seed: u64,
) -> Result<BTreeSet<Address>, AnalysisError> {
    if s > cells.len() {
        return Err(AnalysisError::SampleTooLarge {
            s,
            available: cells.len(),
        });
    }
    let mut rng = rng_for(seed);
    Ok(rand::seq::index::sample(&mut rng, cells.len(), s)
        .into_iter()
        .map(|i| cells[i])
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn falling_ratio(n: u64, s: u64, t: u64) -> f64 {
        (0..2 * t)
            .map(|j| (s - j) as f64 / (n - j) as f64)
            .product()
    }

    fn res(n: u64, s: u64, t: u64) -> Resolution {
        resolution_probability(&SamplingParams {
            population: n,
            sample_size: s,
            probes: t,
        })
        .unwrap()
    }

    #[test]
    fn spot_values() {
        let r = res(100, 10, 1);
        assert!((r.exact - 1.0 / 110.0).abs() < 1e-14);
        assert!((r.bound - 0.0064).abs() < 1e-15);
        assert_eq!(
            res(50, 7, 0),
            Resolution {
                exact: 1.0,
                bound: 1.0
            }
        );
        assert_eq!(res(12, 12, 3).exact, 1.0);
    }

    #[test]
    fn range_errors() {
        let bad = SamplingParams {
            population: 10,
            sample_size: 3,
            probes: 2,
        };
        assert!(matches!(
            resolution_probability(&bad),
            Err(AnalysisError::SamplingRange { .. })
        ));
        let bad = SamplingParams {
            population: 10,
            sample_size: 11,
            probes: 0,
        };
        assert!(resolution_probability(&bad).is_err());
    }

    #[test]
    fn exact_dominates_bound_on_full_grid() {
        for n in 1..=200u64 {
            for t in 0..=5u64 {
                for s in 2 * t..=n {
                    let r = res(n, s, t);
                    assert!(r.exact >= r.bound * (1.0 - 1e-12), "n={n} s={s} t={t}");
                    assert!(
                        (r.exact - falling_ratio(n, s, t)).abs() <= 1e-10 * r.exact.max(1e-300)
                    );
                }
            }
        }
    }

    #[test]
    fn sample_cells_extremes_and_determinism() {
        let cells: Vec<u64> = (100..120).collect();
        assert_eq!(
            sample_cells(&cells, 20, 1).unwrap(),
            cells.iter().copied().collect()
        );
        assert!(sample_cells(&cells, 0, 1).unwrap().is_empty());
        assert_eq!(
            sample_cells(&cells, 7, 9).unwrap(),
            sample_cells(&cells, 7, 9).unwrap()
        );
        assert_eq!(
            sample_cells(&cells, 21, 1).unwrap_err(),
            AnalysisError::SampleTooLarge {
                s: 21,
                available: 20
            }
        );
    }

    #[test]
    fn inclusion_frequency_matches_s_over_population() {
        let cells: Vec<u64> = (0..40).collect();
        let draws = 10_000;
        let hits = (0..draws)
            .filter(|&i| sample_cells(&cells, 10, i).unwrap().contains(&17))
            .count() as f64;
        let p = 0.25;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        assert!((hits - draws as f64 * p).abs() <= 3.0 * sigma);
    }

    #[test]
    fn ln_binomial_small_cases() {
        assert!((ln_binomial(10, 3).exp() - 120.0).abs() < 1e-9);
        assert_eq!(ln_binomial(5, 0), 0.0);
        assert_eq!(ln_binomial(3, 4), f64::NEG_INFINITY);
    }

    proptest! {
        #[test]
        fn exact_is_a_probability(n in 1u64..400, t in 0u64..6, frac in 0.0f64..1.0) {
            prop_assume!(2 * t <= n);
            let s = 2 * t + ((n - 2 * t) as f64 * frac) as u64;
            let r = res(n, s, t);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&r.exact));
            prop_assert!(r.exact >= r.bound * (1.0 - 1e-12));
        }
    }
}
