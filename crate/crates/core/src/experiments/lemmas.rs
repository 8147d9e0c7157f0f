use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, ExperimentError};
use crate::analysis::{
    ln_binomial, resolution_probability, reverse_pinsker_check, sample_cells, PinskerInstance,
    Resolution, SamplingParams,
};
use crate::ann::Point;
use crate::hard_dist::min_pairwise_distance;
use crate::seeding::{derive_seed, rng_for, streams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinskerReport {
    pub instances: u64,
    pub violations: u64,
    pub identical_pairs: u64,
    pub disjoint_pairs: u64,
    /// Largest `p(S) / (2 l1)` over instances with `l1 > 0`.
    pub max_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionGridReport {
    pub max_population: u64,
    pub max_probes: u64,
    pub cases: u64,
    pub violations: u64,
    pub spot: SamplingParams,
    pub spot_value: Resolution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub params: SamplingParams,
    pub draws: u64,
    pub hits: u64,
    pub frequency: f64,
    pub exact: f64,
    pub sigma: f64,
    pub within_3_sigma: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisReport {
    pub trials: u64,
    pub points: usize,
    pub dim: u32,
    pub ratio: f64,
    pub min_distances: Vec<u32>,
    pub violations: u64,
    pub expected_violations: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmasReport {
    pub pinsker: PinskerReport,
    pub resolution_grid: ResolutionGridReport,
    pub monte_carlo: MonteCarloReport,
    pub pairwise: DisReport,
}

/// Expected number of trials, summed over pairs, in which two uniform points
/// of `{0,1}^dim` fall below `ratio * dim`: a union bound over the binomial
/// lower tail.
pub fn dis_violation_expectation(points: usize, dim: u32, ratio: f64, trials: u64) -> f64 {
    let limit = (ratio * f64::from(dim)).ceil() as u64;
    let ln_half = f64::from(dim) * std::f64::consts::LN_2;
    let tail: f64 = (0..limit)
        .map(|j| (ln_binomial(u64::from(dim), j) - ln_half).exp())
        .sum();
    let pairs = (points * points.saturating_sub(1) / 2) as f64;
    trials as f64 * pairs * tail
}

fn pinsker(config: &ExperimentConfig) -> Result<PinskerReport, ExperimentError> {
    let l = &config.lemmas;
    let rows = (0..l.pinsker_instances)
        .into_par_iter()
        .map(|j| {
            let mut rng = rng_for(derive_seed(config.seed, streams::TRIALS, j));
            let inst = PinskerInstance::random(l.pinsker_max_side, &mut rng);
            let r = reverse_pinsker_check(&inst)?;
            let identical = inst.p == inst.q;
            let disjoint = inst
                .p
                .iter()
                .zip(&inst.q)
                .all(|(a, b)| *a == 0.0 || *b == 0.0);
            let ratio = if r.l1 > 0.0 {
                r.p_s / (2.0 * r.l1)
            } else {
                0.0
            };
            Ok((r.holds, identical, disjoint, ratio))
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    Ok(PinskerReport {
        instances: l.pinsker_instances,
        violations: rows.iter().filter(|r| !r.0).count() as u64,
        identical_pairs: rows.iter().filter(|r| r.1).count() as u64,
        disjoint_pairs: rows.iter().filter(|r| r.2).count() as u64,
        max_ratio: rows.iter().map(|r| r.3).fold(0.0, f64::max),
    })
}

fn resolution_grid(config: &ExperimentConfig) -> Result<ResolutionGridReport, ExperimentError> {
    let l = &config.lemmas;
    let (cases, violations) = (1..=l.grid_max_population)
        .into_par_iter()
        .map(|n| {
            let mut cases = 0u64;
            let mut bad = 0u64;
            for t in 0..=l.grid_max_probes {
                for s in 2 * t..=n {
                    let r = resolution_probability(&SamplingParams {
                        population: n,
                        sample_size: s,
                        probes: t,
                    })?;
                    cases += 1;
                    if r.exact < r.bound * (1.0 - 1e-12) {
                        bad += 1;
                    }
                }
            }
            Ok((cases, bad))
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?
        .into_iter()
        .fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let spot = SamplingParams {
        population: 100,
        sample_size: 10,
        probes: 1,
    };
    Ok(ResolutionGridReport {
        max_population: l.grid_max_population,
        max_probes: l.grid_max_probes,
        cases,
        violations,
        spot,
        spot_value: resolution_probability(&spot)?,
    })
}

fn monte_carlo(config: &ExperimentConfig) -> Result<MonteCarloReport, ExperimentError> {
    let l = &config.lemmas;
    let params = SamplingParams {
        population: l.mc_population,
        sample_size: l.mc_sample,
        probes: l.mc_probes,
    };
    let exact = resolution_probability(&params)?.exact;
    let cells: Vec<u64> = (0..l.mc_population).collect();
    let hits = (0..l.mc_draws)
        .into_par_iter()
        .map(|j| {
            let t = sample_cells(
                &cells,
                l.mc_sample as usize,
                derive_seed(config.seed, streams::CELL_SAMPLES, j),
            )?;
            Ok(u64::from((0..2 * l.mc_probes).all(|a| t.contains(&a))))
        })
        .collect::<Result<Vec<u64>, ExperimentError>>()?
        .into_iter()
        .sum::<u64>();
    let draws = l.mc_draws as f64;
    let sigma = (draws * exact * (1.0 - exact)).sqrt();
    Ok(MonteCarloReport {
        params,
        draws: l.mc_draws,
        hits,
        frequency: hits as f64 / draws,
        exact,
        sigma,
        within_3_sigma: (hits as f64 - draws * exact).abs() <= 3.0 * sigma,
    })
}

fn pairwise(config: &ExperimentConfig) -> Result<DisReport, ExperimentError> {
    let l = &config.lemmas;
    let min_distances = (0..l.dis_trials)
        .into_par_iter()
        .map(|j| {
            let mut rng = rng_for(derive_seed(config.seed, streams::SEQUENCES, j));
            let pts = (0..l.dis_points)
                .map(|_| Point::random(l.dis_dim, &mut rng))
                .collect::<Result<Vec<_>, _>>()
                .map_err(crate::ann::AnnError::from)?;
            Ok(min_pairwise_distance(&pts)?)
        })
        .collect::<Result<Vec<u32>, ExperimentError>>()?;
    let bound = l.dis_ratio * f64::from(l.dis_dim);
    Ok(DisReport {
        trials: l.dis_trials,
        points: l.dis_points,
        dim: l.dis_dim,
        ratio: l.dis_ratio,
        violations: min_distances
            .iter()
            .filter(|&&m| f64::from(m) < bound)
            .count() as u64,
        expected_violations: dis_violation_expectation(
            l.dis_points,
            l.dis_dim,
            l.dis_ratio,
            l.dis_trials,
        ),
        min_distances,
    })
}

pub fn run_lemmas(config: &ExperimentConfig) -> Result<LemmasReport, ExperimentError> {
    Ok(LemmasReport {
        pinsker: pinsker(config)?,
        resolution_grid: resolution_grid(config)?,
        monte_carlo: monte_carlo(config)?,
        pairwise: pairwise(config)?,
    })
}
