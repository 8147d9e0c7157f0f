use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::attack::{instance, plan_for};
use super::oblivcheck::machine_for;
use super::{ExperimentConfig, ExperimentError};
use crate::adversary::tag_writes;
use crate::analysis::{resolved_queries, sample_cells};
use crate::machine::Address;
use crate::seeding::{derive_seed, streams};
use crate::structures::{Bucketed, Dynamized, LinearScan, Op};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub fraction: f64,
    pub linear_sample: usize,
    pub linear_resolved: usize,
    pub bucketed_sample: usize,
    pub bucketed_resolved: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolveEpoch {
    pub epoch: usize,
    pub linear_cells: usize,
    pub bucketed_cells: usize,
    /// Linear-scan dynamization with one cell of `C_i` left out of `T`.
    pub linear_missing_one: String,
    /// Bucketed baseline with `T` the whole bucket region.
    pub bucketed_full_region: String,
    pub sweep: Vec<SweepPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolveTrial {
    pub trial: u64,
    pub epochs: Vec<ResolveEpoch>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolveReport {
    pub queries_per_subcube: u64,
    pub trials: Vec<ResolveTrial>,
    /// Every linear-scan run with `T` missing a cell resolved nothing.
    pub linear_missing_one_empty: bool,
    /// Every bucketed run with `T` covering the region resolved all of `P_i`.
    pub bucketed_full_region_complete: bool,
}

fn sized(cells: &[Address], fraction: f64) -> usize {
    ((cells.len() as f64) * fraction).round() as usize
}

fn run_trial(config: &ExperimentConfig, trial: u64) -> Result<ResolveTrial, ExperimentError> {
    let plan = plan_for(config)?;
    let seed = derive_seed(config.seed, streams::TRIALS, trial);
    let inst = instance(config, &plan, seed)?;
    let family = &inst.family;

    let mut b = Bucketed::new(family.clone(), config.ann_params(), plan.sizes.clone(), 0)?;
    let mut bm = machine_for(config, b.required_cells())?;
    for (_, p) in inst.script.inserts() {
        b.insert(&mut bm, p)?;
    }
    let btags = tag_writes(bm.adversary_view(), &plan)?;

    let scan = LinearScan::new(config.ann_params());
    let mut dynz = Dynamized::new(scan, config.ann.d, plan.total() + 1, 0)?;
    let mut lm = machine_for(config, dynz.required_cells())?;
    for (_, p) in inst.script.inserts() {
        dynz.operate(&mut lm, Op::Insert(p.clone()))?;
    }
    let ltags = tag_writes(lm.adversary_view(), &plan)?;

    let cap = config.probe_cap;
    let mut epochs = Vec::with_capacity(plan.k);
    for i in 0..plan.k {
        let lc = ltags.cells(i);
        let bc = btags.cells(i);
        let missing: BTreeSet<Address> = lc.iter().skip(1).copied().collect();
        let linear_missing_one =
            resolved_queries(&dynz, &lm, &missing, &lc, family, i, cap)?.bitmap();
        let region: BTreeSet<Address> = b.region(i).collect();
        let bucketed_full_region =
            resolved_queries(&b, &bm, &region, &bc, family, i, cap)?.bitmap();
        let mut sweep = Vec::with_capacity(config.sample_fractions.len());
        for (j, &fraction) in config.sample_fractions.iter().enumerate() {
            let stream_index = (i * config.sample_fractions.len() + j) as u64;
            let ls = sized(&lc, fraction);
            let t = sample_cells(
                &lc,
                ls,
                derive_seed(seed, streams::CELL_SAMPLES, 2 * stream_index),
            )?;
            let linear_resolved = resolved_queries(&dynz, &lm, &t, &lc, family, i, cap)?.len();
            let bs = sized(&bc, fraction);
            let t = sample_cells(
                &bc,
                bs,
                derive_seed(seed, streams::CELL_SAMPLES, 2 * stream_index + 1),
            )?;
            let bucketed_resolved = resolved_queries(&b, &bm, &t, &bc, family, i, cap)?.len();
            sweep.push(SweepPoint {
                fraction,
                linear_sample: ls,
                linear_resolved,
                bucketed_sample: bs,
                bucketed_resolved,
            });
        }
        epochs.push(ResolveEpoch {
            epoch: i,
            linear_cells: lc.len(),
            bucketed_cells: bc.len(),
            linear_missing_one,
            bucketed_full_region,
            sweep,
        });
    }
    Ok(ResolveTrial { trial, epochs })
}

/// Cell sampling and resolved-query replay on both structures over hard
/// instances, with the two containment sanity cases per epoch.
pub fn run_resolve(config: &ExperimentConfig) -> Result<ResolveReport, ExperimentError> {
    let trials = (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(config, t))
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    let all = |f: &dyn Fn(&ResolveEpoch) -> bool| trials.iter().flat_map(|t| &t.epochs).all(f);
    Ok(ResolveReport {
        queries_per_subcube: 1 << config.subcubes.d_prime,
        linear_missing_one_empty: all(&|e| !e.linear_missing_one.contains('1')),
        bucketed_full_region_complete: all(&|e| !e.bucketed_full_region.contains('0')),
        trials,
    })
}
