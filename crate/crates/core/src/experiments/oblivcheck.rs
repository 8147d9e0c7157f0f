use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, ExperimentError};
use crate::adversary::{tv_distance, TvMode, ViewSamples};
use crate::ann::Point;
use crate::machine::{Machine, SessionTrace};
use crate::seeding::{derive_seed, rng_for, streams};
use crate::structures::{Dynamized, LinearScan, Op};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairResult {
    pub pair: u64,
    pub identical: bool,
    pub tv: f64,
    pub probes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OblivcheckReport {
    pub ops: u64,
    pub pairs: Vec<PairResult>,
    pub all_identical: bool,
    pub max_tv: f64,
}

/// `n` operations with uniform points; each is an insert with probability
/// `insert_fraction`.
pub fn random_ops(
    n: u64,
    d: u32,
    insert_fraction: f64,
    seed: u64,
) -> Result<Vec<Op>, ExperimentError> {
    let mut rng = rng_for(seed);
    (0..n)
        .map(|_| {
            let p = Point::random(d, &mut rng).map_err(crate::ann::AnnError::from)?;
            Ok(if rng.gen_bool(insert_fraction) {
                Op::Insert(p)
            } else {
                Op::Query(p)
            })
        })
        .collect()
}

/// Runs `ops` through a fresh linear-scan dynamization sized for them.
pub fn run_session(ops: &[Op], config: &ExperimentConfig) -> Result<SessionTrace, ExperimentError> {
    let scan = LinearScan::new(config.ann_params());
    let mut dynz = Dynamized::new(scan, config.ann.d, ops.len() as u64 + 1, 0)?;
    let mut m = machine_for(config, dynz.required_cells())?;
    for op in ops {
        dynz.operate(&mut m, op.clone())?;
    }
    Ok(m.into_view())
}

pub(crate) fn machine_for(
    config: &ExperimentConfig,
    required: u64,
) -> Result<Machine, ExperimentError> {
    let cells = match config.machine.cells {
        Some(k) if k < required => {
            return Err(super::ConfigError::Field {
                field: "machine.cells",
                message: format!("structure needs {required} cells, config gives {k}"),
            }
            .into())
        }
        Some(k) => k,
        None => required.max(1),
    };
    Ok(Machine::new(
        cells,
        config.machine.word_bits,
        config.machine.client_bits,
        config.machine.tape_seed,
    )?)
}

/// Compares the views of random equal-length sequence pairs. The structure is
/// deterministic, so each view distribution is a point mass and the distance
/// is exact. Also returns the first session for dumping.
pub fn run_oblivcheck(
    config: &ExperimentConfig,
) -> Result<(OblivcheckReport, Option<SessionTrace>), ExperimentError> {
    let results = (0..config.trials)
        .into_par_iter()
        .map(|pair| {
            let ops = |j| {
                random_ops(
                    config.ops,
                    config.ann.d,
                    config.insert_fraction,
                    derive_seed(config.seed, streams::SEQUENCES, j),
                )
            };
            let a = run_session(&ops(2 * pair)?, config)?;
            let b = run_session(&ops(2 * pair + 1)?, config)?;
            let identical = a.to_dump() == b.to_dump();
            let probes = a.total_probes();
            let tv = tv_distance(
                &ViewSamples::Enumerated(vec![(a.clone(), 1.0)]),
                &ViewSamples::Enumerated(vec![(b, 1.0)]),
                TvMode::Exact,
            )?;
            Ok((
                PairResult {
                    pair,
                    identical,
                    tv: tv.value,
                    probes,
                },
                (pair == 0).then_some(a),
            ))
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    let mut first = None;
    let mut pairs = Vec::with_capacity(results.len());
    for (r, trace) in results {
        if trace.is_some() {
            first = trace;
        }
        pairs.push(r);
    }
    let report = OblivcheckReport {
        ops: config.ops,
        all_identical: pairs.iter().all(|p| p.identical),
        max_tv: pairs.iter().map(|p| p.tv).fold(0.0, f64::max),
        pairs,
    };
    Ok((report, first))
}
