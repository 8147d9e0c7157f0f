use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::oblivcheck::{machine_for, random_ops};
use super::{ExperimentConfig, ExperimentError};
use crate::machine::SessionTrace;
use crate::seeding::{derive_seed, streams};
use crate::structures::{cost_account, CostReport, Dynamized, LinearScan};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynbenchTrial {
    pub trial: u64,
    pub report: CostReport,
    pub rebuild_deviation: i64,
    pub query_deviation: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynbenchReport {
    pub ops: u64,
    pub trials: Vec<DynbenchTrial>,
    pub max_abs_deviation: u64,
}

/// Measures per-phase probe totals of random sessions against the closed form.
pub fn run_dynbench(
    config: &ExperimentConfig,
) -> Result<(DynbenchReport, Option<SessionTrace>), ExperimentError> {
    let results = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let ops = random_ops(
                config.ops,
                config.ann.d,
                config.insert_fraction,
                derive_seed(config.seed, streams::SEQUENCES, trial),
            )?;
            let scan = LinearScan::new(config.ann_params());
            let mut dynz = Dynamized::new(scan, config.ann.d, config.ops + 1, 0)?;
            let mut m = machine_for(config, dynz.required_cells())?;
            for op in ops {
                dynz.operate(&mut m, op)?;
            }
            let report = cost_account(dynz.cost_log(), &scan);
            let rebuild_deviation =
                report.insert_phase_total as i64 - report.closed_form.rebuild_total as i64;
            let query_deviation =
                report.query_phase_total as i64 - report.closed_form.query_total as i64;
            let trace = (trial == 0).then(|| m.into_view());
            Ok((
                DynbenchTrial {
                    trial,
                    report,
                    rebuild_deviation,
                    query_deviation,
                },
                trace,
            ))
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    let mut first = None;
    let mut trials = Vec::with_capacity(results.len());
    for (t, trace) in results {
        if trace.is_some() {
            first = trace;
        }
        trials.push(t);
    }
    let max_abs_deviation = trials
        .iter()
        .map(|t| {
            t.rebuild_deviation
                .unsigned_abs()
                .max(t.query_deviation.unsigned_abs())
        })
        .max()
        .unwrap_or(0);
    Ok((
        DynbenchReport {
            ops: config.ops,
            trials,
            max_abs_deviation,
        },
        first,
    ))
}
