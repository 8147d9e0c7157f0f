use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::oblivcheck::machine_for;
use super::{ConfigError, ExperimentConfig, ExperimentError};
use crate::adversary::{
    count_epoch_probes, distinguish, mean, median, median_threshold, tag_writes, tv_of_counts,
    EpochRow, EpochTagger, ProbeHistogram,
};
use crate::ann::Point;
use crate::hard_dist::{
    build_prefixes, epoch_plan, outside_query, EpochPlan, EpochPlanParams, SubcubeFamily,
    UpdateScript,
};
use crate::machine::Machine;
use crate::seeding::{derive_seed, rng_for, streams};
use crate::structures::{Bucketed, Dynamized, LinearScan, Op};

/// Histograms of one trial: one in-subcube query per epoch, then the shared
/// outside query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialViews {
    pub inside: Vec<ProbeHistogram>,
    pub outside: ProbeHistogram,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackTrial {
    pub trial: u64,
    pub bucketed: TrialViews,
    pub oblivious: TrialViews,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureAttack {
    pub name: String,
    pub rows: Vec<EpochRow>,
    /// Advantage at threshold 1, per epoch.
    pub advantage_at_one: Vec<f64>,
    /// Empirical total variation between inside and outside `t_i`, per epoch.
    pub tv_t_i: Vec<f64>,
    /// Every advantage is at most twice the matching distance.
    pub sound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub plan: EpochPlan,
    pub trials: Vec<AttackTrial>,
    pub calibration_trials: u64,
    pub bucketed: StructureAttack,
    pub oblivious: StructureAttack,
}

pub(crate) fn plan_for(config: &ExperimentConfig) -> Result<EpochPlan, ExperimentError> {
    let plan = epoch_plan(&EpochPlanParams {
        n_total: config.epochs.n_total,
        client_bits: config.machine.client_bits,
        word_bits: config.machine.word_bits,
        update_probes: config.epochs.update_probes,
        floor_override: config.epochs.floor_override,
        beta_override: config.epochs.beta_override,
    })?;
    if plan.k != config.subcubes.k {
        return Err(ConfigError::Field {
            field: "epochs",
            message: format!(
                "plan {:?} has {} epochs, subcubes.k is {}",
                plan.sizes, plan.k, config.subcubes.k
            ),
        }
        .into());
    }
    Ok(plan)
}

/// One hard instance: its family, updates and queries.
pub(crate) struct Instance {
    pub family: SubcubeFamily,
    pub script: UpdateScript,
    pub inside: Vec<Point>,
    pub outside: Point,
}

pub(crate) fn instance(
    config: &ExperimentConfig,
    plan: &EpochPlan,
    seed: u64,
) -> Result<Instance, ExperimentError> {
    let s = &config.subcubes;
    let family = build_prefixes(
        config.ann.d,
        s.d_prime,
        s.k,
        derive_seed(seed, streams::PREFIXES, 0),
        s.max_attempts,
    )?;
    let script = UpdateScript::sample(&family, plan, seed)?;
    let mut rng = rng_for(derive_seed(seed, streams::QUERIES, 0));
    let inside = (0..family.k())
        .map(|i| family.point_from_index(i, rng.gen_range(0..1u64 << s.d_prime)))
        .collect::<Result<Vec<_>, _>>()?;
    let outside = outside_query(&family, seed)?;
    Ok(Instance {
        family,
        script,
        inside,
        outside,
    })
}

fn views(
    machine: &Machine,
    tagger: &EpochTagger,
    inst: &Instance,
    mut query: impl FnMut(&mut Machine, &Point) -> Result<(), ExperimentError>,
) -> Result<TrialViews, ExperimentError> {
    let mut one = |q: &Point| -> Result<ProbeHistogram, ExperimentError> {
        let mut fork = machine.fork();
        query(&mut fork, q)?;
        Ok(count_epoch_probes(
            &fork.adversary_view().operations[0],
            tagger,
        ))
    };
    let inside = inst
        .inside
        .iter()
        .map(&mut one)
        .collect::<Result<Vec<_>, _>>()?;
    let outside = one(&inst.outside)?;
    Ok(TrialViews { inside, outside })
}

fn run_trial(
    config: &ExperimentConfig,
    plan: &EpochPlan,
    trial: u64,
    seed: u64,
) -> Result<AttackTrial, ExperimentError> {
    let inst = instance(config, plan, seed)?;

    let mut b = Bucketed::new(
        inst.family.clone(),
        config.ann_params(),
        plan.sizes.clone(),
        0,
    )?;
    let mut m = machine_for(config, b.required_cells())?;
    for (_, p) in inst.script.inserts() {
        b.insert(&mut m, p)?;
    }
    let tagger = tag_writes(m.adversary_view(), plan)?;
    let bucketed = views(&m, &tagger, &inst, |f, q| {
        b.query(f, q)?;
        Ok(())
    })?;

    let scan = LinearScan::new(config.ann_params());
    let mut dynz = Dynamized::new(scan, config.ann.d, plan.total() + 2, 0)?;
    let mut m = machine_for(config, dynz.required_cells())?;
    for (_, p) in inst.script.inserts() {
        dynz.operate(&mut m, Op::Insert(p.clone()))?;
    }
    let tagger = tag_writes(m.adversary_view(), plan)?;
    let oblivious = views(&m, &tagger, &inst, |f, q| {
        dynz.clone().operate(f, Op::Query(q.clone()))?;
        Ok(())
    })?;

    Ok(AttackTrial {
        trial,
        bucketed,
        oblivious,
    })
}

fn summarize(
    name: &str,
    trials: &[TrialViews],
    calibration: &[TrialViews],
    k: usize,
    fixed: Option<u64>,
) -> Result<StructureAttack, ExperimentError> {
    let outside: Vec<ProbeHistogram> = trials.iter().map(|t| t.outside.clone()).collect();
    let mut rows = Vec::with_capacity(k);
    let mut advantage_at_one = Vec::with_capacity(k);
    let mut tv_t_i = Vec::with_capacity(k);
    let mut sound = true;
    for i in 0..k {
        let inside: Vec<ProbeHistogram> = trials.iter().map(|t| t.inside[i].clone()).collect();
        let t_in: Vec<u64> = inside.iter().map(|h| h.t[i]).collect();
        let t_out: Vec<u64> = outside.iter().map(|h| h.t[i]).collect();
        let threshold = match fixed {
            Some(th) => th,
            None => {
                let cal: Vec<u64> = calibration.iter().map(|t| t.inside[i].t[i]).collect();
                median_threshold(&cal).unwrap_or(0)
            }
        };
        let advantage = distinguish(&inside, &outside, i, threshold)?;
        let at_one = distinguish(&inside, &outside, i, 1)?;
        let tv = tv_of_counts(&t_in, &t_out);
        sound &= advantage.abs() <= 2.0 * tv + 1e-12 && at_one.abs() <= 2.0 * tv + 1e-12;
        rows.push(EpochRow {
            epoch: i,
            t_i_mean: mean(&t_in),
            t_i_median: median(&t_in).unwrap_or(0.0),
            advantage,
            threshold,
        });
        advantage_at_one.push(at_one);
        tv_t_i.push(tv);
    }
    Ok(StructureAttack {
        name: name.to_string(),
        rows,
        advantage_at_one,
        tv_t_i,
        sound,
    })
}

/// Runs the epoch-counting distinguisher against the bucketed baseline and
/// the linear-scan dynamization on the same hard instances.
pub fn run_attack(config: &ExperimentConfig) -> Result<AttackReport, ExperimentError> {
    let plan = plan_for(config)?;
    let run = |range: std::ops::Range<u64>| {
        range
            .into_par_iter()
            .map(|t| {
                run_trial(
                    config,
                    &plan,
                    t,
                    derive_seed(config.seed, streams::TRIALS, t),
                )
            })
            .collect::<Result<Vec<_>, ExperimentError>>()
    };
    let trials = run(0..config.trials)?;
    let calibration_trials = if config.threshold.is_some() {
        0
    } else {
        config.calibration_trials
    };
    let calibration = run(config.trials..config.trials + calibration_trials)?;
    let pick = |ts: &[AttackTrial], f: fn(&AttackTrial) -> &TrialViews| {
        ts.iter().map(f).cloned().collect::<Vec<_>>()
    };
    let bucketed = summarize(
        "bucketed",
        &pick(&trials, |t| &t.bucketed),
        &pick(&calibration, |t| &t.bucketed),
        plan.k,
        config.threshold,
    )?;
    let oblivious = summarize(
        "oblivious",
        &pick(&trials, |t| &t.oblivious),
        &pick(&calibration, |t| &t.oblivious),
        plan.k,
        config.threshold,
    )?;
    Ok(AttackReport {
        plan,
        trials,
        calibration_trials,
        bucketed,
        oblivious,
    })
}
