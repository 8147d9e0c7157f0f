//! The observer's side: epoch tags for written cells, per-epoch probe counts,
//! the threshold distinguisher, and total variation between view
//! distributions.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::hard_dist::EpochPlan;
use crate::machine::{Address, OperationTrace, ProbeKind, SessionTrace};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum AdversaryError {
    #[error("update trace has {found} operations, plan expects {expected}")]
    LengthMismatch { expected: u64, found: u64 },
    #[error("sample set is empty")]
    EmptySamples,
    #[error("exact mode needs fully enumerated distributions")]
    NotEnumerated,
    #[error("views cover {0} and {1} operations")]
    OperationCountMismatch(usize, usize),
    #[error("probability masses must be non-negative and sum to 1 (sum {0})")]
    InvalidMass(f64),
}

/// Epoch of the last write to each address during the update phase.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EpochTagger {
    tags: HashMap<Address, usize>,
    k: usize,
}

impl EpochTagger {
    pub fn tag(&self, address: Address) -> Option<usize> {
        self.tags.get(&address).copied()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn tagged_count(&self) -> usize {
        self.tags.len()
    }

    /// Sorted addresses of `C_i`.
    pub fn cells(&self, epoch: usize) -> Vec<Address> {
        let mut out: Vec<Address> = self
            .tags
            .iter()
            .filter(|(_, &e)| e == epoch)
            .map(|(&a, _)| a)
            .collect();
        out.sort_unstable();
        out
    }
}

/// Replays the writes of an update trace that executed the plan's epochs
/// oldest first.
pub fn tag_writes(
    update_trace: &SessionTrace,
    plan: &EpochPlan,
) -> Result<EpochTagger, AdversaryError> {
    let found = update_trace.operations.len() as u64;
    if found != plan.total() {
        return Err(AdversaryError::LengthMismatch {
            expected: plan.total(),
            found,
        });
    }
    let mut tags = HashMap::new();
    for (index, op) in update_trace.operations.iter().enumerate() {
        let epoch = plan
            .epoch_of_op(index as u64)
            .expect("index below plan total");
        for probe in op.probes.iter().filter(|p| p.kind == ProbeKind::Write) {
            tags.insert(probe.address, epoch);
        }
    }
    Ok(EpochTagger { tags, k: plan.k })
}

/// Probes of one query split by the epoch tag of the probed cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeHistogram {
    pub t: Vec<u64>,
    pub untagged: u64,
}

impl ProbeHistogram {
    pub fn total(&self) -> u64 {
        self.t.iter().sum::<u64>() + self.untagged
    }
}

pub fn count_epoch_probes(query: &OperationTrace, tagger: &EpochTagger) -> ProbeHistogram {
    let mut hist = ProbeHistogram {
        t: vec![0; tagger.k],
        untagged: 0,
    };
    for address in query.addresses() {
        match tagger.tag(address) {
            Some(e) => hist.t[e] += 1,
            None => hist.untagged += 1,
        }
    }
    hist
}

/// Advantage of "output 1 iff `t_epoch >= threshold`" at telling in-subcube
/// queries from outside ones.
pub fn distinguish(
    inside: &[ProbeHistogram],
    outside: &[ProbeHistogram],
    epoch: usize,
    threshold: u64,
) -> Result<f64, AdversaryError> {
    if inside.is_empty() || outside.is_empty() {
        return Err(AdversaryError::EmptySamples);
    }
    let rate = |hs: &[ProbeHistogram]| {
        hs.iter()
            .filter(|h| h.t.get(epoch).copied().unwrap_or(0) >= threshold)
            .count() as f64
            / hs.len() as f64
    };
    Ok(rate(inside) - rate(outside))
}

/// Median as a real: the mean of the two middle values for even lengths.
pub fn median(values: &[u64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid] as f64
    } else {
        (v[mid - 1] as f64 + v[mid] as f64) / 2.0
    })
}

/// Integer threshold from calibration values: the lower median.
pub fn median_threshold(values: &[u64]) -> Option<u64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    Some(v[(v.len() - 1) / 2])
}

pub fn mean(values: &[u64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<u64>() as f64 / values.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TvMode {
    Exact,
    Empirical,
}

/// Either a fully enumerated distribution over views or a bag of samples.
#[derive(Debug, Clone)]
pub enum ViewSamples {
    Enumerated(Vec<(SessionTrace, f64)>),
    Sampled(Vec<SessionTrace>),
}

impl ViewSamples {
    fn len(&self) -> usize {
        match self {
            ViewSamples::Enumerated(v) => v.len(),
            ViewSamples::Sampled(v) => v.len(),
        }
    }

    fn operation_count(&self) -> Option<usize> {
        match self {
            ViewSamples::Enumerated(v) => v.first().map(|(t, _)| t.operations.len()),
            ViewSamples::Sampled(v) => v.first().map(|t| t.operations.len()),
        }
    }

    fn traces(&self) -> Box<dyn Iterator<Item = &SessionTrace> + '_> {
        match self {
            ViewSamples::Enumerated(v) => Box::new(v.iter().map(|(t, _)| t)),
            ViewSamples::Sampled(v) => Box::new(v.iter()),
        }
    }

    /// Probability table keyed by the canonical dump.
    fn table(&self) -> Result<BTreeMap<String, f64>, AdversaryError> {
        let mut table = BTreeMap::new();
        match self {
            ViewSamples::Enumerated(v) => {
                let mut sum = 0.0;
                for (trace, p) in v {
                    if !(*p >= 0.0) {
                        return Err(AdversaryError::InvalidMass(*p));
                    }
                    sum += p;
                    *table.entry(trace.to_dump()).or_insert(0.0) += p;
                }
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(AdversaryError::InvalidMass(sum));
                }
            }
            ViewSamples::Sampled(v) => {
                let w = 1.0 / v.len() as f64;
                for trace in v {
                    *table.entry(trace.to_dump()).or_insert(0.0) += w;
                }
            }
        }
        Ok(table)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvEstimate {
    pub value: f64,
    pub mode: TvMode,
    pub samples: (usize, usize),
}

/// Half the L1 distance between two tables.
pub fn half_l1<K: Ord>(p: &BTreeMap<K, f64>, q: &BTreeMap<K, f64>) -> f64 {
    let mut l1 = 0.0;
    for (k, a) in p {
        l1 += (a - q.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, b) in q {
        if !p.contains_key(k) {
            l1 += b;
        }
    }
    (l1 / 2.0).clamp(0.0, 1.0)
}

pub fn tv_distance(
    a: &ViewSamples,
    b: &ViewSamples,
    mode: TvMode,
) -> Result<TvEstimate, AdversaryError> {
    if a.len() == 0 || b.len() == 0 {
        return Err(AdversaryError::EmptySamples);
    }
    if mode == TvMode::Exact
        && !(matches!(a, ViewSamples::Enumerated(_)) && matches!(b, ViewSamples::Enumerated(_)))
    {
        return Err(AdversaryError::NotEnumerated);
    }
    let ops = a.operation_count().unwrap_or(0);
    for t in a.traces().chain(b.traces()) {
        if t.operations.len() != ops {
            return Err(AdversaryError::OperationCountMismatch(
                ops,
                t.operations.len(),
            ));
        }
    }
    let value = half_l1(&a.table()?, &b.table()?);
    Ok(TvEstimate {
        value,
        mode,
        samples: (a.len(), b.len()),
    })
}

/// Empirical total variation between two samples of integers.
pub fn tv_of_counts(a: &[u64], b: &[u64]) -> f64 {
    let table = |v: &[u64]| {
        let mut t = BTreeMap::new();
        for &x in v {
            *t.entry(x).or_insert(0.0) += 1.0 / v.len() as f64;
        }
        t
    };
    half_l1(&table(a), &table(b))
}

/// One line of the per-epoch attack summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRow {
    pub epoch: usize,
    pub t_i_mean: f64,
    pub t_i_median: f64,
    pub advantage: f64,
    pub threshold: u64,
}

pub const EPOCH_CSV_HEADER: &str = "epoch,t_i_mean,t_i_median,advantage,threshold";

pub fn write_epoch_csv<W: Write>(rows: &[EpochRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{EPOCH_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.epoch, r.t_i_mean, r.t_i_median, r.advantage, r.threshold
        )?;
    }
    Ok(())
}
