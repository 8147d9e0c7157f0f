//! The hard instance: pairwise-far prefixes carving disjoint subcubes, one per
//! epoch, with geometrically growing epoch sizes going back in time.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ann::{hamming, Point, PointError};
use crate::seeding::{derive_seed, rng_for, streams};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum HardDistError {
    #[error("need d >= 4 d' (d = {d}, d' = {d_prime})")]
    DimensionTooSmall { d: u32, d_prime: u32 },
    #[error("subcube dimension must be at least 1")]
    ZeroSubcube,
    #[error("at least one subcube is required")]
    NoSubcubes,
    #[error("no {k} pairwise-far prefixes found in {attempts} attempts ({failing_pairs} pairs too close in the last one)")]
    AttemptsExhausted {
        attempts: u32,
        failing_pairs: usize,
        k: usize,
    },
    #[error("prefixes {0} and {1} are within distance d'")]
    PrefixesTooClose(usize, usize),
    #[error("growth factor {0} must be at least 2")]
    BetaTooSmall(u64),
    #[error("epoch floor {floor} exceeds the update budget {n_total}")]
    NoEpochFits { floor: u64, n_total: u64 },
    #[error("epoch {index} out of range for {k} epochs")]
    EpochOutOfRange { index: usize, k: usize },
    #[error("every prefix is used; no outside query exists")]
    NoUnusedPrefix,
    #[error("fewer than two points")]
    TooFewPoints,
    #[error(transparent)]
    Point(#[from] PointError),
}

/// `k` disjoint `d'`-subcubes of `{0,1}^d`, each fixed by a prefix of
/// `d - d'` coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubcubeFamily {
    pub d: u32,
    pub d_prime: u32,
    pub prefixes: Vec<Point>,
}

impl SubcubeFamily {
    pub fn prefix_len(&self) -> u32 {
        self.d - self.d_prime
    }

    pub fn k(&self) -> usize {
        self.prefixes.len()
    }

    /// Index of the subcube containing `p`, if any.
    pub fn subcube_of(&self, p: &Point) -> Option<usize> {
        if p.dim() != self.d {
            return None;
        }
        let prefix = p.prefix(self.prefix_len()).ok()?;
        self.prefixes.iter().position(|x| *x == prefix)
    }

    /// The point of subcube `i` whose last `d'` coordinates are `suffix`.
    pub fn point(&self, i: usize, suffix: &Point) -> Point {
        Point::concat(&self.prefixes[i], suffix)
    }

    /// Point of subcube `i` whose suffix is the integer `suffix` (`d' <= 64`).
    pub fn point_from_index(&self, i: usize, suffix: u64) -> Result<Point, HardDistError> {
        Ok(self.point(i, &Point::from_u64(suffix, self.d_prime)?))
    }

    pub fn suffix(&self, p: &Point) -> Result<Point, HardDistError> {
        Ok(p.suffix(self.d_prime)?)
    }

    /// Checks `d >= 4 d'` and that all prefix pairs are farther apart than `d'`.
    pub fn verify(&self) -> Result<(), HardDistError> {
        if self.d_prime == 0 {
            return Err(HardDistError::ZeroSubcube);
        }
        if self.d < 4 * self.d_prime {
            return Err(HardDistError::DimensionTooSmall {
                d: self.d,
                d_prime: self.d_prime,
            });
        }
        for (i, a) in self.prefixes.iter().enumerate() {
            for (j, b) in self.prefixes.iter().enumerate().skip(i + 1) {
                if hamming(a, b)? <= self.d_prime {
                    return Err(HardDistError::PrefixesTooClose(i, j));
                }
            }
        }
        Ok(())
    }
}

fn close_pairs(prefixes: &[Point], d_prime: u32) -> usize {
    let mut count = 0;
    for (i, a) in prefixes.iter().enumerate() {
        for b in &prefixes[i + 1..] {
            if hamming(a, b).map_or(true, |dist| dist <= d_prime) {
                count += 1;
            }
        }
    }
    count
}

/// Draws `k` uniform prefixes at a time until every pair is farther apart than
/// `d'`, then verifies the result.
pub fn build_prefixes(
    d: u32,
    d_prime: u32,
    k: usize,
    seed: u64,
    max_attempts: u32,
) -> Result<SubcubeFamily, HardDistError> {
    if d_prime == 0 {
        return Err(HardDistError::ZeroSubcube);
    }
    if d < 4 * d_prime {
        return Err(HardDistError::DimensionTooSmall { d, d_prime });
    }
    if k == 0 {
        return Err(HardDistError::NoSubcubes);
    }
    let len = d - d_prime;
    let mut failing_pairs = 0;
    for attempt in 0..max_attempts {
        let mut rng = rng_for(derive_seed(seed, streams::PREFIXES, u64::from(attempt)));
        let prefixes = (0..k)
            .map(|_| Point::random(len, &mut rng))
            .collect::<Result<Vec<_>, _>>()?;
        failing_pairs = close_pairs(&prefixes, d_prime);
        if failing_pairs == 0 {
            let family = SubcubeFamily {
                d,
                d_prime,
                prefixes,
            };
            family.verify()?;
            return Ok(family);
        }
    }
    Err(HardDistError::AttemptsExhausted {
        attempts: max_attempts,
        failing_pairs,
        k,
    })
}

/// Epoch sizes `n_i = beta^i * floor`; epoch 0 is the most recent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochPlan {
    pub beta: u64,
    pub floor: u64,
    pub k: usize,
    pub sizes: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochPlanParams {
    pub n_total: u64,
    pub client_bits: u64,
    pub word_bits: u32,
    pub update_probes: u64,
    pub floor_override: Option<u64>,
    pub beta_override: Option<u64>,
}

/// `floor = max(ceil(sqrt n), m^2)` and `beta = (w t_u)^2` unless overridden;
/// `k` is the largest count whose sizes sum to at most `n_total`.
pub fn epoch_plan(params: &EpochPlanParams) -> Result<EpochPlan, HardDistError> {
    let floor = params.floor_override.unwrap_or_else(|| {
        let root = (params.n_total as f64).sqrt().ceil() as u64;
        root.max(params.client_bits.saturating_mul(params.client_bits))
    });
    let beta = params.beta_override.unwrap_or_else(|| {
        let wt = u64::from(params.word_bits).saturating_mul(params.update_probes);
        wt.saturating_mul(wt)
    });
    if beta < 2 {
        return Err(HardDistError::BetaTooSmall(beta));
    }
    if floor == 0 || floor > params.n_total {
        return Err(HardDistError::NoEpochFits {
            floor,
            n_total: params.n_total,
        });
    }
    let mut sizes = Vec::new();
    let mut size = floor;
    let mut total = 0u64;
    while let Some(next_total) = total.checked_add(size).filter(|&t| t <= params.n_total) {
        total = next_total;
        sizes.push(size);
        match size.checked_mul(beta) {
            Some(s) => size = s,
            None => break,
        }
    }
    Ok(EpochPlan {
        beta,
        floor,
        k: sizes.len(),
        sizes,
    })
}

impl EpochPlan {
    pub fn total(&self) -> u64 {
        self.sizes.iter().sum()
    }

    /// Epoch owning update `op` when updates run oldest epoch first.
    pub fn epoch_of_op(&self, op: u64) -> Option<usize> {
        let mut start = 0;
        for i in (0..self.k).rev() {
            let end = start + self.sizes[i];
            if op < end {
                return Some(i);
            }
            start = end;
        }
        None
    }

    pub fn size(&self, i: usize) -> Result<u64, HardDistError> {
        self.sizes
            .get(i)
            .copied()
            .ok_or(HardDistError::EpochOutOfRange {
                index: i,
                k: self.k,
            })
    }
}

/// `n_i` points of subcube `i`, each the prefix followed by a uniform suffix.
/// Duplicates are allowed.
pub fn sample_epoch_updates(
    family: &SubcubeFamily,
    plan: &EpochPlan,
    i: usize,
    seed: u64,
) -> Result<Vec<Point>, HardDistError> {
    let n = plan.size(i)?;
    if i >= family.k() {
        return Err(HardDistError::EpochOutOfRange {
            index: i,
            k: family.k(),
        });
    }
    let mut rng = rng_for(seed);
    (0..n)
        .map(|_| Ok(family.point(i, &Point::random(family.d_prime, &mut rng)?)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochUpdates {
    pub index: usize,
    pub points: Vec<Point>,
}

/// All updates of one hard instance, listed in execution order (oldest epoch
/// first).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateScript {
    pub d: u32,
    pub d_prime: u32,
    pub prefixes: Vec<Point>,
    pub epochs: Vec<EpochUpdates>,
}

impl UpdateScript {
    pub fn sample(
        family: &SubcubeFamily,
        plan: &EpochPlan,
        seed: u64,
    ) -> Result<Self, HardDistError> {
        let k = plan.k.min(family.k());
        let epochs = (0..k)
            .rev()
            .map(|i| {
                let points = sample_epoch_updates(
                    family,
                    plan,
                    i,
                    derive_seed(seed, streams::EPOCH_UPDATES, i as u64),
                )?;
                Ok(EpochUpdates { index: i, points })
            })
            .collect::<Result<Vec<_>, HardDistError>>()?;
        Ok(Self {
            d: family.d,
            d_prime: family.d_prime,
            prefixes: family.prefixes.clone(),
            epochs,
        })
    }

    /// `(epoch, point)` pairs in execution order.
    pub fn inserts(&self) -> impl Iterator<Item = (usize, &Point)> {
        self.epochs
            .iter()
            .flat_map(|e| e.points.iter().map(move |p| (e.index, p)))
    }

    pub fn len(&self) -> usize {
        self.epochs.iter().map(|e| e.points.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn epoch_points(&self, i: usize) -> Option<&[Point]> {
        self.epochs
            .iter()
            .find(|e| e.index == i)
            .map(|e| e.points.as_slice())
    }
}

/// A point whose prefix matches no subcube of the family.
pub fn outside_query(family: &SubcubeFamily, seed: u64) -> Result<Point, HardDistError> {
    let len = family.prefix_len();
    let used: BTreeSet<&Point> = family.prefixes.iter().collect();
    if len < 64 && (1u64 << len) <= used.len() as u64 {
        return Err(HardDistError::NoUnusedPrefix);
    }
    let mut rng = rng_for(derive_seed(seed, streams::OUTSIDE_QUERY, 0));
    let prefix = if len <= 20 {
        let free: Vec<u64> = (0..1u64 << len)
            .filter(|&v| !used.contains(&Point::from_u64(v, len).expect("fits")))
            .collect();
        Point::from_u64(free[rng.gen_range(0..free.len())], len)?
    } else {
        loop {
            let candidate = Point::random(len, &mut rng)?;
            if !used.contains(&candidate) {
                break candidate;
            }
        }
    };
    Ok(Point::concat(
        &prefix,
        &Point::random(family.d_prime, &mut rng)?,
    ))
}

/// Smallest pairwise Hamming distance.
pub fn min_pairwise_distance(points: &[Point]) -> Result<u32, HardDistError> {
    if points.len() < 2 {
        return Err(HardDistError::TooFewPoints);
    }
    let mut best = u32::MAX;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.min(hamming(a, b)?);
        }
    }
    Ok(best)
}
