//! Hamming-cube geometry and `(c, r)`-approximate-near-neighbor semantics.
//!
//! [`ann_oracle`] is a brute-force reference and [`answer_valid`] checks any
//! answer against the problem definition. An answer of `None` stands for ⊥.

mod cube;
mod point;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use cube::{
    exhaustive_min_expansion, measure_expansion, min_expansion_table, neighborhood, CubeSet,
    ExpansionParams, MAX_ENUM_DIM, MAX_EXHAUSTIVE_DIM,
};
pub use point::{hamming, Point, PointError};

/// A query result; `None` is ⊥.
pub type Answer = Option<Point>;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum AnnError {
    #[error(transparent)]
    Point(#[from] PointError),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(u32, u32),
    #[error("dimension {dim} exceeds enumeration limit {max}")]
    DimensionTooLarge { dim: u32, max: u32 },
    #[error("set of size {size} does not fit in a cube of {vertices} vertices")]
    SetTooLarge { size: u32, vertices: u32 },
    #[error("epsilon {0} outside (0, 1)")]
    InvalidEpsilon(f64),
    #[error("invalid ANN parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnParams {
    pub d: u32,
    pub r: u32,
    pub c: f64,
}

impl AnnParams {
    pub fn new(d: u32, r: u32, c: f64) -> Result<Self, AnnError> {
        let params = Self { d, r, c };
        params.validate()?;
        Ok(params)
    }

    /// `r = round(0.01 d')` with `c r <= 0.24 d'`, the regime where answers
    /// inside one subcube of the hard instance are unique with high probability.
    pub fn for_subcube(d: u32, d_prime: u32, c: f64) -> Result<Self, AnnError> {
        let r = (0.01 * f64::from(d_prime)).round() as u32;
        let params = Self::new(d, r, c)?;
        if c * f64::from(r) > 0.24 * f64::from(d_prime) {
            return Err(AnnError::InvalidParams(format!(
                "c*r = {} exceeds 0.24*d' = {}",
                c * f64::from(r),
                0.24 * f64::from(d_prime)
            )));
        }
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), AnnError> {
        if self.d == 0 {
            return Err(AnnError::InvalidParams("d must be positive".into()));
        }
        if !(self.c >= 1.0) {
            return Err(AnnError::InvalidParams(format!(
                "c = {} must be at least 1",
                self.c
            )));
        }
        if self.c * f64::from(self.r) > f64::from(self.d) {
            return Err(AnnError::InvalidParams(format!(
                "c*r = {} exceeds d = {}",
                self.c * f64::from(self.r),
                self.d
            )));
        }
        Ok(())
    }

    pub fn within_cr(&self, distance: u32) -> bool {
        f64::from(distance) <= self.c * f64::from(self.r)
    }
}

/// The online dataset: a duplicate-free set of equal-dimension points.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataSet {
    dim: u32,
    points: BTreeSet<Point>,
}

impl DataSet {
    pub fn new(dim: u32) -> Self {
        Self {
            dim,
            points: BTreeSet::new(),
        }
    }

    pub fn from_points<I: IntoIterator<Item = Point>>(
        dim: u32,
        points: I,
    ) -> Result<Self, AnnError> {
        let mut set = Self::new(dim);
        for p in points {
            set.insert(p)?;
        }
        Ok(set)
    }

    /// Returns `false` if the point was already present (the insert is ignored).
    pub fn insert(&mut self, p: Point) -> Result<bool, AnnError> {
        if p.dim() != self.dim {
            return Err(AnnError::DimensionMismatch(p.dim(), self.dim));
        }
        Ok(self.points.insert(p))
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.points.contains(p)
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Point> {
        self.points.iter()
    }
}

/// Nearest candidate to `q`, ties going to the lexicographically smaller
/// point, together with its distance.
pub fn nearest<'a, I>(candidates: I, q: &Point) -> Option<(&'a Point, u32)>
where
    I: IntoIterator<Item = &'a Point>,
{
    let mut best: Option<(&Point, u32)> = None;
    for p in candidates {
        let Ok(dist) = hamming(p, q) else { continue };
        best = match best {
            Some((b, bd)) if bd < dist || (bd == dist && b <= p) => Some((b, bd)),
            _ => Some((p, dist)),
        };
    }
    best
}

/// Brute-force reference answer: the nearest point of `set` if it lies within
/// `r`, else ⊥.
pub fn ann_oracle(set: &DataSet, q: &Point, params: &AnnParams) -> Answer {
    match nearest(set.iter(), q) {
        Some((p, dist)) if dist <= params.r => Some(p.clone()),
        _ => None,
    }
}

/// Whether `answer` is allowed by the problem definition.
///
/// A unique point within `r` forces a member of `set` within `c r`; no point
/// within `r` forces ⊥. When several points lie within `r` the definition
/// makes no demand, and either ⊥ or a member within `c r` is accepted.
pub fn answer_valid(set: &DataSet, q: &Point, params: &AnnParams, answer: Option<&Point>) -> bool {
    if q.dim() != set.dim() {
        return false;
    }
    let near = set
        .iter()
        .filter(|p| hamming(p, q).is_ok_and(|d| d <= params.r))
        .take(2)
        .count();
    let member_within_cr =
        |p: &Point| set.contains(p) && hamming(p, q).is_ok_and(|d| params.within_cr(d));
    match (near, answer) {
        (0, a) => a.is_none(),
        (1, Some(p)) => member_within_cr(p),
        (1, None) => false,
        (_, Some(p)) => member_within_cr(p),
        (_, None) => true,
    }
}

/// Merges two partial answers for the same query: the closer one wins, ties go
/// to the lexicographically smaller point, and ⊥ is the identity.
pub fn combine_answers(q: &Point, a: Answer, b: Answer) -> Answer {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => {
            let da = hamming(&a, q).unwrap_or(u32::MAX);
            let db = hamming(&b, q).unwrap_or(u32::MAX);
            if da < db || (da == db && a <= b) {
                Some(a)
            } else {
                Some(b)
            }
        }
    }
}
