//! Neighborhoods of vertex sets in small Hamming cubes.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{AnnError, Point};

/// Largest dimension for which neighborhoods are computed by enumeration.
pub const MAX_ENUM_DIM: u32 = 24;
/// Largest dimension for the exhaustive minimum-expansion search.
pub const MAX_EXHAUSTIVE_DIM: u32 = 4;

/// A subset of `{0,1}^d` as a bitmap over vertex indices, `d <= 24`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CubeSet {
    dim: u32,
    bits: Vec<u64>,
}

impl CubeSet {
    pub fn empty(dim: u32) -> Result<Self, AnnError> {
        if dim == 0 || dim > MAX_ENUM_DIM {
            return Err(AnnError::DimensionTooLarge {
                dim,
                max: MAX_ENUM_DIM,
            });
        }
        let size = 1usize << dim;
        Ok(Self {
            dim,
            bits: vec![0; size.div_ceil(64)],
        })
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn insert(&mut self, vertex: u32) {
        debug_assert!(u64::from(vertex) < 1u64 << self.dim);
        self.bits[(vertex / 64) as usize] |= 1 << (vertex % 64);
    }

    pub fn contains(&self, vertex: u32) -> bool {
        u64::from(vertex) < 1u64 << self.dim
            && (self.bits[(vertex / 64) as usize] >> (vertex % 64)) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.bits.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let tz = w.trailing_zeros();
                w &= w - 1;
                Some(i as u32 * 64 + tz)
            })
        })
    }

    pub fn is_subset(&self, other: &CubeSet) -> bool {
        self.dim == other.dim && self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }

    /// Raw bitmap words, vertex `v` at bit `v % 64` of word `v / 64`.
    pub fn words(&self) -> &[u64] {
        &self.bits
    }

    /// All vertices within distance `r` of some member, by a multi-source
    /// breadth-first search truncated at depth `r`.
    pub fn neighborhood(&self, r: u32) -> CubeSet {
        let mut seen = self.clone();
        let mut frontier: Vec<u32> = self.iter().collect();
        for _ in 0..r.min(self.dim) {
            let mut next = Vec::new();
            for &v in &frontier {
                for b in 0..self.dim {
                    let u = v ^ (1 << b);
                    if !seen.contains(u) {
                        seen.insert(u);
                        next.push(u);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        seen
    }

    pub fn from_points<'a, I: IntoIterator<Item = &'a Point>>(
        dim: u32,
        points: I,
    ) -> Result<Self, AnnError> {
        let mut set = CubeSet::empty(dim)?;
        for p in points {
            if p.dim() != dim {
                return Err(AnnError::DimensionMismatch(p.dim(), dim));
            }
            set.insert(p.as_u64().expect("dim <= 24") as u32);
        }
        Ok(set)
    }

    pub fn to_points(&self) -> BTreeSet<Point> {
        self.iter()
            .map(|v| Point::from_u64(u64::from(v), self.dim).expect("vertex fits"))
            .collect()
    }
}

/// `Γ_r(V)`: every vertex of `{0,1}^d` within distance `r` of some member of `V`.
pub fn neighborhood(v: &BTreeSet<Point>, r: u32, d: u32) -> Result<BTreeSet<Point>, AnnError> {
    Ok(CubeSet::from_points(d, v)?.neighborhood(r).to_points())
}

/// Minimum of `|Γ_r(V)|` over every `V ⊆ {0,1}^d` with `|V| = set_size`, by
/// trying all of them. Only for `d <= 4`.
pub fn exhaustive_min_expansion(d: u32, set_size: u32, r: u32) -> Result<u32, AnnError> {
    let table = min_expansion_table(d, r)?;
    table
        .get(set_size as usize)
        .copied()
        .ok_or(AnnError::SetTooLarge {
            size: set_size,
            vertices: 1 << d,
        })
}

/// [`exhaustive_min_expansion`] for every set size `0..=2^d` in one pass.
pub fn min_expansion_table(d: u32, r: u32) -> Result<Vec<u32>, AnnError> {
    if d == 0 || d > MAX_EXHAUSTIVE_DIM {
        return Err(AnnError::DimensionTooLarge {
            dim: d,
            max: MAX_EXHAUSTIVE_DIM,
        });
    }
    let vertices = 1u32 << d;
    let mut best = vec![u32::MAX; vertices as usize + 1];
    best[0] = 0;
    for mask in 1u64..(1u64 << vertices) {
        let mut set = CubeSet::empty(d)?;
        set.bits[0] = mask;
        let size = mask.count_ones() as usize;
        best[size] = best[size].min(set.neighborhood(r).len() as u32);
    }
    Ok(best)
}

/// Measured expansion of random vertex sets at radius `epsilon * d`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExpansionParams {
    pub d: u32,
    pub epsilon: f64,
    /// Smallest observed `|Γ_r(V)| / |V|`.
    pub phi_estimate: f64,
}

impl ExpansionParams {
    pub fn radius(&self) -> u32 {
        (self.epsilon * f64::from(self.d)).round() as u32
    }
}

/// Samples `trials` uniform sets of `set_size` vertices and records the
/// smallest expansion ratio seen.
pub fn measure_expansion<R: Rng + ?Sized>(
    d: u32,
    epsilon: f64,
    set_size: usize,
    trials: usize,
    rng: &mut R,
) -> Result<ExpansionParams, AnnError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(AnnError::InvalidEpsilon(epsilon));
    }
    let vertices = 1usize << d.min(MAX_ENUM_DIM);
    if set_size == 0 || set_size > vertices {
        return Err(AnnError::SetTooLarge {
            size: set_size as u32,
            vertices: vertices as u32,
        });
    }
    let mut params = ExpansionParams {
        d,
        epsilon,
        phi_estimate: f64::INFINITY,
    };
    let r = params.radius();
    for _ in 0..trials.max(1) {
        let mut set = CubeSet::empty(d)?;
        for v in sample(rng, vertices, set_size).iter() {
            set.insert(v as u32);
        }
        let ratio = set.neighborhood(r).len() as f64 / set_size as f64;
        params.phi_estimate = params.phi_estimate.min(ratio);
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn set(d: u32, items: &[&str]) -> BTreeSet<Point> {
        let s: BTreeSet<Point> = items.iter().map(|s| s.parse().unwrap()).collect();
        assert!(s.iter().all(|p| p.dim() == d));
        s
    }

    fn ball_volume(d: u32, r: u32) -> u32 {
        (0..=r.min(d)).map(|k| binom(d, k)).sum()
    }

    fn binom(n: u32, k: u32) -> u32 {
        (0..k).fold(1u64, |acc, i| acc * u64::from(n - i) / u64::from(i + 1)) as u32
    }

    #[test]
    fn radius_one_ball_in_three_cube() {
        let got = neighborhood(&set(3, &["000"]), 1, 3).unwrap();
        assert_eq!(got, set(3, &["000", "001", "010", "100"]));
    }

    #[test]
    fn zero_radius_is_identity() {
        let v = set(5, &["01101", "11111", "00000"]);
        assert_eq!(neighborhood(&v, 0, 5).unwrap(), v);
    }

    #[test]
    fn antipodal_balls_cover_three_cube() {
        assert_eq!(
            neighborhood(&set(3, &["000", "111"]), 1, 3).unwrap().len(),
            8
        );
    }

    #[test]
    fn too_large_dimension_is_rejected() {
        assert!(CubeSet::empty(25).is_err());
        assert!(exhaustive_min_expansion(5, 1, 1).is_err());
    }

    #[test]
    fn exhaustive_minimum_examples() {
        assert_eq!(exhaustive_min_expansion(3, 1, 1).unwrap(), 4);
        assert_eq!(exhaustive_min_expansion(2, 4, 1).unwrap(), 4);
        assert_eq!(exhaustive_min_expansion(4, 1, 2).unwrap(), 11);
        assert_eq!(exhaustive_min_expansion(4, 0, 2).unwrap(), 0);
        assert!(exhaustive_min_expansion(2, 5, 1).is_err());
    }

    #[test]
    fn single_points_expand_to_ball_volume() {
        for d in 1..=4 {
            for r in 0..=d {
                assert_eq!(
                    exhaustive_min_expansion(d, 1, r).unwrap(),
                    ball_volume(d, r)
                );
            }
        }
    }

    #[test]
    fn measured_expansion_is_at_least_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let e = measure_expansion(12, 0.1, 8, 20, &mut rng).unwrap();
        assert_eq!(e.radius(), 1);
        assert!(e.phi_estimate >= 1.0);
        assert!(measure_expansion(12, 1.5, 8, 1, &mut rng).is_err());
    }

    fn cube_set(d: u32) -> impl Strategy<Value = CubeSet> {
        proptest::collection::vec(0u32..(1 << d), 0..12).prop_map(move |vs| {
            let mut s = CubeSet::empty(d).unwrap();
            vs.into_iter().for_each(|v| s.insert(v));
            s
        })
    }

    proptest! {
        #[test]
        fn neighborhood_is_monotone(a in cube_set(8), b in cube_set(8), r in 0u32..4, extra in 0u32..3) {
            let mut union = a.clone();
            b.iter().for_each(|v| union.insert(v));
            let na = a.neighborhood(r);
            prop_assert!(a.is_subset(&na));
            prop_assert!(na.is_subset(&union.neighborhood(r)));
            prop_assert!(na.is_subset(&a.neighborhood(r + extra)));
        }

        #[test]
        fn neighborhood_matches_brute_force(a in cube_set(6), r in 0u32..4) {
            let got = a.neighborhood(r);
            for x in 0u32..64 {
                let expect = a.iter().any(|v| (v ^ x).count_ones() <= r);
                prop_assert_eq!(got.contains(x), expect);
            }
        }

        #[test]
        fn random_sets_respect_exhaustive_floor(vs in proptest::collection::btree_set(0u32..16, 1..=16), r in 1u32..=2) {
            let mut s = CubeSet::empty(4).unwrap();
            vs.iter().for_each(|&v| s.insert(v));
            static TABLES: std::sync::OnceLock<[Vec<u32>; 2]> = std::sync::OnceLock::new();
            let tables = TABLES.get_or_init(|| [min_expansion_table(4, 1).unwrap(), min_expansion_table(4, 2).unwrap()]);
            let floor = tables[r as usize - 1][vs.len()];
            prop_assert!(s.neighborhood(r).len() as u32 >= floor);
        }
    }
}
