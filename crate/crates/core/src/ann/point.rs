use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum PointError {
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(u32, u32),
    #[error("value {value:#x} does not fit in {dim} bits")]
    ValueTooWide { value: u64, dim: u32 },
    #[error("invalid bit string {0:?}")]
    BadBitString(String),
    #[error("{len} bits requested from a {dim}-dimensional point")]
    SliceTooLong { len: u32, dim: u32 },
}

/// A vertex of the `d`-dimensional Hamming cube.
///
/// Coordinates are written most-significant first: the point `1010` has
/// coordinate 0 equal to 1. Internally the bit string is stored as a
/// little-endian multi-limb integer, so numeric order equals lexicographic
/// order of the bit strings and prefixes are the high bits.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Point {
    dim: u32,
    limbs: Vec<u64>,
}

fn limb_count(dim: u32) -> usize {
    dim.div_ceil(64) as usize
}

impl Point {
    pub fn zero(dim: u32) -> Result<Self, PointError> {
        if dim == 0 {
            return Err(PointError::ZeroDimension);
        }
        Ok(Self {
            dim,
            limbs: vec![0; limb_count(dim)],
        })
    }

    pub fn from_u64(value: u64, dim: u32) -> Result<Self, PointError> {
        let mut p = Self::zero(dim)?;
        if dim < 64 && value >> dim != 0 {
            return Err(PointError::ValueTooWide { value, dim });
        }
        p.limbs[0] = value;
        Ok(p)
    }

    /// Uniform point of the given dimension.
    pub fn random<R: Rng + ?Sized>(dim: u32, rng: &mut R) -> Result<Self, PointError> {
        let mut p = Self::zero(dim)?;
        for limb in &mut p.limbs {
            *limb = rng.gen();
        }
        p.mask_top();
        Ok(p)
    }

    fn mask_top(&mut self) {
        let used = self.dim % 64;
        if used != 0 {
            let last = self.limbs.len() - 1;
            self.limbs[last] &= (1u64 << used) - 1;
        }
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    /// The point as an integer, when it fits in 64 bits.
    pub fn as_u64(&self) -> Option<u64> {
        (self.dim <= 64).then(|| self.limbs[0])
    }

    fn raw_bit(&self, bit: u32) -> bool {
        (self.limbs[(bit / 64) as usize] >> (bit % 64)) & 1 == 1
    }

    fn set_raw_bit(&mut self, bit: u32, value: bool) {
        let limb = &mut self.limbs[(bit / 64) as usize];
        let mask = 1u64 << (bit % 64);
        if value {
            *limb |= mask;
        } else {
            *limb &= !mask;
        }
    }

    /// Coordinate `i`, counted from the most significant position.
    pub fn coordinate(&self, i: u32) -> bool {
        assert!(
            i < self.dim,
            "coordinate {i} out of range for dimension {}",
            self.dim
        );
        self.raw_bit(self.dim - 1 - i)
    }

    pub fn with_coordinate(mut self, i: u32, value: bool) -> Self {
        assert!(
            i < self.dim,
            "coordinate {i} out of range for dimension {}",
            self.dim
        );
        let bit = self.dim - 1 - i;
        self.set_raw_bit(bit, value);
        self
    }

    pub fn flip(self, i: u32) -> Self {
        let v = self.coordinate(i);
        self.with_coordinate(i, !v)
    }

    /// `prefix ++ suffix`.
    pub fn concat(prefix: &Point, suffix: &Point) -> Point {
        let dim = prefix.dim + suffix.dim;
        let mut out = Point {
            dim,
            limbs: vec![0; limb_count(dim)],
        };
        for bit in 0..suffix.dim {
            if suffix.raw_bit(bit) {
                out.set_raw_bit(bit, true);
            }
        }
        for bit in 0..prefix.dim {
            if prefix.raw_bit(bit) {
                out.set_raw_bit(bit + suffix.dim, true);
            }
        }
        out
    }

    /// The first `len` coordinates.
    pub fn prefix(&self, len: u32) -> Result<Point, PointError> {
        if len > self.dim {
            return Err(PointError::SliceTooLong { len, dim: self.dim });
        }
        let mut out = Point::zero(len)?;
        let shift = self.dim - len;
        for bit in 0..len {
            if self.raw_bit(bit + shift) {
                out.set_raw_bit(bit, true);
            }
        }
        Ok(out)
    }

    /// The last `len` coordinates.
    pub fn suffix(&self, len: u32) -> Result<Point, PointError> {
        if len > self.dim {
            return Err(PointError::SliceTooLong { len, dim: self.dim });
        }
        let mut out = Point::zero(len)?;
        for bit in 0..len {
            if self.raw_bit(bit) {
                out.set_raw_bit(bit, true);
            }
        }
        Ok(out)
    }

    pub fn count_ones(&self) -> u32 {
        self.limbs.iter().map(|l| l.count_ones()).sum()
    }

    pub fn to_bit_string(&self) -> String {
        (0..self.dim)
            .map(|i| if self.coordinate(i) { '1' } else { '0' })
            .collect()
    }
}

/// Number of coordinates in which `p` and `q` differ.
pub fn hamming(p: &Point, q: &Point) -> Result<u32, PointError> {
    if p.dim != q.dim {
        return Err(PointError::DimensionMismatch(p.dim, q.dim));
    }
    Ok(p.limbs
        .iter()
        .zip(&q.limbs)
        .map(|(a, b)| (a ^ b).count_ones())
        .sum())
}

impl Ord for Point {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dim
            .cmp(&other.dim)
            .then_with(|| self.limbs.iter().rev().cmp(other.limbs.iter().rev()))
    }
}

impl PartialOrd for Point {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Point({})", self.to_bit_string())
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bit_string())
    }
}

impl FromStr for Point {
    type Err = PointError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let dim = u32::try_from(s.len()).map_err(|_| PointError::BadBitString(s.into()))?;
        let mut p = Point::zero(dim).map_err(|_| PointError::BadBitString(s.into()))?;
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => p = p.with_coordinate(i as u32, true),
                _ => return Err(PointError::BadBitString(s.into())),
            }
        }
        Ok(p)
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_bit_string())
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(s: &str) -> Point {
        s.parse().unwrap()
    }

    #[test]
    fn string_form_is_msb_first() {
        let x = Point::from_u64(0b1010, 4).unwrap();
        assert_eq!(x.to_bit_string(), "1010");
        assert!(x.coordinate(0));
        assert!(!x.coordinate(3));
        assert_eq!(p("0011").as_u64(), Some(3));
    }

    #[test]
    fn hamming_examples() {
        let x = p("1010");
        assert_eq!(hamming(&x, &x).unwrap(), 0);
        assert_eq!(hamming(&p("1010"), &p("0101")).unwrap(), 4);
        assert_eq!(hamming(&p("1100"), &p("1010")).unwrap(), 2);
        assert_eq!(
            hamming(&p("1"), &p("10")),
            Err(PointError::DimensionMismatch(1, 2))
        );
    }

    #[test]
    fn prefix_and_suffix_split_a_concat() {
        let pre = p("101100111");
        let suf = p("0110");
        let joined = Point::concat(&pre, &suf);
        assert_eq!(joined.to_bit_string(), "1011001110110");
        assert_eq!(joined.prefix(9).unwrap(), pre);
        assert_eq!(joined.suffix(4).unwrap(), suf);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(
            Point::from_u64(16, 4),
            Err(PointError::ValueTooWide { value: 16, dim: 4 })
        );
        assert!("10a".parse::<Point>().is_err());
        assert!("".parse::<Point>().is_err());
        assert_eq!(Point::zero(0), Err(PointError::ZeroDimension));
    }

    #[test]
    fn order_is_lexicographic_on_bit_strings() {
        let mut pts = [p("110"), p("001"), p("100"), p("011")];
        pts.sort();
        let s: Vec<String> = pts.iter().map(Point::to_bit_string).collect();
        assert_eq!(s, ["001", "011", "100", "110"]);
    }

    #[test]
    fn serde_uses_bit_strings() {
        let x = p("0110");
        assert_eq!(serde_json::to_string(&x).unwrap(), "\"0110\"");
        assert_eq!(serde_json::from_str::<Point>("\"0110\"").unwrap(), x);
    }

    fn wide_point(dim: u32) -> impl Strategy<Value = Point> {
        proptest::collection::vec(any::<bool>(), dim as usize).prop_map(move |bits| {
            bits.iter()
                .enumerate()
                .fold(Point::zero(dim).unwrap(), |acc, (i, &b)| {
                    acc.with_coordinate(i as u32, b)
                })
        })
    }

    proptest! {
        #[test]
        fn string_round_trip(x in wide_point(130)) {
            let back: Point = x.to_bit_string().parse().unwrap();
            prop_assert_eq!(&back, &x);
            prop_assert_eq!(back.cmp(&x), Ordering::Equal);
        }

        #[test]
        fn order_matches_string_order(a in wide_point(100), b in wide_point(100)) {
            prop_assert_eq!(a.cmp(&b), a.to_bit_string().cmp(&b.to_bit_string()));
        }
    }
}
