use std::collections::BTreeSet;

use super::{check_cell_width, decode_item, encode_item, Item, QueryStructure, StructureError};
use crate::ann::{combine_answers, hamming, AnnParams, Answer, Point};
use crate::hard_dist::SubcubeFamily;
use crate::machine::{Address, Machine};

/// Leaky baseline: each subcube owns a memory region, inserts append to the
/// region of their subcube and queries scan only the filled part of it.
///
/// A query outside every subcube touches no cells and answers `None`.
#[derive(Debug, Clone)]
pub struct Bucketed {
    family: SubcubeFamily,
    params: AnnParams,
    bases: Vec<Address>,
    capacities: Vec<u64>,
    counts: Vec<u64>,
    present: BTreeSet<Point>,
}

impl Bucketed {
    /// Regions of the given capacities, one per subcube, laid out from
    /// `region_base`.
    pub fn new(
        family: SubcubeFamily,
        params: AnnParams,
        capacities: Vec<u64>,
        region_base: Address,
    ) -> Result<Self, StructureError> {
        if capacities.len() != family.k() {
            return Err(StructureError::InvalidHandle);
        }
        if params.d != family.d {
            return Err(StructureError::DimensionMismatch {
                expected: family.d,
                found: params.d,
            });
        }
        let mut bases = Vec::with_capacity(capacities.len());
        let mut next = region_base;
        for c in &capacities {
            bases.push(next);
            next += c;
        }
        let k = family.k();
        Ok(Self {
            family,
            params,
            bases,
            capacities,
            counts: vec![0; k],
            present: BTreeSet::new(),
        })
    }

    pub fn family(&self) -> &SubcubeFamily {
        &self.family
    }

    pub fn required_cells(&self) -> u64 {
        self.bases
            .last()
            .zip(self.capacities.last())
            .map_or(0, |(b, c)| b + c)
    }

    /// Cells of subcube `i`'s region, filled or not.
    pub fn region(&self, i: usize) -> std::ops::Range<Address> {
        self.bases[i]..self.bases[i] + self.capacities[i]
    }

    pub fn count(&self, i: usize) -> u64 {
        self.counts[i]
    }

    /// Appends `x` to its subcube's region in a new operation. A point already
    /// stored is ignored; the operation is still recorded, with no probes.
    pub fn insert(&mut self, machine: &mut Machine, x: &Point) -> Result<(), StructureError> {
        check_cell_width(self.family.d, machine)?;
        let i = self
            .family
            .subcube_of(x)
            .ok_or_else(|| StructureError::OutsideSubcubes(x.clone()))?;
        if self.present.contains(x) {
            machine.begin_operation("insert")?;
            machine.end_operation()?;
            return Ok(());
        }
        if self.counts[i] == self.capacities[i] {
            return Err(StructureError::CapacityExceeded {
                inserted: self.counts[i],
            });
        }
        let address = self.bases[i] + self.counts[i];
        if address >= machine.cell_count() {
            return Err(StructureError::OutOfMemory {
                needed: address + 1,
                available: machine.cell_count(),
            });
        }
        machine.begin_operation("insert")?;
        let result = machine.write(address, encode_item(&Item::Real(x.clone())));
        machine.end_operation()?;
        result?;
        self.counts[i] += 1;
        self.present.insert(x.clone());
        Ok(())
    }

    /// Answers `q` in a new operation.
    pub fn query(&self, machine: &mut Machine, q: &Point) -> Result<Answer, StructureError> {
        machine.begin_operation("query")?;
        let result = self.answer(machine, q);
        machine.end_operation()?;
        result
    }
}

impl QueryStructure for Bucketed {
    fn answer(&self, machine: &mut Machine, q: &Point) -> Result<Answer, StructureError> {
        if q.dim() != self.family.d {
            return Err(StructureError::DimensionMismatch {
                expected: self.family.d,
                found: q.dim(),
            });
        }
        let Some(i) = self.family.subcube_of(q) else {
            return Ok(None);
        };
        let mut best = None;
        for address in self.bases[i]..self.bases[i] + self.counts[i] {
            if let Some(p) = decode_item(machine.read(address)?, self.family.d) {
                if hamming(&p, q)? <= self.params.r {
                    best = combine_answers(q, best, Some(p));
                }
            }
        }
        Ok(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ann::{ann_oracle, DataSet};
    use crate::hard_dist::build_prefixes;

    fn setup() -> (Bucketed, Machine) {
        let family = build_prefixes(16, 4, 3, 7, 1000).unwrap();
        let params = AnnParams::new(16, 1, 2.0).unwrap();
        let b = Bucketed::new(family, params, vec![4, 8, 16], 0).unwrap();
        let m = Machine::new(b.required_cells(), 32, 0, 1).unwrap();
        (b, m)
    }

    #[test]
    fn inserts_append_within_their_region() {
        let (mut b, mut m) = setup();
        let p = b.family().point_from_index(1, 3).unwrap();
        let q = b.family().point_from_index(1, 9).unwrap();
        b.insert(&mut m, &p).unwrap();
        b.insert(&mut m, &q).unwrap();
        let view = m.adversary_view();
        assert_eq!(view.operations[0].addresses().collect::<Vec<_>>(), vec![4]);
        assert_eq!(view.operations[1].addresses().collect::<Vec<_>>(), vec![5]);
        assert_eq!(b.count(1), 2);
        assert_eq!(b.region(2), 12..28);
    }

    #[test]
    fn query_probes_reveal_the_subcube() {
        let (mut b, mut m) = setup();
        for s in 0..3 {
            b.insert(&mut m, &b.family().point_from_index(0, s).unwrap())
                .unwrap();
        }
        b.insert(&mut m, &b.family().point_from_index(2, 5).unwrap())
            .unwrap();
        let inside = b.family().point_from_index(0, 1).unwrap();
        assert_eq!(b.query(&mut m, &inside).unwrap(), Some(inside.clone()));
        assert_eq!(m.adversary_view().operations[4].len(), 3);
        let prefix = Point::from_u64(0, 12).unwrap();
        let outside = Point::concat(&prefix, &Point::zero(4).unwrap());
        if b.family().subcube_of(&outside).is_none() {
            assert_eq!(b.query(&mut m, &outside).unwrap(), None);
            assert_eq!(m.adversary_view().operations[5].len(), 0);
        }
    }

    #[test]
    fn answers_match_oracle_inside_subcubes() {
        let (mut b, mut m) = setup();
        let mut set = DataSet::new(16);
        for (i, s) in [(0, 1), (0, 6), (1, 2), (2, 15), (2, 14)] {
            let p = b.family().point_from_index(i, s).unwrap();
            set.insert(p.clone()).unwrap();
            b.insert(&mut m, &p).unwrap();
        }
        for i in 0..3 {
            for s in 0..16 {
                let q = b.family().point_from_index(i, s).unwrap();
                assert_eq!(
                    b.query(&mut m, &q).unwrap(),
                    ann_oracle(&set, &q, &b.params)
                );
            }
        }
    }

    #[test]
    fn rejects_bad_inserts() {
        let (mut b, mut m) = setup();
        let p = b.family().point_from_index(0, 0).unwrap();
        for s in 0..4 {
            b.insert(&mut m, &b.family().point_from_index(0, s).unwrap())
                .unwrap();
        }
        b.insert(&mut m, &p).unwrap();
        assert_eq!(
            b.insert(&mut m, &b.family().point_from_index(0, 9).unwrap())
                .unwrap_err(),
            StructureError::CapacityExceeded { inserted: 4 }
        );
        let far = b
            .family()
            .prefixes
            .iter()
            .map(|x| x.clone().flip(0))
            .find(|x| !b.family().prefixes.contains(x));
        if let Some(prefix) = far {
            let x = Point::concat(&prefix, &Point::zero(4).unwrap());
            if b.family().subcube_of(&x).is_none() {
                assert_eq!(
                    b.insert(&mut m, &x).unwrap_err(),
                    StructureError::OutsideSubcubes(x)
                );
            }
        }
    }
}
