use serde::{Deserialize, Serialize};

use super::{check_cell_width, decode_item, encode_item, Item, StaticStructure, StructureError};
use crate::ann::{combine_answers, hamming, AnnParams, Answer, Point};
use crate::machine::{Address, Machine};

/// One point per cell, written consecutively and always scanned in full, so
/// both traces depend only on the number of items.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearScan {
    pub params: AnnParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearKey {
    pub base: Address,
    pub len: u64,
    pub dim: u32,
}

impl LinearScan {
    pub fn new(params: AnnParams) -> Self {
        Self { params }
    }

    pub fn dim(&self) -> u32 {
        self.params.d
    }
}

impl StaticStructure for LinearScan {
    type Key = LinearKey;

    fn preprocess(
        &self,
        machine: &mut Machine,
        base: Address,
        items: &[Item],
    ) -> Result<LinearKey, StructureError> {
        check_cell_width(self.dim(), machine)?;
        let len = items.len() as u64;
        let end = base.checked_add(len).ok_or(StructureError::OutOfMemory {
            needed: u64::MAX,
            available: machine.cell_count(),
        })?;
        if end > machine.cell_count() {
            return Err(StructureError::OutOfMemory {
                needed: end,
                available: machine.cell_count(),
            });
        }
        for item in items {
            if let Item::Real(p) = item {
                if p.dim() != self.dim() {
                    return Err(StructureError::DimensionMismatch {
                        expected: self.dim(),
                        found: p.dim(),
                    });
                }
            }
        }
        for (offset, item) in items.iter().enumerate() {
            machine.write(base + offset as u64, encode_item(item))?;
        }
        Ok(LinearKey {
            base,
            len,
            dim: self.dim(),
        })
    }

    fn query(
        &self,
        machine: &mut Machine,
        key: &LinearKey,
        q: &Point,
    ) -> Result<Answer, StructureError> {
        if key.dim != self.dim() || key.base.saturating_add(key.len) > machine.cell_count() {
            return Err(StructureError::InvalidHandle);
        }
        if q.dim() != self.dim() {
            return Err(StructureError::DimensionMismatch {
                expected: self.dim(),
                found: q.dim(),
            });
        }
        let mut best: Answer = None;
        for address in key.base..key.base + key.len {
            let word = machine.read(address)?;
            if let Some(p) = decode_item(word, key.dim) {
                if hamming(&p, q)? <= self.params.r {
                    best = combine_answers(q, best, Some(p));
                }
            }
        }
        Ok(best)
    }

    fn combine(&self, q: &Point, a: Answer, b: Answer) -> Answer {
        combine_answers(q, a, b)
    }

    fn storage_cells(&self, n: u64) -> u64 {
        n
    }

    fn preprocess_probes(&self, n: u64) -> u64 {
        n
    }

    fn query_probes(&self, n: u64) -> u64 {
        n
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ann::{ann_oracle, answer_valid, DataSet};

    fn scan() -> LinearScan {
        LinearScan::new(AnnParams::new(8, 1, 2.0).unwrap())
    }

    fn items(values: &[u64]) -> Vec<Item> {
        values
            .iter()
            .map(|&v| Item::Real(Point::from_u64(v, 8).unwrap()))
            .collect()
    }

    fn addresses(m: &Machine, op: usize) -> Vec<u64> {
        m.adversary_view().operations[op].addresses().collect()
    }

    #[test]
    fn preprocess_writes_consecutive_cells() {
        let mut m = Machine::new(32, 16, 0, 1).unwrap();
        m.begin_operation("build").unwrap();
        let key = scan()
            .preprocess(&mut m, 16, &items(&[1, 2, 3, 4]))
            .unwrap();
        m.end_operation().unwrap();
        assert_eq!(addresses(&m, 0), vec![16, 17, 18, 19]);
        assert_eq!(
            key,
            LinearKey {
                base: 16,
                len: 4,
                dim: 8
            }
        );
    }

    #[test]
    fn preprocess_trace_ignores_contents() {
        let run = |vals: &[u64]| {
            let mut m = Machine::new(32, 16, 0, 1).unwrap();
            m.begin_operation("build").unwrap();
            scan().preprocess(&mut m, 16, &items(vals)).unwrap();
            m.end_operation().unwrap();
            m.into_view()
        };
        assert_eq!(run(&[1, 2, 3, 4]), run(&[200, 9, 77, 0]));
    }

    #[test]
    fn empty_preprocess_is_silent() {
        let mut m = Machine::new(4, 16, 0, 1).unwrap();
        m.begin_operation("build").unwrap();
        scan().preprocess(&mut m, 0, &[]).unwrap();
        m.end_operation().unwrap();
        assert_eq!(m.adversary_view().total_probes(), 0);
    }

    #[test]
    fn preprocess_errors() {
        let mut m = Machine::new(4, 16, 0, 1).unwrap();
        m.begin_operation("build").unwrap();
        assert_eq!(
            scan()
                .preprocess(&mut m, 2, &items(&[1, 2, 3]))
                .unwrap_err(),
            StructureError::OutOfMemory {
                needed: 5,
                available: 4
            }
        );
        let mut narrow = Machine::new(4, 8, 0, 1).unwrap();
        narrow.begin_operation("build").unwrap();
        assert_eq!(
            scan().preprocess(&mut narrow, 0, &items(&[1])).unwrap_err(),
            StructureError::DimensionExceedsWord {
                dim: 8,
                word_bits: 8
            }
        );
    }

    #[test]
    fn query_scans_everything_and_agrees_with_oracle() {
        let mut m = Machine::new(32, 16, 0, 1).unwrap();
        let vals = [0b0000_0001, 0b1111_0000, 0b1010_1010, 0b0000_0110];
        m.begin_operation("build").unwrap();
        let key = scan().preprocess(&mut m, 16, &items(&vals)).unwrap();
        m.end_operation().unwrap();
        let set =
            DataSet::from_points(8, vals.iter().map(|&v| Point::from_u64(v, 8).unwrap())).unwrap();
        let params = scan().params;
        for (i, qv) in [0b1111_0001u64, 0b0101_0101, 0b1010_1011]
            .into_iter()
            .enumerate()
        {
            let q = Point::from_u64(qv, 8).unwrap();
            m.begin_operation("query").unwrap();
            let ans = scan().query(&mut m, &key, &q).unwrap();
            m.end_operation().unwrap();
            assert_eq!(addresses(&m, i + 1), vec![16, 17, 18, 19]);
            assert_eq!(ans, ann_oracle(&set, &q, &params));
            assert!(answer_valid(&set, &q, &params, ans.as_ref()));
        }
        let near = Point::from_u64(0b1111_0001, 8).unwrap();
        m.begin_operation("query").unwrap();
        assert_eq!(
            scan().query(&mut m, &key, &near).unwrap(),
            Some(Point::from_u64(0b1111_0000, 8).unwrap())
        );
    }

    #[test]
    fn invalid_handle_is_rejected() {
        let mut m = Machine::new(8, 16, 0, 1).unwrap();
        m.begin_operation("q").unwrap();
        let q = Point::zero(8).unwrap();
        let bad = LinearKey {
            base: 6,
            len: 4,
            dim: 8,
        };
        assert_eq!(
            scan().query(&mut m, &bad, &q).unwrap_err(),
            StructureError::InvalidHandle
        );
        let wrong_dim = LinearKey {
            base: 0,
            len: 4,
            dim: 7,
        };
        assert_eq!(
            scan().query(&mut m, &wrong_dim, &q).unwrap_err(),
            StructureError::InvalidHandle
        );
    }
}
