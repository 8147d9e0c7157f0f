use std::collections::BTreeSet;

use super::cost::{OpCost, OpKind};
use super::{Item, QueryStructure, StaticStructure, StructureError};
use crate::ann::{Answer, Point};
use crate::machine::{Address, Machine};

/// Stand-in for the item encryption key. Contents privacy is outside the
/// model, so encryption is the identity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EncryptionKey;

impl EncryptionKey {
    pub fn encrypt(&self, items: Vec<Item>) -> Vec<Item> {
        items
    }
}

/// An occupied level: the static structure's key and the items it was built
/// from (level `k` always holds `2^(k-1)` of them).
#[derive(Debug, Clone)]
pub struct Level<K> {
    pub key: K,
    pub items: Vec<Item>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Op {
    Insert(Point),
    Query(Point),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OpOutcome {
    Inserted,
    Answer(Answer),
}

/// Logarithmic-method dynamization of an oblivious static structure.
///
/// Level `k` (1-based) has room for `2^(k-1)` items in a fixed memory region.
/// An insert rebuilds the lowest empty level from the new item and everything
/// below it, then empties the lower levels, so occupancy follows the binary
/// representation of the insert count. [`Dynamized::operate`] runs a query
/// phase and then an insert phase for every operation, with a dummy query or
/// a filler insert standing in for the half that was not requested.
#[derive(Debug, Clone)]
pub struct Dynamized<S: StaticStructure> {
    base: S,
    dim: u32,
    region_base: Address,
    n_max: u64,
    levels: Vec<Option<Level<S::Key>>>,
    inserted: u64,
    present: BTreeSet<Point>,
    dummy: Point,
    enc: EncryptionKey,
    log: Vec<OpCost>,
}

fn level_count(n_max: u64) -> usize {
    if n_max <= 1 {
        0
    } else {
        (64 - (n_max - 1).leading_zeros()) as usize
    }
}

impl<S: StaticStructure> Dynamized<S> {
    /// Empty structure for at most `n_max - 1` inserts, with `ceil(log2 n_max)`
    /// levels laid out from `region_base`. Touches no cells.
    pub fn new(
        base: S,
        dim: u32,
        n_max: u64,
        region_base: Address,
    ) -> Result<Self, StructureError> {
        Ok(Self {
            base,
            dim,
            region_base,
            n_max,
            levels: vec![None; level_count(n_max)],
            inserted: 0,
            present: BTreeSet::new(),
            dummy: Point::zero(dim)?,
            enc: EncryptionKey,
            log: Vec::new(),
        })
    }

    pub fn base(&self) -> &S {
        &self.base
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn n_max(&self) -> u64 {
        self.n_max
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    /// Items (real or filler) inserted so far.
    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    pub fn level_capacity(k: usize) -> u64 {
        1u64 << (k - 1)
    }

    /// First cell of level `k`'s region.
    pub fn level_base(&self, k: usize) -> Address {
        self.region_base
            + (1..k)
                .map(|j| self.base.storage_cells(Self::level_capacity(j)))
                .sum::<u64>()
    }

    /// Cells the machine needs so that every level fits.
    pub fn required_cells(&self) -> u64 {
        self.level_base(self.levels.len() + 1)
    }

    pub fn occupied_levels(&self) -> Vec<usize> {
        self.levels
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.as_ref().map(|_| i + 1))
            .collect()
    }

    pub fn level(&self, k: usize) -> Option<&Level<S::Key>> {
        self.levels.get(k.checked_sub(1)?)?.as_ref()
    }

    /// Real points currently stored.
    pub fn points(&self) -> &BTreeSet<Point> {
        &self.present
    }

    pub fn cost_log(&self) -> &[OpCost] {
        &self.log
    }

    fn check_dim(&self, p: &Point) -> Result<(), StructureError> {
        if p.dim() != self.dim {
            Err(StructureError::DimensionMismatch {
                expected: self.dim,
                found: p.dim(),
            })
        } else {
            Ok(())
        }
    }

    /// Queries every occupied level and folds the answers. Needs an open
    /// operation.
    pub fn query_phase(&self, machine: &mut Machine, q: &Point) -> Result<Answer, StructureError> {
        self.check_dim(q)?;
        let mut answer = None;
        for level in self.levels.iter().flatten() {
            let partial = self.base.query(machine, &level.key, q)?;
            answer = self.base.combine(q, answer, partial);
        }
        Ok(answer)
    }

    /// Inserts one item and returns the level that was rebuilt. Needs an open
    /// operation. A point already present is replaced by a filler.
    pub fn insert_phase(
        &mut self,
        machine: &mut Machine,
        item: Item,
    ) -> Result<usize, StructureError> {
        let item = match item {
            Item::Real(p) => {
                self.check_dim(&p)?;
                if self.present.contains(&p) {
                    Item::Null
                } else {
                    Item::Real(p)
                }
            }
            Item::Null => Item::Null,
        };
        let Some(slot) = self.levels.iter().position(Option::is_none) else {
            return Err(StructureError::CapacityExceeded {
                inserted: self.inserted,
            });
        };
        let k = slot + 1;
        let mut items = Vec::with_capacity(Self::level_capacity(k) as usize);
        items.push(item);
        for level in &self.levels[..slot] {
            items.extend(
                level
                    .as_ref()
                    .expect("levels below the first empty one are full")
                    .items
                    .iter()
                    .cloned(),
            );
        }
        let items = self.enc.encrypt(items);
        let key = self.base.preprocess(machine, self.level_base(k), &items)?;
        if let Some(p) = items[0].point() {
            self.present.insert(p.clone());
        }
        self.levels[slot] = Some(Level { key, items });
        for level in &mut self.levels[..slot] {
            *level = None;
        }
        self.inserted += 1;
        Ok(k)
    }

    fn run<T>(
        &mut self,
        machine: &mut Machine,
        label: &str,
        kind: OpKind,
        body: impl FnOnce(&mut Self, &mut Machine, &mut OpCost) -> Result<T, StructureError>,
    ) -> Result<T, StructureError> {
        machine.begin_operation(label)?;
        let mut cost = OpCost {
            kind,
            query_probes: 0,
            insert_probes: 0,
            rebuilt_level: None,
        };
        let result = body(self, machine, &mut cost);
        machine.end_operation()?;
        let value = result?;
        self.log.push(cost);
        Ok(value)
    }

    /// One oblivious operation: query phase, then insert phase, in a single
    /// machine operation labelled `op` whatever its kind.
    pub fn operate(&mut self, machine: &mut Machine, op: Op) -> Result<OpOutcome, StructureError> {
        let kind = match op {
            Op::Insert(_) => OpKind::Insert,
            Op::Query(_) => OpKind::Query,
        };
        self.run(machine, "op", kind, |this, machine, cost| {
            let (q, item) = match &op {
                Op::Insert(x) => (this.dummy.clone(), Item::Real(x.clone())),
                Op::Query(q) => (q.clone(), Item::Null),
            };
            let answer = this.query_phase(machine, &q)?;
            let mid = machine.open_probe_count().unwrap_or(0);
            cost.query_probes = mid as u64;
            let level = this.insert_phase(machine, item)?;
            cost.insert_probes = (machine.open_probe_count().unwrap_or(0) - mid) as u64;
            cost.rebuilt_level = Some(level);
            Ok(match op {
                Op::Insert(_) => OpOutcome::Inserted,
                Op::Query(_) => OpOutcome::Answer(answer),
            })
        })
    }

    /// A bare insert in its own operation, without the fake query.
    pub fn insert(&mut self, machine: &mut Machine, x: Point) -> Result<(), StructureError> {
        self.run(machine, "insert", OpKind::Insert, |this, machine, cost| {
            let level = this.insert_phase(machine, Item::Real(x))?;
            cost.insert_probes = machine.open_probe_count().unwrap_or(0) as u64;
            cost.rebuilt_level = Some(level);
            Ok(())
        })
    }

    /// A bare query in its own operation, without the filler insert.
    pub fn query(&mut self, machine: &mut Machine, q: &Point) -> Result<Answer, StructureError> {
        self.run(machine, "query", OpKind::Query, |this, machine, cost| {
            let answer = this.query_phase(machine, q)?;
            cost.query_probes = machine.open_probe_count().unwrap_or(0) as u64;
            Ok(answer)
        })
    }
}

impl<S: StaticStructure> QueryStructure for Dynamized<S> {
    fn answer(&self, machine: &mut Machine, q: &Point) -> Result<Answer, StructureError> {
        self.query_phase(machine, q)
    }
}
