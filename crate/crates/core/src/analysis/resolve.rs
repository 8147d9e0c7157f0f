use std::collections::{BTreeSet, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::hard_dist::SubcubeFamily;
use crate::machine::{Address, Machine, MachineError, ProbeGuard};
use crate::structures::{QueryStructure, StructureError};

/// Largest subcube dimension whose queries are enumerated.
pub const MAX_RESOLVE_DIM: u32 = 16;

/// The queries of subcube `P_i` that complete using only sampled cells of
/// `C_i`, indexed by suffix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedSet {
    pub subcube: usize,
    pub d_prime: u32,
    pub resolved: Vec<bool>,
}

impl ResolvedSet {
    pub fn len(&self) -> usize {
        self.resolved.iter().filter(|r| **r).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, suffix: u64) -> bool {
        self.resolved.get(suffix as usize).copied().unwrap_or(false)
    }

    pub fn is_subset(&self, other: &ResolvedSet) -> bool {
        self.resolved
            .iter()
            .zip(&other.resolved)
            .all(|(a, b)| !a || *b)
    }

    /// One character per suffix, `1` for resolved, in suffix order.
    pub fn bitmap(&self) -> String {
        self.resolved
            .iter()
            .map(|&r| if r { '1' } else { '0' })
            .collect()
    }
}

/// Replays every query of subcube `i` on a copy of the post-update image,
/// halting a query when it probes a cell of `C_i` outside `T` or issues more
/// than `probe_cap` probes in total.
pub fn resolved_queries<Q: QueryStructure + Sync>(
    structure: &Q,
    image: &Machine,
    sampled: &BTreeSet<Address>,
    epoch_cells: &[Address],
    family: &SubcubeFamily,
    i: usize,
    probe_cap: Option<usize>,
) -> Result<ResolvedSet, AnalysisError> {
    if family.d_prime > MAX_RESOLVE_DIM {
        return Err(AnalysisError::DimensionTooLarge(family.d_prime));
    }
    let forbidden: HashSet<Address> = epoch_cells
        .iter()
        .copied()
        .filter(|a| !sampled.contains(a))
        .collect();
    let guard = ProbeGuard {
        forbidden,
        cap: probe_cap,
    };
    let resolved = (0..1u64 << family.d_prime)
        .into_par_iter()
        .map(|suffix| {
            let q = family.point_from_index(i, suffix)?;
            let mut m = image.fork();
            m.set_guard(Some(guard.clone()));
            m.begin_operation("replay").map_err(StructureError::from)?;
            match structure.answer(&mut m, &q) {
                Ok(_) => Ok(true),
                Err(StructureError::Machine(MachineError::Halted { .. })) => Ok(false),
                Err(e) => Err(AnalysisError::from(e)),
            }
        })
        .collect::<Result<Vec<bool>, AnalysisError>>()?;
    Ok(ResolvedSet {
        subcube: i,
        d_prime: family.d_prime,
        resolved,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::tag_writes;
    use crate::ann::AnnParams;
    use crate::hard_dist::{build_prefixes, EpochPlan, UpdateScript};
    use crate::structures::{Bucketed, Dynamized, LinearScan, Op};
    use proptest::prelude::*;

    struct World<Q> {
        structure: Q,
        image: Machine,
        family: SubcubeFamily,
        cells: Vec<Vec<Address>>,
    }

    fn plan() -> EpochPlan {
        EpochPlan {
            beta: 2,
            floor: 1,
            k: 3,
            sizes: vec![1, 2, 4],
        }
    }

    fn family() -> SubcubeFamily {
        build_prefixes(16, 4, 3, 11, 1000).unwrap()
    }

    fn bucketed_world() -> World<Bucketed> {
        let family = family();
        let script = UpdateScript::sample(&family, &plan(), 3).unwrap();
        let mut b = Bucketed::new(
            family.clone(),
            AnnParams::new(16, 1, 2.0).unwrap(),
            vec![16, 16, 16],
            0,
        )
        .unwrap();
        let mut m = Machine::new(b.required_cells(), 32, 0, 1).unwrap();
        for (_, p) in script.inserts() {
            b.insert(&mut m, p).unwrap();
        }
        let tagger = tag_writes(m.adversary_view(), &plan()).unwrap();
        let cells = (0..3).map(|e| tagger.cells(e)).collect();
        World {
            structure: b,
            image: m,
            family,
            cells,
        }
    }

    fn linear_world() -> World<Dynamized<LinearScan>> {
        let family = family();
        let script = UpdateScript::sample(&family, &plan(), 3).unwrap();
        let scan = LinearScan::new(AnnParams::new(16, 1, 2.0).unwrap());
        let mut dynz = Dynamized::new(scan, 16, 8, 0).unwrap();
        let mut m = Machine::new(dynz.required_cells(), 32, 0, 1).unwrap();
        for (_, p) in script.inserts() {
            dynz.operate(&mut m, Op::Insert(p.clone())).unwrap();
        }
        let tagger = tag_writes(m.adversary_view(), &plan()).unwrap();
        let cells = (0..3).map(|e| tagger.cells(e)).collect();
        World {
            structure: dynz,
            image: m,
            family,
            cells,
        }
    }

    // Seven inserts fill levels 1 to 3, so every written cell is still live.
    #[test]
    fn linear_scan_with_a_missing_cell_resolves_nothing() {
        let w = linear_world();
        for e in 0..3 {
            let c = &w.cells[e];
            assert!(!c.is_empty());
            let t: BTreeSet<Address> = c[1..].iter().copied().collect();
            let r = resolved_queries(&w.structure, &w.image, &t, c, &w.family, e, None).unwrap();
            assert!(r.is_empty());
            let full: BTreeSet<Address> = c.iter().copied().collect();
            let r = resolved_queries(&w.structure, &w.image, &full, c, &w.family, e, None).unwrap();
            assert_eq!(r.len(), 16);
        }
    }

    #[test]
    fn bucketed_with_whole_region_resolves_everything() {
        let w = bucketed_world();
        for e in 0..3 {
            let region: BTreeSet<Address> = w.structure.region(e).collect();
            let r = resolved_queries(
                &w.structure,
                &w.image,
                &region,
                &w.cells[e],
                &w.family,
                e,
                Some(16),
            )
            .unwrap();
            assert_eq!(r.bitmap(), "1".repeat(16));
        }
    }

    #[test]
    fn zero_cap_admits_only_probe_free_queries() {
        let w = bucketed_world();
        let region: BTreeSet<Address> = w.structure.region(0).collect();
        let r = resolved_queries(
            &w.structure,
            &w.image,
            &region,
            &w.cells[0],
            &w.family,
            0,
            Some(0),
        )
        .unwrap();
        assert!(r.is_empty());
        assert!(w.structure.count(0) > 0);
    }

    #[test]
    fn image_is_left_untouched() {
        let w = bucketed_world();
        let before = w.image.adversary_view().clone();
        resolved_queries(
            &w.structure,
            &w.image,
            &BTreeSet::new(),
            &w.cells[1],
            &w.family,
            1,
            None,
        )
        .unwrap();
        assert_eq!(*w.image.adversary_view(), before);
    }

    #[test]
    fn oversized_subcube_is_rejected() {
        let w = bucketed_world();
        let big = SubcubeFamily {
            d: 80,
            d_prime: 17,
            prefixes: vec![],
        };
        assert_eq!(
            resolved_queries(&w.structure, &w.image, &BTreeSet::new(), &[], &big, 0, None)
                .unwrap_err(),
            AnalysisError::DimensionTooLarge(17)
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn monotone_in_the_sample(keep in prop::collection::vec(any::<bool>(), 16), extra in prop::collection::vec(any::<bool>(), 16), cap in prop::option::of(0usize..12)) {
            let w = bucketed_world();
            let c = &w.cells[1];
            let t: BTreeSet<Address> = c.iter().zip(&keep).filter(|(_, k)| **k).map(|(a, _)| *a).collect();
            let t2: BTreeSet<Address> = c.iter().zip(keep.iter().zip(&extra)).filter(|(_, (k, x))| **k || **x).map(|(a, _)| *a).collect();
            let r1 = resolved_queries(&w.structure, &w.image, &t, c, &w.family, 1, cap).unwrap();
            let r2 = resolved_queries(&w.structure, &w.image, &t2, c, &w.family, 1, cap).unwrap();
            prop_assert!(r1.is_subset(&r2));
        }
    }
}
