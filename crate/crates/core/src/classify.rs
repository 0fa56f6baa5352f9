//! Isomorph rejection of spreads, splitting of classes under the duality, and
//! the consistency checks and reports built on a completed classification.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num_bigint::BigUint;
use num_traits::Zero;
use thiserror::Error;

use crate::collineation::Groups;
use crate::permgrp::PermGroup;
use crate::pg3::LineId;
use crate::search::BASE_LINE;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassifyError {
    #[error("stabilizer orders {aut} (with dualities) and {pgl} (collineations) are not in ratio 1 or 2")]
    BadRatio { aut: BigUint, pgl: BigUint },
    #[error("{missing} orbits of (line, spread) pairs were never reached from a starter")]
    MissingPairs { missing: usize },
}

/// Whether the duality maps a class onto itself up to collineations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Split {
    /// One class of spreads under collineations.
    OneClass,
    /// Two classes of spreads under collineations, exchanged by the duality.
    TwoClass,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpreadClass {
    /// Least image under the extended group.
    pub canonical: Vec<LineId>,
    pub aut_order: BigUint,
    pub pgl_order: BigUint,
    pub split: Split,
}

impl SpreadClass {
    /// Number of classes under collineations this class accounts for.
    pub fn pgl_classes(&self) -> usize {
        match self.split {
            Split::OneClass => 1,
            Split::TwoClass => 2,
        }
    }
}

/// What one spread contributes to a classification.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpreadRecord {
    pub canonical: Vec<LineId>,
    pub aut_order: BigUint,
    /// Where the base line of the starter lands when the spread is moved onto
    /// its canonical form; present for spreads completed from starters.
    pub pair_line: Option<LineId>,
}

/// Canonical form of a spread completed from a starter at the base line.
pub fn record_completion(groups: &Groups, spread: &[LineId]) -> SpreadRecord {
    let c = groups.ext.canonical_image(spread);
    SpreadRecord {
        pair_line: Some(c.transport_point(BASE_LINE)),
        canonical: c.image,
        aut_order: c.stabilizer_order,
    }
}

/// Canonical form of a spread found without a starter.
pub fn record_spread(groups: &Groups, spread: &[LineId]) -> SpreadRecord {
    let c = groups.ext.canonical_image(spread);
    SpreadRecord { pair_line: None, canonical: c.image, aut_order: c.stabilizer_order }
}

/// Collects spread records into classes. Insertion order does not matter.
#[derive(Clone, Debug, Default)]
pub struct Deduper {
    classes: BTreeMap<Vec<LineId>, (BigUint, BTreeSet<LineId>)>,
    spreads_seen: u64,
}

impl Deduper {
    pub fn new() -> Deduper {
        Deduper::default()
    }

    pub fn insert(&mut self, rec: SpreadRecord) {
        self.spreads_seen += 1;
        let entry = self.classes.entry(rec.canonical).or_insert_with(|| (rec.aut_order, BTreeSet::new()));
        if let Some(l) = rec.pair_line {
            entry.1.insert(l);
        }
    }

    pub fn merge(&mut self, other: Deduper) {
        self.spreads_seen += other.spreads_seen;
        for (k, (order, pairs)) in other.classes {
            self.classes.entry(k).or_insert_with(|| (order, BTreeSet::new())).1.extend(pairs);
        }
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn spreads_seen(&self) -> u64 {
        self.spreads_seen
    }

    pub fn canonical_forms(&self) -> impl Iterator<Item = &Vec<LineId>> {
        self.classes.keys()
    }

    /// Pair lines recorded for a class.
    pub fn pair_lines(&self, canonical: &[LineId]) -> Option<&BTreeSet<LineId>> {
        self.classes.get(canonical).map(|(_, p)| p)
    }

    /// Splits every class under the duality, ordered by canonical form.
    pub fn classes(&self, groups: &Groups) -> Result<Vec<SpreadClass>, ClassifyError> {
        self.classes
            .iter()
            .map(|(canon, (aut, _))| classify_one(groups, canon, aut.clone()))
            .collect()
    }
}

fn classify_one(groups: &Groups, canonical: &[LineId], aut_order: BigUint) -> Result<SpreadClass, ClassifyError> {
    let pgl_order = groups.pgl.set_stabilizer_order(canonical);
    let split = if aut_order == &pgl_order * 2u32 {
        Split::OneClass
    } else if aut_order == pgl_order {
        Split::TwoClass
    } else {
        return Err(ClassifyError::BadRatio { aut: aut_order, pgl: pgl_order });
    };
    Ok(SpreadClass { canonical: canonical.to_vec(), aut_order, pgl_order, split })
}

/// The class of a single spread.
pub fn classify_spread(groups: &Groups, spread: &[LineId]) -> Result<SpreadClass, ClassifyError> {
    let c = groups.ext.canonical_image(spread);
    classify_one(groups, &c.image, c.stabilizer_order)
}

/// Representatives of the collineation classes inside a class: the
/// canonical form, and its image under the duality when that is a second class.
pub fn split_duality(class: &SpreadClass, groups: &Groups) -> Vec<Vec<LineId>> {
    match class.split {
        Split::OneClass => vec![class.canonical.clone()],
        Split::TwoClass => vec![class.canonical.clone(), groups.duality.apply_set(&class.canonical)],
    }
}

/// Whether some element of the extended stabilizer of `spread` is a duality.
pub fn has_dual_automorphism(groups: &Groups, spread: &[LineId]) -> bool {
    let stab = groups.ext.setwise_stabilizer(spread);
    stab.generators().iter().any(|g| !groups.pgl.contains(g))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairReport {
    pub classes: usize,
    /// Orbits of the class stabilizer on lines outside the spread, summed
    /// over classes.
    pub outside_orbits: usize,
    /// Those orbits not reached by any (base line, completion) pair.
    pub missing: Vec<(Vec<LineId>, LineId)>,
}

impl PairReport {
    pub fn passed(&self) -> bool {
        self.missing.is_empty()
    }

    pub fn into_result(self) -> Result<PairReport, ClassifyError> {
        if self.passed() {
            Ok(self)
        } else {
            Err(ClassifyError::MissingPairs { missing: self.missing.len() })
        }
    }
}

/// For every class S and every line m outside S, checks that the pair (m, S)
/// is equivalent to some pair (base line, completion) met during the search.
/// Pairs are compared through orbits of the stabilizer of S on lines.
pub fn pair_consistency_check(dedup: &Deduper, groups: &Groups) -> PairReport {
    let mut outside_orbits = 0;
    let mut missing = Vec::new();
    for (canon, (_, pairs)) in &dedup.classes {
        let stab: PermGroup = groups.ext.setwise_stabilizer(canon);
        let reps = stab.orbit_representatives();
        let reached: BTreeSet<LineId> = pairs.iter().map(|&l| reps[l as usize]).collect();
        let in_spread: BTreeSet<LineId> = canon.iter().copied().collect();
        let orbits: BTreeSet<LineId> = (0..reps.len() as LineId)
            .filter(|l| !in_spread.contains(l))
            .map(|l| reps[l as usize])
            .collect();
        outside_orbits += orbits.len();
        for o in orbits {
            if !reached.contains(&o) {
                missing.push((canon.clone(), o));
            }
        }
    }
    PairReport { classes: dedup.classes.len(), outside_orbits, missing }
}

/// One row of the stabilizer order histogram. Counts are of collineation
/// classes, so a two-class entry adds 2 to `two_class`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrderRow {
    pub order: BigUint,
    pub one_class: usize,
    pub two_class: usize,
}

impl OrderRow {
    pub fn total(&self) -> usize {
        self.one_class + self.two_class
    }
}

/// Histogram of collineation stabilizer orders, ascending.
pub fn group_order_table(classes: &[SpreadClass]) -> Vec<OrderRow> {
    let mut rows: BTreeMap<BigUint, (usize, usize)> = BTreeMap::new();
    for c in classes {
        let e = rows.entry(c.pgl_order.clone()).or_default();
        match c.split {
            Split::OneClass => e.0 += 1,
            Split::TwoClass => e.1 += 2,
        }
    }
    rows.into_iter().map(|(order, (one_class, two_class))| OrderRow { order, one_class, two_class }).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassificationReport {
    pub q: usize,
    pub classes: Vec<SpreadClass>,
    pub table: Vec<OrderRow>,
}

impl ClassificationReport {
    pub fn new(q: usize, classes: Vec<SpreadClass>) -> ClassificationReport {
        let table = group_order_table(&classes);
        ClassificationReport { q, classes, table }
    }

    /// Classes under the extended group.
    pub fn ext_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn one_class(&self) -> usize {
        self.classes.iter().filter(|c| c.split == Split::OneClass).count()
    }

    pub fn two_class(&self) -> usize {
        self.classes.len() - self.one_class()
    }

    /// Classes under collineations.
    pub fn pgl_classes(&self) -> usize {
        self.classes.iter().map(SpreadClass::pgl_classes).sum()
    }

    /// Number of spreads, from orbit sizes under collineations.
    pub fn labelled_spreads(&self, pgl_order: &BigUint) -> BigUint {
        self.classes.iter().fold(BigUint::zero(), |acc, c| {
            acc + pgl_order / &c.pgl_order * BigUint::from(c.pgl_classes())
        })
    }

    /// Aligned text table followed by totals.
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let w = self.table.iter().map(|r| r.order.to_string().len()).max().unwrap_or(5).max(5);
        let _ = writeln!(s, "{:>w$}  {:>9}  {:>9}  {:>6}", "order", "one-class", "two-class", "total");
        for r in &self.table {
            let _ = writeln!(s, "{:>w$}  {:>9}  {:>9}  {:>6}", r.order, r.one_class, r.two_class, r.total());
        }
        let _ = writeln!(
            s,
            "classes: {} with dualities, {} one-class + 2 x {} two-class = {} under collineations",
            self.ext_classes(),
            self.one_class(),
            self.two_class(),
            self.pgl_classes()
        );
        s
    }

    /// One `order one_class two_class total` row per line.
    pub fn render_rows(&self) -> String {
        let mut s = String::new();
        for r in &self.table {
            let _ = writeln!(s, "{} {} {} {}", r.order, r.one_class, r.two_class, r.total());
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::Field;
    use crate::pg3::Geometry;
    use crate::search::{build_instance, complete, spreads_from_scratch, starters_for};

    fn setup(q: usize) -> (Geometry, Groups) {
        let g = Geometry::new(Field::of_order(q).unwrap());
        let gr = Groups::new(&g).unwrap();
        (g, gr)
    }

    fn pipeline(g: &Geometry, gr: &Groups, skip: Option<usize>) -> Deduper {
        let mut d = Deduper::new();
        for (i, s) in starters_for(g, gr).iter().enumerate() {
            if Some(i) == skip {
                continue;
            }
            for sp in complete(&build_instance(g, s)) {
                d.insert(record_completion(gr, &sp));
            }
        }
        d
    }

    #[test]
    fn q2_single_class_with_stabilizer_360() {
        let (g, gr) = setup(2);
        let d = pipeline(&g, &gr, None);
        let classes = d.classes(&gr).unwrap();
        assert_eq!(classes.len(), 1);
        assert_eq!(classes[0].pgl_order, BigUint::from(360u32));
        assert_eq!(classes[0].split, Split::OneClass);
        assert!(has_dual_automorphism(&gr, &classes[0].canonical));
        let rep = ClassificationReport::new(2, classes);
        assert_eq!(rep.pgl_classes(), 1);
        assert_eq!(rep.labelled_spreads(gr.pgl.order()), BigUint::from(56u32));
        assert!(pair_consistency_check(&d, &gr).passed());
    }

    #[test]
    fn q3_pipeline_agrees_with_scratch() {
        let (g, gr) = setup(3);
        let d = pipeline(&g, &gr, None);
        let mut scratch = Deduper::new();
        let all = spreads_from_scratch(&g, false).unwrap();
        for sp in &all {
            scratch.insert(record_spread(&gr, sp));
        }
        let a: Vec<_> = d.canonical_forms().cloned().collect();
        let b: Vec<_> = scratch.canonical_forms().cloned().collect();
        assert_eq!(a, b);
        let rep = ClassificationReport::new(3, d.classes(&gr).unwrap());
        assert_eq!(rep.pgl_classes(), 2);
        assert_eq!(rep.labelled_spreads(gr.pgl.order()), BigUint::from(all.len()));
        let pairs = pair_consistency_check(&d, &gr);
        assert!(pairs.passed(), "{pairs:?}");
    }

    #[test]
    fn duplicate_insertions_collapse() {
        let (g, gr) = setup(2);
        let sp = spreads_from_scratch(&g, false).unwrap().remove(0);
        let mut d = Deduper::new();
        d.insert(record_spread(&gr, &sp));
        d.insert(record_spread(&gr, &sp));
        assert_eq!(d.len(), 1);
        assert_eq!(d.spreads_seen(), 2);
    }

    #[test]
    fn split_representatives_are_inequivalent() {
        let (g, gr) = setup(4);
        let d = pipeline(&g, &gr, None);
        for c in d.classes(&gr).unwrap() {
            let reps = split_duality(&c, &gr);
            assert_eq!(reps.len(), c.pgl_classes());
            if reps.len() == 2 {
                assert_ne!(gr.pgl.minimal_image(&reps[0]), gr.pgl.minimal_image(&reps[1]));
            }
        }
    }

    #[test]
    fn suppressed_starter_is_detected() {
        let (g, gr) = setup(4);
        let full = pipeline(&g, &gr, None);
        assert!(pair_consistency_check(&full, &gr).passed());
        let starters = starters_for(&g, &gr);
        for i in 0..starters.len() {
            if complete(&build_instance(&g, &starters[i])).is_empty() {
                continue;
            }
            let partial = pipeline(&g, &gr, Some(i));
            let detected = partial.len() < full.len() || !pair_consistency_check(&partial, &gr).passed();
            assert!(detected, "dropping starter {i} went unnoticed");
        }
    }

    #[test]
    fn table_counts_collineation_classes() {
        let c = |o: u32, split| SpreadClass {
            canonical: vec![],
            aut_order: BigUint::from(o),
            pgl_order: BigUint::from(o),
            split,
        };
        let rows = group_order_table(&[c(6, Split::OneClass), c(6, Split::TwoClass), c(2, Split::TwoClass)]);
        assert_eq!(rows.len(), 2);
        assert_eq!((rows[0].one_class, rows[0].two_class), (0, 2));
        assert_eq!((rows[1].one_class, rows[1].two_class, rows[1].total()), (1, 2, 3));
    }
}
