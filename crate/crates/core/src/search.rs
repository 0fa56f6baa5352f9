//! Starter enumeration and completion of starters to spreads.
//!
//! A starter based at a line `l` is a set of q+1 pairwise skew lines, one
//! through each point of `l`. Every spread that misses `l` contains exactly one
//! starter based at `l`, so classifying starters up to the stabilizer of `l`
//! and completing each one by exact cover reaches every spread.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use num_traits::Zero;
use thiserror::Error;

use crate::bits::{self, BitMatrix};
use crate::collineation::Groups;
use crate::permgrp::PermGroup;
use crate::pg3::{Geometry, LineId, PointId};

/// The base line used for starters; any line would do since the group is
/// transitive on lines.
pub const BASE_LINE: LineId = 0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("search from scratch at q = {0} is refused without an override")]
    TooLarge(usize),
    #[error("counting identity fails: {lhs} labelled pairs but the starters account for {rhs}")]
    IdentityMismatch { lhs: BigUint, rhs: BigUint },
    #[error("line {0} is not a valid member: {1}")]
    BadStarter(LineId, &'static str),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Starter {
    base: LineId,
    lines: Vec<LineId>,
}

impl Starter {
    /// Orders `lines` by the point where each meets `base` and checks the
    /// starter conditions.
    pub fn new(geom: &Geometry, base: LineId, lines: &[LineId]) -> Result<Starter, SearchError> {
        let base_points = geom.line(base).points();
        let mut slots: Vec<Option<LineId>> = vec![None; base_points.len()];
        for &m in lines {
            if m == base {
                return Err(SearchError::BadStarter(m, "equals the base line"));
            }
            let pts = geom.line(m).points();
            let Some(i) = base_points.iter().position(|p| pts.binary_search(p).is_ok()) else {
                return Err(SearchError::BadStarter(m, "misses the base line"));
            };
            if slots[i].is_some() {
                return Err(SearchError::BadStarter(m, "shares a point of the base line"));
            }
            slots[i] = Some(m);
        }
        let lines: Vec<LineId> = slots
            .into_iter()
            .map(|s| s.ok_or(SearchError::BadStarter(base, "has an uncovered point")))
            .collect::<Result<_, _>>()?;
        for (i, &a) in lines.iter().enumerate() {
            for &b in &lines[i + 1..] {
                if geom.lines_meet(a, b) {
                    return Err(SearchError::BadStarter(b, "meets another member"));
                }
            }
        }
        Ok(Starter { base, lines })
    }

    pub fn base(&self) -> LineId {
        self.base
    }

    /// Members, the i-th through the i-th point of the base line.
    pub fn lines(&self) -> &[LineId] {
        &self.lines
    }

    pub fn sorted_lines(&self) -> Vec<LineId> {
        let mut v = self.lines.clone();
        v.sort_unstable();
        v
    }
}

/// Lines skew to every line in `set` (lines of `set` excluded).
fn skew_to_all(geom: &Geometry, set: &[LineId]) -> Vec<u64> {
    let n = geom.num_lines();
    let mut mask = vec![!0u64; bits::words_for(n)];
    if n % 64 != 0 {
        *mask.last_mut().unwrap() = (1u64 << (n % 64)) - 1;
    }
    for &l in set {
        for (m, g) in mask.iter_mut().zip(geom.gamma().row(l as usize)) {
            *m &= !g;
        }
        bits::clear(&mut mask, l as usize);
    }
    mask
}

/// Number of lines meeting every line of the starter, the base included.
pub fn transversal_count(geom: &Geometry, s: &Starter) -> usize {
    let gamma = geom.gamma();
    let mut acc = gamma.row(s.lines[0] as usize).to_vec();
    for &l in &s.lines[1..] {
        for (a, g) in acc.iter_mut().zip(gamma.row(l as usize)) {
            *a &= g;
        }
    }
    bits::count(&acc)
}

/// Representatives of the starters based at [`BASE_LINE`] up to the
/// stabilizer of that line in `group`, as sorted line sets in ascending order.
///
/// Partial starters are grown one line at a time. At each level only one
/// candidate per orbit of the partial starter's stabilizer is tried, and the
/// results are merged by their least image under the line stabilizer.
pub fn enumerate_starters(geom: &Geometry, group: &PermGroup) -> Vec<Starter> {
    let h = group.point_stabilizer(BASE_LINE);
    let base_pencil: BTreeSet<LineId> = geom
        .line(BASE_LINE)
        .points()
        .iter()
        .flat_map(|&p| geom.pencil(p).iter().copied())
        .filter(|&m| m != BASE_LINE)
        .collect();
    let mut level: Vec<Vec<LineId>> = vec![Vec::new()];
    for _ in 0..=geom.q() {
        let mut next: BTreeSet<Vec<LineId>> = BTreeSet::new();
        for rep in &level {
            let stab = if rep.is_empty() { h.clone() } else { h.setwise_stabilizer(rep) };
            let skew = skew_to_all(geom, rep);
            let orbit_min = stab.orbit_representatives();
            for &m in &base_pencil {
                if !bits::get(&skew, m as usize) || orbit_min[m as usize] != m {
                    continue;
                }
                let mut ext = rep.clone();
                ext.push(m);
                next.insert(h.minimal_image(&ext));
            }
        }
        level = next.into_iter().collect();
    }
    level
        .into_iter()
        .map(|s| Starter::new(geom, BASE_LINE, &s).expect("extensions keep the starter conditions"))
        .collect()
}

/// `#lines * prod_{j=0..q} (q^2 + q - j q)`: the number of pairs of a line and
/// a starter based at it.
pub fn labelled_pair_count(geom: &Geometry) -> BigUint {
    let q = geom.q() as u64;
    (0..=q).fold(BigUint::from(geom.num_lines()), |acc, j| acc * BigUint::from(q * q + q - j * q))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdentityReport {
    pub lhs: BigUint,
    /// Sum over the starters (classes of based starters) of the size of
    /// their orbit on pairs (line, starter based at it).
    pub pair_sum: BigUint,
    /// Sum over classes of starters as unbased line sets of the orbit size
    /// times the number of transversals.
    pub set_sum: BigUint,
    pub starters: usize,
    pub set_classes: usize,
}

impl IdentityReport {
    pub fn holds(&self) -> bool {
        self.lhs == self.pair_sum && self.lhs == self.set_sum
    }
}

/// Evaluates the starter counting identity in two forms.
///
/// Pairs (line, starter based at it) are counted directly on the left. On the
/// right they are counted once by orbits of based starters, each of which
/// contributes `|G| / |G_(l,S)|`, and once by orbits of starters as line sets,
/// each contributing `|G| / |G_S|` times its number of transversals.
pub fn starter_identity_check(geom: &Geometry, group: &PermGroup, starters: &[Starter]) -> IdentityReport {
    let lhs = labelled_pair_count(geom);
    let h = group.point_stabilizer(BASE_LINE);
    let g_order = group.order();
    let mut pair_sum = BigUint::zero();
    let mut set_classes: BTreeMap<Vec<LineId>, usize> = BTreeMap::new();
    for s in starters {
        let sorted = s.sorted_lines();
        pair_sum += g_order / h.set_stabilizer_order(&sorted);
        set_classes.entry(group.minimal_image(&sorted)).or_insert_with(|| transversal_count(geom, s));
    }
    let mut set_sum = BigUint::zero();
    for (set, t) in &set_classes {
        set_sum += g_order / group.set_stabilizer_order(set) * BigUint::from(*t);
    }
    IdentityReport { lhs, pair_sum, set_sum, starters: starters.len(), set_classes: set_classes.len() }
}

/// An exact cover problem: choose rows so that every column is covered once.
#[derive(Clone, Debug)]
pub struct ExactCoverInstance {
    /// Point ids of the columns.
    pub columns: Vec<PointId>,
    /// Line ids of the rows.
    pub rows: Vec<LineId>,
    /// Column indices covered by each row.
    pub row_cols: Vec<Vec<u32>>,
    /// Lines fixed to be in every solution.
    pub fixed: Vec<LineId>,
}

impl ExactCoverInstance {
    fn from_lines(geom: &Geometry, fixed: Vec<LineId>, excluded: &[LineId]) -> ExactCoverInstance {
        let mut covered = vec![false; geom.num_points()];
        for &l in &fixed {
            for &p in geom.line(l).points() {
                covered[p as usize] = true;
            }
        }
        let columns: Vec<PointId> = (0..geom.num_points() as PointId).filter(|&p| !covered[p as usize]).collect();
        let mut col_of = vec![u32::MAX; geom.num_points()];
        for (i, &p) in columns.iter().enumerate() {
            col_of[p as usize] = i as u32;
        }
        let mut skew = skew_to_all(geom, &fixed);
        for &l in excluded {
            bits::clear(&mut skew, l as usize);
            for m in bits::ones(geom.gamma().row(l as usize)) {
                bits::clear(&mut skew, m);
            }
        }
        let rows: Vec<LineId> = bits::ones(&skew).map(|l| l as LineId).collect();
        let row_cols = rows
            .iter()
            .map(|&l| geom.line(l).points().iter().map(|&p| col_of[p as usize]).collect())
            .collect();
        ExactCoverInstance { columns, rows, row_cols, fixed }
    }

    /// Lines of a solution given by row indices, joined with the fixed lines
    /// and sorted.
    pub fn spread_of(&self, rows: &[u32]) -> Vec<LineId> {
        let mut v: Vec<LineId> = self.fixed.iter().copied().chain(rows.iter().map(|&r| self.rows[r as usize])).collect();
        v.sort_unstable();
        v
    }
}

/// The completion problem for a starter: its lines are fixed, the base line
/// and every line meeting a starter line are excluded.
pub fn build_instance(geom: &Geometry, s: &Starter) -> ExactCoverInstance {
    ExactCoverInstance::from_lines(geom, s.lines.clone(), &[s.base])
}

struct Solver<'a, F: FnMut(&[u32])> {
    col_rows: BitMatrix,
    conflicts: BitMatrix,
    row_cols: &'a [Vec<u32>],
    chosen: Vec<u32>,
    emit: F,
    count: u64,
}

impl<F: FnMut(&[u32])> Solver<'_, F> {
    fn search(&mut self, active: &[u64], uncovered: &mut [u64]) {
        // column with the fewest live rows
        let mut best: Option<(usize, usize)> = None;
        for c in bits::ones(uncovered) {
            let n: usize = self
                .col_rows
                .row(c)
                .iter()
                .zip(active)
                .map(|(a, b)| (a & b).count_ones() as usize)
                .sum();
            if best.is_none_or(|(_, bn)| n < bn) {
                best = Some((c, n));
                if n <= 1 {
                    break;
                }
            }
        }
        let Some((c, n)) = best else {
            self.count += 1;
            (self.emit)(&self.chosen);
            return;
        };
        if n == 0 {
            return;
        }
        let candidates: Vec<u64> = self.col_rows.row(c).iter().zip(active).map(|(a, b)| a & b).collect();
        let mut next = vec![0u64; active.len()];
        for r in bits::ones(&candidates) {
            for ((x, a), k) in next.iter_mut().zip(active).zip(self.conflicts.row(r)) {
                *x = a & !k;
            }
            for &col in &self.row_cols[r] {
                bits::clear(uncovered, col as usize);
            }
            self.chosen.push(r as u32);
            self.search(&next.clone(), uncovered);
            self.chosen.pop();
            for &col in &self.row_cols[r] {
                bits::set(uncovered, col as usize);
            }
        }
    }
}

/// Enumerates all exact covers, calling `emit` with the chosen row indices in
/// order of choice. Returns the number of solutions. The order of solutions
/// depends only on the instance.
pub fn exact_cover_solve<F: FnMut(&[u32])>(inst: &ExactCoverInstance, emit: F) -> u64 {
    let ncols = inst.columns.len();
    let nrows = inst.rows.len();
    let mut col_rows = BitMatrix::new(ncols, nrows);
    for (r, cols) in inst.row_cols.iter().enumerate() {
        for &c in cols {
            col_rows.set(c as usize, r);
        }
    }
    let mut conflicts = BitMatrix::new(nrows, nrows);
    for (r, cols) in inst.row_cols.iter().enumerate() {
        let row = conflicts.row_mut(r);
        for &c in cols {
            for (x, y) in row.iter_mut().zip(col_rows.row(c as usize)) {
                *x |= y;
            }
        }
    }
    let mut active = vec![0u64; bits::words_for(nrows)];
    for r in 0..nrows {
        bits::set(&mut active, r);
    }
    let mut uncovered = vec![0u64; bits::words_for(ncols)];
    for c in 0..ncols {
        bits::set(&mut uncovered, c);
    }
    let mut solver = Solver { col_rows, conflicts, row_cols: &inst.row_cols, chosen: Vec::new(), emit, count: 0 };
    solver.search(&active, &mut uncovered);
    solver.count
}

/// All solutions of an instance as sorted spreads, in emission order.
pub fn complete(inst: &ExactCoverInstance) -> Vec<Vec<LineId>> {
    let mut out = Vec::new();
    exact_cover_solve(inst, |rows| out.push(inst.spread_of(rows)));
    out
}

/// All spreads of PG(3,q), found by exact cover over every point and line
/// with no symmetry reduction. Refused for q > 3 unless `allow_large`.
pub fn spreads_from_scratch(geom: &Geometry, allow_large: bool) -> Result<Vec<Vec<LineId>>, SearchError> {
    if geom.q() > 3 && !allow_large {
        return Err(SearchError::TooLarge(geom.q()));
    }
    let inst = ExactCoverInstance::from_lines(geom, Vec::new(), &[]);
    Ok(complete(&inst))
}

/// Checks that `lines` is a spread: q^2 + 1 lines covering every point once.
pub fn is_spread(geom: &Geometry, lines: &[LineId]) -> bool {
    let q = geom.q();
    if lines.len() != q * q + 1 {
        return false;
    }
    let mut seen = vec![false; geom.num_points()];
    for &l in lines {
        for &p in geom.line(l).points() {
            if std::mem::replace(&mut seen[p as usize], true) {
                return false;
            }
        }
    }
    seen.iter().all(|&s| s)
}

/// Convenience bundle: starters under the extended group.
pub fn starters_for(geom: &Geometry, groups: &Groups) -> Vec<Starter> {
    enumerate_starters(geom, &groups.ext)
}
