//! The projective space PG(3,q): points, lines, pencils and the line
//! intersection graph.
//!
//! Points are nonzero vectors of GF(q)^4 whose first nonzero coordinate is 1.
//! Lines are 2-dimensional subspaces stored by their reduced row-echelon
//! basis. Both are numbered in lexicographic order of those normal forms
//! (coordinates compared by their field index), so numbering does not depend
//! on how the tables were built. In particular line 0 is always
//! `span{e3, e4}`.

use std::collections::HashMap;
use std::io::{self, Write};

use thiserror::Error;

use crate::bits::{self, BitMatrix};
use crate::gf::{Field, Gf};

pub type PointId = u32;
pub type LineId = u32;
pub type Vec4 = [Gf; 4];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("points {0} and {0} coincide; a line needs two distinct points")]
    SamePoint(PointId),
    #[error("pencil of point {point} is not a clique: lines {a} and {b} are not adjacent")]
    PencilNotClique { point: PointId, a: LineId, b: LineId },
    #[error("lines {a} and {b} lie in two common pencils")]
    EdgeInTwoPencils { a: LineId, b: LineId },
    #[error("adjacent lines {a} and {b} share no pencil")]
    EdgeOutsidePencils { a: LineId, b: LineId },
    #[error("adjacency is not symmetric and irreflexive at ({a}, {b})")]
    NotSimpleGraph { a: LineId, b: LineId },
    #[error("pencils of points {p1} and {p2} share {shared} lines instead of one")]
    PencilsShare { p1: PointId, p2: PointId, shared: usize },
}

/// A line of PG(3,q).
#[derive(Clone, Debug)]
pub struct Line {
    basis: [Vec4; 2],
    points: Vec<PointId>,
}

impl Line {
    /// Reduced row-echelon basis.
    pub fn basis(&self) -> &[Vec4; 2] {
        &self.basis
    }

    /// Incident points, ascending.
    pub fn points(&self) -> &[PointId] {
        &self.points
    }
}

/// Summary produced by a successful structure check of the intersection graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaReport {
    pub points: usize,
    pub lines: usize,
    pub pencil_size: usize,
    pub edges: usize,
    pub degree: usize,
}

/// Reduces `rows` in place to reduced row-echelon form and returns the rank.
/// Nonzero rows come first.
pub fn rref(field: &Field, rows: &mut [Vec4]) -> usize {
    let mut rank = 0;
    for col in 0..4 {
        let Some(piv) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, piv);
        let inv = field.inv(rows[rank][col]).expect("pivot is nonzero");
        for c in 0..4 {
            rows[rank][c] = field.mul(rows[rank][c], inv);
        }
        for r in 0..rows.len() {
            if r != rank && !rows[r][col].is_zero() {
                let f = rows[r][col];
                for c in 0..4 {
                    let t = field.mul(f, rows[rank][c]);
                    rows[r][c] = field.sub(rows[r][c], t);
                }
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

/// Rank of the span of `rows`.
pub fn subspace_rank(field: &Field, rows: &[Vec4]) -> usize {
    let mut m = rows.to_vec();
    rref(field, &mut m)
}

/// Scales `v` so its first nonzero coordinate is 1. `None` for the zero vector.
pub fn normalize(field: &Field, v: Vec4) -> Option<Vec4> {
    let lead = *v.iter().find(|c| !c.is_zero())?;
    let inv = field.inv(lead).ok()?;
    Some(v.map(|c| field.mul(c, inv)))
}

fn vec_key(q: usize, v: &Vec4) -> usize {
    v.iter().fold(0, |acc, c| acc * q + c.index())
}

/// The geometry PG(3,q) with its incidence tables and the line intersection
/// graph stored as packed bit rows.
#[derive(Clone, Debug)]
pub struct Geometry {
    field: Field,
    points: Vec<Vec4>,
    lines: Vec<Line>,
    pencils: Vec<Vec<LineId>>,
    point_index: Vec<u32>,
    line_index: HashMap<u64, LineId>,
    join: Vec<LineId>,
    gamma: BitMatrix,
}

impl Geometry {
    pub fn new(field: Field) -> Geometry {
        let q = field.q();

        let mut points = Vec::new();
        let mut point_index = vec![u32::MAX; q.pow(4)];
        for key in 0..q.pow(4) {
            let mut v = [Gf::ZERO; 4];
            let mut k = key;
            for c in (0..4).rev() {
                v[c] = Gf((k % q) as u8);
                k /= q;
            }
            if let Some(lead) = v.iter().find(|c| !c.is_zero()) {
                if *lead == Gf::ONE {
                    point_index[key] = points.len() as u32;
                    points.push(v);
                }
            }
        }

        // Every reduced row-echelon 2x4 matrix, grouped by pivot pair.
        let mut bases: Vec<[Vec4; 2]> = Vec::new();
        for i in 0..4 {
            for j in i + 1..4 {
                let free0: Vec<usize> = (i + 1..4).filter(|&c| c != j).collect();
                let free1: Vec<usize> = (j + 1..4).collect();
                let slots: Vec<(usize, usize)> = free0
                    .iter()
                    .map(|&c| (0, c))
                    .chain(free1.iter().map(|&c| (1, c)))
                    .collect();
                for code in 0..q.pow(slots.len() as u32) {
                    let mut b = [[Gf::ZERO; 4]; 2];
                    b[0][i] = Gf::ONE;
                    b[1][j] = Gf::ONE;
                    let mut k = code;
                    for &(r, c) in slots.iter().rev() {
                        b[r][c] = Gf((k % q) as u8);
                        k /= q;
                    }
                    bases.push(b);
                }
            }
        }
        let line_key = |b: &[Vec4; 2]| -> u64 { (vec_key(q, &b[0]) * q.pow(4) + vec_key(q, &b[1])) as u64 };
        bases.sort_by_key(line_key);

        let mut lines = Vec::with_capacity(bases.len());
        let mut line_index = HashMap::with_capacity(bases.len());
        let mut pencils = vec![Vec::new(); points.len()];
        for (id, b) in bases.into_iter().enumerate() {
            let mut pts = Vec::with_capacity(q + 1);
            let span = |a: Gf, c: Gf| -> Vec4 {
                let mut v = [Gf::ZERO; 4];
                for k in 0..4 {
                    v[k] = field.add(field.mul(a, b[0][k]), field.mul(c, b[1][k]));
                }
                v
            };
            pts.push(span(Gf::ZERO, Gf::ONE));
            for c in field.elements() {
                pts.push(span(Gf::ONE, c));
            }
            let mut ids: Vec<PointId> = pts
                .into_iter()
                .map(|v| point_index[vec_key(q, &normalize(&field, v).unwrap())])
                .collect();
            ids.sort_unstable();
            for &p in &ids {
                pencils[p as usize].push(id as LineId);
            }
            line_index.insert(line_key(&b), id as LineId);
            lines.push(Line { basis: b, points: ids });
        }

        let np = points.len();
        let mut join = vec![LineId::MAX; np * np];
        let mut gamma = BitMatrix::new(lines.len(), lines.len());
        for (l, line) in lines.iter().enumerate() {
            for (a, &p1) in line.points.iter().enumerate() {
                for &p2 in &line.points[a + 1..] {
                    join[p1 as usize * np + p2 as usize] = l as LineId;
                    join[p2 as usize * np + p1 as usize] = l as LineId;
                }
            }
        }
        for pencil in &pencils {
            for (a, &l1) in pencil.iter().enumerate() {
                for &l2 in &pencil[a + 1..] {
                    gamma.set(l1 as usize, l2 as usize);
                    gamma.set(l2 as usize, l1 as usize);
                }
            }
        }

        Geometry {
            field,
            points,
            lines,
            pencils,
            point_index,
            line_index,
            join,
            gamma,
        }
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn q(&self) -> usize {
        self.field.q()
    }

    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    pub fn num_lines(&self) -> usize {
        self.lines.len()
    }

    pub fn point(&self, p: PointId) -> &Vec4 {
        &self.points[p as usize]
    }

    pub fn line(&self, l: LineId) -> &Line {
        &self.lines[l as usize]
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    /// Lines through `p`, ascending.
    pub fn pencil(&self, p: PointId) -> &[LineId] {
        &self.pencils[p as usize]
    }

    pub fn pencils(&self) -> &[Vec<LineId>] {
        &self.pencils
    }

    /// Packed adjacency rows of the line intersection graph.
    pub fn gamma(&self) -> &BitMatrix {
        &self.gamma
    }

    /// Id of the point spanned by a nonzero vector.
    pub fn point_id(&self, v: &Vec4) -> Option<PointId> {
        let n = normalize(&self.field, *v)?;
        Some(self.point_index[vec_key(self.q(), &n)])
    }

    /// Id of the line spanned by `rows`, if they span a 2-dimensional space.
    pub fn line_of_span(&self, rows: &[Vec4]) -> Option<LineId> {
        let mut m = rows.to_vec();
        if rref(&self.field, &mut m) != 2 {
            return None;
        }
        let q = self.q();
        let key = (vec_key(q, &m[0]) * q.pow(4) + vec_key(q, &m[1])) as u64;
        self.line_index.get(&key).copied()
    }

    /// Whether two lines share a point. A line meets itself, but the
    /// intersection graph has no loops.
    pub fn lines_meet(&self, l1: LineId, l2: LineId) -> bool {
        l1 == l2 || self.gamma.get(l1 as usize, l2 as usize)
    }

    pub fn line_through(&self, p1: PointId, p2: PointId) -> Result<LineId, GeometryError> {
        if p1 == p2 {
            return Err(GeometryError::SamePoint(p1));
        }
        Ok(self.join[p1 as usize * self.num_points() + p2 as usize])
    }

    /// Image of a line under `v -> frob^k(v) * m` (row vectors, matrix on the right).
    pub fn apply_semilinear(&self, l: LineId, m: &[Vec4; 4], frob: u32) -> LineId {
        let f = &self.field;
        let basis = &self.lines[l as usize].basis;
        let rows: Vec<Vec4> = basis
            .iter()
            .map(|r| {
                let r = r.map(|c| f.frob_unchecked(c, frob));
                let mut out = [Gf::ZERO; 4];
                for (k, o) in out.iter_mut().enumerate() {
                    for i in 0..4 {
                        *o = f.add(*o, f.mul(r[i], m[i][k]));
                    }
                }
                out
            })
            .collect();
        self.line_of_span(&rows)
            .expect("an invertible semilinear map sends lines to lines")
    }

    /// Orthogonal complement of a line under the standard symmetric bilinear form.
    pub fn perp(&self, l: LineId) -> LineId {
        let f = &self.field;
        let b = &self.lines[l as usize].basis;
        let piv = |r: &Vec4| r.iter().position(|c| !c.is_zero()).unwrap();
        let (p0, p1) = (piv(&b[0]), piv(&b[1]));
        let rows: Vec<Vec4> = (0..4)
            .filter(|&c| c != p0 && c != p1)
            .map(|free| {
                let mut v = [Gf::ZERO; 4];
                v[free] = Gf::ONE;
                v[p0] = f.neg(b[0][free]);
                v[p1] = f.neg(b[1][free]);
                v
            })
            .collect();
        self.line_of_span(&rows).expect("complement of a 2-space is a 2-space")
    }

    /// Checks that the intersection graph is exactly the edge-disjoint union of
    /// one clique per pencil, with any two pencils sharing a single line.
    pub fn gamma_structure_check(&self) -> Result<GammaReport, GeometryError> {
        check_gamma(&self.pencils, &self.gamma)
    }

    /// Writes the intersection graph as `p edge n m` followed by `e u v` lines
    /// with 1-based vertex numbers.
    pub fn write_gamma_dimacs<W: Write>(&self, mut w: W) -> io::Result<()> {
        let n = self.num_lines();
        writeln!(w, "p edge {} {}", n, self.gamma.count_ones() / 2)?;
        for a in 0..n {
            for b in bits::ones(self.gamma.row(a)).filter(|&b| b > a) {
                writeln!(w, "e {} {}", a + 1, b + 1)?;
            }
        }
        Ok(())
    }
}

/// Structure check over explicit pencils and adjacency rows.
pub fn check_gamma(pencils: &[Vec<LineId>], gamma: &BitMatrix) -> Result<GammaReport, GeometryError> {
    let n = gamma.rows();
    for a in 0..n {
        if gamma.get(a, a) {
            return Err(GeometryError::NotSimpleGraph { a: a as LineId, b: a as LineId });
        }
        for b in bits::ones(gamma.row(a)) {
            if !gamma.get(b, a) {
                return Err(GeometryError::NotSimpleGraph { a: a as LineId, b: b as LineId });
            }
        }
    }

    let mut covered = BitMatrix::new(n, n);
    for (p, pencil) in pencils.iter().enumerate() {
        for (i, &a) in pencil.iter().enumerate() {
            for &b in &pencil[i + 1..] {
                let (a, b) = (a as usize, b as usize);
                if !gamma.get(a, b) {
                    return Err(GeometryError::PencilNotClique {
                        point: p as PointId,
                        a: a as LineId,
                        b: b as LineId,
                    });
                }
                if covered.get(a, b) {
                    return Err(GeometryError::EdgeInTwoPencils { a: a as LineId, b: b as LineId });
                }
                covered.set(a, b);
                covered.set(b, a);
            }
        }
    }
    for a in 0..n {
        let extra = gamma.row(a).iter().zip(covered.row(a)).position(|(g, c)| g & !c != 0);
        if let Some(w) = extra {
            let word = gamma.row(a)[w] & !covered.row(a)[w];
            let b = w * 64 + word.trailing_zeros() as usize;
            return Err(GeometryError::EdgeOutsidePencils { a: a as LineId, b: b as LineId });
        }
    }

    for (i, pi) in pencils.iter().enumerate() {
        for (j, pj) in pencils.iter().enumerate().skip(i + 1) {
            let shared = sorted_intersection_len(pi, pj);
            if shared != 1 {
                return Err(GeometryError::PencilsShare {
                    p1: i as PointId,
                    p2: j as PointId,
                    shared,
                });
            }
        }
    }

    Ok(GammaReport {
        points: pencils.len(),
        lines: n,
        pencil_size: pencils.first().map_or(0, Vec::len),
        edges: gamma.count_ones() / 2,
        degree: if n > 0 { bits::count(gamma.row(0)) } else { 0 },
    })
}

fn sorted_intersection_len(a: &[LineId], b: &[LineId]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom(q: usize) -> Geometry {
        Geometry::new(Field::of_order(q).unwrap())
    }

    fn e(i: usize) -> Vec4 {
        let mut v = [Gf::ZERO; 4];
        v[i] = Gf::ONE;
        v
    }

    #[test]
    fn counts_match_closed_forms() {
        for q in [2usize, 3, 4, 5] {
            let g = geom(q);
            assert_eq!(g.num_points(), (q * q + 1) * (q + 1));
            assert_eq!(g.num_lines(), (q * q + 1) * (q * q + q + 1));
            assert!(g.pencils().iter().all(|p| p.len() == q * q + q + 1));
            assert!(g.lines().iter().all(|l| l.points().len() == q + 1));
        }
        let g2 = geom(2);
        assert_eq!((g2.num_points(), g2.num_lines()), (15, 35));
        let g3 = geom(3);
        assert_eq!((g3.num_points(), g3.num_lines()), (40, 130));
    }

    #[test]
    fn line_zero_is_w_infinity() {
        for q in [2, 3, 4] {
            let g = geom(q);
            assert_eq!(g.line_of_span(&[e(2), e(3)]), Some(0));
        }
    }

    #[test]
    fn meet_and_rank_agree() {
        let g = geom(3);
        let f = g.field();
        for a in 0..g.num_lines() as LineId {
            for b in 0..g.num_lines() as LineId {
                let la = g.line(a).basis();
                let lb = g.line(b).basis();
                let rank = subspace_rank(f, &[la[0], la[1], lb[0], lb[1]]);
                assert_eq!(g.lines_meet(a, b), rank < 4);
            }
            assert!(!g.gamma().get(a as usize, a as usize));
        }
        let winf = g.line_of_span(&[e(2), e(3)]).unwrap();
        let w0 = g.line_of_span(&[e(0), e(1)]).unwrap();
        assert!(!g.lines_meet(winf, w0));
    }

    #[test]
    fn line_through_matches_scan() {
        let g = geom(4);
        let p1 = g.point_id(&e(0)).unwrap();
        let p2 = g.point_id(&e(1)).unwrap();
        assert_eq!(g.line_through(p1, p2).unwrap(), g.line_of_span(&[e(0), e(1)]).unwrap());
        assert_eq!(g.line_through(p1, p1), Err(GeometryError::SamePoint(p1)));
        let np = g.num_points() as PointId;
        for a in (0..np).step_by(7) {
            for b in (0..np).step_by(5).filter(|&b| b != a) {
                let scanned: Vec<LineId> = (0..g.num_lines() as LineId)
                    .filter(|&l| g.line(l).points().contains(&a) && g.line(l).points().contains(&b))
                    .collect();
                assert_eq!(scanned, vec![g.line_through(a, b).unwrap()]);
            }
        }
    }

    #[test]
    fn gamma_structure_small() {
        let g = geom(2);
        let r = g.gamma_structure_check().unwrap();
        assert_eq!(r.edges, 15 * 21);
        assert_eq!(r.degree, 3 * 2 * 3);
        let g = geom(3);
        let r = g.gamma_structure_check().unwrap();
        assert_eq!(r.degree, 4 * 3 * 4);
    }

    #[test]
    fn perturbed_gamma_fails() {
        let g = geom(2);
        let mut gamma = g.gamma().clone();
        // remove one edge
        let b = bits::ones(gamma.row(0)).next().unwrap();
        gamma.clear(0, b);
        gamma.clear(b, 0);
        assert!(check_gamma(g.pencils(), &gamma).is_err());
        // add a non-edge
        let mut gamma = g.gamma().clone();
        let b = (1..g.num_lines()).find(|&b| !gamma.get(0, b)).unwrap();
        gamma.set(0, b);
        gamma.set(b, 0);
        assert!(matches!(
            check_gamma(g.pencils(), &gamma),
            Err(GeometryError::EdgeOutsidePencils { .. })
        ));
    }

    #[test]
    fn perp_is_an_involutive_graph_automorphism() {
        let g = geom(3);
        let winf = g.line_of_span(&[e(2), e(3)]).unwrap();
        let w0 = g.line_of_span(&[e(0), e(1)]).unwrap();
        assert_eq!(g.perp(winf), w0);
        for a in 0..g.num_lines() as LineId {
            assert_eq!(g.perp(g.perp(a)), a);
            for b in 0..g.num_lines() as LineId {
                assert_eq!(g.lines_meet(a, b), g.lines_meet(g.perp(a), g.perp(b)));
            }
        }
    }

    #[test]
    fn dimacs_header() {
        let g = geom(2);
        let mut out = Vec::new();
        g.write_gamma_dimacs(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("p edge 35 315\n"));
        assert_eq!(text.lines().count(), 316);
    }
}
