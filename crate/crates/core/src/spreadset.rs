//! Spread sets: a spread moved so that it contains `W_inf = {(0,0,x,y)}` and
//! `W_0 = {(x,y,0,0)}` has every other line of the form `{(x, xA)}`, and is
//! recorded by the q^2 matrices A (including 0).
//!
//! The text format writes each set on one line, matrices row by row with one
//! character per field element, in ascending order of their 4-character codes.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::collineation::{mat_inverse, Mat4};
use crate::gf::{Field, FieldError, Gf};
use crate::pg3::{Geometry, LineId, Vec4};
use crate::search::is_spread;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpreadSetError {
    #[error("expected {expected} characters, found {found}")]
    BadLength { expected: usize, found: usize },
    #[error(transparent)]
    BadChar(#[from] FieldError),
    #[error("expected {expected} matrices, found {found}")]
    BadCount { expected: usize, found: usize },
    #[error("the zero matrix is missing")]
    NoZero,
    #[error("matrices {0} and {1} have a singular difference")]
    SingularDifference(usize, usize),
    #[error("input is not a spread")]
    NotSpread,
}

/// A 2x2 matrix `[[a, b], [c, d]]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Matrix2 {
    pub a: Gf,
    pub b: Gf,
    pub c: Gf,
    pub d: Gf,
}

impl Matrix2 {
    pub const ZERO: Matrix2 = Matrix2 { a: Gf::ZERO, b: Gf::ZERO, c: Gf::ZERO, d: Gf::ZERO };
    pub const IDENTITY: Matrix2 = Matrix2 { a: Gf::ONE, b: Gf::ZERO, c: Gf::ZERO, d: Gf::ONE };

    pub fn new(a: Gf, b: Gf, c: Gf, d: Gf) -> Matrix2 {
        Matrix2 { a, b, c, d }
    }

    pub fn det(&self, f: &Field) -> Gf {
        f.sub(f.mul(self.a, self.d), f.mul(self.b, self.c))
    }

    pub fn add(&self, f: &Field, o: &Matrix2) -> Matrix2 {
        Matrix2::new(f.add(self.a, o.a), f.add(self.b, o.b), f.add(self.c, o.c), f.add(self.d, o.d))
    }

    pub fn sub(&self, f: &Field, o: &Matrix2) -> Matrix2 {
        Matrix2::new(f.sub(self.a, o.a), f.sub(self.b, o.b), f.sub(self.c, o.c), f.sub(self.d, o.d))
    }

    pub fn mul(&self, f: &Field, o: &Matrix2) -> Matrix2 {
        Matrix2::new(
            f.add(f.mul(self.a, o.a), f.mul(self.b, o.c)),
            f.add(f.mul(self.a, o.b), f.mul(self.b, o.d)),
            f.add(f.mul(self.c, o.a), f.mul(self.d, o.c)),
            f.add(f.mul(self.c, o.b), f.mul(self.d, o.d)),
        )
    }

    pub fn scale(&self, f: &Field, s: Gf) -> Matrix2 {
        Matrix2::new(f.mul(s, self.a), f.mul(s, self.b), f.mul(s, self.c), f.mul(s, self.d))
    }

    pub fn inverse(&self, f: &Field) -> Option<Matrix2> {
        let det = self.det(f);
        let s = f.inv(det).ok()?;
        Some(Matrix2::new(f.mul(s, self.d), f.mul(s, f.neg(self.b)), f.mul(s, f.neg(self.c)), f.mul(s, self.a)))
    }

    pub fn transpose(&self) -> Matrix2 {
        Matrix2::new(self.a, self.c, self.b, self.d)
    }

    pub fn encode(&self, f: &Field) -> [char; 4] {
        [self.a, self.b, self.c, self.d].map(|x| f.encode_char(x))
    }
}

/// q^2 matrices containing 0 whose pairwise differences are nonsingular,
/// sorted by their character codes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpreadSet {
    field: Field,
    mats: Vec<Matrix2>,
}

impl SpreadSet {
    /// Sorts and validates `mats`.
    pub fn new(field: &Field, mut mats: Vec<Matrix2>) -> Result<SpreadSet, SpreadSetError> {
        let q = field.q();
        if mats.len() != q * q {
            return Err(SpreadSetError::BadCount { expected: q * q, found: mats.len() });
        }
        // field indices sort the same way as their characters
        mats.sort();
        if mats[0] != Matrix2::ZERO {
            return Err(SpreadSetError::NoZero);
        }
        for i in 0..mats.len() {
            for j in i + 1..mats.len() {
                if mats[i].sub(field, &mats[j]).det(field).is_zero() {
                    return Err(SpreadSetError::SingularDifference(i, j));
                }
            }
        }
        Ok(SpreadSet { field: field.clone(), mats })
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn matrices(&self) -> &[Matrix2] {
        &self.mats
    }

    /// The set of transposes, which is again a spread set.
    pub fn transpose(&self) -> SpreadSet {
        let mut mats: Vec<Matrix2> = self.mats.iter().map(Matrix2::transpose).collect();
        mats.sort();
        SpreadSet { field: self.field.clone(), mats }
    }

    /// One text line of `4 q^2` characters, without newline.
    pub fn encode_line(&self) -> String {
        self.mats.iter().flat_map(|m| m.encode(&self.field)).collect()
    }

    pub fn decode_line(text: &str, field: &Field) -> Result<SpreadSet, SpreadSetError> {
        let text = text.trim_end();
        let q = field.q();
        let chars: Vec<char> = text.chars().collect();
        if chars.len() != 4 * q * q {
            return Err(SpreadSetError::BadLength { expected: 4 * q * q, found: chars.len() });
        }
        let mats = chars
            .chunks(4)
            .map(|c| {
                Ok(Matrix2::new(
                    field.decode_char(c[0])?,
                    field.decode_char(c[1])?,
                    field.decode_char(c[2])?,
                    field.decode_char(c[3])?,
                ))
            })
            .collect::<Result<Vec<_>, SpreadSetError>>()?;
        SpreadSet::new(field, mats)
    }
}

fn unit(i: usize) -> Vec4 {
    let mut v = [Gf::ZERO; 4];
    v[i] = Gf::ONE;
    v
}

/// `W_inf`, spanned by the last two unit vectors.
pub fn w_infinity(geom: &Geometry) -> LineId {
    geom.line_of_span(&[unit(2), unit(3)]).expect("unit vectors span a line")
}

/// `W_A = {(x, xA)}`.
pub fn graph_line(geom: &Geometry, m: &Matrix2) -> LineId {
    let rows = [[Gf::ONE, Gf::ZERO, m.a, m.b], [Gf::ZERO, Gf::ONE, m.c, m.d]];
    geom.line_of_span(&rows).expect("graph of a matrix is a line")
}

/// The spread `{W_inf} ∪ {W_A}`, sorted.
pub fn from_spread_set(geom: &Geometry, set: &SpreadSet) -> Vec<LineId> {
    let mut lines: Vec<LineId> = std::iter::once(w_infinity(geom))
        .chain(set.mats.iter().map(|m| graph_line(geom, m)))
        .collect();
    lines.sort_unstable();
    lines
}

/// Matrices of the spread after the map sending `to_zero` onto `W_0` and
/// `to_inf` onto `W_inf` by their stored bases.
fn matrices_for(geom: &Geometry, spread: &[LineId], to_zero: LineId, to_inf: LineId) -> Option<Vec<Matrix2>> {
    let f = geom.field();
    let a = geom.line(to_zero).basis();
    let b = geom.line(to_inf).basis();
    let m: Mat4 = [a[0], a[1], b[0], b[1]];
    let minv = mat_inverse(f, &m)?;
    let mut out = Vec::with_capacity(spread.len() - 1);
    for &l in spread {
        if l == to_inf {
            continue;
        }
        let rows = geom.line(l).basis().map(|r| crate::collineation::vec_mat(f, &r, &minv));
        let p = Matrix2::new(rows[0][0], rows[0][1], rows[1][0], rows[1][1]);
        let qm = Matrix2::new(rows[0][2], rows[0][3], rows[1][2], rows[1][3]);
        out.push(p.inverse(f)?.mul(f, &qm));
    }
    out.sort();
    Some(out)
}

/// A spread set of `spread`. Every ordered pair of its lines is tried as the
/// pair sent to `W_0` and `W_inf`, keeping the set with the least text line,
/// so the result depends only on the spread.
pub fn to_spread_set(geom: &Geometry, spread: &[LineId]) -> Result<SpreadSet, SpreadSetError> {
    if !is_spread(geom, spread) {
        return Err(SpreadSetError::NotSpread);
    }
    let f = geom.field();
    let mut best: Option<Vec<Matrix2>> = None;
    for &z in spread {
        for &i in spread {
            if z == i {
                continue;
            }
            let mats = matrices_for(geom, spread, z, i).ok_or(SpreadSetError::NotSpread)?;
            if best.as_ref().is_none_or(|b| mats < *b) {
                best = Some(mats);
            }
        }
    }
    SpreadSet::new(f, best.expect("a spread has at least two lines"))
}

/// `{aI + bC}` for the companion matrix C of the least irreducible monic
/// quadratic; a field of order q^2, giving the regular spread.
pub fn regular_spread_set(field: &Field) -> SpreadSet {
    let q = field.q();
    let (b0, c0) = (0..q)
        .flat_map(|b| (0..q).map(move |c| (Gf(b as u8), Gf(c as u8))))
        .find(|&(b, c)| field.elements().all(|x| !field.add(field.add(field.mul(x, x), field.mul(b, x)), c).is_zero()))
        .expect("an irreducible quadratic exists");
    let comp = Matrix2::new(Gf::ZERO, Gf::ONE, field.neg(c0), field.neg(b0));
    let mats = field
        .elements()
        .flat_map(|a| field.elements().map(move |b| (a, b)))
        .map(|(a, b)| Matrix2::IDENTITY.scale(field, a).add(field, &comp.scale(field, b)))
        .collect();
    SpreadSet::new(field, mats).expect("a quadratic extension field is a spread set")
}

/// Writes one set per line.
pub fn write_spread_sets<W: Write>(mut w: W, sets: &[SpreadSet]) -> io::Result<()> {
    for s in sets {
        writeln!(w, "{}", s.encode_line())?;
    }
    Ok(())
}

/// Reads one set per nonblank line, keeping per-line errors with 1-based line numbers.
pub fn read_spread_sets<R: BufRead>(r: R, field: &Field) -> io::Result<Vec<(usize, Result<SpreadSet, SpreadSetError>)>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push((i + 1, SpreadSet::decode_line(&line, field)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom(q: usize) -> Geometry {
        Geometry::new(Field::of_order(q).unwrap())
    }

    #[test]
    fn w_infinity_is_line_zero() {
        let g = geom(3);
        assert_eq!(w_infinity(&g), 0);
        assert!(!g.lines_meet(0, graph_line(&g, &Matrix2::ZERO)));
    }

    #[test]
    fn regular_set_is_a_field() {
        for q in [2, 3, 4, 5, 8] {
            let f = Field::of_order(q).unwrap();
            let s = regular_spread_set(&f);
            let mats = s.matrices();
            for x in mats {
                for y in mats {
                    assert!(mats.binary_search(&x.add(&f, y)).is_ok());
                    assert!(mats.binary_search(&x.mul(&f, y)).is_ok());
                }
            }
            let g = geom(q);
            assert!(is_spread(&g, &from_spread_set(&g, &s)));
        }
    }

    #[test]
    fn zero_encodes_first_and_q2_line() {
        let f = Field::of_order(2).unwrap();
        let s = regular_spread_set(&f);
        let line = s.encode_line();
        assert_eq!(line.len(), 16);
        assert!(line.starts_with("0000"));
        assert_eq!(SpreadSet::decode_line(&line, &f).unwrap(), s);
    }

    #[test]
    fn rejects_equal_matrices_and_bad_lines() {
        let f = Field::of_order(2).unwrap();
        let bad = SpreadSet::new(&f, vec![Matrix2::ZERO, Matrix2::IDENTITY, Matrix2::IDENTITY, Matrix2::ZERO]);
        assert!(matches!(bad, Err(SpreadSetError::SingularDifference(..))));
        assert!(matches!(SpreadSet::decode_line("0000", &f), Err(SpreadSetError::BadLength { .. })));
        assert!(matches!(SpreadSet::decode_line("0000100101101102", &f), Err(SpreadSetError::BadChar(_))));
    }

    #[test]
    fn fixed_point_of_normalization() {
        // a spread containing W_inf and W_0 yields its own matrices under the identity transport
        let g = geom(3);
        let s = regular_spread_set(g.field());
        let spread = from_spread_set(&g, &s);
        let w0 = graph_line(&g, &Matrix2::ZERO);
        let mats = matrices_for(&g, &spread, w0, 0).unwrap();
        assert_eq!(mats, s.matrices());
    }

    #[test]
    fn transpose_is_an_involution() {
        let f = Field::of_order(4).unwrap();
        let s = regular_spread_set(&f);
        let t = s.transpose();
        assert_eq!(t.transpose(), s);
        assert!(SpreadSet::new(&f, t.matrices().to_vec()).is_ok());
    }

    #[test]
    fn file_round_trip() {
        let f = Field::of_order(3).unwrap();
        let s = regular_spread_set(&f);
        let mut buf = Vec::new();
        write_spread_sets(&mut buf, &[s.clone(), s.transpose()]).unwrap();
        let text = String::from_utf8(buf).unwrap() + "short\n";
        let read = read_spread_sets(text.as_bytes(), &f).unwrap();
        assert_eq!(read.len(), 3);
        assert_eq!(read[0].1.as_ref().unwrap(), &s);
        assert_eq!(read[2].0, 3);
        assert!(read[2].1.is_err());
    }
}
