//! The translation plane of a spread and the rank of its incidence matrix.

use std::collections::BTreeMap;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bits::{self, BitMatrix};
use crate::pg3::{Geometry, LineId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlaneError {
    #[error("expected {expected} components, found {found}")]
    WrongSize { expected: usize, found: usize },
    #[error("line {line} has {found} points instead of {expected}")]
    LineSize { line: usize, found: usize, expected: usize },
    #[error("point {point} lies on {found} lines instead of {expected}")]
    PointDegree { point: usize, found: usize, expected: usize },
    #[error("points {a} and {b} share {found} lines")]
    Join { a: usize, b: usize, found: usize },
}

/// Projective completion of the translation plane of a spread.
///
/// Points `0..q^4` are the vectors of GF(q)^4 (coordinates as base-q digits
/// of their field indices), followed by one point at infinity per component.
/// Lines are the cosets of each component followed by the line at infinity.
#[derive(Clone, Debug)]
pub struct TranslationPlane {
    order: usize,
    incidence: BitMatrix,
}

fn vec_code(q: usize, v: &[usize; 4]) -> usize {
    v.iter().fold(0, |acc, &c| acc * q + c)
}

impl TranslationPlane {
    /// Plane order `n = q^2`.
    pub fn order(&self) -> usize {
        self.order
    }

    /// `n^2 + n + 1`.
    pub fn size(&self) -> usize {
        self.incidence.rows()
    }

    /// Rows are lines, columns points.
    pub fn incidence(&self) -> &BitMatrix {
        &self.incidence
    }

    /// Writes `line point 1` triplets (0-based), one per incidence.
    pub fn write_triplets<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{} {} {}", self.size(), self.size(), self.incidence.count_ones())?;
        for r in 0..self.size() {
            for c in bits::ones(self.incidence.row(r)) {
                writeln!(w, "{r} {c} 1")?;
            }
        }
        Ok(())
    }

    /// Checks line sizes, point degrees, and that pairs of points share one
    /// line: all pairs when there are at most 200 points, otherwise
    /// `samples` random pairs.
    pub fn check_axioms(&self, samples: usize, seed: u64) -> Result<(), PlaneError> {
        let n = self.order;
        let size = self.size();
        let mut by_point = BitMatrix::new(size, size);
        for l in 0..size {
            let found = bits::count(self.incidence.row(l));
            if found != n + 1 {
                return Err(PlaneError::LineSize { line: l, found, expected: n + 1 });
            }
            for p in bits::ones(self.incidence.row(l)) {
                by_point.set(p, l);
            }
        }
        for p in 0..size {
            let found = bits::count(by_point.row(p));
            if found != n + 1 {
                return Err(PlaneError::PointDegree { point: p, found, expected: n + 1 });
            }
        }
        let common = |a: usize, b: usize| -> usize {
            by_point.row(a).iter().zip(by_point.row(b)).map(|(x, y)| (x & y).count_ones() as usize).sum()
        };
        let check = |a: usize, b: usize| -> Result<(), PlaneError> {
            let found = common(a, b);
            if found == 1 {
                Ok(())
            } else {
                Err(PlaneError::Join { a, b, found })
            }
        };
        if size <= 200 {
            for a in 0..size {
                for b in a + 1..size {
                    check(a, b)?;
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..samples {
                let a = rng.gen_range(0..size);
                let b = (a + rng.gen_range(1..size)) % size;
                check(a, b)?;
            }
        }
        Ok(())
    }
}

/// Builds the plane of the q^2 + 1 lines in `spread` and checks the plane
/// axioms (1000 sampled point pairs for large planes).
pub fn build_plane(geom: &Geometry, spread: &[LineId]) -> Result<TranslationPlane, PlaneError> {
    let q = geom.q();
    let f = geom.field();
    if spread.len() != q * q + 1 {
        return Err(PlaneError::WrongSize { expected: q * q + 1, found: spread.len() });
    }
    let n = q * q;
    let affine = n * n;
    let size = n * n + n + 1;
    let mut inc = BitMatrix::new(size, size);
    let mut row = 0;
    let add_vec = |a: &[usize; 4], b: &[usize; 4]| -> [usize; 4] {
        std::array::from_fn(|i| f.add(crate::gf::Gf(a[i] as u8), crate::gf::Gf(b[i] as u8)).index())
    };
    for (k, &l) in spread.iter().enumerate() {
        let basis = geom.line(l).basis();
        let mut comp: Vec<[usize; 4]> = Vec::with_capacity(n);
        for s in f.elements() {
            for t in f.elements() {
                comp.push(std::array::from_fn(|i| f.add(f.mul(s, basis[0][i]), f.mul(t, basis[1][i])).index()));
            }
        }
        let mut done = vec![false; affine];
        for code in 0..affine {
            if done[code] {
                continue;
            }
            let mut v = [0usize; 4];
            let mut c = code;
            for i in (0..4).rev() {
                v[i] = c % q;
                c /= q;
            }
            for w in &comp {
                let p = vec_code(q, &add_vec(&v, w));
                done[p] = true;
                inc.set(row, p);
            }
            inc.set(row, affine + k);
            row += 1;
        }
    }
    for k in 0..=n {
        inc.set(row, affine + k);
    }
    row += 1;
    if row != size {
        return Err(PlaneError::WrongSize { expected: size, found: row });
    }
    let plane = TranslationPlane { order: n, incidence: inc };
    plane.check_axioms(1000, 0x9a7e)?;
    Ok(plane)
}

/// Rank of a 0/1 matrix over GF(p). The input is not modified.
pub fn p_rank(m: &BitMatrix, p: u32) -> usize {
    if p == 2 {
        rank_gf2(m)
    } else {
        let rows: Vec<Vec<u8>> = (0..m.rows())
            .map(|r| (0..m.cols()).map(|c| m.get(r, c) as u8).collect())
            .collect();
        rank_mod_p(rows, p)
    }
}

fn rank_gf2(m: &BitMatrix) -> usize {
    let mut a = m.clone();
    let stride = a.stride();
    let rows = a.rows();
    let mut rank = 0;
    for col in 0..a.cols() {
        let Some(piv) = (rank..rows).find(|&r| a.get(r, col)) else { continue };
        if piv != rank {
            for w in 0..stride {
                let (x, y) = (a.row(piv)[w], a.row(rank)[w]);
                a.row_mut(piv)[w] = y;
                a.row_mut(rank)[w] = x;
            }
        }
        let pivot_row = a.row(rank).to_vec();
        let start = col / 64;
        for r in rank + 1..rows {
            if a.get(r, col) {
                let row = a.row_mut(r);
                for w in start..stride {
                    row[w] ^= pivot_row[w];
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Gaussian elimination over GF(p) on byte rows.
pub fn rank_mod_p(mut rows: Vec<Vec<u8>>, p: u32) -> usize {
    let p = p as u16;
    let inv: Vec<u8> = (0..p)
        .map(|a| (1..p).find(|&b| a * b % p == 1).unwrap_or(0) as u8)
        .collect();
    let ncols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..ncols {
        let Some(piv) = (rank..rows.len()).find(|&r| rows[r][col] % p as u8 != 0) else { continue };
        rows.swap(piv, rank);
        let s = inv[(rows[rank][col] as u16 % p) as usize] as u16;
        for x in rows[rank][col..].iter_mut() {
            *x = ((*x as u16 * s) % p) as u8;
        }
        let (top, rest) = rows.split_at_mut(rank + 1);
        let pivot = &top[rank];
        for r in rest.iter_mut() {
            let c = r[col] as u16 % p;
            if c == 0 {
                continue;
            }
            let neg = p - c;
            for (x, &y) in r[col..].iter_mut().zip(&pivot[col..]) {
                *x = ((*x as u16 + neg * y as u16) % p) as u8;
            }
        }
        rank += 1;
    }
    rank
}

/// `C(p+1, 2)^m + 1`.
pub fn hamada_bound(p: u64, m: u32) -> u64 {
    (p * (p + 1) / 2).pow(m) + 1
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankReport {
    pub id: usize,
    pub p: u32,
    pub rank: usize,
    pub hamada: u64,
}

impl RankReport {
    pub fn meets_bound(&self) -> bool {
        self.rank as u64 == self.hamada
    }

    /// Whether the rank lies below the conjectured minimum; never expected.
    pub fn below_bound(&self) -> bool {
        (self.rank as u64) < self.hamada
    }
}

/// Ranks the plane of a spread over the characteristic of the field.
pub fn rank_spread(geom: &Geometry, spread: &[LineId], id: usize) -> Result<RankReport, PlaneError> {
    let plane = build_plane(geom, spread)?;
    let f = geom.field();
    let p = f.p();
    Ok(RankReport { id, p, rank: p_rank(plane.incidence(), p), hamada: hamada_bound(p as u64, 2 * f.e()) })
}

/// `(rank, count)` rows, ascending by rank.
pub fn rank_histogram(reports: &[RankReport]) -> Vec<(usize, usize)> {
    let mut h: BTreeMap<usize, usize> = BTreeMap::new();
    for r in reports {
        *h.entry(r.rank).or_default() += 1;
    }
    h.into_iter().collect()
}
