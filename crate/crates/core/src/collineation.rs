//! Collineations and correlations of PG(3,q) and the line permutation groups
//! they generate.

use num_bigint::BigUint;
use num_traits::One;

use crate::gf::{Field, Gf};
use crate::permgrp::{GroupError, Perm, PermGroup};
use crate::pg3::{Geometry, LineId, Vec4};

/// 4x4 matrix over GF(q), acting on row vectors from the right.
pub type Mat4 = [Vec4; 4];

pub fn identity4() -> Mat4 {
    let mut m = [[Gf::ZERO; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Gf::ONE;
    }
    m
}

pub fn mat_mul(f: &Field, a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[Gf::ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let mut s = Gf::ZERO;
            for k in 0..4 {
                s = f.add(s, f.mul(a[i][k], b[k][j]));
            }
            out[i][j] = s;
        }
    }
    out
}

pub fn vec_mat(f: &Field, v: &Vec4, m: &Mat4) -> Vec4 {
    let mut out = [Gf::ZERO; 4];
    for (j, o) in out.iter_mut().enumerate() {
        for k in 0..4 {
            *o = f.add(*o, f.mul(v[k], m[k][j]));
        }
    }
    out
}

pub fn transpose(m: &Mat4) -> Mat4 {
    let mut out = [[Gf::ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[j][i] = m[i][j];
        }
    }
    out
}

/// Inverse by Gauss-Jordan elimination; `None` if singular.
pub fn mat_inverse(f: &Field, m: &Mat4) -> Option<Mat4> {
    let mut a = *m;
    let mut inv = identity4();
    for col in 0..4 {
        let piv = (col..4).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        inv.swap(col, piv);
        let s = f.inv(a[col][col]).ok()?;
        for j in 0..4 {
            a[col][j] = f.mul(a[col][j], s);
            inv[col][j] = f.mul(inv[col][j], s);
        }
        for r in 0..4 {
            if r != col && !a[r][col].is_zero() {
                let c = a[r][col];
                for j in 0..4 {
                    a[r][j] = f.sub(a[r][j], f.mul(c, a[col][j]));
                    inv[r][j] = f.sub(inv[r][j], f.mul(c, inv[col][j]));
                }
            }
        }
    }
    Some(inv)
}

fn frob_mat(f: &Field, m: &Mat4, k: u32) -> Mat4 {
    m.map(|row| row.map(|c| f.frob_unchecked(c, k)))
}

/// A semilinear map `v -> frob^k(v) * matrix`, followed by taking orthogonal
/// complements when `dual` is set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Collineation {
    pub matrix: Mat4,
    pub frob: u32,
    pub dual: bool,
}

impl Collineation {
    pub fn identity() -> Collineation {
        Collineation { matrix: identity4(), frob: 0, dual: false }
    }

    pub fn linear(matrix: Mat4) -> Collineation {
        Collineation { matrix, frob: 0, dual: false }
    }

    /// `self` followed by `other`.
    pub fn then(&self, other: &Collineation, f: &Field) -> Collineation {
        // perp(U) * B = perp(U * B^-T), so a complement can be moved to the end
        let b = if self.dual {
            transpose(&mat_inverse(f, &other.matrix).expect("collineation matrices are invertible"))
        } else {
            other.matrix
        };
        Collineation {
            matrix: mat_mul(f, &frob_mat(f, &self.matrix, other.frob), &b),
            frob: (self.frob + other.frob) % f.e(),
            dual: self.dual ^ other.dual,
        }
    }

    pub fn apply_line(&self, geom: &Geometry, l: LineId) -> LineId {
        let img = geom.apply_semilinear(l, &self.matrix, self.frob);
        if self.dual {
            geom.perp(img)
        } else {
            img
        }
    }

    /// The induced permutation of line ids.
    pub fn line_perm(&self, geom: &Geometry) -> Perm {
        let images = (0..geom.num_lines() as LineId).map(|l| self.apply_line(geom, l)).collect();
        Perm::from_images(images).expect("an invertible map permutes lines")
    }
}

/// Matrices and field automorphism generating PGammaL(4,q): a diagonal matrix
/// with a primitive element, one transvection, two permutation matrices
/// generating S4, and the Frobenius map when q is not prime.
pub fn pgammal_collineations(field: &Field) -> Vec<Collineation> {
    let mut out = Vec::new();
    let mut d = identity4();
    d[0][0] = field.generator();
    if d != identity4() {
        out.push(Collineation::linear(d));
    }
    let mut t = identity4();
    t[0][1] = Gf::ONE;
    out.push(Collineation::linear(t));
    let mut swap = [[Gf::ZERO; 4]; 4];
    swap[0][1] = Gf::ONE;
    swap[1][0] = Gf::ONE;
    swap[2][2] = Gf::ONE;
    swap[3][3] = Gf::ONE;
    out.push(Collineation::linear(swap));
    let mut cycle = [[Gf::ZERO; 4]; 4];
    for i in 0..4 {
        cycle[i][(i + 1) % 4] = Gf::ONE;
    }
    out.push(Collineation::linear(cycle));
    if field.e() > 1 {
        out.push(Collineation { matrix: identity4(), frob: 1, dual: false });
    }
    out
}

pub fn pgammal_generators(geom: &Geometry) -> Vec<Perm> {
    pgammal_collineations(geom.field()).iter().map(|c| c.line_perm(geom)).collect()
}

/// Line permutation of the orthogonal complement map.
pub fn duality_element(geom: &Geometry) -> Perm {
    Collineation { matrix: identity4(), frob: 0, dual: true }.line_perm(geom)
}

/// `q^6 (q^2-1)(q^3-1)(q^4-1) e`.
pub fn pgammal_order(q: u64, e: u32) -> BigUint {
    let q = BigUint::from(q);
    let one = BigUint::one();
    q.pow(6) * (q.pow(2) - &one) * (q.pow(3) - &one) * (q.pow(4) - &one) * BigUint::from(e)
}

/// The collineation group, its extension by the duality, and the duality.
#[derive(Clone, Debug)]
pub struct Groups {
    pub pgl: PermGroup,
    pub ext: PermGroup,
    pub duality: Perm,
}

impl Groups {
    /// Builds both groups. Orders are checked against the closed form: the
    /// generators lie in the collineation group, so a chain reaching the
    /// closed-form order proves they generate all of it.
    pub fn new(geom: &Geometry) -> Result<Groups, GroupError> {
        let n = geom.num_lines();
        let order = pgammal_order(geom.q() as u64, geom.field().e());
        let gens = pgammal_generators(geom);
        let pgl = PermGroup::with_order(n, gens.clone(), &order)?;
        let duality = duality_element(geom);
        let mut ext_gens = gens;
        ext_gens.push(duality.clone());
        let ext = PermGroup::with_order(n, ext_gens, &(order * 2u32))?;
        Ok(Groups { pgl, ext, duality })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn geom(q: usize) -> Geometry {
        Geometry::new(Field::of_order(q).unwrap())
    }

    fn random_collineation(f: &Field, rng: &mut ChaCha8Rng) -> Collineation {
        loop {
            let mut m = [[Gf::ZERO; 4]; 4];
            for row in m.iter_mut() {
                for c in row.iter_mut() {
                    *c = Gf(rng.gen_range(0..f.q()) as u8);
                }
            }
            if mat_inverse(f, &m).is_some() {
                return Collineation {
                    matrix: m,
                    frob: rng.gen_range(0..f.e()),
                    dual: rng.gen_bool(0.5),
                };
            }
        }
    }

    #[test]
    fn inverse_matrix() {
        let f = Field::of_order(9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let c = random_collineation(&f, &mut rng);
            let inv = mat_inverse(&f, &c.matrix).unwrap();
            assert_eq!(mat_mul(&f, &c.matrix, &inv), identity4());
        }
    }

    #[test]
    fn composition_matches_line_action() {
        for q in [4, 9] {
            let g = geom(q);
            let f = g.field().clone();
            let mut rng = ChaCha8Rng::seed_from_u64(q as u64);
            for _ in 0..10 {
                let a = random_collineation(&f, &mut rng);
                let b = random_collineation(&f, &mut rng);
                let ab = a.then(&b, &f);
                assert_eq!(ab.line_perm(&g), a.line_perm(&g).compose(&b.line_perm(&g)));
            }
        }
    }

    #[test]
    fn identity_collineation_is_identity_perm() {
        let g = geom(3);
        assert!(Collineation::identity().line_perm(&g).is_identity());
    }

    #[test]
    fn closed_form_orders() {
        assert_eq!(pgammal_order(2, 1), BigUint::from(20160u32));
        let q8 = BigUint::from(8u64.pow(6) * 63 * 511) * BigUint::from(4095u32 * 3);
        assert_eq!(pgammal_order(8, 3), q8);
    }

    #[test]
    fn groups_q2() {
        let g = geom(2);
        let gr = Groups::new(&g).unwrap();
        assert_eq!(gr.pgl.order(), &BigUint::from(20160u32));
        assert_eq!(gr.ext.order(), &BigUint::from(40320u32));
        // Monte Carlo chain from the generators alone agrees
        let mc = PermGroup::new(35, gr.pgl.generators().to_vec()).unwrap();
        assert_eq!(mc.order(), &BigUint::from(20160u32));
        let det = PermGroup::schreier_sims(35, gr.ext.generators().to_vec()).unwrap();
        assert_eq!(det.order(), &BigUint::from(40320u32));
        assert!(!gr.pgl.contains(&gr.duality));
        assert!(gr.ext.contains(&gr.duality));
        assert!(gr.duality.compose(&gr.duality).is_identity());
        assert!(gr.ext.is_transitive());
    }

    #[test]
    fn groups_q4_generators_reach_closed_form() {
        let g = geom(4);
        let gr = Groups::new(&g).unwrap();
        assert_eq!(gr.ext.order(), &(pgammal_order(4, 2) * 2u32));
        let mc = PermGroup::new(g.num_lines(), gr.pgl.generators().to_vec()).unwrap();
        assert_eq!(mc.order(), &pgammal_order(4, 2));
    }

    #[test]
    fn duality_preserves_meeting() {
        let g = geom(3);
        let d = duality_element(&g);
        assert_eq!(d.apply(0), g.line_of_span(&[[Gf::ONE, Gf::ZERO, Gf::ZERO, Gf::ZERO], [Gf::ZERO, Gf::ONE, Gf::ZERO, Gf::ZERO]]).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let a = rng.gen_range(0..g.num_lines() as u32);
            let b = rng.gen_range(0..g.num_lines() as u32);
            assert_eq!(g.lines_meet(a, b), g.lines_meet(d.apply(a), d.apply(b)));
        }
    }

    #[test]
    fn other_correlation_lies_in_same_coset() {
        let g = geom(3);
        let gr = Groups::new(&g).unwrap();
        let f = g.field().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..5 {
            let mut c = random_collineation(&f, &mut rng);
            c.dual = true;
            let p = c.line_perm(&g);
            assert!(!gr.pgl.contains(&p));
            assert!(gr.pgl.contains(&p.compose(&gr.duality)));
        }
    }
}
