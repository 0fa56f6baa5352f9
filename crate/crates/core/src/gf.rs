//! Arithmetic in the small Galois fields GF(q), q = p^e <= 9.
//!
//! Elements are stored in exponential encoding: index 0 is the zero element
//! and index `j > 0` is `x^(j-1)` for a fixed primitive element `x`. This is
//! the same convention the spread-set text format uses, so encoding an element
//! as a character is just writing its index as a digit.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("unsupported field GF({p}^{e}): q must be one of 2, 3, 4, 5, 7, 8, 9")]
    Unsupported { p: u32, e: u32 },
    #[error("polynomial {poly:?} is not primitive over GF({p})")]
    NotPrimitive { poly: Vec<u8>, p: u32 },
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("character {ch:?} does not encode an element of GF({q})")]
    BadChar { ch: char, q: usize },
    #[error("Frobenius exponent {k} out of range for extension degree {e}")]
    BadFrobenius { k: u32, e: u32 },
}

/// A field element in exponential encoding.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Gf(pub u8);

impl Gf {
    pub const ZERO: Gf = Gf(0);
    pub const ONE: Gf = Gf(1);

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Orders with a fixed primitive polynomial. Coefficients are listed from the
/// constant term upwards and the polynomial is monic.
const DEFAULT_POLYS: &[(u32, u32, &[u8])] = &[
    (2, 1, &[1, 1]),    // x + 1, root 1
    (3, 1, &[1, 1]),    // x - 2, root 2
    (5, 1, &[3, 1]),    // x - 2, root 2
    (7, 1, &[4, 1]),    // x - 3, root 3
    (2, 2, &[1, 1, 1]), // x^2 + x + 1
    (2, 3, &[1, 1, 0, 1]), // x^3 + x + 1
    (3, 2, &[2, 1, 1]), // x^2 + x + 2
];

/// The finite field GF(p^e) with precomputed operation tables.
#[derive(Clone, Debug)]
pub struct Field {
    p: u32,
    e: u32,
    q: usize,
    prim_poly: Vec<u8>,
    add: Vec<u8>,
    neg: Vec<u8>,
    inv: Vec<u8>,
    /// `frob[k * q + a]` is `a^(p^k)`.
    frob: Vec<u8>,
    /// Base-p digit packing of each element's polynomial representation.
    poly_of: Vec<u16>,
}

impl Field {
    /// The field of order `p^e` with the repository's fixed primitive polynomial.
    pub fn new(p: u32, e: u32) -> Result<Field, FieldError> {
        let poly = DEFAULT_POLYS
            .iter()
            .find(|(pp, ee, _)| *pp == p && *ee == e)
            .map(|(_, _, poly)| poly.to_vec())
            .ok_or(FieldError::Unsupported { p, e })?;
        Field::with_poly(p, e, &poly)
    }

    /// The field of order `q`.
    pub fn of_order(q: usize) -> Result<Field, FieldError> {
        let (p, e) = match q {
            2 => (2, 1),
            3 => (3, 1),
            4 => (2, 2),
            5 => (5, 1),
            7 => (7, 1),
            8 => (2, 3),
            9 => (3, 2),
            _ => return Err(FieldError::Unsupported { p: q as u32, e: 1 }),
        };
        Field::new(p, e)
    }

    /// Builds GF(p^e) from an explicit monic polynomial (constant term first).
    pub fn with_poly(p: u32, e: u32, poly: &[u8]) -> Result<Field, FieldError> {
        if !DEFAULT_POLYS.iter().any(|(pp, ee, _)| *pp == p && *ee == e) {
            return Err(FieldError::Unsupported { p, e });
        }
        let not_primitive = || FieldError::NotPrimitive { poly: poly.to_vec(), p };
        if poly.len() != e as usize + 1 || poly[e as usize] != 1 || poly.iter().any(|&c| c as u32 >= p) {
            return Err(not_primitive());
        }
        let q = (p as usize).pow(e);
        let pu = p as usize;
        let digits = |mut v: usize| -> Vec<usize> {
            (0..e)
                .map(|_| {
                    let d = v % pu;
                    v /= pu;
                    d
                })
                .collect()
        };
        let pack = |ds: &[usize]| -> usize { ds.iter().rev().fold(0, |acc, &d| acc * pu + d) };

        // Successive powers of x, reduced modulo the polynomial.
        let mut exp = Vec::with_capacity(q - 1);
        let mut cur = vec![0usize; e as usize];
        cur[0] = 1;
        for _ in 0..q - 1 {
            exp.push(pack(&cur));
            // multiply by x
            let top = cur[e as usize - 1];
            for i in (1..e as usize).rev() {
                cur[i] = cur[i - 1];
            }
            cur[0] = 0;
            for (i, c) in cur.iter_mut().enumerate() {
                *c = (*c + (pu - poly[i] as usize) * top) % pu;
            }
        }
        if pack(&cur) != 1 {
            return Err(not_primitive());
        }
        let mut log = vec![usize::MAX; q];
        for (k, &v) in exp.iter().enumerate() {
            if v == 0 || log[v] != usize::MAX {
                return Err(not_primitive());
            }
            log[v] = k;
        }

        let idx_of = |v: usize| if v == 0 { 0 } else { log[v] + 1 };
        let poly_of: Vec<u16> = (0..q)
            .map(|j| if j == 0 { 0 } else { exp[j - 1] as u16 })
            .collect();

        let mut add = vec![0u8; q * q];
        let mut neg = vec![0u8; q];
        for a in 0..q {
            let da = digits(poly_of[a] as usize);
            for b in 0..q {
                let db = digits(poly_of[b] as usize);
                let s: Vec<usize> = da.iter().zip(&db).map(|(x, y)| (x + y) % pu).collect();
                add[a * q + b] = idx_of(pack(&s)) as u8;
            }
            let n: Vec<usize> = da.iter().map(|x| (pu - x) % pu).collect();
            neg[a] = idx_of(pack(&n)) as u8;
        }
        let mut inv = vec![0u8; q];
        for j in 1..q {
            inv[j] = ((q - 1 - (j - 1)) % (q - 1) + 1) as u8;
        }
        let mut frob = vec![0u8; e as usize * q];
        for k in 0..e as usize {
            let pk = pu.pow(k as u32);
            for j in 1..q {
                frob[k * q + j] = (((j - 1) * pk) % (q - 1) + 1) as u8;
            }
        }

        Ok(Field {
            p,
            e,
            q,
            prim_poly: poly.to_vec(),
            add,
            neg,
            inv,
            frob,
            poly_of,
        })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn e(&self) -> u32 {
        self.e
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Primitive polynomial, constant term first.
    pub fn prim_poly(&self) -> &[u8] {
        &self.prim_poly
    }

    /// All elements in index order.
    pub fn elements(&self) -> impl Iterator<Item = Gf> {
        (0..self.q as u8).map(Gf)
    }

    /// The primitive element `x` (index 2); for GF(2) this is 1.
    pub fn generator(&self) -> Gf {
        if self.q == 2 {
            Gf::ONE
        } else {
            Gf(2)
        }
    }

    #[inline]
    pub fn add(&self, a: Gf, b: Gf) -> Gf {
        Gf(self.add[a.index() * self.q + b.index()])
    }

    #[inline]
    pub fn sub(&self, a: Gf, b: Gf) -> Gf {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn neg(&self, a: Gf) -> Gf {
        Gf(self.neg[a.index()])
    }

    #[inline]
    pub fn mul(&self, a: Gf, b: Gf) -> Gf {
        if a.0 == 0 || b.0 == 0 {
            return Gf::ZERO;
        }
        let m = self.q - 1;
        Gf(((a.index() - 1 + b.index() - 1) % m + 1) as u8)
    }

    pub fn inv(&self, a: Gf) -> Result<Gf, FieldError> {
        if a.is_zero() {
            Err(FieldError::ZeroInverse)
        } else {
            Ok(Gf(self.inv[a.index()]))
        }
    }

    /// `a / b`; panics on division by zero, which callers rule out beforehand.
    #[inline]
    pub fn div(&self, a: Gf, b: Gf) -> Gf {
        assert!(!b.is_zero(), "division by zero in GF({})", self.q);
        self.mul(a, Gf(self.inv[b.index()]))
    }

    /// `a^(p^k)`.
    pub fn frobenius(&self, a: Gf, k: u32) -> Result<Gf, FieldError> {
        if k >= self.e {
            return Err(FieldError::BadFrobenius { k, e: self.e });
        }
        Ok(self.frob_unchecked(a, k))
    }

    #[inline]
    pub(crate) fn frob_unchecked(&self, a: Gf, k: u32) -> Gf {
        Gf(self.frob[k as usize * self.q + a.index()])
    }

    pub fn pow(&self, a: Gf, n: u64) -> Gf {
        if n == 0 {
            return Gf::ONE;
        }
        if a.is_zero() {
            return Gf::ZERO;
        }
        let m = (self.q - 1) as u64;
        Gf((((a.index() as u64 - 1) * (n % m)) % m + 1) as u8)
    }

    /// Base-p digits (constant term first) of the polynomial representing `a`.
    pub fn coefficients(&self, a: Gf) -> Vec<u32> {
        let mut v = self.poly_of[a.index()] as u32;
        (0..self.e)
            .map(|_| {
                let d = v % self.p;
                v /= self.p;
                d
            })
            .collect()
    }

    /// The character for `a` in the spread-set text format.
    pub fn encode_char(&self, a: Gf) -> char {
        char::from(b'0' + a.0)
    }

    pub fn decode_char(&self, c: char) -> Result<Gf, FieldError> {
        match c.to_digit(10) {
            Some(d) if (d as usize) < self.q => Ok(Gf(d as u8)),
            _ => Err(FieldError::BadChar { ch: c, q: self.q }),
        }
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.e == other.e && self.prim_poly == other.prim_poly
    }
}

impl Eq for Field {}

#[cfg(test)]
mod tests {
    use super::*;

    const SUPPORTED: [usize; 7] = [2, 3, 4, 5, 7, 8, 9];

    #[test]
    fn gf8_uses_x3_x_1() {
        let f = Field::new(2, 3).unwrap();
        assert_eq!(f.q(), 8);
        assert_eq!(f.prim_poly(), &[1, 1, 0, 1]);
        assert_eq!(f.mul(Gf(2), Gf(2)), Gf(3));
        // x + 1 = x^3
        assert_eq!(f.add(Gf(2), Gf(1)), Gf(4));
        assert_eq!(f.decode_char('4').unwrap(), f.pow(Gf(2), 3));
        assert_eq!(f.decode_char('1').unwrap(), Gf::ONE);
        assert_eq!(f.decode_char('0').unwrap(), Gf::ZERO);
    }

    #[test]
    fn gf2_tables() {
        let f = Field::new(2, 1).unwrap();
        assert_eq!(f.elements().count(), 2);
        assert_eq!(f.add(Gf::ONE, Gf::ONE), Gf::ZERO);
        assert_eq!(f.mul(Gf::ONE, Gf::ONE), Gf::ONE);
        assert_eq!(f.generator(), Gf::ONE);
    }

    #[test]
    fn field_axioms_exhaustive() {
        for q in SUPPORTED {
            let f = Field::of_order(q).unwrap();
            let els: Vec<Gf> = f.elements().collect();
            for &a in &els {
                assert_eq!(f.add(a, Gf::ZERO), a);
                assert_eq!(f.mul(a, Gf::ONE), a);
                assert_eq!(f.add(a, f.neg(a)), Gf::ZERO);
                if !a.is_zero() {
                    assert_eq!(f.mul(a, f.inv(a).unwrap()), Gf::ONE);
                }
                for &b in &els {
                    assert_eq!(f.add(a, b), f.add(b, a));
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    for &c in &els {
                        assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                        assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                        assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                    }
                }
            }
        }
    }

    #[test]
    fn generator_has_full_order() {
        for q in SUPPORTED {
            let f = Field::of_order(q).unwrap();
            let g = f.generator();
            let mut seen = std::collections::HashSet::new();
            let mut x = Gf::ONE;
            for _ in 0..q - 1 {
                seen.insert(x);
                x = f.mul(x, g);
            }
            assert_eq!(x, Gf::ONE);
            assert_eq!(seen.len(), q - 1, "GF({q})");
        }
    }

    #[test]
    fn frobenius_is_automorphism_of_order_e() {
        for q in SUPPORTED {
            let f = Field::of_order(q).unwrap();
            for a in f.elements() {
                // a^(p^e) = a
                let mut b = a;
                for _ in 0..f.e() {
                    b = f.frobenius(b, 1 % f.e()).unwrap();
                }
                assert_eq!(b, a);
                for k in 0..f.e() {
                    assert_eq!(f.frobenius(a, k).unwrap(), f.pow(a, (f.p() as u64).pow(k)));
                    for c in f.elements() {
                        let lhs = f.frobenius(f.add(a, c), k).unwrap();
                        let rhs = f.add(f.frobenius(a, k).unwrap(), f.frobenius(c, k).unwrap());
                        assert_eq!(lhs, rhs);
                    }
                }
            }
        }
        let f8 = Field::of_order(8).unwrap();
        assert!(f8.frobenius(Gf(3), 3).is_err());
    }

    #[test]
    fn inverse_of_zero_is_an_error() {
        let f = Field::of_order(5).unwrap();
        assert_eq!(f.inv(Gf::ZERO), Err(FieldError::ZeroInverse));
    }

    #[test]
    fn char_encoding_is_a_bijection() {
        for q in SUPPORTED {
            let f = Field::of_order(q).unwrap();
            let chars: Vec<char> = f.elements().map(|a| f.encode_char(a)).collect();
            for (a, c) in f.elements().zip(&chars) {
                assert_eq!(f.decode_char(*c).unwrap(), a);
            }
            let uniq: std::collections::HashSet<_> = chars.iter().collect();
            assert_eq!(uniq.len(), q);
            assert!(f.decode_char(char::from(b'0' + q as u8)).is_err());
            assert!(f.decode_char('x').is_err());
        }
    }

    #[test]
    fn rejects_unsupported_and_non_primitive() {
        assert!(matches!(Field::new(2, 4), Err(FieldError::Unsupported { .. })));
        assert!(matches!(Field::of_order(6), Err(FieldError::Unsupported { .. })));
        // x^2 + 1 is irreducible over GF(3) but x has order 4
        assert!(matches!(
            Field::with_poly(3, 2, &[1, 0, 1]),
            Err(FieldError::NotPrimitive { .. })
        ));
        // x^3 + x^2 + 1 is primitive over GF(2) and must be accepted as an override
        assert!(Field::with_poly(2, 3, &[1, 0, 1, 1]).is_ok());
        // x^2 + 1 = (x + 1)^2 over GF(2)
        assert!(Field::with_poly(2, 2, &[1, 0, 1]).is_err());
    }

    /// Independent polynomial arithmetic over GF(3): multiplication of residues
    /// modulo a monic quadratic, used to find every primitive quadratic.
    #[test]
    fn gf9_polynomial_is_the_least_primitive_quadratic() {
        let mulmod = |a: (u32, u32), b: (u32, u32), c0: u32, c1: u32| -> (u32, u32) {
            // (a0 + a1 x)(b0 + b1 x) with x^2 = -c1 x - c0
            let x0 = a.0 * b.0;
            let x1 = a.0 * b.1 + a.1 * b.0;
            let x2 = a.1 * b.1;
            ((x0 + x2 * (3 - c0) % 3) % 3, (x1 + x2 * (3 - c1) % 3) % 3)
        };
        let mut primitive = Vec::new();
        for c1 in 0..3 {
            for c0 in 0..3 {
                let mut y = (1u32, 0u32);
                let mut order = 0;
                for k in 1..=8 {
                    y = mulmod(y, (0, 1), c0, c1);
                    if y == (1, 0) {
                        order = k;
                        break;
                    }
                }
                if order == 8 {
                    primitive.push([c0 as u8, c1 as u8, 1]);
                }
            }
        }
        primitive.sort_by(|a, b| a.iter().rev().cmp(b.iter().rev()));
        assert_eq!(primitive, vec![[2, 1, 1], [2, 2, 1]]);
        let f = Field::new(3, 2).unwrap();
        assert_eq!(f.prim_poly(), &primitive[0]);
        assert_eq!(f.pow(Gf(2), 8), Gf::ONE);
        assert!((1..8).all(|k| f.pow(Gf(2), k) != Gf::ONE));
    }
}
