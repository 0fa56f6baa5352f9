use std::collections::{BTreeSet, HashSet, VecDeque};
use std::sync::OnceLock;

use num_bigint::BigUint;
use proptest::prelude::*;

use pgspread::bits::BitMatrix;
use pgspread::collineation::Groups;
use pgspread::gf::{Field, Gf};
use pgspread::permgrp::{Perm, PermGroup};
use pgspread::pg3::Geometry;
use pgspread::rank::{p_rank, rank_spread};
use pgspread::search::{exact_cover_solve, is_spread, ExactCoverInstance};
use pgspread::spreadset::{from_spread_set, regular_spread_set, to_spread_set, Matrix2, SpreadSet};

const ORDERS: [usize; 7] = [2, 3, 4, 5, 7, 8, 9];

fn setup(q: usize) -> &'static (Geometry, Groups) {
    static CACHE: [OnceLock<(Geometry, Groups)>; 4] = [OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new()];
    CACHE[q - 2].get_or_init(|| {
        let g = Geometry::new(Field::of_order(q).unwrap());
        let gr = Groups::new(&g).unwrap();
        (g, gr)
    })
}

/// Polynomial arithmetic on coefficient vectors, reduced by the field's polynomial.
fn poly_mul(f: &Field, a: &[u32], b: &[u32]) -> Vec<u32> {
    let p = f.p();
    let e = f.e() as usize;
    let modulus = f.prim_poly();
    let mut prod = vec![0u32; 2 * e];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x * y) % p;
        }
    }
    for k in (e..2 * e).rev() {
        let c = prod[k];
        if c == 0 {
            continue;
        }
        for (i, &m) in modulus.iter().enumerate() {
            let idx = k - e + i;
            prod[idx] = (prod[idx] + (p - c) * m as u32 % p) % p;
        }
    }
    prod.truncate(e);
    prod
}

fn naive_rank(rows: &[Vec<u8>], p: u64) -> usize {
    let mut a: Vec<Vec<u64>> = rows.iter().map(|r| r.iter().map(|&x| x as u64 % p).collect()).collect();
    let pow = |mut b: u64, mut n: u64| {
        let mut r = 1;
        while n > 0 {
            if n & 1 == 1 {
                r = r * b % p;
            }
            b = b * b % p;
            n >>= 1;
        }
        r
    };
    let cols = a.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(r) = (rank..a.len()).find(|&r| a[r][c] != 0) else { continue };
        a.swap(r, rank);
        let inv = pow(a[rank][c], p - 2);
        let pivot: Vec<u64> = a[rank].iter().map(|&x| x * inv % p).collect();
        for (i, row) in a.iter_mut().enumerate() {
            if i != rank && row[c] != 0 {
                let k = row[c];
                for (x, &y) in row.iter_mut().zip(&pivot) {
                    *x = (*x + (p - k) * y) % p;
                }
            }
        }
        a[rank] = pivot;
        rank += 1;
    }
    rank
}

fn bit_matrix(rows: &[Vec<u8>]) -> BitMatrix {
    let mut m = BitMatrix::new(rows.len(), rows.first().map_or(0, Vec::len));
    for (r, row) in rows.iter().enumerate() {
        for (c, &x) in row.iter().enumerate() {
            if x != 0 {
                m.set(r, c);
            }
        }
    }
    m
}

fn random_perm_of(group: &PermGroup, seed: u64) -> Perm {
    // words in the generators, so membership does not depend on the chain
    let gens = group.generators();
    let mut g = Perm::identity(group.degree());
    let mut s = seed;
    for _ in 0..20 {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        g = g.compose(&gens[(s >> 33) as usize % gens.len()]);
    }
    g
}

fn set_orbit(group: &PermGroup, set: &[u32]) -> HashSet<Vec<u32>> {
    let mut seen = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(set.to_vec());
    queue.push_back(set.to_vec());
    while let Some(s) = queue.pop_front() {
        for g in group.generators() {
            let t = g.apply_set(&s);
            if seen.insert(t.clone()) {
                queue.push_back(t);
            }
        }
    }
    seen
}

fn arb_matrix(q: usize) -> impl Strategy<Value = Matrix2> {
    (0..q, 0..q, 0..q, 0..q).prop_map(|(a, b, c, d)| Matrix2::new(Gf(a as u8), Gf(b as u8), Gf(c as u8), Gf(d as u8)))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn field_ops_match_polynomial_arithmetic(qi in 0..ORDERS.len(), a in 0usize..9, b in 0usize..9) {
        let f = Field::of_order(ORDERS[qi]).unwrap();
        let (a, b) = (Gf((a % f.q()) as u8), Gf((b % f.q()) as u8));
        let (ca, cb) = (f.coefficients(a), f.coefficients(b));
        let sum: Vec<u32> = ca.iter().zip(&cb).map(|(x, y)| (x + y) % f.p()).collect();
        prop_assert_eq!(f.coefficients(f.add(a, b)), sum);
        prop_assert_eq!(f.coefficients(f.mul(a, b)), poly_mul(&f, &ca, &cb));
        prop_assert_eq!(f.add(f.sub(a, b), b), a);
        if !b.is_zero() {
            prop_assert_eq!(f.mul(f.div(a, b), b), a);
            prop_assert_eq!(f.mul(f.inv(b).unwrap(), b), Gf::ONE);
        }
        if f.e() > 1 {
            // Frobenius is the p-th power map, additive and multiplicative
            let fr = |x| f.frobenius(x, 1).unwrap();
            prop_assert_eq!(fr(a), f.pow(a, f.p() as u64));
            prop_assert_eq!(fr(f.add(a, b)), f.add(fr(a), fr(b)));
            prop_assert_eq!(fr(f.mul(a, b)), f.mul(fr(a), fr(b)));
        }
    }

    #[test]
    fn lines_meet_iff_they_share_a_point(qi in 0usize..3, l1 in 0u32..10_000, l2 in 0u32..10_000) {
        let g = &setup(ORDERS[qi]).0;
        let (l1, l2) = (l1 % g.num_lines() as u32, l2 % g.num_lines() as u32);
        prop_assume!(l1 != l2);
        let a: BTreeSet<_> = g.line(l1).points().iter().collect();
        let shared = g.line(l2).points().iter().any(|p| a.contains(p));
        prop_assert_eq!(g.lines_meet(l1, l2), shared);
        prop_assert_eq!(g.gamma().get(l1 as usize, l2 as usize), shared);
    }

    #[test]
    fn packed_rank_matches_plain_elimination(
        p in prop::sample::select(vec![2u32, 3, 5]),
        rows in prop::collection::vec(prop::collection::vec(prop::bool::weighted(0.3), 50), 50),
    ) {
        let rows: Vec<Vec<u8>> = rows.iter().map(|r| r.iter().map(|&b| b as u8).collect()).collect();
        let m = bit_matrix(&rows);
        let r = p_rank(&m, p);
        prop_assert_eq!(r, naive_rank(&rows, p as u64));
        let t: Vec<Vec<u8>> = (0..50).map(|c| rows.iter().map(|row| row[c]).collect()).collect();
        prop_assert_eq!(p_rank(&bit_matrix(&t), p), r);
    }

    #[test]
    fn minimal_image_is_an_orbit_invariant(qi in 0usize..2, picks in prop::collection::vec(0u32..10_000, 1..6), seed: u64) {
        let (g, gr) = setup(ORDERS[qi]);
        let n = g.num_lines() as u32;
        let set: Vec<u32> = picks.iter().map(|x| x % n).collect::<BTreeSet<_>>().into_iter().collect();
        let c = gr.ext.canonical_image(&set);
        let moved = random_perm_of(&gr.ext, seed).apply_set(&set);
        prop_assert_eq!(&gr.ext.minimal_image(&moved), &c.image);
        prop_assert_eq!(c.transporter(g.num_lines()).apply_set(&set), c.image.clone());
        prop_assert!(c.image <= set);
    }

    #[test]
    fn orbit_times_stabilizer_is_the_group_order(picks in prop::collection::vec(0u32..35, 1..4)) {
        let gr = &setup(2).1;
        let set: Vec<u32> = picks.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let orbit = set_orbit(&gr.pgl, &set);
        let stab = gr.pgl.set_stabilizer_order(&set);
        prop_assert_eq!(stab * BigUint::from(orbit.len()), gr.pgl.order().clone());
        prop_assert_eq!(Some(&gr.pgl.minimal_image(&set)), orbit.iter().min());
    }

    #[test]
    fn solver_matches_subset_enumeration(
        ncols in 1usize..8,
        rows in prop::collection::vec(prop::collection::btree_set(0u32..8, 1..4), 0..12),
    ) {
        let row_cols: Vec<Vec<u32>> = rows
            .into_iter()
            .map(|r| r.into_iter().filter(|&c| (c as usize) < ncols).collect::<Vec<_>>())
            .filter(|r: &Vec<u32>| !r.is_empty())
            .collect();
        let inst = ExactCoverInstance {
            columns: (0..ncols as u32).collect(),
            rows: (0..row_cols.len() as u32).collect(),
            row_cols: row_cols.clone(),
            fixed: vec![],
        };
        let mut found = BTreeSet::new();
        let count = exact_cover_solve(&inst, |sol| {
            let mut s = sol.to_vec();
            s.sort_unstable();
            found.insert(s);
        });
        let mut expected = BTreeSet::new();
        for mask in 0u32..(1 << row_cols.len()) {
            let mut cover = vec![0; ncols];
            for (i, r) in row_cols.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    for &c in r {
                        cover[c as usize] += 1;
                    }
                }
            }
            if cover.iter().all(|&k| k == 1) {
                expected.insert((0..row_cols.len() as u32).filter(|&i| mask >> i & 1 == 1).collect::<Vec<_>>());
            }
        }
        prop_assert_eq!(count as usize, found.len());
        prop_assert_eq!(found, expected);
    }

    #[test]
    fn transformed_spread_sets_keep_their_invariants(
        qi in 0usize..4,
        p in arb_matrix(9),
        r in arb_matrix(9),
        shift in 0usize..81,
    ) {
        let q = ORDERS[qi];
        let f = Field::of_order(q).unwrap();
        let red = |m: Matrix2| Matrix2::new(Gf(m.a.0 % q as u8), Gf(m.b.0 % q as u8), Gf(m.c.0 % q as u8), Gf(m.d.0 % q as u8));
        let (p, r) = (red(p), red(r));
        prop_assume!(!p.det(&f).is_zero() && !r.det(&f).is_zero());
        let base = regular_spread_set(&f);
        let a0 = base.matrices()[shift % base.matrices().len()];
        // differences are preserved by a shift and by multiplying on both sides
        let mats = base.matrices().iter().map(|m| p.mul(&f, &m.sub(&f, &a0)).mul(&f, &r)).collect();
        let set = SpreadSet::new(&f, mats).expect("still a spread set");
        prop_assert_eq!(set.transpose().transpose(), set.clone());
        prop_assert_eq!(SpreadSet::decode_line(&set.encode_line(), &f).unwrap(), set.clone());
        prop_assert_eq!(set.encode_line().len(), 4 * q * q);
        let g = &setup(q).0;
        let spread = from_spread_set(g, &set);
        prop_assert!(is_spread(g, &spread));
        prop_assert!(is_spread(g, &from_spread_set(g, &set.transpose())));
        let normal = to_spread_set(g, &spread).unwrap();
        let rank = |s: &SpreadSet| rank_spread(g, &from_spread_set(g, s), 0).unwrap().rank;
        prop_assert_eq!(rank(&normal), rank(&set));
    }
}
