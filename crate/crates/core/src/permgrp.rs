//! Permutation groups acting on line ids.
//!
//! Groups carry a stabilizer chain (base and strong generating set) for
//! membership and exact orders. Canonical forms of point sets are
//! lexicographically least images, found by a breadth-first search that walks
//! down a cached tower of pointwise stabilizers. The same search counts the
//! elements mapping a set onto its least image, which gives set stabilizer
//! orders, and remembers which search branches merged, which gives set
//! stabilizer generators.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use parking_lot::Mutex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("image list is not a permutation of 0..{0}")]
    NotBijection(usize),
    #[error("generator of degree {got} in a group of degree {expected}")]
    DegreeMismatch { got: usize, expected: usize },
    #[error("generators produce a group of order at least {got}, more than the expected {expected}")]
    OrderExceeded { got: BigUint, expected: BigUint },
    #[error("generators only reached order {got} of the expected {expected}")]
    Stalled { got: BigUint, expected: BigUint },
}

/// A permutation of `0..n`, acting on the right: `x^(gh) = (x^g)^h`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Perm(Vec<u32>);

impl fmt::Debug for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return write!(f, "Perm(id; {})", self.0.len());
        }
        write!(f, "Perm(")?;
        let mut seen = vec![false; self.0.len()];
        for start in 0..self.0.len() {
            if seen[start] || self.0[start] as usize == start {
                continue;
            }
            write!(f, "(")?;
            let mut x = start;
            let mut first = true;
            while !seen[x] {
                seen[x] = true;
                if !first {
                    write!(f, " ")?;
                }
                write!(f, "{x}")?;
                first = false;
                x = self.0[x] as usize;
            }
            write!(f, ")")?;
        }
        write!(f, ")")
    }
}

impl Perm {
    pub fn identity(n: usize) -> Perm {
        Perm((0..n as u32).collect())
    }

    pub fn from_images(images: Vec<u32>) -> Result<Perm, GroupError> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &x in &images {
            if x as usize >= n || seen[x as usize] {
                return Err(GroupError::NotBijection(n));
            }
            seen[x as usize] = true;
        }
        Ok(Perm(images))
    }

    /// Images of `0..n` in order.
    pub fn images(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn apply(&self, x: u32) -> u32 {
        self.0[x as usize]
    }

    /// `self` followed by `other`.
    pub fn compose(&self, other: &Perm) -> Perm {
        Perm(self.0.iter().map(|&x| other.0[x as usize]).collect())
    }

    pub fn inverse(&self) -> Perm {
        let mut inv = vec![0u32; self.0.len()];
        for (i, &x) in self.0.iter().enumerate() {
            inv[x as usize] = i as u32;
        }
        Perm(inv)
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &x)| i as u32 == x)
    }

    /// Image of a set, sorted.
    pub fn apply_set(&self, set: &[u32]) -> Vec<u32> {
        let mut out: Vec<u32> = set.iter().map(|&x| self.apply(x)).collect();
        out.sort_unstable();
        out
    }

    fn compose_in_place(&mut self, other: &Perm) {
        for x in self.0.iter_mut() {
            *x = other.0[*x as usize];
        }
    }
}

const NOT_IN_ORBIT: u32 = u32::MAX;
const ROOT: u32 = u32::MAX - 1;

/// Orbit of a root point with a spanning tree: following generator
/// `label[x]` from `x` moves one step closer to the root.
#[derive(Clone, Debug)]
struct SchreierTree {
    root: u32,
    label: Vec<u32>,
    orbit: Vec<u32>,
}

impl SchreierTree {
    fn build(n: usize, root: u32, gen_ids: &[usize], inv: &[Perm]) -> SchreierTree {
        let mut label = vec![NOT_IN_ORBIT; n];
        label[root as usize] = ROOT;
        let mut orbit = vec![root];
        let mut head = 0;
        while head < orbit.len() {
            let z = orbit[head];
            head += 1;
            for &k in gen_ids {
                let x = inv[k].apply(z);
                if label[x as usize] == NOT_IN_ORBIT {
                    label[x as usize] = k as u32;
                    orbit.push(x);
                }
            }
        }
        SchreierTree { root, label, orbit }
    }

    #[inline]
    fn contains(&self, x: u32) -> bool {
        self.label[x as usize] != NOT_IN_ORBIT
    }

    /// Generator ids leading from `x` to the root.
    fn path(&self, gens: &[Perm], mut x: u32) -> Vec<usize> {
        let mut out = Vec::new();
        while x != self.root {
            let k = self.label[x as usize] as usize;
            out.push(k);
            x = gens[k].apply(x);
        }
        out
    }

    /// The element along the tree path, mapping `x` to the root.
    fn to_root(&self, gens: &[Perm], x: u32) -> Perm {
        let mut p = Perm::identity(self.label.len());
        for k in self.path(gens, x) {
            p.compose_in_place(&gens[k]);
        }
        p
    }
}

#[derive(Clone, Debug)]
struct Level {
    base: u32,
    gen_ids: Vec<usize>,
    tree: SchreierTree,
}

/// A base and strong generating set.
#[derive(Clone, Debug)]
pub struct StabChain {
    n: usize,
    gens: Vec<Perm>,
    inv: Vec<Perm>,
    levels: Vec<Level>,
}

struct ProductReplacement {
    slots: Vec<Perm>,
    acc: Perm,
    rng: ChaCha8Rng,
}

impl ProductReplacement {
    fn new(n: usize, gens: &[Perm], seed: u64) -> Self {
        let mut slots: Vec<Perm> = gens.to_vec();
        while slots.len() < 10 {
            slots.push(gens[slots.len() % gens.len()].clone());
        }
        let mut pr = ProductReplacement {
            slots,
            acc: Perm::identity(n),
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        for _ in 0..50 {
            pr.next();
        }
        pr
    }

    fn next(&mut self) -> Perm {
        let len = self.slots.len();
        let i = self.rng.gen_range(0..len);
        let mut j = self.rng.gen_range(0..len - 1);
        if j >= i {
            j += 1;
        }
        let prod = if self.rng.gen_bool(0.5) {
            self.slots[i].compose(&self.slots[j])
        } else {
            self.slots[j].compose(&self.slots[i])
        };
        self.slots[i] = prod;
        self.acc.compose_in_place(&self.slots[i]);
        self.acc.clone()
    }
}

/// Consecutive sifts to the identity after which a chain built without a
/// known order is accepted; the chance of a wrong order is below 2^-48.
const MONTE_CARLO_RUN: usize = 48;

impl StabChain {
    fn empty(n: usize, base: &[u32]) -> StabChain {
        StabChain {
            n,
            gens: Vec::new(),
            inv: Vec::new(),
            levels: base
                .iter()
                .map(|&b| Level {
                    base: b,
                    gen_ids: Vec::new(),
                    tree: SchreierTree::build(n, b, &[], &[]),
                })
                .collect(),
        }
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn base(&self) -> Vec<u32> {
        self.levels.iter().map(|l| l.base).collect()
    }

    /// Fundamental orbit lengths along the base.
    pub fn orbit_lengths(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.tree.orbit.len()).collect()
    }

    pub fn order(&self) -> BigUint {
        self.levels
            .iter()
            .fold(BigUint::one(), |acc, l| acc * BigUint::from(l.tree.orbit.len()))
    }

    pub fn strong_generators(&self) -> &[Perm] {
        &self.gens
    }

    /// Strong generators of the pointwise stabilizer of the first `depth` base points.
    pub fn stabilizer_generators(&self, depth: usize) -> Vec<Perm> {
        match self.levels.get(depth) {
            Some(l) => l.gen_ids.iter().map(|&k| self.gens[k].clone()).collect(),
            None => Vec::new(),
        }
    }

    fn sift_from(&self, g: &Perm, start: usize) -> (Perm, usize) {
        let mut g = g.clone();
        for (i, level) in self.levels.iter().enumerate().skip(start) {
            let x = g.apply(level.base);
            if !level.tree.contains(x) {
                return (g, i);
            }
            for k in level.tree.path(&self.gens, x) {
                g.compose_in_place(&self.gens[k]);
            }
        }
        (g, self.levels.len())
    }

    /// Strips `g` through the chain; returns the residue and the level reached.
    pub fn sift(&self, g: &Perm) -> (Perm, usize) {
        self.sift_from(g, 0)
    }

    pub fn contains(&self, g: &Perm) -> bool {
        g.degree() == self.n && {
            let (r, _) = self.sift(g);
            r.is_identity()
        }
    }

    fn add_strong(&mut self, h: Perm, depth: usize) {
        let k = self.gens.len();
        self.inv.push(h.inverse());
        self.gens.push(h);
        let depth = if depth == self.levels.len() {
            let moved = (0..self.n as u32)
                .find(|&x| self.gens[k].apply(x) != x)
                .expect("residue is not the identity");
            self.levels.push(Level {
                base: moved,
                gen_ids: Vec::new(),
                tree: SchreierTree::build(self.n, moved, &[], &[]),
            });
            self.levels.len() - 1
        } else {
            depth
        };
        for level in self.levels.iter_mut().take(depth + 1) {
            level.gen_ids.push(k);
            level.tree = SchreierTree::build(self.n, level.base, &level.gen_ids, &self.inv);
        }
    }

    fn transversal(&self, level: usize, x: u32) -> Perm {
        let l = &self.levels[level];
        l.tree.to_root(&self.gens, x).inverse()
    }

    /// Randomized Schreier-Sims. With `target` the result is exact (the chain
    /// is built until its order equals the target); without it, the chain is
    /// accepted after a long run of sifts that all reach the identity.
    pub fn random_schreier_sims(
        n: usize,
        gens: &[Perm],
        base: &[u32],
        target: Option<&BigUint>,
        seed: u64,
    ) -> Result<StabChain, GroupError> {
        for g in gens {
            if g.degree() != n {
                return Err(GroupError::DegreeMismatch { got: g.degree(), expected: n });
            }
        }
        let mut chain = StabChain::empty(n, base);
        let gens: Vec<Perm> = gens.iter().filter(|g| !g.is_identity()).cloned().collect();
        for g in &gens {
            let (h, d) = chain.sift(g);
            if !h.is_identity() {
                chain.add_strong(h, d);
            }
        }
        if gens.is_empty() {
            return match target {
                Some(t) if !t.is_one() => Err(GroupError::Stalled { got: BigUint::one(), expected: t.clone() }),
                _ => Ok(chain),
            };
        }
        let stall_limit = if target.is_some() { 4 * MONTE_CARLO_RUN } else { MONTE_CARLO_RUN };
        let mut pr = ProductReplacement::new(n, &gens, seed);
        let mut run = 0;
        loop {
            if let Some(t) = target {
                let order = chain.order();
                if &order == t {
                    return Ok(chain);
                }
                if &order > t {
                    return Err(GroupError::OrderExceeded { got: order, expected: t.clone() });
                }
            }
            if run >= stall_limit {
                return match target {
                    None => Ok(chain),
                    Some(t) => Err(GroupError::Stalled { got: chain.order(), expected: t.clone() }),
                };
            }
            let r = pr.next();
            let (h, d) = chain.sift(&r);
            if h.is_identity() {
                run += 1;
            } else {
                chain.add_strong(h, d);
                run = 0;
            }
        }
    }

    /// Deterministic Schreier-Sims: every Schreier generator at every level
    /// sifts to the identity when this returns.
    pub fn schreier_sims(n: usize, gens: &[Perm]) -> Result<StabChain, GroupError> {
        for g in gens {
            if g.degree() != n {
                return Err(GroupError::DegreeMismatch { got: g.degree(), expected: n });
            }
        }
        let mut chain = StabChain::empty(n, &[]);
        for g in gens.iter().filter(|g| !g.is_identity()) {
            let (h, d) = chain.sift(g);
            if !h.is_identity() {
                chain.add_strong(h, d);
            }
        }
        let mut i = chain.levels.len() as isize - 1;
        while i >= 0 {
            let lvl = i as usize;
            let mut added = None;
            let orbit = chain.levels[lvl].tree.orbit.clone();
            let gen_ids = chain.levels[lvl].gen_ids.clone();
            'scan: for &x in &orbit {
                let ux = chain.transversal(lvl, x);
                for &k in &gen_ids {
                    let s = &chain.gens[k];
                    let y = s.apply(x);
                    let back = chain.levels[lvl].tree.to_root(&chain.gens, y);
                    let h = ux.compose(s).compose(&back);
                    let (r, d) = chain.sift_from(&h, lvl + 1);
                    if !r.is_identity() {
                        chain.add_strong(r, d);
                        added = Some(d);
                        break 'scan;
                    }
                }
            }
            match added {
                Some(d) => i = d as isize,
                None => i -= 1,
            }
        }
        Ok(chain)
    }

    /// A uniformly random element.
    pub fn random_element<R: Rng>(&self, rng: &mut R) -> Perm {
        let mut g = Perm::identity(self.n);
        for lvl in (0..self.levels.len()).rev() {
            let orbit = &self.levels[lvl].tree.orbit;
            let x = orbit[rng.gen_range(0..orbit.len())];
            g = g.compose(&self.transversal(lvl, x));
        }
        g
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Pointwise stabilizer of a prefix of chosen points, with its orbits.
struct PrefixNode {
    n: usize,
    gens: Arc<Vec<Perm>>,
    inv: Vec<Perm>,
    order: BigUint,
    orbit_min: Vec<u32>,
    seed: u64,
    children: Mutex<HashMap<u32, Arc<PrefixChild>>>,
}

/// Step from a node to the stabilizer of one more point `y`: the Schreier
/// tree of `y` under the node's group and the next node.
struct PrefixChild {
    tree: SchreierTree,
    parent_gens: Arc<Vec<Perm>>,
    node: Arc<PrefixNode>,
}

impl PrefixNode {
    fn new(n: usize, gens: Vec<Perm>, order: BigUint, seed: u64) -> PrefixNode {
        let gens: Vec<Perm> = if order.is_one() {
            Vec::new()
        } else {
            gens.into_iter().filter(|g| !g.is_identity()).collect()
        };
        let inv = gens.iter().map(Perm::inverse).collect();
        // union-find over generator cycles, rooted at the least point
        let mut parent: Vec<u32> = (0..n as u32).collect();
        fn find(parent: &mut [u32], mut x: u32) -> u32 {
            while parent[x as usize] != x {
                parent[x as usize] = parent[parent[x as usize] as usize];
                x = parent[x as usize];
            }
            x
        }
        for g in &gens {
            for x in 0..n as u32 {
                let a = find(&mut parent, x);
                let b = find(&mut parent, g.apply(x));
                if a != b {
                    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                    parent[hi as usize] = lo;
                }
            }
        }
        let orbit_min = (0..n as u32).map(|x| find(&mut parent, x)).collect();
        PrefixNode {
            n,
            gens: Arc::new(gens),
            inv,
            order,
            orbit_min,
            seed,
            children: Mutex::new(HashMap::new()),
        }
    }

    fn is_trivial(&self) -> bool {
        self.order.is_one()
    }

    fn child(&self, y: u32) -> Arc<PrefixChild> {
        if let Some(c) = self.children.lock().get(&y) {
            return c.clone();
        }
        let ids: Vec<usize> = (0..self.gens.len()).collect();
        let tree = SchreierTree::build(self.n, y, &ids, &self.inv);
        let sub_order = &self.order / BigUint::from(tree.orbit.len());
        let seed = splitmix(self.seed ^ (y as u64).wrapping_mul(0x2545_f491_4f6c_dd1d));
        let sub_gens = if sub_order.is_one() {
            Vec::new()
        } else {
            let chain = StabChain::random_schreier_sims(self.n, &self.gens, &[y], Some(&self.order), seed)
                .expect("node order is exact, so the chain reaches it");
            chain.stabilizer_generators(1)
        };
        let child = Arc::new(PrefixChild {
            tree,
            parent_gens: self.gens.clone(),
            node: Arc::new(PrefixNode::new(self.n, sub_gens, sub_order, seed)),
        });
        self.children.lock().entry(y).or_insert(child).clone()
    }
}

/// Result of a least-image search.
#[derive(Clone)]
pub struct CanonicalImage {
    /// Lexicographically least set in the orbit of the input, sorted.
    pub image: Vec<u32>,
    /// Order of the setwise stabilizer of the input.
    pub stabilizer_order: BigUint,
    word: Vec<u32>,
    steps: Vec<Arc<PrefixChild>>,
    tail_gens: Vec<Perm>,
}

impl fmt::Debug for CanonicalImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CanonicalImage")
            .field("image", &self.image)
            .field("stabilizer_order", &self.stabilizer_order)
            .finish()
    }
}

fn materialize(n: usize, steps: &[Arc<PrefixChild>], word: &[u32]) -> Perm {
    let mut p = Perm::identity(n);
    for (step, &t) in steps.iter().zip(word) {
        // `t` is a point of the current image; its path is read off the tree
        for k in step.tree.path(&step.parent_gens, t) {
            p.compose_in_place(&step.parent_gens[k]);
        }
    }
    p
}

fn transport_point(steps: &[Arc<PrefixChild>], word: &[u32], mut x: u32) -> u32 {
    for (step, &t) in steps.iter().zip(word) {
        for k in step.tree.path(&step.parent_gens, t) {
            x = step.parent_gens[k].apply(x);
        }
    }
    x
}

impl CanonicalImage {
    /// An element mapping the input set onto `image`.
    pub fn transporter(&self, n: usize) -> Perm {
        materialize(n, &self.steps, &self.word)
    }

    /// Image of one point under [`CanonicalImage::transporter`].
    pub fn transport_point(&self, x: u32) -> u32 {
        transport_point(&self.steps, &self.word, x)
    }
}

struct SearchState {
    count: u128,
    word: Vec<u32>,
}

struct SearchOutcome {
    canonical: CanonicalImage,
    merges: Vec<(usize, Vec<u32>, Vec<u32>)>,
}

/// A permutation group with a stabilizer chain and a cache of pointwise
/// stabilizers used by least-image searches. Clones share the cache.
#[derive(Clone)]
pub struct PermGroup {
    n: usize,
    gens: Vec<Perm>,
    chain: StabChain,
    order: BigUint,
    root: Arc<PrefixNode>,
}

impl fmt::Debug for PermGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PermGroup")
            .field("degree", &self.n)
            .field("generators", &self.gens.len())
            .field("order", &self.order)
            .finish()
    }
}

const DEFAULT_SEED: u64 = 0x5eed_0f_11fe5;

impl PermGroup {
    fn from_chain(n: usize, gens: Vec<Perm>, chain: StabChain) -> PermGroup {
        let order = chain.order();
        let gens: Vec<Perm> = gens.into_iter().filter(|g| !g.is_identity()).collect();
        let root = Arc::new(PrefixNode::new(n, gens.clone(), order.clone(), DEFAULT_SEED));
        PermGroup { n, gens, chain, order, root }
    }

    /// Group generated by `gens`, order determined by randomized Schreier-Sims
    /// (Monte Carlo; see [`StabChain::random_schreier_sims`]).
    pub fn new(n: usize, gens: Vec<Perm>) -> Result<PermGroup, GroupError> {
        let chain = StabChain::random_schreier_sims(n, &gens, &[], None, DEFAULT_SEED)?;
        Ok(PermGroup::from_chain(n, gens, chain))
    }

    /// Group generated by `gens` whose order is known to be `order`. A target
    /// above the true order is reported as [`GroupError::Stalled`]; a target
    /// below it may go unnoticed, so use [`PermGroup::new`] to check a claimed order.
    pub fn with_order(n: usize, gens: Vec<Perm>, order: &BigUint) -> Result<PermGroup, GroupError> {
        let chain = StabChain::random_schreier_sims(n, &gens, &[], Some(order), DEFAULT_SEED)?;
        Ok(PermGroup::from_chain(n, gens, chain))
    }

    /// Group generated by `gens` via deterministic Schreier-Sims.
    pub fn schreier_sims(n: usize, gens: Vec<Perm>) -> Result<PermGroup, GroupError> {
        let chain = StabChain::schreier_sims(n, &gens)?;
        Ok(PermGroup::from_chain(n, gens, chain))
    }

    pub fn trivial(n: usize) -> PermGroup {
        PermGroup::from_chain(n, Vec::new(), StabChain::empty(n, &[]))
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> &[Perm] {
        &self.gens
    }

    pub fn order(&self) -> &BigUint {
        &self.order
    }

    pub fn chain(&self) -> &StabChain {
        &self.chain
    }

    pub fn contains(&self, g: &Perm) -> bool {
        self.chain.contains(g)
    }

    pub fn random_element<R: Rng>(&self, rng: &mut R) -> Perm {
        self.chain.random_element(rng)
    }

    /// Orbit of `x`, sorted.
    pub fn orbit(&self, x: u32) -> Vec<u32> {
        let ids: Vec<usize> = (0..self.gens.len()).collect();
        let inv: Vec<Perm> = self.gens.iter().map(Perm::inverse).collect();
        let mut orbit = SchreierTree::build(self.n, x, &ids, &inv).orbit;
        orbit.sort_unstable();
        orbit
    }

    /// For each point, the least point of its orbit.
    pub fn orbit_representatives(&self) -> &[u32] {
        &self.root.orbit_min
    }

    pub fn is_transitive(&self) -> bool {
        self.root.orbit_min.iter().all(|&m| m == 0)
    }

    /// Stabilizer of a point.
    pub fn point_stabilizer(&self, x: u32) -> PermGroup {
        let child = self.root.child(x);
        let node = &child.node;
        PermGroup::with_order(self.n, node.gens.to_vec(), &node.order)
            .expect("stabilizer order follows from the orbit length")
    }

    /// Image of a set under the group that is least in lexicographic order
    /// (equivalently, as a sorted sequence).
    pub fn minimal_image(&self, set: &[u32]) -> Vec<u32> {
        self.canonical_image(set).image
    }

    /// Least image together with the set stabilizer order and a transporter.
    pub fn canonical_image(&self, set: &[u32]) -> CanonicalImage {
        self.search(set, false).canonical
    }

    /// Order of the setwise stabilizer of `set`.
    pub fn set_stabilizer_order(&self, set: &[u32]) -> BigUint {
        self.canonical_image(set).stabilizer_order
    }

    /// The setwise stabilizer of `set` as a group.
    pub fn setwise_stabilizer(&self, set: &[u32]) -> PermGroup {
        let SearchOutcome { canonical, merges } = self.search(set, true);
        let target = canonical.stabilizer_order.clone();
        if target.is_one() {
            return PermGroup::trivial(self.n);
        }
        let m = canonical.transporter(self.n);
        let m_inv = m.inverse();
        // conjugates of the pointwise stabilizer left at the end of the search
        let mut gens: Vec<Perm> = canonical
            .tail_gens
            .iter()
            .map(|k| m.compose(k).compose(&m_inv))
            .filter(|g| !g.is_identity())
            .collect();
        let mut seed = DEFAULT_SEED;
        let mut merges = merges.into_iter();
        loop {
            // a Monte Carlo chain never overshoots, so reaching the target is exact
            let current = StabChain::random_schreier_sims(self.n, &gens, &[], None, seed)
                .expect("generators have the group degree");
            if current.order() == target {
                return PermGroup::from_chain(self.n, gens, current);
            }
            let next = merges.by_ref().find_map(|(depth, kept, merged)| {
                let steps = &canonical.steps[..depth];
                let a = materialize(self.n, steps, &kept);
                let b = materialize(self.n, steps, &merged);
                let h = b.compose(&a.inverse());
                (!current.contains(&h)).then_some(h)
            });
            match next {
                Some(h) => gens.push(h),
                None => {
                    let chain = StabChain::random_schreier_sims(self.n, &gens, &[], Some(&target), seed)
                        .expect("merge elements generate the set stabilizer");
                    return PermGroup::from_chain(self.n, gens, chain);
                }
            }
            seed = splitmix(seed);
        }
    }

    fn search(&self, set: &[u32], track_merges: bool) -> SearchOutcome {
        let mut start: Vec<u32> = set.to_vec();
        start.sort_unstable();
        start.dedup();
        let mut states: BTreeMap<Vec<u32>, SearchState> = BTreeMap::new();
        states.insert(start, SearchState { count: 1, word: Vec::new() });
        let mut node = self.root.clone();
        let mut steps: Vec<Arc<PrefixChild>> = Vec::new();
        let mut merges = Vec::new();
        let mut depth = 0usize;
        while !node.is_trivial() {
            // every image shares the chosen prefix as its `depth` least points
            let y = states
                .keys()
                .flat_map(|t| t[depth..].iter())
                .map(|&x| node.orbit_min[x as usize])
                .min();
            let Some(y) = y else { break };
            let child = node.child(y);
            // transversal words are shared by every state at this level
            let mut paths: HashMap<u32, Vec<usize>> = HashMap::new();
            let mut index: HashMap<Vec<u32>, usize> = HashMap::new();
            let mut found: Vec<(Vec<u32>, SearchState)> = Vec::new();
            let mut image: Vec<u32> = Vec::new();
            for (t_set, st) in &states {
                for &t in &t_set[depth..] {
                    if node.orbit_min[t as usize] != y {
                        continue;
                    }
                    let path = paths.entry(t).or_insert_with(|| child.tree.path(&child.parent_gens, t));
                    image.clear();
                    image.extend(
                        t_set.iter().map(|&x| path.iter().fold(x, |x, &k| child.parent_gens[k].apply(x))),
                    );
                    image.sort_unstable();
                    match index.get(&image) {
                        Some(&i) => {
                            let existing = &mut found[i].1;
                            existing.count += st.count;
                            if track_merges {
                                let mut w = st.word.clone();
                                w.push(t);
                                merges.push((depth + 1, existing.word.clone(), w));
                            }
                        }
                        None => {
                            let mut w = st.word.clone();
                            w.push(t);
                            index.insert(image.clone(), found.len());
                            found.push((image.clone(), SearchState { count: st.count, word: w }));
                        }
                    }
                }
            }
            steps.push(child.clone());
            node = child.node.clone();
            depth += 1;
            states = found.into_iter().collect();
        }
        let (image, st) = states.into_iter().next().expect("search keeps at least one image");
        let stabilizer_order = BigUint::from(st.count) * &node.order;
        SearchOutcome {
            canonical: CanonicalImage {
                image,
                stabilizer_order,
                word: st.word,
                steps,
                tail_gens: node.gens.to_vec(),
            },
            merges,
        }
    }
}

/// Converts a group order to `u64` when it fits.
pub fn order_u64(order: &BigUint) -> Option<u64> {
    order.to_u64()
}
