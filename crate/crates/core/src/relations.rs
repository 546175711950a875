//! Relation multisets over [N]², key triples, augmented relations and
//! relation-key-induced graphs.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// One (input, output) pair.
pub type Pair = (u8, u8);

/// Vector of intermediate values (one per paired element).
pub type ValVec = SmallVec<[u8; 4]>;

/// Dimension N = 2^n with 1 ≤ N ≤ 256; elements are stored as `u8`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dim {
    n: u16,
}

impl Dim {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > 256 || !n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(n));
        }
        Ok(Dim { n: n as u16 })
    }

    pub fn n(self) -> usize {
        self.n as usize
    }

    /// Number of bits n with N = 2^n.
    pub fn bits(self) -> u32 {
        self.n.trailing_zeros()
    }

    pub fn elem(self, v: usize) -> Result<u8> {
        if v < self.n() {
            Ok(v as u8)
        } else {
            Err(Error::OutOfRange { value: v, n: self.n() })
        }
    }

    pub fn contains(self, v: u8) -> bool {
        (v as usize) < self.n()
    }

    pub fn values(self) -> impl Iterator<Item = u8> + Clone {
        (0..self.n).map(|v| v as u8)
    }
}

impl Serialize for Dim {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u64(self.n as u64)
    }
}

impl<'de> Deserialize<'de> for Dim {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let n = usize::deserialize(d)?;
        Dim::new(n).map_err(serde::de::Error::custom)
    }
}

/// Set of elements of [N] (N ≤ 256) as a 256-bit mask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ElemSet([u64; 4]);

impl ElemSet {
    pub const EMPTY: ElemSet = ElemSet([0; 4]);

    pub fn singleton(v: u8) -> Self {
        let mut s = Self::EMPTY;
        s.insert(v);
        s
    }

    pub fn insert(&mut self, v: u8) {
        self.0[(v >> 6) as usize] |= 1u64 << (v & 63);
    }

    pub fn contains(&self, v: u8) -> bool {
        self.0[(v >> 6) as usize] >> (v & 63) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0 == [0; 4]
    }

    pub fn iter(&self) -> impl Iterator<Item = u8> + '_ {
        (0..4usize).flat_map(move |w| {
            let word = self.0[w];
            (0..64u32)
                .filter(move |b| word >> b & 1 == 1)
                .map(move |b| (w as u32 * 64 + b) as u8)
        })
    }

    pub fn union(self, other: ElemSet) -> ElemSet {
        let mut out = self;
        for (a, b) in out.0.iter_mut().zip(other.0) {
            *a |= b;
        }
        out
    }

    pub fn intersects(self, other: ElemSet) -> bool {
        self.0.iter().zip(other.0).any(|(a, b)| a & b != 0)
    }

    /// A ⊕ k = {a ⊕ k : a ∈ A}.
    pub fn xor(self, k: u8) -> ElemSet {
        if k == 0 {
            return self;
        }
        self.iter().map(|a| a ^ k).collect()
    }

    /// A ⊕ B = {a ⊕ b : a ∈ A, b ∈ B}.
    pub fn xor_set(self, other: ElemSet) -> ElemSet {
        let mut out = ElemSet::EMPTY;
        for b in other.iter() {
            out = out.union(self.xor(b));
        }
        out
    }
}

impl FromIterator<u8> for ElemSet {
    fn from_iter<I: IntoIterator<Item = u8>>(iter: I) -> Self {
        let mut s = ElemSet::EMPTY;
        for v in iter {
            s.insert(v);
        }
        s
    }
}

impl fmt::Debug for ElemSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Canonically ordered multiset of pairs; equality is structural.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Relation {
    pairs: SmallVec<[Pair; 6]>,
}

impl Relation {
    pub fn empty() -> Self {
        Relation::default()
    }

    /// Sorts `pairs` into canonical order after checking every entry lies in [N].
    pub fn canonical_form(dim: Dim, pairs: &[Pair]) -> Result<Self> {
        for &(x, y) in pairs {
            dim.elem(x as usize)?;
            dim.elem(y as usize)?;
        }
        Ok(Relation::from_pairs(pairs.iter().copied()))
    }

    /// Canonical form without range checks.
    pub fn from_pairs<I: IntoIterator<Item = Pair>>(pairs: I) -> Self {
        let mut pairs: SmallVec<[Pair; 6]> = pairs.into_iter().collect();
        pairs.sort_unstable();
        Relation { pairs }
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn dom(&self) -> ElemSet {
        self.pairs.iter().map(|p| p.0).collect()
    }

    pub fn im(&self) -> ElemSet {
        self.pairs.iter().map(|p| p.1).collect()
    }

    pub fn is_i_distinct(&self) -> bool {
        self.im().len() == self.len()
    }

    pub fn is_d_distinct(&self) -> bool {
        self.dom().len() == self.len()
    }

    pub fn in_range(&self, dim: Dim) -> bool {
        self.pairs.iter().all(|&(x, y)| dim.contains(x) && dim.contains(y))
    }

    pub fn contains(&self, p: Pair) -> bool {
        self.pairs.binary_search(&p).is_ok()
    }

    pub fn count_im(&self, y: u8) -> usize {
        self.pairs.iter().filter(|p| p.1 == y).count()
    }

    pub fn count_dom(&self, x: u8) -> usize {
        self.pairs.iter().filter(|p| p.0 == x).count()
    }

    /// Multiset union with a single pair.
    pub fn with(&self, p: Pair) -> Relation {
        let mut pairs = self.pairs.clone();
        let at = pairs.partition_point(|q| *q <= p);
        pairs.insert(at, p);
        Relation { pairs }
    }

    /// Removes one copy of `p`; `None` if absent.
    pub fn without(&self, p: Pair) -> Option<Relation> {
        let at = self.pairs.binary_search(&p).ok()?;
        let mut pairs = self.pairs.clone();
        pairs.remove(at);
        Some(Relation { pairs })
    }

    /// Multiset union.
    pub fn union(&self, other: &Relation) -> Relation {
        Relation::from_pairs(self.pairs.iter().chain(other.pairs.iter()).copied())
    }

    /// Pairs ordered by ascending output (the pairing order for left-side splits).
    pub fn by_output(&self) -> SmallVec<[Pair; 6]> {
        let mut v = self.pairs.clone();
        v.sort_unstable_by_key(|&(x, y)| (y, x));
        v
    }

    /// Applies independent relabelings to inputs and outputs.
    pub fn relabel(&self, inputs: impl Fn(u8) -> u8, outputs: impl Fn(u8) -> u8) -> Relation {
        Relation::from_pairs(self.pairs.iter().map(|&(x, y)| (inputs(x), outputs(y))))
    }
}

impl fmt::Debug for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (x, y)) in self.pairs.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "({x},{y})")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Serialize for Relation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let arr: Vec<[u8; 2]> = self.pairs.iter().map(|&(x, y)| [x, y]).collect();
        arr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Relation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let arr: Vec<[u8; 2]> = Vec::deserialize(d)?;
        Ok(Relation::from_pairs(arr.into_iter().map(|[x, y]| (x, y))))
    }
}

/// Which distinctness filter an enumeration applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Distinctness {
    Any,
    /// All outputs distinct.
    Outputs,
    /// All inputs distinct.
    Inputs,
}

impl Distinctness {
    pub fn admits(self, rel: &Relation) -> bool {
        match self {
            Distinctness::Any => true,
            Distinctness::Outputs => rel.is_i_distinct(),
            Distinctness::Inputs => rel.is_d_distinct(),
        }
    }
}

/// Every multiset of exactly `size` pairs over [N]² passing `filter`, in canonical order.
pub fn relations_of_size(dim: Dim, size: usize, filter: Distinctness) -> Vec<Relation> {
    let n = dim.n();
    let cells = n * n;
    let mut out = Vec::new();
    let mut idx = vec![0usize; size];
    if size == 0 {
        return vec![Relation::empty()];
    }
    loop {
        let rel = Relation::from_pairs(idx.iter().map(|&c| ((c / n) as u8, (c % n) as u8)));
        if filter.admits(&rel) {
            out.push(rel);
        }
        // advance a non-decreasing index sequence
        let mut pos = size;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            if idx[pos] + 1 < cells {
                idx[pos] += 1;
                let v = idx[pos];
                for slot in idx.iter_mut().skip(pos + 1) {
                    *slot = v;
                }
                break;
            }
        }
    }
}

/// Every multiset of at most `max_size` pairs passing `filter`.
pub fn relations_up_to(dim: Dim, max_size: usize, filter: Distinctness) -> Vec<Relation> {
    (0..=max_size).flat_map(|s| relations_of_size(dim, s, filter)).collect()
}

/// Key triple (k1, k2, k3) acting by bitwise XOR.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct KeyTriple {
    pub k1: u8,
    pub k2: u8,
    pub k3: u8,
}

impl KeyTriple {
    pub fn new(k1: u8, k2: u8, k3: u8) -> Self {
        KeyTriple { k1, k2, k3 }
    }

    pub fn check(&self, dim: Dim) -> Result<()> {
        for k in [self.k1, self.k2, self.k3] {
            dim.elem(k as usize)?;
        }
        Ok(())
    }

    /// All N³ triples in lexicographic order.
    pub fn all(dim: Dim) -> impl Iterator<Item = KeyTriple> {
        dim.values().flat_map(move |k1| {
            dim.values()
                .flat_map(move |k2| dim.values().map(move |k3| KeyTriple { k1, k2, k3 }))
        })
    }
}

/// Intermediate values attached to the paired parts of L₂ and R₂.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ZVectors {
    pub zl: ValVec,
    pub zr: ValVec,
}

impl ZVectors {
    pub fn new(zl: &[u8], zr: &[u8]) -> Self {
        ZVectors { zl: zl.iter().copied().collect(), zr: zr.iter().copied().collect() }
    }
}

/// True iff all coordinates of `v` are distinct.
pub fn all_distinct(v: &[u8]) -> bool {
    let set: ElemSet = v.iter().copied().collect();
    set.len() == v.len()
}

/// Which augmented relation to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AugKind {
    L1,
    L2,
    R1,
    R2,
}

/// Left or right relation-key-induced graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

/// Builds the augmented relation of `kind`.
///
/// Paired kinds index the i-th pair by ascending output (L₂) or ascending
/// input (R₂), the same order the decoder sorts targets by.
pub fn augment(rel: &Relation, kind: AugKind, keys: KeyTriple, z: &ZVectors) -> Result<Relation> {
    match kind {
        AugKind::L1 | AugKind::R1 => Ok(mask_pairs(rel, keys.k1, keys.k3)),
        AugKind::L2 => split_left(rel, keys.k2, &z.zl),
        AugKind::R2 => split_right(rel, keys.k2, &z.zr),
    }
}

/// {(x ⊕ k1, y ⊕ k3)}.
pub fn mask_pairs(rel: &Relation, k1: u8, k3: u8) -> Relation {
    rel.relabel(|x| x ^ k1, |y| y ^ k3)
}

/// {(xᵢ, zᵢ), (zᵢ ⊕ k2, yᵢ)} with yᵢ ascending.
pub fn split_left(rel: &Relation, k2: u8, zl: &[u8]) -> Result<Relation> {
    if !rel.is_i_distinct() {
        return Err(Error::NotDistinct("I"));
    }
    if zl.len() != rel.len() {
        return Err(Error::LengthMismatch { expected: rel.len(), got: zl.len() });
    }
    let ordered = rel.by_output();
    Ok(Relation::from_pairs(
        ordered.iter().zip(zl).flat_map(|(&(x, y), &z)| [(x, z), (z ^ k2, y)]),
    ))
}

/// {(xᵢ, zᵢ ⊕ k2), (zᵢ, yᵢ)} with xᵢ ascending.
pub fn split_right(rel: &Relation, k2: u8, zr: &[u8]) -> Result<Relation> {
    if !rel.is_d_distinct() {
        return Err(Error::NotDistinct("D"));
    }
    if zr.len() != rel.len() {
        return Err(Error::LengthMismatch { expected: rel.len(), got: zr.len() });
    }
    Ok(Relation::from_pairs(
        rel.pairs().iter().zip(zr).flat_map(|(&(x, y), &z)| [(x, z ^ k2), (z, y)]),
    ))
}

/// Vertex partition of a decomposable relation-key-induced graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDecomposition {
    pub isolate: Relation,
    pub source: Relation,
    pub target: Relation,
    /// Edges as (source vertex, target vertex), in canonical order of the source.
    pub matching: Vec<(Pair, Pair)>,
}

/// Decomposes the graph on the vertex multiset `rel` whose edges are
/// u → v iff v.x = u.y ⊕ k2 (left) or v.y = u.x ⊕ k2 (right).
///
/// Returns `None` when a self-loop exists or some vertex touches two edges.
/// Vertices with equal labels are distinct vertices, so any edge touching a
/// repeated label gives its partner degree two.
pub fn induced_graph_decompose(rel: &Relation, k2: u8, side: Side) -> Option<GraphDecomposition> {
    let v = rel.pairs();
    let m = v.len();
    let edge = |u: Pair, w: Pair| match side {
        Side::Left => w.0 == u.1 ^ k2,
        Side::Right => w.1 == u.0 ^ k2,
    };
    let mut out_to: SmallVec<[Option<usize>; 8]> = SmallVec::from_elem(None, m);
    let mut degree: SmallVec<[u8; 8]> = SmallVec::from_elem(0, m);
    for i in 0..m {
        for j in 0..m {
            if edge(v[i], v[j]) {
                if i == j {
                    return None;
                }
                degree[i] += 1;
                degree[j] += 1;
                if degree[i] > 1 || degree[j] > 1 {
                    return None;
                }
                out_to[i] = Some(j);
            }
        }
    }
    let mut isolate = SmallVec::<[Pair; 6]>::new();
    let mut source = SmallVec::<[Pair; 6]>::new();
    let mut target = SmallVec::<[Pair; 6]>::new();
    let mut matching = Vec::new();
    for i in 0..m {
        match (degree[i], out_to[i]) {
            (0, _) => isolate.push(v[i]),
            (_, Some(j)) => {
                source.push(v[i]);
                matching.push((v[i], v[j]));
            }
            (_, None) => target.push(v[i]),
        }
    }
    Some(GraphDecomposition {
        isolate: Relation::from_pairs(isolate),
        source: Relation::from_pairs(source),
        target: Relation::from_pairs(target),
        matching,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(n: usize) -> Dim {
        Dim::new(n).unwrap()
    }

    #[test]
    fn canonical_form_sorts_and_keeps_multiplicity() {
        let r = Relation::canonical_form(d(4), &[(3, 1), (0, 2), (3, 1)]).unwrap();
        assert_eq!(r.pairs(), &[(0, 2), (3, 1), (3, 1)]);
        assert_eq!(Relation::canonical_form(d(4), &[]).unwrap(), Relation::empty());
        let again = Relation::canonical_form(d(4), r.pairs()).unwrap();
        assert_eq!(again, r);
    }

    #[test]
    fn canonical_form_rejects_out_of_range() {
        assert!(matches!(
            Relation::canonical_form(d(4), &[(4, 0)]),
            Err(Error::OutOfRange { value: 4, n: 4 })
        ));
    }

    #[test]
    fn dim_rejects_non_powers() {
        assert!(Dim::new(6).is_err());
        assert!(Dim::new(0).is_err());
        assert!(Dim::new(512).is_err());
        assert_eq!(Dim::new(16).unwrap().bits(), 4);
    }

    #[test]
    fn dom_and_im_collapse_duplicates() {
        let r = Relation::from_pairs([(1, 2), (1, 3), (0, 2)]);
        assert_eq!(r.dom().len(), 2);
        assert_eq!(r.im().len(), 2);
        assert!(!r.is_i_distinct());
        assert!(!r.is_d_distinct());
    }

    #[test]
    fn augment_examples() {
        let keys = KeyTriple::new(4, 0, 1);
        let r = Relation::from_pairs([(1, 2)]);
        let a = augment(&r, AugKind::L1, keys, &ZVectors::default()).unwrap();
        assert_eq!(a.pairs(), &[(5, 3)]);

        let e = augment(&Relation::empty(), AugKind::L2, keys, &ZVectors::default()).unwrap();
        assert!(e.is_empty());

        let keys = KeyTriple::new(0, 4, 0);
        let r = Relation::from_pairs([(1, 3)]);
        let a = augment(&r, AugKind::L2, keys, &ZVectors::new(&[2], &[])).unwrap();
        assert_eq!(a.pairs(), &[(1, 2), (6, 3)]);
    }

    #[test]
    fn augment_checks_preconditions() {
        let keys = KeyTriple::default();
        let r = Relation::from_pairs([(1, 3), (2, 3)]);
        assert!(augment(&r, AugKind::L2, keys, &ZVectors::new(&[0, 1], &[])).is_err());
        let r = Relation::from_pairs([(1, 3)]);
        assert!(augment(&r, AugKind::L2, keys, &ZVectors::new(&[0, 1], &[])).is_err());
        let r = Relation::from_pairs([(1, 3), (1, 2)]);
        assert!(augment(&r, AugKind::R2, keys, &ZVectors::new(&[], &[0, 1])).is_err());
    }

    #[test]
    fn split_left_pairs_by_ascending_output() {
        let r = Relation::from_pairs([(0, 5), (1, 2)]);
        // (1,2) has the smaller output so it takes z₁ = 7
        let a = split_left(&r, 0, &[7, 6]).unwrap();
        assert_eq!(a, Relation::from_pairs([(1, 7), (7, 2), (0, 6), (6, 5)]));
    }

    #[test]
    fn split_right_pairs_by_ascending_input() {
        let r = Relation::from_pairs([(3, 0), (1, 2)]);
        let a = split_right(&r, 1, &[7, 6]).unwrap();
        assert_eq!(a, Relation::from_pairs([(1, 6), (7, 2), (3, 7), (6, 0)]));
    }

    #[test]
    fn mask_is_an_involution() {
        let r = Relation::from_pairs([(1, 2), (3, 3), (0, 7)]);
        assert_eq!(mask_pairs(&mask_pairs(&r, 5, 6), 5, 6), r);
    }

    #[test]
    fn decompose_examples() {
        let r = Relation::from_pairs([(1, 2), (6, 3)]);
        let g = induced_graph_decompose(&r, 4, Side::Left).unwrap();
        assert!(g.isolate.is_empty());
        assert_eq!(g.source.pairs(), &[(1, 2)]);
        assert_eq!(g.target.pairs(), &[(6, 3)]);
        assert_eq!(g.matching, vec![((1, 2), (6, 3))]);

        assert!(induced_graph_decompose(&Relation::from_pairs([(1, 2)]), 3, Side::Left).is_none());

        let g = induced_graph_decompose(&Relation::empty(), 5, Side::Right).unwrap();
        assert!(g.isolate.is_empty() && g.source.is_empty() && g.target.is_empty());
    }

    #[test]
    fn decompose_right_uses_reversed_edges() {
        // (z, y) → (x, z ⊕ k2)
        let r = Relation::from_pairs([(5, 1), (0, 5 ^ 3)]);
        let g = induced_graph_decompose(&r, 3, Side::Right).unwrap();
        assert_eq!(g.source.pairs(), &[(5, 1)]);
        assert_eq!(g.target.pairs(), &[(0, 6)]);
    }

    #[test]
    fn repeated_vertex_with_edge_is_not_decomposable() {
        let r = Relation::from_pairs([(0, 1), (0, 1), (1, 3)]);
        assert!(induced_graph_decompose(&r, 0, Side::Left).is_none());
        // repeated isolated vertices are fine
        let r = Relation::from_pairs([(0, 1), (0, 1)]);
        let g = induced_graph_decompose(&r, 0, Side::Left).unwrap();
        assert_eq!(g.isolate.len(), 2);
    }

    #[test]
    fn chains_are_not_decomposable() {
        let r = Relation::from_pairs([(0, 1), (1, 2), (2, 3)]);
        assert!(induced_graph_decompose(&r, 0, Side::Left).is_none());
    }

    #[test]
    fn enumeration_counts() {
        let dim = d(4);
        assert_eq!(relations_of_size(dim, 0, Distinctness::Any).len(), 1);
        assert_eq!(relations_of_size(dim, 1, Distinctness::Any).len(), 16);
        assert_eq!(relations_of_size(dim, 2, Distinctness::Any).len(), 136);
        // ordered pairs of cells with distinct outputs, unordered: 16·12/2
        assert_eq!(relations_of_size(dim, 2, Distinctness::Outputs).len(), 96);
        assert_eq!(relations_up_to(dim, 3, Distinctness::Any).len(), 1 + 16 + 136 + 816);
    }

    #[test]
    fn elemset_xor_ops() {
        let a: ElemSet = [1u8, 2].into_iter().collect();
        let b: ElemSet = [4u8, 5].into_iter().collect();
        let x = a.xor_set(b);
        let expect: ElemSet = [5u8, 4, 6, 7].into_iter().collect();
        assert_eq!(x, expect);
        assert_eq!(a.xor(3), [2u8, 1].into_iter().collect());
        assert!(ElemSet::EMPTY.xor_set(a).is_empty());
        let big = ElemSet::singleton(200);
        assert!(big.contains(200) && !big.contains(8));
        assert_eq!(big.iter().collect::<Vec<_>>(), vec![200]);
    }

    #[test]
    fn relation_serializes_as_sorted_arrays() {
        let r = Relation::from_pairs([(3, 1), (0, 2)]);
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(s, "[[0,2],[3,1]]");
        let back: Relation = serde_json::from_str("[[3,1],[0,2]]").unwrap();
        assert_eq!(back, r);
    }
}
