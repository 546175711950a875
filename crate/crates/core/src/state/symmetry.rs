//! Orbit representatives of basis labels under value relabelings.
//!
//! Two relabeling groups are used. Permutation types relabel every value of one
//! type by the same permutation of [N]. Affine types apply one linear map g of
//! GF(2)^n to all values and translate inputs by c and outputs by d; keys k₁,
//! k₃ transform linearly and k₂ as g·k₂ ⊕ c ⊕ d. The enumerators return a set
//! containing at least one label from every orbit meeting the domain.

use rustc_hash::{FxHashMap, FxHashSet};

use crate::error::Result;
use crate::oracles::op::Op;
use crate::relations::{Dim, Relation, ZVectors};
use crate::state::label::{Label, Schema};
use crate::state::purified::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Slot {
    /// Not relabeled: every value is enumerated.
    Free,
    /// Relabeled by the permutation of the given type.
    Perm(u8),
    /// Affine input value.
    AffD,
    /// Affine output value.
    AffI,
    /// Key transformed linearly.
    AffK,
    /// Key transformed as g·k ⊕ c ⊕ d. Must follow every affine value.
    AffK2,
}

/// How to read a value sequence into a label.
#[derive(Clone, Debug)]
pub struct LabelTemplate {
    /// Registers that are not enumerated.
    pub base: Label,
    pub a: Option<Slot>,
    /// Pair count and (input, output) slot types of each relation register.
    pub rels: [(usize, Slot, Slot); 4],
    /// Slot types of the left and right intermediate vectors; lengths follow
    /// relation registers 2 and 3.
    pub z: Option<(Slot, Slot)>,
    /// Slot types of k₁, k₂, k₃.
    pub keys: [Option<Slot>; 3],
}

impl LabelTemplate {
    fn slots(&self) -> Vec<Slot> {
        let mut s = Vec::new();
        s.extend(self.a);
        for &(n, i, o) in &self.rels {
            for _ in 0..n {
                s.push(i);
                s.push(o);
            }
        }
        if let Some((zl, zr)) = self.z {
            s.extend(std::iter::repeat_n(zl, self.rels[2].0));
            s.extend(std::iter::repeat_n(zr, self.rels[3].0));
        }
        // k₁, k₃, then k₂
        for i in [0, 2, 1] {
            s.extend(self.keys[i]);
        }
        s
    }

    fn build(&self, v: &[u8]) -> Label {
        let mut l = self.base.clone();
        let mut it = v.iter().copied();
        if self.a.is_some() {
            l.a = it.next().expect("slot count");
        }
        let mut raw: [Vec<(u8, u8)>; 4] = Default::default();
        for (r, &(n, _, _)) in self.rels.iter().enumerate() {
            raw[r] = (0..n).map(|_| (it.next().expect("slot count"), it.next().expect("slot count"))).collect();
            l.rels[r] = Relation::from_pairs(raw[r].iter().copied());
        }
        if self.z.is_some() {
            let zl: Vec<u8> = (0..self.rels[2].0).map(|_| it.next().expect("slot count")).collect();
            let zr: Vec<u8> = (0..self.rels[3].0).map(|_| it.next().expect("slot count")).collect();
            l.z = Some(attach_z(&raw[2], &zl, &raw[3], &zr));
        }
        for i in [0, 2, 1] {
            if self.keys[i].is_some() {
                l.keys[i] = Some(it.next().expect("slot count"));
            }
        }
        l
    }
}

/// Intermediate vectors listed in the order the split maps read them: by
/// ascending output on the left and ascending input on the right.
fn attach_z(l2: &[(u8, u8)], zl: &[u8], r2: &[(u8, u8)], zr: &[u8]) -> ZVectors {
    let mut left: Vec<(u8, u8)> = l2.iter().map(|p| p.1).zip(zl.iter().copied()).collect();
    let mut right: Vec<(u8, u8)> = r2.iter().map(|p| p.0).zip(zr.iter().copied()).collect();
    left.sort_by_key(|p| p.0);
    right.sort_by_key(|p| p.0);
    let zl: Vec<u8> = left.into_iter().map(|p| p.1).collect();
    let zr: Vec<u8> = right.into_iter().map(|p| p.1).collect();
    ZVectors::new(&zl, &zr)
}

/// Value sequences covering every orbit of [N]^slots.
pub fn slot_sequences(dim: Dim, slots: &[Slot]) -> Vec<Vec<u8>> {
    let affine = slots.iter().any(|s| matches!(s, Slot::AffD | Slot::AffI | Slot::AffK | Slot::AffK2));
    let perm = slots.iter().any(|s| matches!(s, Slot::Perm(_)));
    assert!(!(affine && perm), "permutation and affine slots cannot be mixed");
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(slots.len());
    let state = State { rank: 0, anchor_d: false, anchor_i: false, perm_used: [0; 8] };
    walk(dim, slots, &mut cur, state, &mut out);
    out
}

#[derive(Clone, Copy)]
struct State {
    rank: u32,
    anchor_d: bool,
    anchor_i: bool,
    /// Number of distinct values already used by each permutation type.
    perm_used: [u16; 8],
}

fn walk(dim: Dim, slots: &[Slot], cur: &mut Vec<u8>, st: State, out: &mut Vec<Vec<u8>>) {
    let Some(&slot) = slots.get(cur.len()) else {
        out.push(cur.clone());
        return;
    };
    let mut push = |v: u8, st: State, cur: &mut Vec<u8>| {
        cur.push(v);
        walk(dim, slots, cur, st, out);
        cur.pop();
    };
    let linear = |st: State, cur: &mut Vec<u8>, push: &mut dyn FnMut(u8, State, &mut Vec<u8>)| {
        for v in 0..(1u16 << st.rank) {
            push(v as u8, st, cur);
        }
        if st.rank < dim.bits() {
            push(1u8 << st.rank, State { rank: st.rank + 1, ..st }, cur);
        }
    };
    match slot {
        Slot::Free => {
            for v in dim.values() {
                push(v, st, cur);
            }
        }
        Slot::Perm(ty) => {
            let used = st.perm_used[ty as usize];
            // values are introduced in order of first use
            for v in 0..used {
                push(v as u8, st, cur);
            }
            if (used as usize) < dim.n() {
                let mut next = st;
                next.perm_used[ty as usize] += 1;
                push(used as u8, next, cur);
            }
        }
        Slot::AffD if !st.anchor_d => push(0, State { anchor_d: true, ..st }, cur),
        Slot::AffI if !st.anchor_i => push(0, State { anchor_i: true, ..st }, cur),
        Slot::AffK2 if !(st.anchor_d && st.anchor_i) => push(0, st, cur),
        Slot::AffD | Slot::AffI | Slot::AffK | Slot::AffK2 => linear(st, cur, &mut push),
    }
}

/// Distinct labels built from every template, filtered by `domain`.
pub fn representatives(dim: Dim, templates: &[LabelTemplate], domain: &dyn Fn(&Label) -> bool) -> Vec<Label> {
    let mut seen = FxHashSet::default();
    let mut out = Vec::new();
    for t in templates {
        for v in slot_sequences(dim, &t.slots()) {
            let l = t.build(&v);
            if domain(&l) && seen.insert(l.clone()) {
                out.push(l);
            }
        }
    }
    out
}

/// Size vectors of four relation registers with each size ≤ t.
pub fn per_register_sizes(t: usize) -> Vec<[usize; 4]> {
    let mut out = Vec::new();
    for a in 0..=t {
        for b in 0..=t {
            for c in 0..=t {
                for d in 0..=t {
                    out.push([a, b, c, d]);
                }
            }
        }
    }
    out
}

/// Size vectors of two relation registers with total size ≤ t.
pub fn sum_sizes(t: usize) -> Vec<[usize; 4]> {
    (0..=t).flat_map(|a| (0..=t - a).map(move |b| [a, b, 0, 0])).collect()
}

/// Every label over the given templates without any reduction.
pub fn all_labels(dim: Dim, templates: &[LabelTemplate], domain: &dyn Fn(&Label) -> bool) -> Vec<Label> {
    let free: Vec<LabelTemplate> = templates.iter().map(free_template).collect();
    representatives(dim, &free, domain)
}

fn free_template(t: &LabelTemplate) -> LabelTemplate {
    let f = |_| Slot::Free;
    LabelTemplate {
        base: t.base.clone(),
        a: t.a.map(f),
        rels: t.rels.map(|(n, i, o)| (n, f(i), f(o))),
        z: t.z.map(|(a, b)| (f(a), f(b))),
        keys: t.keys.map(|k| k.map(f)),
    }
}

type ValueMap = Box<dyn Fn(u8) -> u8 + Send + Sync>;

/// An explicit relabeling of every value register of a label.
pub struct Relabel {
    pub a: ValueMap,
    pub dom: [ValueMap; 4],
    pub im: [ValueMap; 4],
    pub zl: ValueMap,
    pub zr: ValueMap,
    pub keys: [ValueMap; 3],
}

fn ident() -> ValueMap {
    Box::new(|v| v)
}

impl Relabel {
    pub fn identity() -> Relabel {
        Relabel {
            a: ident(),
            dom: [ident(), ident(), ident(), ident()],
            im: [ident(), ident(), ident(), ident()],
            zl: ident(),
            zr: ident(),
            keys: [ident(), ident(), ident()],
        }
    }

    /// x ↦ g·x ⊕ c on inputs, y ↦ g·y ⊕ d on outputs; `g` lists the images of
    /// the unit vectors. The A register is treated as an input when `a_input`.
    pub fn affine(g: &[u8], c: u8, d: u8, a_input: bool) -> Relabel {
        let g: Vec<u8> = g.to_vec();
        let lin = move |v: u8| -> u8 { g.iter().enumerate().filter(|(i, _)| v >> i & 1 == 1).fold(0, |acc, (_, &e)| acc ^ e) };
        let lin = std::sync::Arc::new(lin);
        let shift = |t: u8| -> ValueMap {
            let lin = lin.clone();
            Box::new(move |v| lin(v) ^ t)
        };
        Relabel {
            a: shift(if a_input { c } else { d }),
            dom: [shift(c), shift(c), shift(c), shift(c)],
            im: [shift(d), shift(d), shift(d), shift(d)],
            zl: shift(d),
            zr: shift(c),
            keys: [shift(0), shift(c ^ d), shift(0)],
        }
    }

    /// Independent permutations of inputs and outputs.
    pub fn permutation(inputs: Vec<u8>, outputs: Vec<u8>, a_input: bool) -> Relabel {
        let table = |p: &Vec<u8>| -> ValueMap {
            let p = p.clone();
            Box::new(move |v| p[v as usize])
        };
        Relabel {
            a: table(if a_input { &inputs } else { &outputs }),
            dom: [table(&inputs), table(&inputs), table(&inputs), table(&inputs)],
            im: [table(&outputs), table(&outputs), table(&outputs), table(&outputs)],
            zl: ident(),
            zr: ident(),
            keys: [ident(), ident(), ident()],
        }
    }

    pub fn apply(&self, l: &Label) -> Label {
        let mut o = l.clone();
        o.a = (self.a)(l.a);
        for r in 0..4 {
            o.rels[r] = l.rels[r].relabel(&self.dom[r], &self.im[r]);
        }
        if let Some(z) = &l.z {
            let map = |r: usize, pairs: &[(u8, u8)]| -> Vec<(u8, u8)> {
                pairs.iter().map(|&(x, y)| ((self.dom[r])(x), (self.im[r])(y))).collect()
            };
            let l2 = map(2, &l.rels[2].by_output());
            let r2 = map(3, l.rels[3].pairs());
            let zl: Vec<u8> = z.zl.iter().map(|&v| (self.zl)(v)).collect();
            let zr: Vec<u8> = z.zr.iter().map(|&v| (self.zr)(v)).collect();
            o.z = Some(attach_z(&l2, &zl, &r2, &zr));
        }
        for i in 0..3 {
            o.keys[i] = l.keys[i].map(&self.keys[i]);
        }
        o
    }
}

/// max |⟨σ_out(r)| M |σ_in(c)⟩ − ⟨r| M |c⟩| over the columns of `labels`.
pub fn covariance_defect(
    op: &Op,
    schema: &Schema,
    labels: &[Label],
    on_input: &Relabel,
    on_output: &Relabel,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for l in labels {
        let mut want: FxHashMap<Label, C64> = FxHashMap::default();
        for (r, v) in op.column(l, schema)? {
            *want.entry(on_output.apply(&r)).or_default() += v;
        }
        let mut got: FxHashMap<Label, C64> = FxHashMap::default();
        for (r, v) in op.column(&on_input.apply(l), schema)? {
            *got.entry(r).or_default() += v;
        }
        for (k, v) in &want {
            worst = worst.max((got.get(k).copied().unwrap_or_default() - v).norm());
        }
        for (k, v) in &got {
            worst = worst.max((want.get(k).copied().unwrap_or_default() - v).norm());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(n: usize) -> Dim {
        Dim::new(n).unwrap()
    }

    #[test]
    fn permutation_strings_are_restricted_growth() {
        let seqs = slot_sequences(d(8), &[Slot::Perm(0); 3]);
        // Bell number B3
        assert_eq!(seqs.len(), 5);
        let two = slot_sequences(d(8), &[Slot::Perm(0), Slot::Perm(1)]);
        assert_eq!(two, vec![vec![0, 0]]);
    }

    #[test]
    fn affine_sequences_anchor_and_normalize() {
        let seqs = slot_sequences(d(8), &[Slot::AffD, Slot::AffI, Slot::AffD, Slot::AffK2]);
        // third value 0 (then k₂ ∈ {0, e₁}) or e₁ (then k₂ ∈ {0, e₁, e₂})
        assert_eq!(seqs.len(), 5);
        assert!(seqs.iter().all(|s| s[0] == 0 && s[1] == 0));
        let lone_key = slot_sequences(d(8), &[Slot::AffK2]);
        assert_eq!(lone_key, vec![vec![0]]);
    }

    #[test]
    fn affine_orbits_cover_every_sequence() {
        // every (x, y, k) ∈ [4]³ maps to a listed sequence under some (g, c, d)
        let dim = d(4);
        let slots = [Slot::AffD, Slot::AffI, Slot::AffK];
        let reps: FxHashSet<Vec<u8>> = slot_sequences(dim, &slots).into_iter().collect();
        let gl: Vec<[u8; 2]> = (1..4u8)
            .flat_map(|a| (1..4u8).map(move |b| [a, b]))
            .filter(|[a, b]| a != b)
            .collect();
        let apply = |g: [u8; 2], v: u8| (if v & 1 != 0 { g[0] } else { 0 }) ^ (if v & 2 != 0 { g[1] } else { 0 });
        for x in 0..4u8 {
            for y in 0..4u8 {
                for k in 0..4u8 {
                    let hit = gl.iter().any(|&g| {
                        (0..4u8).any(|c| {
                            (0..4u8).any(|dd| reps.contains(&vec![apply(g, x) ^ c, apply(g, y) ^ dd, apply(g, k)]))
                        })
                    });
                    assert!(hit, "({x}, {y}, {k}) uncovered");
                }
            }
        }
    }

    #[test]
    fn free_templates_enumerate_everything() {
        let t = LabelTemplate {
            base: Label::joint(0, Relation::empty(), Relation::empty()),
            a: Some(Slot::Perm(0)),
            rels: [(1, Slot::Perm(0), Slot::Perm(1)), (0, Slot::Free, Slot::Free), (0, Slot::Free, Slot::Free), (0, Slot::Free, Slot::Free)],
            z: None,
            keys: [None; 3],
        };
        assert_eq!(all_labels(d(4), std::slice::from_ref(&t), &|_| true).len(), 64);
        // orbits of (a, x, y): a = x or not, times one y class
        assert_eq!(representatives(d(4), &[t], &|_| true).len(), 2);
    }

    fn joint_template(sizes: [usize; 4], a: Slot, l: (Slot, Slot), r: (Slot, Slot)) -> LabelTemplate {
        LabelTemplate {
            base: Label::joint(0, Relation::empty(), Relation::empty()),
            a: Some(a),
            rels: [(sizes[0], l.0, l.1), (sizes[1], r.0, r.1), (0, Slot::Free, Slot::Free), (0, Slot::Free, Slot::Free)],
            z: None,
            keys: [None; 3],
        }
    }

    fn split_keyed_template(sizes: [usize; 4]) -> LabelTemplate {
        let e = Relation::empty();
        LabelTemplate {
            base: Label::split(0, e.clone(), e.clone(), e.clone(), e),
            a: None,
            rels: sizes.map(|n| (n, Slot::AffD, Slot::AffI)),
            z: Some((Slot::AffI, Slot::AffD)),
            keys: [Some(Slot::AffK), Some(Slot::AffK2), Some(Slot::AffK)],
        }
    }

    // GL(2, 2) element swapping and mixing the two bits
    const G4: [u8; 2] = [3, 1];

    #[test]
    fn f_family_is_covariant_under_permutations() {
        use crate::oracles::op::Prim;
        let dim = d(4);
        let schema = Schema::joint(dim);
        let templates: Vec<LabelTemplate> = sum_sizes(2)
            .into_iter()
            .map(|sz| joint_template(sz, Slot::Free, (Slot::Free, Slot::Free), (Slot::Free, Slot::Free)))
            .collect();
        let labels = all_labels(dim, &templates, &|_| true);
        let (pi, sigma) = (vec![2, 0, 3, 1], vec![1, 3, 0, 2]);
        let on_in = Relabel::permutation(pi.clone(), sigma.clone(), true);
        let on_out = Relabel::permutation(pi, sigma, false);
        for op in [Op::f(0), Op::v(0), Op::minus(Op::v(0), Op::f(0)), Op::path(Prim::FL, 0)] {
            assert!(covariance_defect(&op, &schema, &labels, &on_in, &on_out).unwrap() < 1e-12, "{op:?}");
        }
    }

    #[test]
    fn merge_stages_are_covariant_under_affine_maps() {
        use crate::isometry::StageOp;
        let dim = d(4);
        let e = Relation::empty();
        let split = Schema::split(dim);
        let templates: Vec<LabelTemplate> = per_register_sizes(1)
            .into_iter()
            .map(|sz| LabelTemplate { z: None, keys: [None; 3], ..split_keyed_template(sz) })
            .collect();
        let labels = all_labels(dim, &templates, &|_| true);
        assert_eq!(labels.len(), 17usize.pow(4));
        let sample: Vec<Label> = labels.iter().step_by(97).cloned().collect();
        for (c, dd) in [(0, 0), (1, 2), (3, 3)] {
            let r = Relabel::affine(&G4, c, dd, true);
            for op in [crate::isometry::s_full(), crate::isometry::s_tilde()] {
                assert!(covariance_defect(&op, &split, &sample, &r, &r).unwrap() < 1e-12);
            }
        }
        let keyed = Schema::joint(dim).with_keys(crate::state::label::KeyLayout::Full);
        let joint: Vec<Label> = all_labels(
            dim,
            &[LabelTemplate {
                base: Label::joint(0, e.clone(), e),
                a: None,
                rels: [(2, Slot::Free, Slot::Free), (1, Slot::Free, Slot::Free), (0, Slot::Free, Slot::Free), (0, Slot::Free, Slot::Free)],
                z: None,
                keys: [Some(Slot::Free); 3],
            }],
            &|_| true,
        )
        .into_iter()
        .step_by(31)
        .collect();
        let r = Relabel::affine(&G4, 2, 1, true);
        assert!(covariance_defect(&Op::Stage(StageOp::Decode), &keyed, &joint, &r, &r).unwrap() < 1e-12);
    }

    #[test]
    fn keyed_f_composites_are_covariant_under_affine_maps() {
        let dim = d(4);
        let split = Schema::split(dim);
        let templates: Vec<LabelTemplate> = per_register_sizes(1)
            .into_iter()
            .map(|sz| LabelTemplate { a: Some(Slot::AffD), z: None, keys: [None; 3], ..split_keyed_template(sz) })
            .collect();
        let labels: Vec<Label> = all_labels(dim, &templates, &|_| true).into_iter().step_by(389).collect();
        let s = crate::isometry::s_full();
        let lhs = Op::product([Op::xor_key(2), Op::f(0), Op::xor_key(0), s.clone()]);
        let rhs = Op::product([s, Op::f(0)]);
        let op = Op::minus(lhs, rhs);
        let on_in = Relabel::affine(&G4, 1, 3, true);
        let on_out = Relabel::affine(&G4, 1, 3, false);
        assert!(covariance_defect(&op, &split, &labels, &on_in, &on_out).unwrap() < 1e-12);
        let f2 = Op::minus(Op::product([Op::f(0), Op::xor_key(1), Op::f(0), crate::isometry::s_full()]), Op::product([crate::isometry::s_full(), Op::f(1)]));
        assert!(covariance_defect(&f2, &split, &labels, &on_in, &on_out).unwrap() < 1e-12);
    }

    #[test]
    fn monogamy_operator_is_covariant_under_its_permutations() {
        use crate::oracles::op::Prim;
        use std::sync::Arc;
        let dim = d(4);
        let schema = Schema::joint(dim);
        let w = (0..16)
            .map(|k| {
                let (i, j) = (k / 4, k % 4);
                C64::from_polar(0.5, std::f64::consts::TAU * (i * j) as f64 / 4.0)
            })
            .collect::<Vec<_>>();
        let u = Arc::new(nalgebra::DMatrix::from_row_slice(4, 4, &w));
        let op = Op::product([Op::path(Prim::FLdag, 0), Op::UnitaryA(u), Op::path(Prim::FR, 0)]);
        let templates: Vec<LabelTemplate> = sum_sizes(2)
            .into_iter()
            .map(|sz| joint_template(sz, Slot::Free, (Slot::Free, Slot::Free), (Slot::Free, Slot::Free)))
            .collect();
        let labels = all_labels(dim, &templates, &|_| true);
        let (p0, p1) = ([3u8, 0, 1, 2], [1u8, 2, 0, 3]);
        let t = |p: [u8; 4]| -> ValueMap { Box::new(move |v| p[v as usize]) };
        let make = |a: ValueMap| Relabel {
            a,
            dom: [t(p1), ident(), ident(), ident()],
            im: [ident(), t(p0), ident(), ident()],
            ..Relabel::identity()
        };
        let defect = covariance_defect(&op, &schema, &labels, &make(t(p0)), &make(t(p1))).unwrap();
        assert!(defect < 1e-12, "{defect}");
    }
}
