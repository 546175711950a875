//! The merge isometry, its stages, normalized stages and punctured variants.

use serde::Serialize;

use crate::decoder::{decode_label, encode_label, DecOutput};
use crate::error::{Error, Result};
use crate::good_tuples::{
    b1, b2, b3, bad_vector_count, good_set, is_good, z_vectors, zl_forbidden, zr_forbidden, GoodTuple, RelQuad, RightZRule,
};
use crate::oracles::op::Op;
use crate::relations::{all_distinct, mask_pairs, split_left, Dim, KeyTriple, ZVectors};
use crate::state::label::{KeyLayout, Label, Layout, Schema};
use crate::state::purified::{PurifiedState, C64};

/// One factor of the merge isometry or its adjoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StageOp {
    /// Appends (k₁, k₃) outside B₁ × B₃.
    Keys13 { normalized: bool, dagger: bool },
    /// Appends k₂ outside B₂.
    Key2 { normalized: bool, dagger: bool },
    /// Appends (z_L, z_R) outside B_L × B_R.
    Z { normalized: bool, dagger: bool },
    /// Coherent decoder.
    Decode,
    /// Adjoint of the coherent decoder.
    Encode,
}

fn quad_of(l: &Label) -> Option<RelQuad> {
    let q = RelQuad { l1: l.rels[0].clone(), l2: l.rels[2].clone(), r1: l.rels[1].clone(), r2: l.rels[3].clone() };
    q.check().ok().map(|_| q)
}

fn real(v: f64) -> C64 {
    C64::new(v, 0.0)
}

impl StageOp {
    pub fn adjoint(&self) -> StageOp {
        match *self {
            StageOp::Keys13 { normalized, dagger } => StageOp::Keys13 { normalized, dagger: !dagger },
            StageOp::Key2 { normalized, dagger } => StageOp::Key2 { normalized, dagger: !dagger },
            StageOp::Z { normalized, dagger } => StageOp::Z { normalized, dagger: !dagger },
            StageOp::Decode => StageOp::Encode,
            StageOp::Encode => StageOp::Decode,
        }
    }

    /// (input schema shape, output schema shape) as (keys, z) pairs on the split layout.
    fn shapes(&self) -> ((Layout, KeyLayout, bool), (Layout, KeyLayout, bool)) {
        let split = Layout::Split;
        let (fwd_in, fwd_out, dagger) = match *self {
            StageOp::Keys13 { dagger, .. } => ((split, KeyLayout::None, false), (split, KeyLayout::Outer, false), dagger),
            StageOp::Key2 { dagger, .. } => ((split, KeyLayout::Outer, false), (split, KeyLayout::Full, false), dagger),
            StageOp::Z { dagger, .. } => ((split, KeyLayout::Full, false), (split, KeyLayout::Full, true), dagger),
            StageOp::Decode => ((Layout::Joint, KeyLayout::Full, false), (split, KeyLayout::Full, true), false),
            StageOp::Encode => ((Layout::Joint, KeyLayout::Full, false), (split, KeyLayout::Full, true), true),
        };
        if dagger {
            (fwd_out, fwd_in)
        } else {
            (fwd_in, fwd_out)
        }
    }

    pub fn out_schema(&self, s: &Schema) -> Result<Schema> {
        let (inp, out) = self.shapes();
        if (s.layout, s.keys, s.z) != inp {
            return Err(Error::SchemaMismatch(format!("{self:?} expects {inp:?}, got {s:?}")));
        }
        Ok(Schema { layout: out.0, keys: out.1, z: out.2, ..*s })
    }

    pub(crate) fn rule(&self, l: &Label, s: &Schema, emit: &mut dyn FnMut(Label, C64)) -> Result<()> {
        let dim = s.dim;
        let n = dim.n();
        match *self {
            StageOp::Decode => {
                if let Some(o) = decode_label(l) {
                    emit(o, real(1.0));
                }
            }
            StageOp::Encode => {
                if let Some(o) = encode_label(l) {
                    emit(o, real(1.0));
                }
            }
            StageOp::Keys13 { normalized, dagger } => {
                let Some(q) = quad_of(l) else { return Ok(()) };
                let (bad1, bad3) = (b1(&q), b3(&q));
                let c = if normalized {
                    let d = ((n - bad1.len()) * (n - bad3.len())) as f64;
                    if d == 0.0 {
                        return Ok(());
                    }
                    1.0 / d.sqrt()
                } else {
                    1.0 / n as f64
                };
                if dagger {
                    let (k1, k3) = (l.keys[0].expect("schema"), l.keys[2].expect("schema"));
                    if !bad1.contains(k1) && !bad3.contains(k3) {
                        let mut o = l.clone();
                        o.keys = [None; 3];
                        emit(o, real(c));
                    }
                } else {
                    for k1 in dim.values().filter(|k| !bad1.contains(*k)) {
                        for k3 in dim.values().filter(|k| !bad3.contains(*k)) {
                            let mut o = l.clone();
                            o.keys = [Some(k1), None, Some(k3)];
                            emit(o, real(c));
                        }
                    }
                }
            }
            StageOp::Key2 { normalized, dagger } => {
                let Some(q) = quad_of(l) else { return Ok(()) };
                let (k1, k3) = (l.keys[0].expect("schema"), l.keys[2].expect("schema"));
                if b1(&q).contains(k1) || b3(&q).contains(k3) {
                    return Ok(());
                }
                let bad2 = b2(&q, k1, k3);
                let c = if normalized {
                    let d = (n - bad2.len()) as f64;
                    if d == 0.0 {
                        return Ok(());
                    }
                    1.0 / d.sqrt()
                } else {
                    1.0 / (n as f64).sqrt()
                };
                if dagger {
                    let k2 = l.keys[1].expect("schema");
                    if !bad2.contains(k2) {
                        let mut o = l.clone();
                        o.keys[1] = None;
                        emit(o, real(c));
                    }
                } else {
                    for k2 in dim.values().filter(|k| !bad2.contains(*k)) {
                        let mut o = l.clone();
                        o.keys[1] = Some(k2);
                        emit(o, real(c));
                    }
                }
            }
            StageOp::Z { normalized, dagger } => {
                let Some(q) = quad_of(l) else { return Ok(()) };
                let k = l.key_triple().expect("schema");
                if b1(&q).contains(k.k1) || b3(&q).contains(k.k3) || b2(&q, k.k1, k.k3).contains(k.k2) {
                    return Ok(());
                }
                let fl = zl_forbidden(&q, k);
                let fr = zr_forbidden(&q, k, RightZRule::Mirrored);
                let (ml, mr) = (q.l2.len(), q.r2.len());
                let c = if normalized {
                    let gl = n.pow(ml as u32) as u64 - bad_vector_count(n, ml, fl);
                    let gr = n.pow(mr as u32) as u64 - bad_vector_count(n, mr, fr);
                    if gl == 0 || gr == 0 {
                        return Ok(());
                    }
                    1.0 / ((gl * gr) as f64).sqrt()
                } else {
                    1.0 / (n as f64).powi((ml + mr) as i32).sqrt()
                };
                if dagger {
                    let z = l.z.as_ref().expect("schema");
                    let ok = |v: &[u8], f: crate::relations::ElemSet| all_distinct(v) && v.iter().all(|x| !f.contains(*x));
                    if z.zl.len() == ml && z.zr.len() == mr && ok(&z.zl, fl) && ok(&z.zr, fr) {
                        let mut o = l.clone();
                        o.z = None;
                        emit(o, real(c));
                    }
                } else {
                    let zrs = z_vectors(dim, mr, fr);
                    for zl in z_vectors(dim, ml, fl) {
                        for zr in &zrs {
                            let mut o = l.clone();
                            o.z = Some(ZVectors { zl: zl.clone(), zr: zr.clone() });
                            emit(o, real(c));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// S = D† · S_z · S_{k₂} · S_{k₁,k₃}.
pub fn s_full() -> Op {
    s_with(false)
}

/// S̃ with every stage normalized.
pub fn s_tilde() -> Op {
    s_with(true)
}

fn s_with(normalized: bool) -> Op {
    Op::product([
        Op::Stage(StageOp::Encode),
        Op::Stage(StageOp::Z { normalized, dagger: false }),
        Op::Stage(StageOp::Key2 { normalized, dagger: false }),
        Op::Stage(StageOp::Keys13 { normalized, dagger: false }),
    ])
}

/// Input schema of S: split relations, no keys, no intermediate values.
pub fn s_input_schema(dim: Dim) -> Schema {
    Schema::split(dim)
}

/// Output schema of S: merged relations and all three keys.
pub fn s_output_schema(dim: Dim) -> Schema {
    Schema::joint(dim).with_keys(KeyLayout::Full)
}

/// Closed-form image of |a⟩|L₁⟩|R₁⟩|L₂⟩|R₂⟩ under S, built from good-tuple enumeration.
pub fn s_action_direct(dim: Dim, q: &RelQuad, a: u8) -> Result<PurifiedState> {
    let c = real(1.0 / (dim.n() as f64).powi((3 + q.z_len()) as i32).sqrt());
    let mut out = PurifiedState::zero(s_output_schema(dim));
    for t in good_set(dim, q, RightZRule::Mirrored)? {
        let (l, r) = q.augmented(&t)?;
        out.add(Label::joint(a, l, r).with_keys(t.keys), c);
    }
    out.prune();
    Ok(out)
}

/// Split-side basis label for a relation quadruple.
pub fn split_label(a: u8, q: &RelQuad) -> Label {
    Label::split(a, q.l1.clone(), q.r1.clone(), q.l2.clone(), q.r2.clone())
}

/// Sets removed from the good-tuple sum of a punctured merge map, indexed by
/// the A value y and the four relations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PuncturedFamily {
    Empty,
    Full,
    /// y ⊕ k₃ ∈ Im(L₂^{(k₂,z_L)}).
    MaskedYInPairedImage,
    /// y ∈ Im(L₁^{(k₁,k₃)} ∪ source part of L₂^{(k₂,z_L)}).
    YInIsolateOrSourceImage,
}

impl PuncturedFamily {
    pub fn name(self) -> &'static str {
        match self {
            PuncturedFamily::Empty => "empty",
            PuncturedFamily::Full => "full",
            PuncturedFamily::MaskedYInPairedImage => "masked-y-in-paired-image",
            PuncturedFamily::YInIsolateOrSourceImage => "y-in-isolate-or-source-image",
        }
    }

    pub fn contains(self, y: u8, q: &RelQuad, t: &GoodTuple) -> bool {
        let KeyTriple { k1, k2, k3 } = t.keys;
        match self {
            PuncturedFamily::Empty => false,
            PuncturedFamily::Full => true,
            PuncturedFamily::MaskedYInPairedImage => split_left(&q.l2, k2, &t.z.zl)
                .map(|r| r.im().contains(y ^ k3))
                .unwrap_or(false),
            PuncturedFamily::YInIsolateOrSourceImage => {
                mask_pairs(&q.l1, k1, k3).im().contains(y) || t.z.zl.contains(&y)
            }
        }
    }

    /// |P ∩ G| / N^{|L₂|+|R₂|+3} for one index.
    pub fn density(self, dim: Dim, y: u8, q: &RelQuad) -> Result<f64> {
        let hit = good_set(dim, q, RightZRule::Mirrored)?.iter().filter(|t| self.contains(y, q, t)).count();
        Ok(hit as f64 / (dim.n() as f64).powi((3 + q.z_len()) as i32))
    }
}

/// Merge map controlled by A that skips tuples in a punctured family.
#[derive(Clone, Debug)]
pub struct Punctured {
    pub family: PuncturedFamily,
}

impl Punctured {
    pub fn op(family: PuncturedFamily) -> Op {
        Op::Punctured(std::sync::Arc::new(Punctured { family }), false)
    }

    pub(crate) fn out_schema(&self, s: &Schema, dagger: bool) -> Result<Schema> {
        let (inp, out) = ((Layout::Split, KeyLayout::None, false), (Layout::Joint, KeyLayout::Full, false));
        let (inp, out) = if dagger { (out, inp) } else { (inp, out) };
        if (s.layout, s.keys, s.z) != inp {
            return Err(Error::SchemaMismatch(format!("punctured map expects {inp:?}, got {s:?}")));
        }
        Ok(Schema { layout: out.0, keys: out.1, z: out.2, ..*s })
    }

    pub(crate) fn rule(&self, l: &Label, s: &Schema, dagger: bool, emit: &mut dyn FnMut(Label, C64)) -> Result<()> {
        let dim = s.dim;
        if dagger {
            let Some(d) = decode_label(l).as_ref().and_then(DecOutput::from_label) else { return Ok(()) };
            let q = RelQuad { l1: d.l_isolate, l2: d.l_pair, r1: d.r_isolate, r2: d.r_pair };
            let t = GoodTuple { keys: d.keys, z: ZVectors { zl: d.ml, zr: d.mr } };
            if q.check().is_ok() && is_good(&q, &t)? && !self.family.contains(l.a, &q, &t) {
                let c = 1.0 / (dim.n() as f64).powi((3 + q.z_len()) as i32).sqrt();
                let mut o = split_label(l.a, &q).with_b(l.b);
                o.aux = l.aux;
                emit(o, real(c));
            }
            return Ok(());
        }
        let Some(q) = quad_of(l) else { return Ok(()) };
        let c = real(1.0 / (dim.n() as f64).powi((3 + q.z_len()) as i32).sqrt());
        for t in good_set(dim, &q, RightZRule::Mirrored)? {
            if !self.family.contains(l.a, &q, &t) {
                let (sl, sr) = q.augmented(&t)?;
                let mut o = Label::joint(l.a, sl, sr).with_keys(t.keys).with_b(l.b);
                o.aux = l.aux;
                emit(o, c);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relations::Relation;

    fn rel(p: &[(u8, u8)]) -> Relation {
        Relation::from_pairs(p.iter().copied())
    }

    #[test]
    fn keys13_on_empty_relations_is_uniform() {
        let dim = Dim::new(4).unwrap();
        let s = PurifiedState::basis(s_input_schema(dim), split_label(0, &RelQuad::default())).unwrap();
        let out = Op::Stage(StageOp::Keys13 { normalized: false, dagger: false }).apply(&s).unwrap();
        assert_eq!(out.len(), 16);
        for (_, c) in out.terms() {
            assert!((c - real(0.25)).norm() < 1e-12);
        }
    }

    #[test]
    fn s_on_empty_input_is_key_superposition() {
        let dim = Dim::new(4).unwrap();
        let s = PurifiedState::basis(s_input_schema(dim), split_label(2, &RelQuad::default())).unwrap();
        let out = s_full().apply(&s).unwrap();
        assert_eq!(out.len(), 64);
        for (l, c) in out.terms() {
            assert!((c - real(0.125)).norm() < 1e-12);
            assert!(l.rels[0].is_empty() && l.a == 2);
        }
        assert!((out.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stages_annihilate_non_distinct_inputs() {
        let dim = Dim::new(4).unwrap();
        let q = RelQuad { l1: rel(&[(0, 1), (2, 1)]), ..RelQuad::default() };
        let s = PurifiedState::basis(s_input_schema(dim), split_label(0, &q)).unwrap();
        assert!(s_full().apply(&s).unwrap().is_empty());
        assert!(s_tilde().apply(&s).unwrap().is_empty());
    }

    #[test]
    fn tilde_stages_preserve_norm_on_good_inputs() {
        let dim = Dim::new(8).unwrap();
        let q = RelQuad::new(rel(&[(1, 2)]), rel(&[(3, 4)]), rel(&[(5, 6)]), rel(&[(7, 0)])).unwrap();
        let s = PurifiedState::basis(s_input_schema(dim), split_label(0, &q)).unwrap();
        let out = s_tilde().apply(&s).unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn direct_action_matches_stage_composition() {
        let dim = Dim::new(4).unwrap();
        let q = RelQuad::new(rel(&[(1, 2)]), Relation::empty(), Relation::empty(), rel(&[(0, 3)])).unwrap();
        let s = PurifiedState::basis(s_input_schema(dim), split_label(1, &q)).unwrap();
        let staged = s_full().apply(&s).unwrap();
        let direct = s_action_direct(dim, &q, 1).unwrap();
        assert!(staged.max_abs_diff(&direct).unwrap() < 1e-12);
    }

    #[test]
    fn empty_family_matches_s() {
        let dim = Dim::new(4).unwrap();
        let q = RelQuad::new(rel(&[(1, 2)]), rel(&[(0, 0)]), Relation::empty(), Relation::empty()).unwrap();
        let s = PurifiedState::basis(s_input_schema(dim), split_label(3, &q)).unwrap();
        let a = s_full().apply(&s).unwrap();
        let b = Punctured::op(PuncturedFamily::Empty).apply(&s).unwrap();
        assert!(a.max_abs_diff(&b).unwrap() < 1e-12);
        let full = Punctured::op(PuncturedFamily::Full).apply(&s).unwrap();
        assert!(full.is_empty());
    }

    #[test]
    fn punctured_adjoint_is_consistent() {
        let dim = Dim::new(4).unwrap();
        let q = RelQuad::new(rel(&[(1, 2)]), rel(&[(0, 0)]), Relation::empty(), Relation::empty()).unwrap();
        let s = PurifiedState::basis(s_input_schema(dim), split_label(3, &q)).unwrap();
        let p = Punctured::op(PuncturedFamily::MaskedYInPairedImage);
        let img = p.apply(&s).unwrap();
        let back = p.adjoint().apply(&img).unwrap();
        // P†P is diagonal with entry ‖P e‖²
        assert!((back.amplitude(&split_label(3, &q)).re - img.norm_sqr()).abs() < 1e-12);
    }
}
