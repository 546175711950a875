//! The relation decoder, its inverse, and robust-decodability probes.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::good_tuples::{good_set, z_vectors, GoodTuple, RelQuad, RightZRule};
use crate::oracles::op::Op;
use crate::relations::{
    all_distinct, induced_graph_decompose, mask_pairs, relations_of_size, relations_up_to, split_left, split_right,
    Dim, Distinctness, ElemSet, KeyTriple, Pair, Relation, Side, ValVec, ZVectors,
};
use crate::isometry::StageOp;
use crate::state::label::Label;
use crate::state::purified::PurifiedState;

/// Decoded view: the two per-oracle databases, intermediate values and keys.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct DecOutput {
    pub l_isolate: Relation,
    pub r_isolate: Relation,
    pub l_pair: Relation,
    pub r_pair: Relation,
    pub ml: ValVec,
    pub mr: ValVec,
    pub keys: KeyTriple,
}

impl DecOutput {
    /// Checks the acceptance screens the decoder applies before output.
    pub fn validate(&self) -> Result<()> {
        if !self.l_isolate.is_i_distinct() || !self.l_pair.is_i_distinct() {
            return Err(Error::NotDistinct("I"));
        }
        if !self.r_isolate.is_d_distinct() || !self.r_pair.is_d_distinct() {
            return Err(Error::NotDistinct("D"));
        }
        if self.ml.len() != self.l_pair.len() {
            return Err(Error::LengthMismatch { expected: self.l_pair.len(), got: self.ml.len() });
        }
        if self.mr.len() != self.r_pair.len() {
            return Err(Error::LengthMismatch { expected: self.r_pair.len(), got: self.mr.len() });
        }
        if !all_distinct(&self.ml) || !all_distinct(&self.mr) {
            return Err(Error::Precondition("intermediate values repeat".into()));
        }
        let ml: ElemSet = self.ml.iter().copied().collect();
        let mr: ElemSet = self.mr.iter().copied().collect();
        if self.l_pair.im().intersects(ml) || self.r_pair.dom().intersects(mr) {
            return Err(Error::Precondition("intermediate values collide with paired relations".into()));
        }
        Ok(())
    }

    /// Label on the split side: (S₁, T₁, S₂, T₂) = (L_isolate, R_isolate, L_pair, R_pair).
    pub fn to_label(&self, a: u8) -> Label {
        let mut l = Label::split(
            a,
            self.l_isolate.clone(),
            self.r_isolate.clone(),
            self.l_pair.clone(),
            self.r_pair.clone(),
        )
        .with_keys(self.keys);
        l.z = Some(ZVectors { zl: self.ml.clone(), zr: self.mr.clone() });
        l
    }

    /// Inverse of [`DecOutput::to_label`]; `None` unless the label carries z and all keys.
    pub fn from_label(l: &Label) -> Option<DecOutput> {
        let z = l.z.as_ref()?;
        Some(DecOutput {
            l_isolate: l.rels[0].clone(),
            r_isolate: l.rels[1].clone(),
            l_pair: l.rels[2].clone(),
            r_pair: l.rels[3].clone(),
            ml: z.zl.clone(),
            mr: z.zr.clone(),
            keys: l.key_triple()?,
        })
    }
}

/// Runs the decoder; `None` is the failure symbol.
pub fn dec(l: &Relation, r: &Relation, keys: KeyTriple) -> Option<DecOutput> {
    let KeyTriple { k1, k2, k3 } = keys;
    let gl = induced_graph_decompose(l, k2, Side::Left)?;
    let gr = induced_graph_decompose(r, k2, Side::Right)?;
    if !gl.target.is_i_distinct() || !gr.target.is_d_distinct() {
        return None;
    }

    // left: source (x, e) → target (e ⊕ k2, y), listed by ascending y
    let mut left: Vec<(Pair, Pair)> = gl.matching.clone();
    left.sort_by_key(|(_, t)| t.1);
    let l_pair = Relation::from_pairs(left.iter().map(|(s, t)| (s.0, t.1)));
    let ml: ValVec = left.iter().map(|(s, _)| s.1).collect();

    // right: source (f, v) → target (u, f ⊕ k2), listed by ascending u
    let mut right: Vec<(Pair, Pair)> = gr.matching.clone();
    right.sort_by_key(|(_, t)| t.0);
    let r_pair = Relation::from_pairs(right.iter().map(|(s, t)| (t.0, s.1)));
    let mr: ValVec = right.iter().map(|(s, _)| s.0).collect();

    let out = DecOutput {
        l_isolate: mask_pairs(&gl.isolate, k1, k3),
        r_isolate: mask_pairs(&gr.isolate, k1, k3),
        l_pair,
        r_pair,
        ml,
        mr,
        keys,
    };
    out.validate().ok()?;
    Some(out)
}

/// Inverse of [`dec`] on its support.
pub fn enc(d: &DecOutput) -> Result<(Relation, Relation, KeyTriple)> {
    d.validate()?;
    let KeyTriple { k1, k2, k3 } = d.keys;
    let l = mask_pairs(&d.l_isolate, k1, k3).union(&split_left(&d.l_pair, k2, &d.ml)?);
    let r = mask_pairs(&d.r_isolate, k1, k3).union(&split_right(&d.r_pair, k2, &d.mr)?);
    Ok((l, r, d.keys))
}

/// Decodes a merged-side label: (S, T, K) ↦ (S₁, T₁, S₂, T₂, Z, K), keeping A and B.
pub fn decode_label(l: &Label) -> Option<Label> {
    let keys = l.key_triple()?;
    let d = dec(&l.rels[0], &l.rels[1], keys)?;
    let mut out = d.to_label(l.a).with_b(l.b);
    out.aux = l.aux;
    Some(out)
}

/// Encodes a split-side label when it lies in the decoder's image.
pub fn encode_label(l: &Label) -> Option<Label> {
    let d = DecOutput::from_label(l)?;
    let (sl, sr, keys) = enc(&d).ok()?;
    if dec(&sl, &sr, keys).as_ref() != Some(&d) {
        return None;
    }
    let mut out = Label::joint(l.a, sl, sr).with_keys(keys).with_b(l.b);
    out.aux = l.aux;
    Some(out)
}

/// Applies the coherent decoder.
pub fn apply_d(s: &PurifiedState) -> Result<PurifiedState> {
    Op::Stage(StageOp::Decode).apply(s)
}

/// Applies the adjoint of the coherent decoder.
pub fn apply_d_dagger(s: &PurifiedState) -> Result<PurifiedState> {
    Op::Stage(StageOp::Encode).apply(s)
}

/// Which element of the augmented relation was deleted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DeletedRole {
    Isolate,
    Source,
    Target,
}

#[derive(Clone, Debug, Serialize)]
pub struct DeletionFailure {
    pub side: &'static str,
    pub role: DeletedRole,
    pub deleted: Pair,
    pub predicted: DecOutput,
    pub got: Option<DecOutput>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RobustReport {
    pub decodable: bool,
    pub deletions: usize,
    pub failures: Vec<DeletionFailure>,
}

impl RobustReport {
    pub fn robust(&self) -> bool {
        self.decodable && self.failures.is_empty()
    }
}

fn remove_at(v: &ValVec, i: usize) -> ValVec {
    let mut out = v.clone();
    out.remove(i);
    out
}

/// Deletes every element of the augmented relations in turn and compares the
/// decoder against the predicted outputs.
pub fn robust_probe(q: &RelQuad, tuple: &GoodTuple) -> Result<RobustReport> {
    let keys = tuple.keys;
    let KeyTriple { k1, k2, k3 } = keys;
    let (zl, zr) = (&tuple.z.zl, &tuple.z.zr);
    let (l, r) = q.augmented(tuple)?;
    let expected = DecOutput {
        l_isolate: q.l1.clone(),
        r_isolate: q.r1.clone(),
        l_pair: q.l2.clone(),
        r_pair: q.r2.clone(),
        ml: zl.clone(),
        mr: zr.clone(),
        keys,
    };
    let decodable = dec(&l, &r, keys).as_ref() == Some(&expected);
    let mut report = RobustReport { decodable, deletions: 0, failures: Vec::new() };
    if !decodable {
        return Ok(report);
    }

    let mut check = |side: &'static str, role: DeletedRole, deleted: Pair, predicted: DecOutput| {
        let got = match side {
            "left" => l.without(deleted).and_then(|l2| dec(&l2, &r, keys)),
            _ => r.without(deleted).and_then(|r2| dec(&l, &r2, keys)),
        };
        report.deletions += 1;
        if got.as_ref() != Some(&predicted) {
            report.failures.push(DeletionFailure { side, role, deleted, predicted, got });
        }
    };

    for &(a, b) in q.l1.pairs() {
        let predicted = DecOutput { l_isolate: q.l1.without((a, b)).expect("member"), ..expected.clone() };
        check("left", DeletedRole::Isolate, (a ^ k1, b ^ k3), predicted);
    }
    for (i, &(x, y)) in q.l2.by_output().iter().enumerate() {
        let z = zl[i];
        let rest = q.l2.without((x, y)).expect("member");
        let shrunk = DecOutput { l_pair: rest, ml: remove_at(zl, i), ..expected.clone() };
        let predicted =
            DecOutput { l_isolate: q.l1.with((z ^ k2 ^ k1, y ^ k3)), ..shrunk.clone() };
        check("left", DeletedRole::Source, (x, z), predicted);
        let predicted = DecOutput { l_isolate: q.l1.with((x ^ k1, z ^ k3)), ..shrunk };
        check("left", DeletedRole::Target, (z ^ k2, y), predicted);
    }

    for &(a, b) in q.r1.pairs() {
        let predicted = DecOutput { r_isolate: q.r1.without((a, b)).expect("member"), ..expected.clone() };
        check("right", DeletedRole::Isolate, (a ^ k1, b ^ k3), predicted);
    }
    for (i, &(x, y)) in q.r2.pairs().iter().enumerate() {
        let z = zr[i];
        let rest = q.r2.without((x, y)).expect("member");
        let shrunk = DecOutput { r_pair: rest, mr: remove_at(zr, i), ..expected.clone() };
        // R₂ splits into source (z, y) and target (x, z ⊕ k2)
        let predicted =
            DecOutput { r_isolate: q.r1.with((x ^ k1, z ^ k2 ^ k3)), ..shrunk.clone() };
        check("right", DeletedRole::Source, (z, y), predicted);
        let predicted = DecOutput { r_isolate: q.r1.with((z ^ k1, y ^ k3)), ..shrunk };
        check("right", DeletedRole::Target, (x, z ^ k2), predicted);
    }
    Ok(report)
}

/// Exhaustive round trip of [`dec`] and [`enc`] at one N.
#[derive(Clone, Debug, Serialize)]
pub struct RoundtripReport {
    pub n: usize,
    pub max_size: usize,
    /// (L, R, k) triples with |L| + |R| ≤ max_size.
    pub inputs: u64,
    /// Inputs on which the decoder succeeds.
    pub supported: u64,
    pub enc_failures: u64,
    /// Outputs passing [`DecOutput::validate`] with merged size ≤ max_size.
    pub outputs: u64,
    /// Outputs with dec(enc(d)) = d: the image of dec.
    pub image: u64,
    /// Outputs whose encoding decodes to ⊥ (a self-loop or a non-matching graph).
    pub outside_to_bottom: u64,
    /// Outputs whose encoding decodes to another output (isolates forming an edge).
    pub outside_to_other: u64,
    /// Outputs that enc rejects.
    pub dec_failures: u64,
    pub first_failure: Option<String>,
    pub seconds: f64,
    pub pass: bool,
}

#[derive(Default)]
struct Tally {
    total: u64,
    hits: u64,
    bottom: u64,
    elsewhere: u64,
    failures: u64,
    first: Option<String>,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        self.total += other.total;
        self.hits += other.hits;
        self.bottom += other.bottom;
        self.elsewhere += other.elsewhere;
        self.failures += other.failures;
        self.first = self.first.or(other.first);
        self
    }

    fn fail(&mut self, what: String) {
        self.failures += 1;
        if self.first.is_none() {
            self.first = Some(what);
        }
    }
}

/// enc ∘ dec = id on the support of dec over merged relations with
/// |L| + |R| ≤ `max_size`, and dec ∘ enc = id on the image of dec.
///
/// The image is found by enumerating every output that passes
/// [`DecOutput::validate`] and keeping those that survive the round trip.
/// Passing requires that count to equal the size of the support, so every
/// decoded output is recovered and nothing else is. Outputs outside the image
/// are counted by what their encoding decodes to.
pub fn roundtrip_suite(dim: Dim, max_size: usize) -> Result<RoundtripReport> {
    let start = Instant::now();
    let keys: Vec<KeyTriple> = KeyTriple::all(dim).collect();
    let rels = relations_up_to(dim, max_size, Distinctness::Any);
    let forward = keys
        .par_iter()
        .map(|&k| {
            let mut t = Tally::default();
            for l in &rels {
                for r in rels.iter().filter(|r| l.len() + r.len() <= max_size) {
                    t.total += 1;
                    let Some(d) = dec(l, r, k) else { continue };
                    t.hits += 1;
                    match enc(&d) {
                        Ok(back) if back == (l.clone(), r.clone(), k) => {}
                        got => t.fail(format!("enc(dec({l:?}, {r:?}, {k:?})) = {got:?}")),
                    }
                }
            }
            t
        })
        .reduce(Tally::default, Tally::merge);

    let by_size = |size: usize, filter: Distinctness| relations_of_size(dim, size, filter);
    let mut shapes = Vec::new();
    for pairs_l in 0..=max_size / 2 {
        for pairs_r in 0..=(max_size / 2 - pairs_l) {
            let rest = max_size - 2 * (pairs_l + pairs_r);
            for iso_l in 0..=rest {
                for iso_r in 0..=rest - iso_l {
                    shapes.push([iso_l, iso_r, pairs_l, pairs_r]);
                }
            }
        }
    }
    let backward = keys
        .par_iter()
        .map(|&k| {
            let mut t = Tally::default();
            for &[iso_l, iso_r, pairs_l, pairs_r] in &shapes {
                let ml_all = z_vectors(dim, pairs_l, ElemSet::default());
                let mr_all = z_vectors(dim, pairs_r, ElemSet::default());
                for l_isolate in by_size(iso_l, Distinctness::Outputs) {
                    for r_isolate in by_size(iso_r, Distinctness::Inputs) {
                        for l_pair in by_size(pairs_l, Distinctness::Outputs) {
                            for r_pair in by_size(pairs_r, Distinctness::Inputs) {
                                for ml in &ml_all {
                                    for mr in &mr_all {
                                        let d = DecOutput {
                                            l_isolate: l_isolate.clone(),
                                            r_isolate: r_isolate.clone(),
                                            l_pair: l_pair.clone(),
                                            r_pair: r_pair.clone(),
                                            ml: ml.clone(),
                                            mr: mr.clone(),
                                            keys: k,
                                        };
                                        if d.validate().is_err() {
                                            continue;
                                        }
                                        t.total += 1;
                                        match enc(&d).map(|(l, r, k)| dec(&l, &r, k)) {
                                            Ok(None) => t.bottom += 1,
                                            Ok(Some(back)) if back == d => t.hits += 1,
                                            Ok(Some(_)) => t.elsewhere += 1,
                                            Err(e) => t.fail(format!("enc({d:?}) failed: {e}")),
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
            t
        })
        .reduce(Tally::default, Tally::merge);

    // dec is injective on its support, so the image and the support have equal size
    let pass = forward.failures == 0 && backward.failures == 0 && backward.hits == forward.hits;
    Ok(RoundtripReport {
        n: dim.n(),
        max_size,
        inputs: forward.total,
        supported: forward.hits,
        enc_failures: forward.failures,
        outputs: backward.total,
        image: backward.hits,
        outside_to_bottom: backward.bottom,
        outside_to_other: backward.elsewhere,
        dec_failures: backward.failures,
        first_failure: forward.first.or(backward.first),
        seconds: start.elapsed().as_secs_f64(),
        pass,
    })
}

/// Decodability and robustness of every good tuple over all quadruples with
/// each relation of size ≤ `max_size`.
#[derive(Clone, Debug, Serialize)]
pub struct SoundnessReport {
    pub n: usize,
    pub max_size: usize,
    pub rule: RightZRule,
    pub quads: u64,
    pub good_tuples: u64,
    pub deletions: u64,
    pub undecodable: u64,
    pub deletion_failures: u64,
    pub first_failure: Option<String>,
    pub seconds: f64,
    pub pass: bool,
}

pub fn soundness_suite(dim: Dim, max_size: usize, rule: RightZRule) -> Result<SoundnessReport> {
    let start = Instant::now();
    let iso_l = relations_up_to(dim, max_size, Distinctness::Outputs);
    let iso_r = relations_up_to(dim, max_size, Distinctness::Inputs);
    let mut quads = Vec::new();
    for l1 in &iso_l {
        for l2 in &iso_l {
            for r1 in &iso_r {
                for r2 in &iso_r {
                    quads.push(RelQuad { l1: l1.clone(), l2: l2.clone(), r1: r1.clone(), r2: r2.clone() });
                }
            }
        }
    }
    let (tally, deletions, deletion_failures) = quads
        .par_iter()
        .map(|q| -> Result<(Tally, u64, u64)> {
            let mut t = Tally::default();
            let (mut deletions, mut deletion_failures) = (0u64, 0u64);
            for tuple in good_set(dim, q, rule)? {
                t.total += 1;
                let report = robust_probe(q, &tuple)?;
                deletions += report.deletions as u64;
                deletion_failures += report.failures.len() as u64;
                if !report.decodable {
                    t.fail(format!("{q:?} with {tuple:?} does not decode"));
                } else if let Some(f) = report.failures.first() {
                    t.first.get_or_insert_with(|| format!("{q:?} with {tuple:?}: {f:?}"));
                }
            }
            Ok((t, deletions, deletion_failures))
        })
        .try_reduce(|| (Tally::default(), 0, 0), |a, b| Ok((a.0.merge(b.0), a.1 + b.1, a.2 + b.2)))?;
    Ok(SoundnessReport {
        n: dim.n(),
        max_size,
        rule,
        quads: quads.len() as u64,
        good_tuples: tally.total,
        deletions,
        undecodable: tally.failures,
        deletion_failures,
        first_failure: tally.first,
        seconds: start.elapsed().as_secs_f64(),
        pass: tally.failures == 0 && deletion_failures == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(p: &[Pair]) -> Relation {
        Relation::from_pairs(p.iter().copied())
    }

    #[test]
    fn empty_input_decodes_to_empty_parts() {
        let d = dec(&Relation::empty(), &Relation::empty(), KeyTriple::new(1, 2, 3)).unwrap();
        assert!(d.l_isolate.is_empty() && d.l_pair.is_empty() && d.ml.is_empty() && d.mr.is_empty());
    }

    #[test]
    fn two_step_chain_decodes_to_a_pair() {
        let keys = KeyTriple::new(0, 4, 0);
        let d = dec(&rel(&[(1, 2), (6, 3)]), &Relation::empty(), keys).unwrap();
        assert!(d.l_isolate.is_empty());
        assert_eq!(d.l_pair, rel(&[(1, 3)]));
        assert_eq!(d.ml.as_slice(), &[2]);
        assert_eq!(enc(&d).unwrap(), (rel(&[(1, 2), (6, 3)]), Relation::empty(), keys));
    }

    #[test]
    fn self_loop_fails() {
        assert!(dec(&rel(&[(1, 2)]), &Relation::empty(), KeyTriple::new(0, 3, 0)).is_none());
    }

    #[test]
    fn right_side_roundtrip() {
        // target (u, f ⊕ k2) = (2, 5 ⊕ 1), source (f, v) = (5, 7)
        let keys = KeyTriple::new(3, 1, 6);
        let r = rel(&[(2, 4), (5, 7)]);
        let d = dec(&Relation::empty(), &r, keys).unwrap();
        assert_eq!(d.r_pair, rel(&[(2, 7)]));
        assert_eq!(d.mr.as_slice(), &[5]);
        assert_eq!(enc(&d).unwrap().1, r);
    }

    #[test]
    fn isolates_are_unmasked() {
        let keys = KeyTriple::new(1, 4, 2);
        let d = dec(&rel(&[(0, 0)]), &rel(&[(3, 3)]), keys).unwrap();
        assert_eq!(d.l_isolate, rel(&[(1, 2)]));
        assert_eq!(d.r_isolate, rel(&[(2, 1)]));
    }

    #[test]
    fn enc_rejects_invalid_outputs() {
        let d = DecOutput {
            l_isolate: Relation::empty(),
            r_isolate: Relation::empty(),
            l_pair: rel(&[(0, 1)]),
            r_pair: Relation::empty(),
            ml: [1u8].into_iter().collect(),
            mr: ValVec::new(),
            keys: KeyTriple::default(),
        };
        assert!(enc(&d).is_err());
    }

    #[test]
    fn label_codec_roundtrip() {
        let keys = KeyTriple::new(0, 4, 0);
        let l = Label::joint(3, rel(&[(1, 2), (6, 3)]), Relation::empty()).with_keys(keys);
        let d = decode_label(&l).unwrap();
        assert_eq!(d.rels[2], rel(&[(1, 3)]));
        assert_eq!(encode_label(&d).unwrap(), l);
    }

    #[test]
    fn decoder_is_injective_on_small_support() {
        let dim = Dim::new(4).unwrap();
        let rels: Vec<Relation> = (0..=2).flat_map(|s| relations_of_size(dim, s, Distinctness::Any)).collect();
        let mut seen = std::collections::HashMap::new();
        for keys in [KeyTriple::new(0, 1, 2), KeyTriple::new(3, 3, 1)] {
            for l in &rels {
                for r in rels.iter().filter(|r| r.len() + l.len() <= 2) {
                    if let Some(d) = dec(l, r, keys) {
                        assert!(seen.insert(d, (l.clone(), r.clone())).is_none());
                    }
                }
            }
        }
    }

    #[test]
    fn probe_on_empty_relations_is_vacuous() {
        let q = RelQuad::default();
        let t = GoodTuple { keys: KeyTriple::new(1, 2, 3), z: ZVectors::default() };
        let rep = robust_probe(&q, &t).unwrap();
        assert!(rep.robust());
        assert_eq!(rep.deletions, 0);
    }

    #[test]
    fn roundtrip_suite_passes_at_small_n() {
        let r = roundtrip_suite(Dim::new(2).unwrap(), 3).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.image, r.supported);
        assert_eq!(r.outputs, r.image + r.outside_to_bottom + r.outside_to_other);
    }

    #[test]
    fn soundness_suite_passes_at_small_n() {
        let r = soundness_suite(Dim::new(2).unwrap(), 1, RightZRule::Mirrored).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.good_tuples > 0);
    }
}
