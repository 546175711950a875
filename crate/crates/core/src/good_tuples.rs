//! Good key/intermediate tuples, their bad sets, and the counting lemmas.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::relations::{
    all_distinct, mask_pairs, split_left, split_right, Dim, ElemSet, KeyTriple, Relation, ValVec, ZVectors,
};

/// The four per-oracle databases (L₁, L₂, R₁, R₂).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct RelQuad {
    pub l1: Relation,
    pub l2: Relation,
    pub r1: Relation,
    pub r2: Relation,
}

impl RelQuad {
    pub fn new(l1: Relation, l2: Relation, r1: Relation, r2: Relation) -> Result<Self> {
        let q = RelQuad { l1, l2, r1, r2 };
        q.check()?;
        Ok(q)
    }

    pub fn check(&self) -> Result<()> {
        if !self.l1.is_i_distinct() || !self.l2.is_i_distinct() {
            return Err(Error::NotDistinct("I"));
        }
        if !self.r1.is_d_distinct() || !self.r2.is_d_distinct() {
            return Err(Error::NotDistinct("D"));
        }
        Ok(())
    }

    /// Largest of the four sizes.
    pub fn max_size(&self) -> usize {
        [&self.l1, &self.l2, &self.r1, &self.r2].iter().map(|r| r.len()).max().unwrap_or(0)
    }

    /// Number of intermediate coordinates, |L₂| + |R₂|.
    pub fn z_len(&self) -> usize {
        self.l2.len() + self.r2.len()
    }

    /// Merged relations L₁^{(k₁,k₃)} ∪ L₂^{(k₂,z_L)} and the right counterpart.
    pub fn augmented(&self, t: &GoodTuple) -> Result<(Relation, Relation)> {
        let KeyTriple { k1, k2, k3 } = t.keys;
        let l = mask_pairs(&self.l1, k1, k3).union(&split_left(&self.l2, k2, &t.z.zl)?);
        let r = mask_pairs(&self.r1, k1, k3).union(&split_right(&self.r2, k2, &t.z.zr)?);
        Ok((l, r))
    }

    fn check_lengths(&self, z: &ZVectors) -> Result<()> {
        if z.zl.len() != self.l2.len() {
            return Err(Error::LengthMismatch { expected: self.l2.len(), got: z.zl.len() });
        }
        if z.zr.len() != self.r2.len() {
            return Err(Error::LengthMismatch { expected: self.r2.len(), got: z.zr.len() });
        }
        Ok(())
    }
}

/// Key triple plus intermediate vectors.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct GoodTuple {
    pub keys: KeyTriple,
    pub z: ZVectors,
}

impl GoodTuple {
    pub fn new(keys: KeyTriple, zl: &[u8], zr: &[u8]) -> Self {
        GoodTuple { keys, z: ZVectors::new(zl, zr) }
    }
}

/// Forbidden set for the right intermediate vector.
///
/// `AsPrinted` copies the left-hand condition with R in place of L. It admits
/// tuples whose augmented R₂ is not D-distinct, so such tuples fail to
/// decode. `Mirrored` swaps the roles of domain and image, which is the
/// condition the right-side split actually needs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub enum RightZRule {
    AsPrinted,
    #[default]
    Mirrored,
}

/// Dom(L₁)⊕Dom(L₂) ∪ Dom(R₁)⊕Dom(R₂).
pub fn b1(q: &RelQuad) -> ElemSet {
    q.l1.dom().xor_set(q.l2.dom()).union(q.r1.dom().xor_set(q.r2.dom()))
}

/// Im(L₁)⊕Im(L₂) ∪ Im(R₁)⊕Im(R₂).
pub fn b3(q: &RelQuad) -> ElemSet {
    q.l1.im().xor_set(q.l2.im()).union(q.r1.im().xor_set(q.r2.im()))
}

fn masked_dom(a: &Relation, b: &Relation, k1: u8) -> ElemSet {
    a.dom().xor(k1).union(b.dom())
}

fn masked_im(a: &Relation, b: &Relation, k3: u8) -> ElemSet {
    a.im().xor(k3).union(b.im())
}

/// Bad k₂ for fixed (k₁, k₃).
pub fn b2(q: &RelQuad, k1: u8, k3: u8) -> ElemSet {
    let left = masked_dom(&q.l1, &q.l2, k1).xor_set(masked_im(&q.l1, &q.l2, k3));
    let right = masked_dom(&q.r1, &q.r2, k1).xor_set(masked_im(&q.r1, &q.r2, k3));
    left.union(right)
}

/// Values the left intermediate vector must avoid.
pub fn zl_forbidden(q: &RelQuad, k: KeyTriple) -> ElemSet {
    masked_im(&q.l1, &q.l2, k.k3).union(masked_dom(&q.l1, &q.l2, k.k1).xor(k.k2))
}

/// Values the right intermediate vector must avoid under `rule`.
pub fn zr_forbidden(q: &RelQuad, k: KeyTriple, rule: RightZRule) -> ElemSet {
    match rule {
        RightZRule::AsPrinted => masked_im(&q.r1, &q.r2, k.k3).union(masked_dom(&q.r1, &q.r2, k.k1).xor(k.k2)),
        RightZRule::Mirrored => masked_dom(&q.r1, &q.r2, k.k1).union(masked_im(&q.r1, &q.r2, k.k3).xor(k.k2)),
    }
}

fn z_ok(z: &[u8], forbidden: ElemSet) -> bool {
    all_distinct(z) && z.iter().all(|v| !forbidden.contains(*v))
}

/// Membership in the good set under the default right-side rule.
pub fn is_good(q: &RelQuad, t: &GoodTuple) -> Result<bool> {
    is_good_with(q, t, RightZRule::default())
}

pub fn is_good_with(q: &RelQuad, t: &GoodTuple, rule: RightZRule) -> Result<bool> {
    q.check()?;
    q.check_lengths(&t.z)?;
    Ok(good_unchecked(q, t, rule))
}

pub(crate) fn good_unchecked(q: &RelQuad, t: &GoodTuple, rule: RightZRule) -> bool {
    let k = t.keys;
    !b1(q).contains(k.k1)
        && !b3(q).contains(k.k3)
        && !b2(q, k.k1, k.k3).contains(k.k2)
        && z_ok(&t.z.zl, zl_forbidden(q, k))
        && z_ok(&t.z.zr, zr_forbidden(q, k, rule))
}

/// Every good tuple, enumerated key by key with the bad sets computed once per level.
pub fn good_set(dim: Dim, q: &RelQuad, rule: RightZRule) -> Result<Vec<GoodTuple>> {
    q.check()?;
    let (bad1, bad3) = (b1(q), b3(q));
    let mut out = Vec::new();
    for k1 in dim.values().filter(|k| !bad1.contains(*k)) {
        for k3 in dim.values().filter(|k| !bad3.contains(*k)) {
            let bad2 = b2(q, k1, k3);
            for k2 in dim.values().filter(|k| !bad2.contains(*k)) {
                let keys = KeyTriple { k1, k2, k3 };
                let zls = z_vectors(dim, q.l2.len(), zl_forbidden(q, keys));
                let zrs = z_vectors(dim, q.r2.len(), zr_forbidden(q, keys, rule));
                for zl in &zls {
                    for zr in &zrs {
                        out.push(GoodTuple { keys, z: ZVectors { zl: zl.clone(), zr: zr.clone() } });
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Vectors in [N]^m with distinct entries avoiding `forbidden`.
pub(crate) fn z_vectors(dim: Dim, m: usize, forbidden: ElemSet) -> Vec<ValVec> {
    let mut out = vec![ValVec::new()];
    for _ in 0..m {
        let mut next = Vec::new();
        for v in &out {
            for a in dim.values().filter(|a| !forbidden.contains(*a) && !v.contains(a)) {
                let mut w = v.clone();
                w.push(a);
                next.push(w);
            }
        }
        out = next;
    }
    out
}

/// Bad key sets in enumeration order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum KeyBadSet {
    B1,
    B2,
    B3,
}

/// Exact bad key set. B₂ requires good (k₁, k₃).
pub fn bad_keys(q: &RelQuad, which: KeyBadSet, k1: u8, k3: u8) -> Result<ElemSet> {
    q.check()?;
    match which {
        KeyBadSet::B1 => Ok(b1(q)),
        KeyBadSet::B3 => Ok(b3(q)),
        KeyBadSet::B2 => {
            if b1(q).contains(k1) || b3(q).contains(k3) {
                return Err(Error::Precondition("B2 needs k1 outside B1 and k3 outside B3".into()));
            }
            Ok(b2(q, k1, k3))
        }
    }
}

fn keys_good(q: &RelQuad, k: KeyTriple) -> bool {
    !b1(q).contains(k.k1) && !b3(q).contains(k.k3) && !b2(q, k.k1, k.k3).contains(k.k2)
}

/// Membership of z_L in B_L; requires a good key triple.
pub fn in_bl(q: &RelQuad, k: KeyTriple, zl: &[u8]) -> Result<bool> {
    q.check()?;
    if !keys_good(q, k) {
        return Err(Error::Precondition("B_L needs a good key triple".into()));
    }
    if zl.len() != q.l2.len() {
        return Err(Error::LengthMismatch { expected: q.l2.len(), got: zl.len() });
    }
    Ok(!z_ok(zl, zl_forbidden(q, k)))
}

/// Membership of z_R in B_R; requires a good key triple.
pub fn in_br(q: &RelQuad, k: KeyTriple, zr: &[u8], rule: RightZRule) -> Result<bool> {
    q.check()?;
    if !keys_good(q, k) {
        return Err(Error::Precondition("B_R needs a good key triple".into()));
    }
    if zr.len() != q.r2.len() {
        return Err(Error::LengthMismatch { expected: q.r2.len(), got: zr.len() });
    }
    Ok(!z_ok(zr, zr_forbidden(q, k, rule)))
}

/// Number of vectors in [N]^m that are repeated or touch `forbidden`.
pub fn bad_vector_count(n: usize, m: usize, forbidden: ElemSet) -> u64 {
    let total = (n as u64).pow(m as u32);
    let free = n.saturating_sub(forbidden.len()) as u64;
    let good: u64 = (0..m as u64).map(|i| free.saturating_sub(i)).product();
    total - good
}

/// The three conditions sufficient for robust decodability.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RobustConditions {
    pub distinct: bool,
    pub disjoint: bool,
    pub no_extra_pairs: bool,
}

impl RobustConditions {
    pub fn all(&self) -> bool {
        self.distinct && self.disjoint && self.no_extra_pairs
    }
}

pub fn robust_conditions(q: &RelQuad, t: &GoodTuple) -> Result<RobustConditions> {
    let KeyTriple { k1, k2, k3 } = t.keys;
    let l1 = mask_pairs(&q.l1, k1, k3);
    let l2 = split_left(&q.l2, k2, &t.z.zl)?;
    let r1 = mask_pairs(&q.r1, k1, k3);
    let r2 = split_right(&q.r2, k2, &t.z.zr)?;
    let distinct = l1.is_i_distinct() && l2.is_i_distinct() && r1.is_d_distinct() && r2.is_d_distinct();
    let disjoint = !l1.im().intersects(l2.im()) && !r1.dom().intersects(r2.dom());
    let l = l1.union(&l2);
    let r = r1.union(&r2);
    let left_edges = count_edges(l.pairs(), |u, w| w.0 == u.1 ^ k2);
    let right_edges = count_edges(r.pairs(), |u, w| w.1 == u.0 ^ k2);
    let no_extra_pairs = left_edges == q.l2.len() && right_edges == q.r2.len();
    Ok(RobustConditions { distinct, disjoint, no_extra_pairs })
}

fn count_edges(v: &[(u8, u8)], edge: impl Fn((u8, u8), (u8, u8)) -> bool) -> usize {
    v.iter().map(|&u| v.iter().filter(|&&w| edge(u, w)).count()).sum()
}

/// Tuple universe [N]³ × [N]^{|L₂|} × [N]^{|R₂|}, decoded from a flat index.
pub fn tuple_at(dim: Dim, q: &RelQuad, mut idx: u64) -> GoodTuple {
    let n = dim.n() as u64;
    let mut next = || {
        let v = (idx % n) as u8;
        idx /= n;
        v
    };
    let keys = KeyTriple::new(next(), next(), next());
    let zl: ValVec = (0..q.l2.len()).map(|_| next()).collect();
    let zr: ValVec = (0..q.r2.len()).map(|_| next()).collect();
    GoodTuple { keys, z: ZVectors { zl, zr } }
}

fn universe_size(dim: Dim, free_coords: usize) -> Option<u64> {
    (dim.n() as u64).checked_pow(free_coords as u32)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CensusMode {
    Exhaustive { budget: u64 },
    Sampled { seed: u64, samples: u64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct CensusReport {
    pub n: usize,
    pub t: usize,
    pub sizes: [usize; 4],
    pub universe: u64,
    pub examined: u64,
    pub good: u64,
    pub fraction: f64,
    /// Three binomial standard deviations; zero in exhaustive mode.
    pub three_sigma: f64,
    pub bound: f64,
    pub pass: bool,
    pub mode: CensusMode,
}

/// Draws tuple number `index` of a seeded census; each index owns one stream.
pub fn sample_tuple(dim: Dim, q: &RelQuad, seed: u64, index: u64) -> GoodTuple {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let n = dim.n() as u8 as u16;
    let mut draw = || rng.random_range(0..n.max(1)) as u8;
    let keys = KeyTriple::new(draw(), draw(), draw());
    let zl: ValVec = (0..q.l2.len()).map(|_| draw()).collect();
    let zr: ValVec = (0..q.r2.len()).map(|_| draw()).collect();
    GoodTuple { keys, z: ZVectors { zl, zr } }
}

/// Counts good tuples and compares against 1 − 22t²/N.
pub fn census(dim: Dim, q: &RelQuad, t: usize, mode: CensusMode, rule: RightZRule) -> Result<CensusReport> {
    q.check()?;
    if q.max_size() > t {
        return Err(Error::Config(format!("relation sizes exceed the cap t = {t}")));
    }
    let coords = 3 + q.z_len();
    let universe = universe_size(dim, coords).unwrap_or(u64::MAX);
    let bound = 1.0 - 22.0 * (t * t) as f64 / dim.n() as f64;
    let (examined, good) = match mode {
        CensusMode::Exhaustive { budget } => {
            if universe > budget {
                return Err(Error::Budget(format!("census universe {universe} exceeds budget {budget}")));
            }
            let good = (0..universe)
                .into_par_iter()
                .filter(|&i| good_unchecked(q, &tuple_at(dim, q, i), rule))
                .count() as u64;
            (universe, good)
        }
        CensusMode::Sampled { seed, samples } => {
            let good = (0..samples)
                .into_par_iter()
                .filter(|&i| good_unchecked(q, &sample_tuple(dim, q, seed, i), rule))
                .count() as u64;
            (samples, good)
        }
    };
    let fraction = if examined == 0 { 1.0 } else { good as f64 / examined as f64 };
    let three_sigma = match mode {
        CensusMode::Exhaustive { .. } => 0.0,
        CensusMode::Sampled { .. } => 3.0 * (fraction * (1.0 - fraction) / examined.max(1) as f64).sqrt(),
    };
    Ok(CensusReport {
        n: dim.n(),
        t,
        sizes: [q.l1.len(), q.l2.len(), q.r1.len(), q.r2.len()],
        universe,
        examined,
        good,
        fraction,
        three_sigma,
        bound,
        pass: fraction - three_sigma >= bound,
        mode,
    })
}

/// Inserts `z` at position `i`.
pub fn insert_at(v: &[u8], i: usize, z: u8) -> ValVec {
    let mut out: ValVec = v.iter().copied().collect();
    out.insert(i, z);
    out
}

/// Position of `y` among Im(L₂) ∪ {y} in ascending order.
pub fn insertion_index(l2: &Relation, y: u8) -> usize {
    l2.im().iter().filter(|&v| v < y).count()
}

/// Quantities bounded by the counting lemmas.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaKind {
    /// Fraction of (k, z) with no y making L₁ ∪ {(x,y)} good; bound t(22t+4)/N.
    NoY,
    /// Per extendable (k, z), failing y ∉ Im(L₁); bound 4t.
    FailingY,
    /// Ψ ⊇ Φ and |Ψ∖Φ| ≤ t(22t+8)N^{|L₂|+|R₂|+3}.
    PsiPhi,
    /// Fraction of (z, k, z) with no y making L₂ ∪ {(x,y)} good; bound (22t²+10t+1)/N.
    SplitNoY,
    /// Per extendable (z, k, z), failing y ∉ Im(L₂); bound 4t+1.
    SplitFailingY,
    /// Ψ ⊇ Φ and |Ψ∖Φ| ≤ (22t²+14t+2)N^{|L₂|+|R₂|+4}.
    SplitPsiPhi,
}

impl LemmaKind {
    pub const ALL: [LemmaKind; 6] = [
        LemmaKind::NoY,
        LemmaKind::FailingY,
        LemmaKind::PsiPhi,
        LemmaKind::SplitNoY,
        LemmaKind::SplitFailingY,
        LemmaKind::SplitPsiPhi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LemmaKind::NoY => "no-y-fraction",
            LemmaKind::FailingY => "failing-y",
            LemmaKind::PsiPhi => "psi-phi",
            LemmaKind::SplitNoY => "split-no-y-fraction",
            LemmaKind::SplitFailingY => "split-failing-y",
            LemmaKind::SplitPsiPhi => "split-psi-phi",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CountReport {
    pub kind: LemmaKind,
    pub n: usize,
    pub t: usize,
    pub x: u8,
    pub measured: f64,
    pub bound: f64,
    /// Ψ ⊇ Φ for the containment lemmas; true otherwise.
    pub containment: bool,
    pub pass: bool,
}

/// Evaluates one counting lemma exhaustively.
pub fn lemma_counts(
    dim: Dim,
    q: &RelQuad,
    x: u8,
    t: usize,
    kind: LemmaKind,
    budget: u64,
    rule: RightZRule,
) -> Result<CountReport> {
    q.check()?;
    dim.elem(x as usize)?;
    if q.max_size() > t {
        return Err(Error::Config(format!("relation sizes exceed the cap t = {t}")));
    }
    let n = dim.n();
    let nf = n as f64;
    let tf = t as f64;
    let zc = q.z_len();
    let split = matches!(kind, LemmaKind::SplitNoY | LemmaKind::SplitFailingY | LemmaKind::SplitPsiPhi);
    let coords = 3 + zc + usize::from(split);
    let universe = universe_size(dim, coords).filter(|&u| u.saturating_mul(n as u64) <= budget);
    let universe = universe.ok_or_else(|| Error::Budget(format!("lemma universe N^{coords}·N exceeds {budget}")))?;

    // good-with-y outcomes for every y (None when y is excluded by the lemma)
    let outcomes = |i: u64| -> (GoodTuple, Option<u8>, Vec<Option<bool>>) {
        if split {
            let z = (i % n as u64) as u8;
            let t0 = tuple_at(dim, q, i / n as u64);
            let v = dim
                .values()
                .map(|y| {
                    if q.l2.im().contains(y) {
                        return None;
                    }
                    let q2 = RelQuad { l2: q.l2.with((x, y)), ..q.clone() };
                    let pos = insertion_index(&q.l2, y);
                    let t2 = GoodTuple {
                        keys: t0.keys,
                        z: ZVectors { zl: insert_at(&t0.z.zl, pos, z), zr: t0.z.zr.clone() },
                    };
                    Some(good_unchecked(&q2, &t2, rule))
                })
                .collect();
            (t0, Some(z), v)
        } else {
            let t0 = tuple_at(dim, q, i);
            let v = dim
                .values()
                .map(|y| {
                    if q.l1.im().contains(y) {
                        return None;
                    }
                    let q2 = RelQuad { l1: q.l1.with((x, y)), ..q.clone() };
                    Some(good_unchecked(&q2, &t0, rule))
                })
                .collect();
            (t0, None, v)
        }
    };

    let per_tuple: Vec<(u64, u64, u64, bool)> = (0..universe)
        .into_par_iter()
        .map(|i| {
            let (t0, z, v) = outcomes(i);
            let extendable = v.contains(&Some(true));
            let failing = v.iter().filter(|o| **o == Some(false)).count() as u64;
            // Ψ∖Φ size and Φ ⊆ Ψ for this (z, k, z⃗)
            let mut diff = 0u64;
            let mut contained = true;
            if matches!(kind, LemmaKind::PsiPhi | LemmaKind::SplitPsiPhi) {
                let base_good = good_unchecked(q, &t0, rule);
                let (l_aug, _) = q.augmented(&t0).expect("lengths checked");
                let l2_aug = split_left(&q.l2, t0.keys.k2, &t0.z.zl).expect("lengths checked");
                for y in dim.values() {
                    let in_psi = base_good
                        && match z {
                            None => !q.l1.im().contains(y) && !l2_aug.im().xor(t0.keys.k3).contains(y),
                            Some(zv) => {
                                let im = l_aug.im();
                                !im.contains(zv) && !im.contains(y) && y != zv
                            }
                        };
                    let in_phi = v[y as usize] == Some(true);
                    if in_phi && !in_psi {
                        contained = false;
                    }
                    if in_psi && !in_phi {
                        diff += 1;
                    }
                }
            }
            (u64::from(!extendable), if extendable { failing } else { 0 }, diff, contained)
        })
        .collect();

    let no_y: u64 = per_tuple.iter().map(|p| p.0).sum();
    let max_failing = per_tuple.iter().map(|p| p.1).max().unwrap_or(0);
    let diff: u64 = per_tuple.iter().map(|p| p.2).sum();
    let containment = per_tuple.iter().all(|p| p.3);
    let zpow = nf.powi(zc as i32);

    let (measured, bound) = match kind {
        LemmaKind::NoY => (no_y as f64 / universe as f64, tf * (22.0 * tf + 4.0) / nf),
        LemmaKind::FailingY => (max_failing as f64, 4.0 * tf),
        LemmaKind::PsiPhi => (diff as f64, tf * (22.0 * tf + 8.0) * zpow * nf.powi(3)),
        LemmaKind::SplitNoY => (no_y as f64 / universe as f64, (22.0 * tf * tf + 10.0 * tf + 1.0) / nf),
        LemmaKind::SplitFailingY => (max_failing as f64, 4.0 * tf + 1.0),
        LemmaKind::SplitPsiPhi => (diff as f64, (22.0 * tf * tf + 14.0 * tf + 2.0) * zpow * nf.powi(4)),
    };
    Ok(CountReport { kind, n, t, x, measured, bound, containment, pass: containment && measured <= bound + 1e-12 })
}

/// Checks both monotonicity items for fixed x by exhaustive enumeration.
pub fn monotonicity_check(dim: Dim, q: &RelQuad, x: u8, budget: u64, rule: RightZRule) -> Result<bool> {
    q.check()?;
    dim.elem(x as usize)?;
    let n = dim.n() as u64;
    let universe = universe_size(dim, 3 + q.z_len())
        .filter(|&u| u.saturating_mul(n * n) <= budget)
        .ok_or_else(|| Error::Budget("monotonicity universe exceeds budget".into()))?;
    let ok = (0..universe).into_par_iter().all(|i| {
        let t0 = tuple_at(dim, q, i);
        if good_unchecked(q, &t0, rule) {
            return true;
        }
        dim.values().all(|y| {
            let item1 = q.l1.im().contains(y) || {
                let q1 = RelQuad { l1: q.l1.with((x, y)), ..q.clone() };
                !good_unchecked(&q1, &t0, rule)
            };
            let item2 = q.l2.im().contains(y) || {
                let q2 = RelQuad { l2: q.l2.with((x, y)), ..q.clone() };
                let pos = insertion_index(&q.l2, y);
                dim.values().all(|z| {
                    let t2 = GoodTuple {
                        keys: t0.keys,
                        z: ZVectors { zl: insert_at(&t0.z.zl, pos, z), zr: t0.z.zr.clone() },
                    };
                    !good_unchecked(&q2, &t2, rule)
                })
            };
            item1 && item2
        })
    });
    Ok(ok)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoder::{dec, robust_probe};

    fn rel(p: &[(u8, u8)]) -> Relation {
        Relation::from_pairs(p.iter().copied())
    }

    fn d(n: usize) -> Dim {
        Dim::new(n).unwrap()
    }

    #[test]
    fn empty_relations_make_every_tuple_good() {
        let q = RelQuad::default();
        for k in KeyTriple::all(d(4)) {
            assert!(is_good(&q, &GoodTuple::new(k, &[], &[])).unwrap());
        }
        assert!(b1(&q).is_empty());
    }

    #[test]
    fn k1_in_domain_sum_is_bad() {
        let q = RelQuad::new(rel(&[(0, 0)]), rel(&[(0, 1)]), Relation::empty(), Relation::empty()).unwrap();
        assert_eq!(b1(&q).iter().collect::<Vec<_>>(), vec![0]);
        for k2 in 0..4 {
            for k3 in 0..4 {
                for z in 0..4 {
                    assert!(!is_good(&q, &GoodTuple::new(KeyTriple::new(0, k2, k3), &[z], &[])).unwrap());
                }
            }
        }
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let q = RelQuad::new(Relation::empty(), rel(&[(0, 1)]), Relation::empty(), Relation::empty()).unwrap();
        assert!(is_good(&q, &GoodTuple::new(KeyTriple::default(), &[], &[])).is_err());
    }

    #[test]
    fn b2_requires_good_outer_keys() {
        let q = RelQuad::new(rel(&[(0, 0)]), rel(&[(0, 1)]), Relation::empty(), Relation::empty()).unwrap();
        assert!(bad_keys(&q, KeyBadSet::B2, 0, 0).is_err());
        assert!(bad_keys(&q, KeyBadSet::B2, 1, 0).is_ok());
    }

    #[test]
    fn printed_right_rule_admits_an_undecodable_tuple() {
        let q = RelQuad::new(Relation::empty(), Relation::empty(), Relation::empty(), rel(&[(0, 1)])).unwrap();
        let t = GoodTuple::new(KeyTriple::new(0, 2, 0), &[], &[0]);
        assert!(is_good_with(&q, &t, RightZRule::AsPrinted).unwrap());
        let (l, r) = q.augmented(&t).unwrap();
        assert_eq!(r, rel(&[(0, 1), (0, 2)]));
        assert!(dec(&l, &r, t.keys).is_none());
        assert!(!is_good_with(&q, &t, RightZRule::Mirrored).unwrap());
    }

    #[test]
    fn goodness_ignores_z_order() {
        let q = RelQuad::new(rel(&[(1, 1)]), rel(&[(2, 3), (5, 0)]), Relation::empty(), Relation::empty()).unwrap();
        let dim = d(8);
        for k in KeyTriple::all(dim).step_by(7) {
            for a in 0..8 {
                for b in 0..8 {
                    let g1 = is_good(&q, &GoodTuple::new(k, &[a, b], &[])).unwrap();
                    let g2 = is_good(&q, &GoodTuple::new(k, &[b, a], &[])).unwrap();
                    assert_eq!(g1, g2);
                }
            }
        }
    }

    #[test]
    fn bad_vector_count_matches_enumeration() {
        let forbidden: ElemSet = [1u8, 4].into_iter().collect();
        let mut brute = 0;
        for a in 0..8u8 {
            for b in 0..8u8 {
                if !z_ok(&[a, b], forbidden) {
                    brute += 1;
                }
            }
        }
        assert_eq!(bad_vector_count(8, 2, forbidden), brute);
    }

    #[test]
    fn good_tuples_decode_and_satisfy_conditions_small() {
        let dim = d(8);
        let q = RelQuad::new(rel(&[(1, 2)]), rel(&[(0, 3)]), rel(&[(2, 2)]), rel(&[(3, 0)])).unwrap();
        let universe = 8u64.pow(5);
        let mut good = 0;
        for i in 0..universe {
            let t = tuple_at(dim, &q, i);
            if is_good(&q, &t).unwrap() {
                good += 1;
                assert!(robust_conditions(&q, &t).unwrap().all());
                assert!(robust_probe(&q, &t).unwrap().robust(), "{t:?}");
            }
        }
        assert!(good > 0);
    }

    #[test]
    fn enumeration_order_equivalence() {
        let dim = d(8);
        let q = RelQuad::new(rel(&[(1, 2)]), rel(&[(0, 3)]), rel(&[(4, 2)]), rel(&[(3, 6)])).unwrap();
        for i in (0..8u64.pow(5)).step_by(13) {
            let t = tuple_at(dim, &q, i);
            let k = t.keys;
            let staged = !b1(&q).contains(k.k1)
                && !b3(&q).contains(k.k3)
                && !bad_keys(&q, KeyBadSet::B2, k.k1, k.k3).unwrap().contains(k.k2)
                && !in_bl(&q, k, &t.z.zl).unwrap()
                && !in_br(&q, k, &t.z.zr, RightZRule::Mirrored).unwrap();
            assert_eq!(staged, is_good(&q, &t).unwrap());
        }
    }

    #[test]
    fn census_on_empty_relations_is_one() {
        let r = census(d(4), &RelQuad::default(), 0, CensusMode::Exhaustive { budget: 1 << 20 }, RightZRule::Mirrored)
            .unwrap();
        assert_eq!(r.fraction, 1.0);
        assert!(r.pass);
    }

    #[test]
    fn census_budget_is_enforced() {
        let q = RelQuad::new(Relation::empty(), rel(&[(0, 1)]), Relation::empty(), Relation::empty()).unwrap();
        let r = census(d(16), &q, 1, CensusMode::Exhaustive { budget: 1000 }, RightZRule::Mirrored);
        assert!(matches!(r, Err(Error::Budget(_))));
    }

    #[test]
    fn sampled_tuples_are_reproducible() {
        let q = RelQuad::new(Relation::empty(), rel(&[(0, 1)]), Relation::empty(), Relation::empty()).unwrap();
        let a = sample_tuple(d(64), &q, 7, 11);
        let b = sample_tuple(d(64), &q, 7, 11);
        assert_eq!(a, b);
        assert_ne!(a, sample_tuple(d(64), &q, 7, 12));
    }

    #[test]
    fn insertion_index_is_ascending_position() {
        let l2 = rel(&[(0, 5), (1, 2)]);
        assert_eq!(insertion_index(&l2, 0), 0);
        assert_eq!(insertion_index(&l2, 3), 1);
        assert_eq!(insertion_index(&l2, 7), 2);
    }

    #[test]
    fn lemma_counts_on_empty_relations() {
        let q = RelQuad::default();
        // adding (x, y) to L₁ makes exactly one k₂ bad per (k₁, k₃, y)
        let r = lemma_counts(d(4), &q, 0, 1, LemmaKind::PsiPhi, 1 << 20, RightZRule::Mirrored).unwrap();
        assert_eq!(r.measured, 64.0);
        assert!(r.containment && r.pass);
    }

    #[test]
    fn monotonicity_on_empty_relations() {
        assert!(monotonicity_check(d(4), &RelQuad::default(), 0, 1 << 20, RightZRule::Mirrored).unwrap());
    }

    #[test]
    fn good_set_matches_filtered_universe() {
        let dim = d(8);
        let q = RelQuad::new(rel(&[(1, 2)]), rel(&[(0, 3)]), Relation::empty(), rel(&[(3, 1)])).unwrap();
        let fast: Vec<GoodTuple> = good_set(dim, &q, RightZRule::Mirrored).unwrap();
        let slow: Vec<GoodTuple> =
            (0..8u64.pow(5)).map(|i| tuple_at(dim, &q, i)).filter(|t| is_good(&q, t).unwrap()).collect();
        let key = |t: &GoodTuple| (t.keys.k1, t.keys.k2, t.keys.k3, t.z.zl.clone(), t.z.zr.clone());
        let mut a: Vec<_> = fast.iter().map(key).collect();
        let mut b: Vec<_> = slow.iter().map(key).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
        assert!(!a.is_empty());
    }
}
