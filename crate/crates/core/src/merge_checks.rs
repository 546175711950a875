//! Numerical checks of the merge isometry: closed-form equivalence,
//! partial-isometry witnesses, commuting-norm trends, image-lemma probes and
//! punctured distances.

use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::good_tuples::{b1, b2, b3, bad_vector_count, zl_forbidden, zr_forbidden, RelQuad, RightZRule};
use crate::isometry::{s_action_direct, s_full, s_input_schema, s_tilde, split_label, Punctured, PuncturedFamily, StageOp};
use crate::oracles::bounds::{oracle_representatives, sum_truncated};
use crate::oracles::op::{Op, Prim};
use crate::relations::{Dim, KeyTriple, Relation};
use crate::state::label::{KeyLayout, Label, Schema};
use crate::state::norm::{component, null_space, restricted_norm, NormOptions, NormReport};
use crate::state::purified::{PurifiedState, C64};
use crate::state::symmetry::{all_labels, per_register_sizes, representatives, LabelTemplate, Slot};

/// Every relation register within its distinctness class and of size ≤ t.
pub fn split_truncated(t: usize) -> impl Fn(&Label) -> bool {
    move |l: &Label| {
        l.rels[0].is_i_distinct()
            && l.rels[2].is_i_distinct()
            && l.rels[1].is_d_distinct()
            && l.rels[3].is_d_distinct()
            && l.rels.iter().all(|r| r.len() <= t)
    }
}

/// Merged relations with |L| + |R| ≤ m and no distinctness requirement.
pub fn merged_truncated(m: usize) -> impl Fn(&Label) -> bool {
    move |l: &Label| l.rels[0].len() + l.rels[1].len() <= m
}

fn key_slots(keys: KeyLayout) -> [Option<Slot>; 3] {
    match keys {
        KeyLayout::None => [None; 3],
        KeyLayout::Outer => [Some(Slot::AffK), None, Some(Slot::AffK)],
        KeyLayout::Full => [Some(Slot::AffK), Some(Slot::AffK2), Some(Slot::AffK)],
    }
}

/// Affine templates for split labels with every register of size ≤ t.
pub fn split_templates(t: usize, a: Option<Slot>, keys: KeyLayout, z: bool) -> Vec<LabelTemplate> {
    let e = Relation::empty();
    per_register_sizes(t)
        .into_iter()
        .map(|sz| LabelTemplate {
            base: Label::split(0, e.clone(), e.clone(), e.clone(), e.clone()),
            a,
            rels: sz.map(|n| (n, Slot::AffD, Slot::AffI)),
            z: z.then_some((Slot::AffI, Slot::AffD)),
            keys: key_slots(keys),
        })
        .collect()
}

/// Affine templates for keyed merged labels with |L| + |R| ≤ m.
pub fn merged_templates(m: usize) -> Vec<LabelTemplate> {
    let e = Relation::empty();
    (0..=m)
        .flat_map(|a| (0..=m - a).map(move |b| (a, b)))
        .map(|(a, b)| LabelTemplate {
            base: Label::joint(0, e.clone(), e.clone()),
            a: None,
            rels: [(a, Slot::AffD, Slot::AffI), (b, Slot::AffD, Slot::AffI), (0, Slot::Free, Slot::Free), (0, Slot::Free, Slot::Free)],
            z: None,
            keys: key_slots(KeyLayout::Full),
        })
        .collect()
}

fn quad_of(l: &Label) -> RelQuad {
    RelQuad { l1: l.rels[0].clone(), r1: l.rels[1].clone(), l2: l.rels[2].clone(), r2: l.rels[3].clone() }
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceReport {
    pub n: usize,
    pub t: usize,
    pub mode: &'static str,
    pub inputs: usize,
    pub max_discrepancy: f64,
    pub pass: bool,
    pub seconds: f64,
}

fn equivalence_on(dim: Dim, t: usize, labels: &[Label], mode: &'static str) -> Result<EquivalenceReport> {
    let start = Instant::now();
    let s = s_full();
    let mut worst: f64 = 0.0;
    for l in labels {
        let staged = s.apply(&PurifiedState::basis(s_input_schema(dim), l.clone())?)?;
        let direct = s_action_direct(dim, &quad_of(l), l.a)?;
        worst = worst.max(staged.max_abs_diff(&direct)?);
    }
    Ok(EquivalenceReport {
        n: dim.n(),
        t,
        mode,
        inputs: labels.len(),
        max_discrepancy: worst,
        pass: worst < 1e-10,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn free_split_labels(dim: Dim, t: usize) -> Vec<Label> {
    all_labels(dim, &split_templates(t, Some(Slot::Free), KeyLayout::None, false), &split_truncated(t))
}

/// Stage composition against the closed form on every input with register sizes ≤ t.
pub fn s_equivalence_exhaustive(dim: Dim, t: usize) -> Result<EquivalenceReport> {
    equivalence_on(dim, t, &free_split_labels(dim, t), "exhaustive")
}

/// Stage composition against the closed form on uniformly sampled inputs.
pub fn s_equivalence_sampled(dim: Dim, t: usize, samples: usize, seed: u64) -> Result<EquivalenceReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let domain = split_truncated(t);
    let mut labels = Vec::with_capacity(samples);
    while labels.len() < samples {
        let l = random_split_label(dim, t, &mut rng);
        if domain(&l) {
            labels.push(l);
        }
    }
    equivalence_on(dim, t, &labels, "sampled")
}

fn random_split_label(dim: Dim, t: usize, rng: &mut ChaCha8Rng) -> Label {
    let n = dim.n() as u8;
    let mut rel = || {
        let size = rng.random_range(0..=t);
        Relation::from_pairs((0..size).map(|_| (rng.random_range(0..n), rng.random_range(0..n))).collect::<Vec<_>>())
    };
    let (l1, r1, l2, r2) = (rel(), rel(), rel(), rel());
    Label::split(rng.random_range(0..n), l1, r1, l2, r2)
}

/// Operators whose restricted M†M must be a projector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Witness {
    V,
    Decode,
    STilde,
    Keys13Tilde,
    Key2Tilde,
    ZTilde,
}

impl Witness {
    pub const ALL: [Witness; 6] =
        [Witness::V, Witness::Decode, Witness::STilde, Witness::Keys13Tilde, Witness::Key2Tilde, Witness::ZTilde];

    pub fn id(self) -> &'static str {
        match self {
            Witness::V => "V",
            Witness::Decode => "D",
            Witness::STilde => "S-tilde",
            Witness::Keys13Tilde => "Sk1k3-tilde",
            Witness::Key2Tilde => "Sk2-tilde",
            Witness::ZTilde => "Sz-tilde",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    pub witness: &'static str,
    pub n: usize,
    pub t: usize,
    pub domain: String,
    pub residual: f64,
    pub norm: f64,
    pub representatives: usize,
    pub columns: usize,
    pub pass: bool,
    pub seconds: f64,
}

/// Checks that M†M restricted to the truncated basis has spectrum in {0, 1}.
pub fn partial_isometry_witness(w: Witness, dim: Dim, t: usize, opts: &NormOptions) -> Result<SpectrumReport> {
    let opts = NormOptions { spectrum: true, ..opts.clone() };
    let tilde = |st: StageOp| Op::Stage(st);
    type Domain = Box<dyn Fn(&Label) -> bool>;
    let (op, schema, reps, domain, desc): (Op, Schema, Vec<Label>, Domain, String) = match w {
        Witness::V => (
            Op::v(0),
            Schema::joint(dim),
            oracle_representatives(dim, t),
            Box::new(sum_truncated(t)),
            format!("|L|+|R| <= {t}"),
        ),
        Witness::Decode => {
            let m = 2 * t + 1;
            let d = merged_truncated(m);
            (
                Op::Stage(StageOp::Decode),
                Schema::joint(dim).with_keys(KeyLayout::Full),
                representatives(dim, &merged_templates(m), &d),
                Box::new(d),
                format!("merged |L|+|R| <= {m}, all keys"),
            )
        }
        Witness::STilde | Witness::Keys13Tilde | Witness::Key2Tilde | Witness::ZTilde => {
            let (op, keys) = match w {
                Witness::STilde => (s_tilde(), KeyLayout::None),
                Witness::Keys13Tilde => (tilde(StageOp::Keys13 { normalized: true, dagger: false }), KeyLayout::None),
                Witness::Key2Tilde => (tilde(StageOp::Key2 { normalized: true, dagger: false }), KeyLayout::Outer),
                _ => (tilde(StageOp::Z { normalized: true, dagger: false }), KeyLayout::Full),
            };
            let d = split_truncated(t);
            (
                op,
                Schema::split(dim).with_keys(keys),
                representatives(dim, &split_templates(t, None, keys, false), &d),
                Box::new(d),
                format!("each register <= {t}"),
            )
        }
    };
    let r = restricted_norm(&op, &schema, reps, &*domain, &opts)?;
    let residual = r.spectrum_residual.unwrap_or(f64::INFINITY);
    Ok(SpectrumReport {
        witness: w.id(),
        n: dim.n(),
        t,
        domain: desc,
        residual,
        norm: r.norm,
        representatives: r.representatives,
        columns: r.columns,
        pass: residual <= 1e-9,
        seconds: r.seconds,
    })
}

/// Operator differences whose norms decay with N at an unstated rate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommutingPair {
    /// S̃ − S.
    TildeGap,
    /// X^{k₃} F X^{k₁} S − S F₁.
    FirstOracle,
    /// X^{k₁} F† X^{k₃} S − S F₁†.
    FirstOracleInverse,
    /// F X^{k₂} F S − S F₂.
    SecondOracle,
    /// F† X^{k₂} F† S − S F₂†.
    SecondOracleInverse,
}

impl CommutingPair {
    pub const ALL: [CommutingPair; 5] = [
        CommutingPair::TildeGap,
        CommutingPair::FirstOracle,
        CommutingPair::FirstOracleInverse,
        CommutingPair::SecondOracle,
        CommutingPair::SecondOracleInverse,
    ];

    pub fn id(self) -> &'static str {
        match self {
            CommutingPair::TildeGap => "s-tilde-minus-s",
            CommutingPair::FirstOracle => "first-oracle",
            CommutingPair::FirstOracleInverse => "first-oracle-inverse",
            CommutingPair::SecondOracle => "second-oracle",
            CommutingPair::SecondOracleInverse => "second-oracle-inverse",
        }
    }

    pub fn op(self) -> Op {
        let s = s_full;
        match self {
            CommutingPair::TildeGap => Op::minus(s_tilde(), s()),
            CommutingPair::FirstOracle => Op::minus(
                Op::product([Op::xor_key(2), Op::f(0), Op::xor_key(0), s()]),
                Op::product([s(), Op::f(0)]),
            ),
            CommutingPair::FirstOracleInverse => Op::minus(
                Op::product([Op::xor_key(0), Op::f_dag(0), Op::xor_key(2), s()]),
                Op::product([s(), Op::f_dag(0)]),
            ),
            CommutingPair::SecondOracle => Op::minus(
                Op::product([Op::f(0), Op::xor_key(1), Op::f(0), s()]),
                Op::product([s(), Op::f(1)]),
            ),
            CommutingPair::SecondOracleInverse => Op::minus(
                Op::product([Op::f_dag(0), Op::xor_key(1), Op::f_dag(0), s()]),
                Op::product([s(), Op::f_dag(1)]),
            ),
        }
    }

    /// Slot type of the A register on input.
    fn a_slot(self) -> Option<Slot> {
        match self {
            CommutingPair::TildeGap => None,
            CommutingPair::FirstOracle | CommutingPair::SecondOracle => Some(Slot::AffD),
            CommutingPair::FirstOracleInverse | CommutingPair::SecondOracleInverse => Some(Slot::AffI),
        }
    }
}

/// ‖(S̃ − S)e‖ for one split input. Columns of S̃ − S have disjoint supports, and
/// on each good tuple the entry is the difference of the two stage coefficients.
pub fn tilde_gap_column(dim: Dim, q: &RelQuad) -> Result<f64> {
    q.check()?;
    let n = dim.n();
    let nf = n as f64;
    let (ml, mr) = (q.l2.len(), q.r2.len());
    let plain = 1.0 / nf.powi((3 + ml + mr) as i32).sqrt();
    let (bad1, bad3) = (b1(q), b3(q));
    let outer = ((n - bad1.len()) * (n - bad3.len())) as f64;
    let mut sq = 0.0;
    for k1 in dim.values().filter(|k| !bad1.contains(*k)) {
        for k3 in dim.values().filter(|k| !bad3.contains(*k)) {
            let bad2 = b2(q, k1, k3);
            for k2 in dim.values().filter(|k| !bad2.contains(*k)) {
                let k = KeyTriple { k1, k2, k3 };
                let gl = (n as u64).pow(ml as u32) - bad_vector_count(n, ml, zl_forbidden(q, k));
                let gr = (n as u64).pow(mr as u32) - bad_vector_count(n, mr, zr_forbidden(q, k, RightZRule::Mirrored));
                let z_count = (gl * gr) as f64;
                if z_count == 0.0 {
                    continue;
                }
                let tilde = 1.0 / (outer * (n - bad2.len()) as f64 * z_count).sqrt();
                sq += z_count * (tilde - plain).powi(2);
            }
        }
    }
    Ok(sq.sqrt())
}

pub fn commuting_norm(pair: CommutingPair, dim: Dim, t: usize, opts: &NormOptions) -> Result<NormReport> {
    let domain = split_truncated(t);
    let reps = representatives(dim, &split_templates(t, pair.a_slot(), KeyLayout::None, false), &domain);
    if pair == CommutingPair::TildeGap {
        let start = Instant::now();
        let mut r = NormReport { representatives: reps.len(), ..NormReport::default() };
        for l in &reps {
            if start.elapsed() > opts.max_time {
                return Err(Error::Budget(format!("norm computation exceeded {:?}", opts.max_time)));
            }
            r.norm = r.norm.max(tilde_gap_column(dim, &quad_of(l))?);
            r.columns += 1;
            r.components += 1;
        }
        r.largest_component = 1;
        r.seconds = start.elapsed().as_secs_f64();
        return Ok(r);
    }
    restricted_norm(&pair.op(), &Schema::split(dim), reps, &domain, opts)
}

/// Largest column norm ‖M e‖ over the truncated domain: a lower bound on the
/// restricted operator norm that needs no component expansion.
pub fn commuting_column_bound(pair: CommutingPair, dim: Dim, t: usize, opts: &NormOptions) -> Result<NormReport> {
    let start = Instant::now();
    let domain = split_truncated(t);
    let reps = representatives(dim, &split_templates(t, pair.a_slot(), KeyLayout::None, false), &domain);
    let op = pair.op();
    let schema = Schema::split(dim);
    let mut r = NormReport { representatives: reps.len(), ..NormReport::default() };
    for l in &reps {
        if start.elapsed() > opts.max_time {
            return Err(Error::Budget(format!("column bound exceeded {:?}", opts.max_time)));
        }
        let sq: f64 = op.column(l, &schema)?.iter().map(|(_, v)| v.norm_sqr()).sum();
        r.norm = r.norm.max(sq.sqrt());
        r.columns += 1;
    }
    r.seconds = start.elapsed().as_secs_f64();
    Ok(r)
}

#[derive(Clone, Debug, Serialize)]
pub struct TrendPoint {
    pub n: usize,
    pub measured: Option<f64>,
    /// Largest column norm, recorded when the exact norm runs out of budget.
    /// Diagnostic only; it never enters the verdict.
    pub column_lower_bound: Option<f64>,
    pub columns: usize,
    pub seconds: f64,
    pub status: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrendReport {
    pub id: &'static str,
    pub t: usize,
    pub points: Vec<TrendPoint>,
    pub monotone: bool,
    pub slope: Option<f64>,
    pub slope_window: [f64; 2],
    pub pass: bool,
}

/// Least-squares slope of ln y against ln x.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 || xs.len() != ys.len() || ys.iter().any(|&y| y <= 0.0) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / k, ly.iter().sum::<f64>() / k);
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    Some(num / den)
}

pub const SLOPE_WINDOW: [f64; 2] = [-0.85, -0.15];

/// Strictly decreasing values with a log–log slope inside `window`.
pub fn trend_verdict(ns: &[usize], values: &[Option<f64>], window: [f64; 2]) -> (bool, Option<f64>, bool) {
    let all: Option<Vec<f64>> = values.iter().copied().collect();
    let Some(vals) = all else { return (false, None, false) };
    let monotone = vals.windows(2).all(|w| w[1] < w[0]);
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let slope = log_log_slope(&xs, &vals);
    let pass = monotone && slope.is_some_and(|s| s >= window[0] && s <= window[1]);
    (monotone, slope, pass)
}

/// Norms over an N grid and the resulting decay verdict. Budget failures are
/// recorded per point and fail the trend.
pub fn commuting_trend(pair: CommutingPair, grid: &[usize], t: usize, opts: &NormOptions) -> Result<TrendReport> {
    let mut points = Vec::new();
    for &n in grid {
        let start = Instant::now();
        let point = match commuting_norm(pair, Dim::new(n)?, t, opts) {
            Ok(r) => TrendPoint {
                n,
                measured: Some(r.norm),
                column_lower_bound: None,
                columns: r.columns,
                seconds: r.seconds,
                status: "ok".into(),
            },
            Err(Error::Budget(msg)) => {
                let column_lower_bound = match commuting_column_bound(pair, Dim::new(n)?, t, opts) {
                    Ok(r) => Some(r.norm),
                    Err(Error::Budget(_)) => None,
                    Err(e) => return Err(e),
                };
                TrendPoint {
                    n,
                    measured: None,
                    column_lower_bound,
                    columns: 0,
                    seconds: start.elapsed().as_secs_f64(),
                    status: format!("budget: {msg}"),
                }
            }
            Err(e) => return Err(e),
        };
        points.push(point);
    }
    let values: Vec<Option<f64>> = points.iter().map(|p| p.measured).collect();
    let (monotone, slope, pass) = trend_verdict(grid, &values, SLOPE_WINDOW);
    Ok(TrendReport { id: pair.id(), t, points, monotone, slope, slope_window: SLOPE_WINDOW, pass })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImageLemma {
    /// ‖F^{L,†} X^{k₃} S ψ‖ for ψ in the kernel of F₁^{L,†}.
    FirstOracle,
    /// ‖F^{L,†} S ψ‖ for ψ in the kernel of F₂^{L,†}.
    SecondOracle,
}

impl ImageLemma {
    fn kernel_op(self) -> Op {
        match self {
            ImageLemma::FirstOracle => Op::path(Prim::FLdag, 0),
            ImageLemma::SecondOracle => Op::path(Prim::FLdag, 1),
        }
    }

    fn composite(self) -> Op {
        match self {
            ImageLemma::FirstOracle => Op::product([Op::path(Prim::FLdag, 0), Op::xor_key(2), s_full()]),
            ImageLemma::SecondOracle => Op::product([Op::path(Prim::FLdag, 0), s_full()]),
        }
    }
}

/// Norm of the composite on a kernel state; refuses states outside the kernel.
pub fn image_composite_norm(which: ImageLemma, psi: &PurifiedState) -> Result<f64> {
    let leak = which.kernel_op().apply(psi)?.norm();
    if leak > 1e-9 * psi.norm().max(1.0) {
        return Err(Error::Precondition(format!("state is not in the kernel (residual {leak:.3e})")));
    }
    Ok(which.composite().apply(psi)?.norm() / psi.norm())
}

#[derive(Clone, Debug, Serialize)]
pub struct ImageProbeReport {
    pub which: ImageLemma,
    pub n: usize,
    pub t: usize,
    pub trials: usize,
    pub max_norm: f64,
    pub mean_norm: f64,
    pub largest_kernel: usize,
    pub seconds: f64,
}

/// Random unit states in the kernel, one per trial, drawn from the kernel of
/// the component containing a random truncated label.
pub fn image_lemma_probe(which: ImageLemma, dim: Dim, t: usize, trials: usize, seed: u64) -> Result<ImageProbeReport> {
    let start = Instant::now();
    let schema = s_input_schema(dim);
    let kop = which.kernel_op();
    let adj = kop.adjoint();
    let out_schema = kop.out_schema(&schema)?;
    let domain = split_truncated(t);
    let (mut max_norm, mut sum, mut largest): (f64, f64, usize) = (0.0, 0.0, 0);
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64);
        let seed_label = loop {
            let l = random_split_label(dim, t, &mut rng);
            if domain(&l) {
                break l;
            }
        };
        let cm = component(&kop, &adj, &schema, &out_schema, seed_label, &domain, 1_000_000, None)?;
        let kernel = null_space(&cm.dense(), 1e-10);
        if kernel.is_empty() {
            return Err(Error::Precondition("empty kernel on a sampled component".into()));
        }
        largest = largest.max(kernel.len());
        let mut v = DVector::<C64>::zeros(cm.columns.len());
        for k in &kernel {
            let c = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            v += k * c;
        }
        let psi = PurifiedState::from_terms(schema, cm.columns.iter().cloned().zip(v.iter().copied()))?;
        let norm = image_composite_norm(which, &psi)?;
        max_norm = max_norm.max(norm);
        sum += norm;
    }
    Ok(ImageProbeReport {
        which,
        n: dim.n(),
        t,
        trials,
        max_norm,
        mean_norm: sum / trials.max(1) as f64,
        largest_kernel: largest,
        seconds: start.elapsed().as_secs_f64(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PuncturedReport {
    pub family: &'static str,
    pub n: usize,
    /// Sizes of L₁, R₁, L₂, R₂.
    pub sizes: [usize; 4],
    /// max over indices of |P ∩ G| / N^{|L₂|+|R₂|+3}.
    pub delta: f64,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
    /// 2t/N with t the largest size, for the two named families.
    pub density_bound: Option<f64>,
    pub density_bound_holds: Option<bool>,
}

/// ‖S• − S‖ on inputs with the given sizes against √δ.
pub fn punctured_distance(family: PuncturedFamily, dim: Dim, sizes: [usize; 4]) -> Result<PuncturedReport> {
    let e = Relation::empty();
    let template = LabelTemplate {
        base: Label::split(0, e.clone(), e.clone(), e.clone(), e),
        a: Some(Slot::AffI),
        rels: sizes.map(|n| (n, Slot::AffD, Slot::AffI)),
        z: None,
        keys: [None; 3],
    };
    let t = sizes.iter().copied().max().unwrap_or(0);
    let domain = move |l: &Label| split_truncated(t)(l) && l.rels.iter().zip(sizes).all(|(r, s)| r.len() == s);
    let reps = representatives(dim, &[template], &domain);
    let mut delta: f64 = 0.0;
    for l in &reps {
        delta = delta.max(family.density(dim, l.a, &quad_of(l))?);
    }
    let op = Op::minus(Punctured::op(family), s_full());
    let r = restricted_norm(&op, &s_input_schema(dim), reps, &domain, &NormOptions::default())?;
    let bound = delta.sqrt();
    let density_bound = match family {
        PuncturedFamily::MaskedYInPairedImage | PuncturedFamily::YInIsolateOrSourceImage => {
            Some(2.0 * t as f64 / dim.n() as f64)
        }
        _ => None,
    };
    Ok(PuncturedReport {
        family: family.name(),
        n: dim.n(),
        sizes,
        delta,
        measured: r.norm,
        bound,
        pass: r.norm <= bound + 1e-9,
        density_bound,
        density_bound_holds: density_bound.map(|b| delta <= b + 1e-12),
    })
}

/// Input labels of S with every register of size ≤ t, reduced by the affine relabelings.
pub fn merge_representatives(dim: Dim, t: usize) -> Vec<Label> {
    representatives(dim, &split_templates(t, None, KeyLayout::None, false), &split_truncated(t))
}

/// Basis label of S's input for a quadruple, with A = a.
pub fn input_label(a: u8, q: &RelQuad) -> Label {
    split_label(a, q)
}
