//! The seven hybrid experiments and their trace-distance curves.

use std::collections::hash_map::Entry;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::adversary::{
    outer, run_dense, run_purified, AdversaryKind, AdversarySpec, DenseOracles, PurifiedOracles, Query,
};
use crate::experiments::haar::sample_haar;
use crate::merge_checks::log_log_slope;
use crate::oracles::op::{Mat, MaskSource, Op};
use crate::relations::{Dim, Relation};
use crate::state::density::{trace_distance, DensityMatrix};
use crate::state::label::{Label, Schema};
use crate::state::purified::{PurifiedState, C64};

/// Monte Carlo samples summed sequentially per chunk; chunks are then summed in order,
/// so the estimate does not depend on the thread count.
const CHUNK: u64 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Hybrid {
    /// Two independent Haar unitaries.
    TwoHaar = 1,
    /// Two independent V oracles.
    TwoV = 2,
    /// Two independent F oracles.
    TwoF = 3,
    /// One F oracle behind the key masks, keys in uniform superposition.
    KeyedF = 4,
    /// One V oracle behind the key masks, keys in uniform superposition.
    KeyedV = 5,
    /// O₁ = X^{k₃}UX^{k₁}, O₂ = UX^{k₂}U.
    MaskedFirst = 6,
    /// O₁ = U, O₂ = X^{k₃}UX^{k₂}UX^{k₁}.
    MaskedSecond = 7,
}

impl Hybrid {
    pub const ALL: [Hybrid; 7] = [
        Hybrid::TwoHaar,
        Hybrid::TwoV,
        Hybrid::TwoF,
        Hybrid::KeyedF,
        Hybrid::KeyedV,
        Hybrid::MaskedFirst,
        Hybrid::MaskedSecond,
    ];

    pub fn from_index(i: usize) -> Result<Hybrid> {
        Hybrid::ALL.get(i.wrapping_sub(1)).copied().ok_or_else(|| Error::Config(format!("hybrid index {i} not in 1..=7")))
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn exact(self) -> bool {
        matches!(self, Hybrid::TwoV | Hybrid::TwoF | Hybrid::KeyedF | Hybrid::KeyedV)
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MonteCarlo {
    pub samples: u64,
    pub seed: u64,
}

impl Default for MonteCarlo {
    fn default() -> Self {
        MonteCarlo { samples: 10_000, seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct HybridParams {
    pub n: usize,
    pub adversary: AdversarySpec,
    pub monte_carlo: MonteCarlo,
    /// Largest purified support allowed during exact simulation.
    pub max_labels: usize,
}

impl HybridParams {
    pub fn new(n: usize, adversary: AdversarySpec) -> Self {
        HybridParams { n, adversary, monte_carlo: MonteCarlo::default(), max_labels: 4_000_000 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HybridState {
    pub hybrid: usize,
    pub n: usize,
    pub rho: DensityMatrix,
    /// Below 1 when a contraction oracle loses norm.
    pub trace: f64,
    /// Monte Carlo sample count, absent for exact hybrids.
    pub samples: Option<u64>,
    /// Standard error of every entry of the Monte Carlo mean, as a Frobenius norm.
    pub standard_error: f64,
    /// Largest purified support met during exact simulation.
    pub max_support: usize,
    pub seconds: f64,
}

fn xor_matrix(n: usize, k: u8) -> Mat {
    DMatrix::from_fn(n, n, |r, c| if r == (c ^ k as usize) { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}

/// Four operators in query order on a purified schema.
struct OracleOps([Op; 4]);

impl PurifiedOracles for OracleOps {
    fn query(&self, q: Query) -> &Op {
        &self.0[q as usize]
    }
}

fn split_ops(v: bool) -> OracleOps {
    type Ctor = fn(usize) -> Op;
    let (o, od): (Ctor, Ctor) = if v { (Op::v, Op::v_dag) } else { (Op::f, Op::f_dag) };
    OracleOps([o(0), o(1), od(0), od(1)])
}

/// O₁ = X^{k₃}·P·X^{k₁} and O₂ = P·X^{k₂}·P for one key triple.
fn keyed_ops(v: bool, k: [u8; 3]) -> OracleOps {
    let p = if v { Op::v(0) } else { Op::f(0) };
    let x = |k| Op::Xor(MaskSource::Literal(k));
    let first = Op::product([x(k[2]), p.clone(), x(k[0])]);
    let second = Op::product([p.clone(), x(k[1]), p]);
    OracleOps([first.clone(), second.clone(), first.adjoint(), second.adjoint()])
}

fn exact_hybrid(h: Hybrid, p: &HybridParams) -> Result<(DensityMatrix, usize)> {
    let dim = Dim::new(p.n)?;
    let b_dim = p.adversary.b_dim;
    let empty = Relation::empty;
    match h {
        Hybrid::TwoV | Hybrid::TwoF => {
            let schema = Schema::split(dim).with_ancilla(b_dim);
            let init = PurifiedState::basis(schema, Label::split(0, empty(), empty(), empty(), empty()))?;
            let out = run_purified(&split_ops(h == Hybrid::TwoV), &p.adversary, init, p.max_labels)?;
            Ok((out.reduced_density(), out.len()))
        }
        Hybrid::KeyedF | Hybrid::KeyedV => {
            let use_orbits = p.adversary.unitaries.iter().all(Option::is_none);
            keyed_hybrid(h == Hybrid::KeyedV, p, use_orbits)
        }
        _ => Err(Error::Config(format!("hybrid {} is sampled", h.index()))),
    }
}

/// Keys are never written, so the key-superposed state is block diagonal in k and
/// ρ = N⁻³ Σ_k ρ_k. Without interleaved unitaries, relabelling every value by an
/// invertible GF(2)-linear g commutes with the oracles and sends the masks k to gk,
/// so ρ_{gk} = P_g ρ_k P_g† and one simulation per orbit suffices.
fn keyed_hybrid(v: bool, p: &HybridParams, use_orbits: bool) -> Result<(DensityMatrix, usize)> {
    let dim = Dim::new(p.n)?;
    let schema = Schema::joint(dim).with_ancilla(p.adversary.b_dim);
    let nb = p.adversary.b_dim as usize;
    let d = p.adversary.dim(p.n);
    let w = 1.0 / (p.n as f64).powi(3);
    let mut support = 0;
    let mut cache: FxHashMap<[u8; 3], DMatrix<C64>> = FxHashMap::default();
    let mut simulate = |k: [u8; 3]| -> Result<DMatrix<C64>> {
        let init = PurifiedState::basis(schema, Label::joint(0, Relation::empty(), Relation::empty()))?;
        let out = run_purified(&keyed_ops(v, k), &p.adversary, init, p.max_labels)?;
        support = support.max(out.len());
        Ok(out.reduced_density().matrix().clone())
    };
    let mut rho = DMatrix::<C64>::zeros(d, d);
    for k1 in dim.values() {
        for k2 in dim.values() {
            for k3 in dim.values() {
                let k = [k1, k2, k3];
                if !use_orbits {
                    rho += simulate(k)? * C64::new(w, 0.0);
                    continue;
                }
                let (rep, g) = linear_normal_form(k, dim.bits());
                let base = match cache.entry(rep) {
                    Entry::Occupied(e) => e.into_mut(),
                    Entry::Vacant(e) => e.insert(simulate(rep)?),
                };
                for i in 0..d {
                    let gi = g[i / nb] as usize * nb + i % nb;
                    for j in 0..d {
                        let gj = g[j / nb] as usize * nb + j % nb;
                        rho[(gi, gj)] += base[(i, j)] * w;
                    }
                }
            }
        }
    }
    Ok((DensityMatrix::new(rho), support))
}

/// A representative r of the GL(GF(2)^bits) orbit of the key triple and a lookup
/// table of some g in that group with g·r = k.
pub(crate) fn linear_normal_form(keys: [u8; 3], bits: u32) -> ([u8; 3], Vec<u8>) {
    let n = 1usize << bits;
    let mut cols: Vec<u8> = Vec::new();
    let mut rep = [0u8; 3];
    for (i, &k) in keys.iter().enumerate() {
        let found = (0..1usize << cols.len())
            .find(|m| cols.iter().enumerate().filter(|(j, _)| m >> j & 1 == 1).fold(0, |acc, (_, c)| acc ^ c) == k);
        match found {
            Some(m) => rep[i] = m as u8,
            None => {
                cols.push(k);
                rep[i] = 1 << (cols.len() - 1);
            }
        }
    }
    let mut span = vec![false; n];
    span[0] = true;
    let add = |span: &mut Vec<bool>, v: u8| {
        let reach: Vec<usize> = (0..n).filter(|&x| span[x]).collect();
        for x in reach {
            span[x ^ v as usize] = true;
        }
    };
    for &c in &cols {
        add(&mut span, c);
    }
    for b in 0..bits {
        let e = 1u8 << b;
        if !span[e as usize] {
            cols.push(e);
            add(&mut span, e);
        }
    }
    let table = (0..n)
        .map(|x| cols.iter().enumerate().filter(|(j, _)| x >> j & 1 == 1).fold(0u8, |acc, (_, c)| acc ^ c))
        .collect();
    (rep, table)
}

/// Concrete oracles of one Monte Carlo sample of hybrid 1, 6 or 7.
pub fn sample_oracles<R: Rng + ?Sized>(h: Hybrid, n: usize, rng: &mut R) -> Result<DenseOracles> {
    match h {
        Hybrid::TwoHaar => Ok(DenseOracles { first: sample_haar(n, rng), second: sample_haar(n, rng) }),
        Hybrid::MaskedFirst | Hybrid::MaskedSecond => {
            let u = sample_haar(n, rng);
            let k: [u8; 3] = [0, 1, 2].map(|_| rng.random_range(0..n) as u8);
            Ok(if h == Hybrid::MaskedFirst { masked_first(&u, k) } else { coupled_second(&u, k) })
        }
        _ => Err(Error::Config(format!("hybrid {} is exact", h.index()))),
    }
}

/// O₁ = X^{k₃}UX^{k₁}, O₂ = UX^{k₂}U.
pub fn masked_first(u: &Mat, k: [u8; 3]) -> DenseOracles {
    let n = u.nrows();
    DenseOracles { first: xor_matrix(n, k[2]) * u * xor_matrix(n, k[0]), second: u * xor_matrix(n, k[1]) * u }
}

/// O₁ = U, O₂ = X^{k₃}UX^{k₂}UX^{k₁}.
pub fn masked_second(u: &Mat, k: [u8; 3]) -> DenseOracles {
    let n = u.nrows();
    let x = |k: u8| xor_matrix(n, k);
    DenseOracles { first: u.clone(), second: x(k[2]) * u * x(k[1]) * u * x(k[0]) }
}

/// Hybrid 7 at (U′, k₁, k₁⊕k₂⊕k₃, k₃) with U′ = X^{k₃}UX^{k₁}. The map preserves the
/// sampling measure and gives the same oracles as hybrid 6 at (U, k).
pub fn coupled_second(u: &Mat, k: [u8; 3]) -> DenseOracles {
    let n = u.nrows();
    let u2 = xor_matrix(n, k[2]) * u * xor_matrix(n, k[0]);
    masked_second(&u2, [k[0], k[0] ^ k[1] ^ k[2], k[2]])
}

fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Mean of |ψ⟩⟨ψ| over samples and the Frobenius norm of its entrywise standard error.
fn sampled_hybrid(h: Hybrid, p: &HybridParams) -> Result<(DensityMatrix, f64)> {
    let s = p.monte_carlo.samples;
    if s < 2 {
        return Err(Error::Config("Monte Carlo needs at least 2 samples".into()));
    }
    let d = p.adversary.dim(p.n);
    let chunks: Vec<u64> = (0..s.div_ceil(CHUNK)).collect();
    let partial: Vec<(DMatrix<C64>, DMatrix<f64>)> = chunks
        .par_iter()
        .map(|&c| -> Result<(DMatrix<C64>, DMatrix<f64>)> {
            let mut sum = DMatrix::<C64>::zeros(d, d);
            let mut sq = DMatrix::<f64>::zeros(d, d);
            for i in c * CHUNK..((c + 1) * CHUNK).min(s) {
                let oracles = sample_oracles(h, p.n, &mut sample_rng(p.monte_carlo.seed, i))?;
                let r = outer(&run_dense(&oracles, &p.adversary)?);
                sq += r.map(|v| v.norm_sqr());
                sum += r;
            }
            Ok((sum, sq))
        })
        .collect::<Result<_>>()?;
    let mut sum = DMatrix::<C64>::zeros(d, d);
    let mut sq = DMatrix::<f64>::zeros(d, d);
    for (a, b) in partial {
        sum += a;
        sq += b;
    }
    let sf = s as f64;
    let mean = sum.map(|v| v / sf);
    let var_of_mean: f64 = mean
        .iter()
        .zip(sq.iter())
        .map(|(m, q)| ((q / sf - m.norm_sqr()).max(0.0)) * sf / (sf - 1.0) / sf)
        .sum();
    Ok((DensityMatrix::new(mean), var_of_mean.sqrt()))
}

/// The AB density matrix of one hybrid experiment.
pub fn hybrid(h: Hybrid, p: &HybridParams) -> Result<HybridState> {
    Dim::new(p.n)?;
    let start = Instant::now();
    let (rho, samples, standard_error, max_support) = if h.exact() {
        let (rho, sup) = exact_hybrid(h, p)?;
        (rho, None, 0.0, sup)
    } else {
        let (rho, se) = sampled_hybrid(h, p)?;
        (rho, Some(p.monte_carlo.samples), se, 0)
    };
    Ok(HybridState { hybrid: h.index(), n: p.n, trace: rho.trace().re, rho, samples, standard_error, max_support, seconds: start.elapsed().as_secs_f64() })
}

/// Half the trace norm of a Frobenius-norm perturbation is at most √d/2 times it.
pub fn td_uncertainty(a: &HybridState, b: &HybridState) -> f64 {
    let d = a.rho.dim() as f64;
    0.5 * d.sqrt() * (a.standard_error.powi(2) + b.standard_error.powi(2)).sqrt()
}

#[derive(Clone, Debug, Serialize)]
pub struct CouplingReport {
    pub n: usize,
    pub samples: u64,
    pub max_frobenius_gap: f64,
    pub pass: bool,
}

/// Per-sample comparison of hybrids 6 and 7 under the measure-preserving coupling.
pub fn coupled_gap(n: usize, adv: &AdversarySpec, samples: u64, seed: u64) -> Result<CouplingReport> {
    let gaps: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let mut rng = sample_rng(seed, i);
            let u = sample_haar(n, &mut rng);
            let k: [u8; 3] = [0, 1, 2].map(|_| rng.random_range(0..n) as u8);
            let r6 = outer(&run_dense(&masked_first(&u, k), adv)?);
            let r7 = outer(&run_dense(&coupled_second(&u, k), adv)?);
            Ok((r6 - r7).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt())
        })
        .collect::<Result<_>>()?;
    let max_frobenius_gap = gaps.into_iter().fold(0.0, f64::max);
    Ok(CouplingReport { n, samples, max_frobenius_gap, pass: max_frobenius_gap < 1e-9 })
}

#[derive(Clone, Debug, Serialize)]
pub struct CurvePoint {
    pub n: usize,
    pub td: Option<f64>,
    /// Monte Carlo uncertainty of the distance, zero for exact pairs.
    pub td_error: f64,
    pub seconds: f64,
    /// "ok" or the error that stopped the point.
    pub status: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct CurveReport {
    pub pair: (usize, usize),
    pub adversary: AdversaryKind,
    pub t: usize,
    pub points: Vec<CurvePoint>,
    pub slope: Option<f64>,
    /// Expected log–log slope, when the rate is fitted.
    pub expected_slope: Option<f64>,
    pub slope_in_tolerance: Option<bool>,
    pub monotone: bool,
    pub pass: bool,
}

/// Allowed deviation of a fitted slope from the expected rate.
pub const SLOPE_TOLERANCE: f64 = 0.35;

#[derive(Clone, Debug)]
pub struct CurveParams {
    pub t: usize,
    pub adversary: AdversaryKind,
    pub b_dim: u16,
    pub adversary_seed: u64,
    pub monte_carlo: MonteCarlo,
    pub max_labels: usize,
}

impl Default for CurveParams {
    fn default() -> Self {
        CurveParams {
            t: 1,
            adversary: AdversaryKind::Identity,
            b_dim: 1,
            adversary_seed: 0,
            monte_carlo: MonteCarlo::default(),
            max_labels: 4_000_000,
        }
    }
}

fn expected_slope(i: usize, j: usize) -> Option<f64> {
    match (i.min(j), i.max(j)) {
        (2, 3) | (3, 4) | (4, 5) => Some(-0.5),
        _ => None,
    }
}

/// TD(ρ_i, ρ_j) across an N grid.
pub fn distance_curve(i: usize, j: usize, grid: &[usize], cp: &CurveParams) -> Result<CurveReport> {
    let (hi, hj) = (Hybrid::from_index(i)?, Hybrid::from_index(j)?);
    let mut points = Vec::new();
    for &n in grid {
        let start = Instant::now();
        let adv = AdversarySpec::builtin(cp.adversary, n, cp.t, cp.b_dim, cp.adversary_seed);
        let params = HybridParams { n, adversary: adv, monte_carlo: cp.monte_carlo, max_labels: cp.max_labels };
        let point = (|| -> Result<(f64, f64)> {
            let a = hybrid(hi, &params)?;
            let b = hybrid(hj, &params)?;
            Ok((trace_distance(&a.rho, &b.rho)?, td_uncertainty(&a, &b)))
        })();
        let seconds = start.elapsed().as_secs_f64();
        points.push(match point {
            Ok((td, err)) => CurvePoint { n, td: Some(td), td_error: err, seconds, status: "ok".into() },
            Err(e @ (Error::Budget(_) | Error::Precondition(_))) => {
                CurvePoint { n, td: None, td_error: 0.0, seconds, status: e.to_string() }
            }
            Err(e) => return Err(e),
        });
    }
    let values: Option<Vec<f64>> = points.iter().map(|p| p.td).collect();
    let zero_pair = (i.min(j), i.max(j)) == (6, 7);
    let (monotone, slope) = match &values {
        Some(v) if v.len() >= 2 => {
            let mono = v.windows(2).all(|w| w[1] < w[0]);
            let xs: Vec<f64> = grid.iter().map(|&n| n as f64).collect();
            let slope = if v.iter().all(|&x| x > 0.0) { log_log_slope(&xs, v) } else { None };
            (mono, slope)
        }
        _ => (false, None),
    };
    let expected = expected_slope(i, j);
    let slope_in_tolerance = match (expected, slope) {
        (Some(e), Some(s)) => Some((s - e).abs() <= SLOPE_TOLERANCE),
        _ => None,
    };
    let pass = if zero_pair {
        values.as_ref().is_some_and(|v| v.iter().all(|&x| x < 1e-9))
    } else {
        monotone
    };
    Ok(CurveReport {
        pair: (i, j),
        adversary: cp.adversary,
        t: cp.t,
        points,
        slope,
        expected_slope: expected,
        slope_in_tolerance,
        monotone,
        pass,
    })
}
