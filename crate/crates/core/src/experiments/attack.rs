//! Key recovery against O₂ = U X^k U, with the full construction as control.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::adversary::{apply_on_a, DenseOracles, Query};
use crate::experiments::haar::sample_haar;
use crate::experiments::hybrids::masked_second;
use crate::oracles::op::Mat;
use crate::relations::Dim;
use crate::state::purified::C64;

/// O₁†, then O₂, then O₁†: cancels U when O₁ = U and O₂ = U X^k U.
pub const DISTINGUISHING_SCRIPT: [Query; 3] = [Query::FirstInverse, Query::Second, Query::FirstInverse];

#[derive(Clone, Copy, Debug, Serialize)]
pub struct AttackParams {
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    /// Masks act on the top `key_bits` bits only; `None` uses every bit.
    pub key_bits: Option<u32>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AttackReport {
    pub params: AttackParams,
    /// Pr[outcome = x ⊕ k] against O₁ = U, O₂ = U X^k U.
    pub insecure_success: f64,
    /// Pr[outcome = x ⊕ k₂] against O₁ = U, O₂ = X^{k₃} U X^{k₂} U X^{k₁}.
    pub full_success: f64,
    pub chance: f64,
    /// Binomial standard deviation of the control rate at chance level.
    pub sigma: f64,
    pub insecure_pass: bool,
    pub full_pass: bool,
    pub pass: bool,
}

/// Applies a query script to |x⟩ and returns the outcome distribution on A.
pub fn run_script(oracles: &DenseOracles, script: &[Query], x: usize) -> DVector<C64> {
    let n = oracles.first.nrows();
    let mut psi = DVector::<C64>::zeros(n);
    psi[x] = C64::new(1.0, 0.0);
    for q in script {
        let (m, dagger) = match q {
            Query::First => (&oracles.first, false),
            Query::Second => (&oracles.second, false),
            Query::FirstInverse => (&oracles.first, true),
            Query::SecondInverse => (&oracles.second, true),
        };
        psi = apply_on_a(m, dagger, &psi, 1);
    }
    psi
}

fn measure<R: Rng + ?Sized>(psi: &DVector<C64>, rng: &mut R) -> usize {
    let r: f64 = rng.random();
    let mut acc = 0.0;
    for (i, c) in psi.iter().enumerate() {
        acc += c.norm_sqr();
        if r < acc {
            return i;
        }
    }
    psi.len() - 1
}

fn insecure_oracles(u: &Mat, k: u8) -> DenseOracles {
    let n = u.nrows();
    let x = Mat::from_fn(n, n, |r, c| if r == c ^ k as usize { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
    DenseOracles { first: u.clone(), second: u * x * u }
}

fn sample_key<R: Rng + ?Sized>(dim: Dim, key_bits: u32, rng: &mut R) -> u8 {
    let r = rng.random_range(0..1usize << key_bits);
    (r << (dim.bits() - key_bits)) as u8
}

pub fn attack_insecure_variant(p: &AttackParams) -> Result<AttackReport> {
    let dim = Dim::new(p.n)?;
    if p.trials == 0 {
        return Err(Error::Config("attack needs at least one trial".into()));
    }
    let key_bits = p.key_bits.unwrap_or(dim.bits());
    if key_bits > dim.bits() {
        return Err(Error::Config(format!("key_bits {key_bits} exceeds log2 N = {}", dim.bits())));
    }
    let (hits_insecure, hits_full) = (0..p.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
            rng.set_stream(i);
            let u = sample_haar(p.n, &mut rng);
            let x = rng.random_range(0..p.n);
            let k = sample_key(dim, key_bits, &mut rng);
            let out = measure(&run_script(&insecure_oracles(&u, k), &DISTINGUISHING_SCRIPT, x), &mut rng);
            let insecure = u64::from(out == x ^ k as usize);
            let keys = [0, 1, 2].map(|_| sample_key(dim, key_bits, &mut rng));
            let out = measure(&run_script(&masked_second(&u, keys), &DISTINGUISHING_SCRIPT, x), &mut rng);
            (insecure, u64::from(out == x ^ keys[1] as usize))
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let trials = p.trials as f64;
    let insecure_success = hits_insecure as f64 / trials;
    let full_success = hits_full as f64 / trials;
    let chance = 1.0 / p.n as f64;
    let sigma = (chance * (1.0 - chance) / trials).sqrt();
    let insecure_pass = hits_insecure == p.trials;
    let full_pass = (full_success - chance).abs() <= 3.0 * sigma;
    Ok(AttackReport {
        params: *p,
        insecure_success,
        full_success,
        chance,
        sigma,
        insecure_pass,
        full_pass,
        pass: insecure_pass && full_pass,
    })
}
