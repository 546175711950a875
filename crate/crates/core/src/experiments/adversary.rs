//! Query adversaries: interleaved unitaries on A ⊗ B around a fixed query order.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::haar::{sample_haar, unitarity_residual};
use crate::oracles::op::{Mat, Op};
use crate::state::purified::{PurifiedState, C64};

/// Allowed deviation of an interleaved matrix from unitarity.
pub const UNITARITY_TOL: f64 = 1e-9;

/// One of the four queries in a round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Query {
    First,
    Second,
    FirstInverse,
    SecondInverse,
}

/// Order of the queries inside every round.
pub const ROUND: [Query; 4] = [Query::First, Query::Second, Query::FirstInverse, Query::SecondInverse];

/// Named adversaries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdversaryKind {
    /// Every interleaved unitary is the identity.
    Identity,
    /// Independent Haar unitaries on A ⊗ B.
    Random,
}

impl std::str::FromStr for AdversaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(AdversaryKind::Identity),
            "random" => Ok(AdversaryKind::Random),
            other => Err(Error::Config(format!("unknown adversary {other:?} (identity, random)"))),
        }
    }
}

/// t rounds of (O₁, O₂, O₁†, O₂†), each query preceded by a unitary on A ⊗ B.
/// `None` marks an identity step so exact simulation can skip it.
#[derive(Clone, Debug)]
pub struct AdversarySpec {
    pub t: usize,
    pub b_dim: u16,
    pub unitaries: Vec<Option<Arc<Mat>>>,
}

impl AdversarySpec {
    pub fn identity(t: usize, b_dim: u16) -> Self {
        AdversarySpec { t, b_dim, unitaries: vec![None; 4 * t] }
    }

    pub fn random(n: usize, t: usize, b_dim: u16, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = n * b_dim as usize;
        let unitaries = (0..4 * t).map(|_| Some(Arc::new(sample_haar(d, &mut rng)))).collect();
        AdversarySpec { t, b_dim, unitaries }
    }

    pub fn builtin(kind: AdversaryKind, n: usize, t: usize, b_dim: u16, seed: u64) -> Self {
        match kind {
            AdversaryKind::Identity => Self::identity(t, b_dim),
            AdversaryKind::Random => Self::random(n, t, b_dim, seed),
        }
    }

    /// Explicit matrices, checked for shape and unitarity.
    pub fn from_matrices(n: usize, t: usize, b_dim: u16, mats: Vec<Mat>) -> Result<Self> {
        if mats.len() != 4 * t {
            return Err(Error::LengthMismatch { expected: 4 * t, got: mats.len() });
        }
        let d = n * b_dim as usize;
        let mut unitaries = Vec::with_capacity(mats.len());
        for (i, m) in mats.into_iter().enumerate() {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::Config(format!("A_{} must be {d}x{d}", i + 1)));
            }
            let r = unitarity_residual(&m);
            if r > UNITARITY_TOL {
                return Err(Error::Config(format!("A_{} is not unitary (residual {r:.2e})", i + 1)));
            }
            unitaries.push(Some(Arc::new(m)));
        }
        Ok(AdversarySpec { t, b_dim, unitaries })
    }

    pub fn dim(&self, n: usize) -> usize {
        n * self.b_dim as usize
    }

    /// Steps in application order: the i-th interleaved unitary and the query after it.
    pub fn steps(&self) -> impl Iterator<Item = (Option<&Arc<Mat>>, Query)> + '_ {
        self.unitaries.iter().enumerate().map(|(i, u)| (u.as_ref(), ROUND[i % 4]))
    }
}

/// Oracles as operators on a purified schema.
pub trait PurifiedOracles {
    fn query(&self, q: Query) -> &Op;
}

/// Runs the adversary on a purified state, checking the support size after every operator.
pub fn run_purified(
    oracles: &dyn PurifiedOracles,
    adv: &AdversarySpec,
    init: PurifiedState,
    max_labels: usize,
) -> Result<PurifiedState> {
    if init.schema().b_dim != adv.b_dim {
        return Err(Error::SchemaMismatch(format!(
            "adversary ancilla {} vs state ancilla {}",
            adv.b_dim,
            init.schema().b_dim
        )));
    }
    let mut cur = init;
    for (u, q) in adv.steps() {
        if let Some(u) = u {
            cur = Op::UnitaryAB(u.clone()).apply_local_capped(&cur, max_labels)?;
        }
        cur = oracles.query(q).apply_local_capped(&cur, max_labels)?;
    }
    Ok(cur)
}

/// Concrete unitaries for the two oracles.
pub struct DenseOracles {
    pub first: Mat,
    pub second: Mat,
}

/// Runs the adversary on |0⟩_A|0⟩_B with concrete oracles tensored with the identity on B.
pub fn run_dense(oracles: &DenseOracles, adv: &AdversarySpec) -> Result<nalgebra::DVector<C64>> {
    let n = oracles.first.nrows();
    let nb = adv.b_dim as usize;
    let mut psi = nalgebra::DVector::<C64>::zeros(n * nb);
    psi[0] = C64::new(1.0, 0.0);
    for (u, q) in adv.steps() {
        if let Some(u) = u {
            if u.nrows() != n * nb {
                return Err(Error::SchemaMismatch(format!("A_i must be {0}x{0}", n * nb)));
            }
            psi = u.as_ref() * psi;
        }
        let (m, dagger) = match q {
            Query::First => (&oracles.first, false),
            Query::Second => (&oracles.second, false),
            Query::FirstInverse => (&oracles.first, true),
            Query::SecondInverse => (&oracles.second, true),
        };
        psi = apply_on_a(m, dagger, &psi, nb);
    }
    Ok(psi)
}

/// (M ⊗ I_B)ψ or (M† ⊗ I_B)ψ with index a·D_B + b.
pub fn apply_on_a(m: &Mat, dagger: bool, psi: &nalgebra::DVector<C64>, nb: usize) -> nalgebra::DVector<C64> {
    let n = m.nrows();
    let mut out = nalgebra::DVector::<C64>::zeros(n * nb);
    for r in 0..n {
        for c in 0..n {
            let e = if dagger { m[(c, r)].conj() } else { m[(r, c)] };
            if e == C64::new(0.0, 0.0) {
                continue;
            }
            for b in 0..nb {
                out[r * nb + b] += e * psi[c * nb + b];
            }
        }
    }
    out
}

/// |ψ⟩⟨ψ|.
pub fn outer(psi: &nalgebra::DVector<C64>) -> DMatrix<C64> {
    psi * psi.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::haar::seeded_haar;

    #[test]
    fn zero_rounds_leave_the_state_unchanged() {
        let adv = AdversarySpec::identity(0, 2);
        let o = DenseOracles { first: seeded_haar(4, 0, 0), second: seeded_haar(4, 0, 1) };
        let psi = run_dense(&o, &adv).unwrap();
        assert_eq!(psi[0], C64::new(1.0, 0.0));
        assert!(psi.iter().skip(1).all(|c| c.norm() == 0.0));
    }

    #[test]
    fn identity_adversary_composes_the_oracles() {
        let (u1, u2) = (seeded_haar(4, 1, 0), seeded_haar(4, 1, 1));
        let o = DenseOracles { first: u1.clone(), second: u2.clone() };
        let psi = run_dense(&o, &AdversarySpec::identity(1, 1)).unwrap();
        let want = u2.adjoint() * u1.adjoint() * &u2 * &u1 * nalgebra::DVector::from_fn(4, |i, _| {
            if i == 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }
        });
        assert!((psi - want).norm() < 1e-12);
    }

    #[test]
    fn explicit_matrices_are_validated() {
        let bad = DMatrix::from_element(4, 4, C64::new(0.5, 0.0));
        assert!(matches!(AdversarySpec::from_matrices(4, 1, 1, vec![bad; 4]), Err(Error::Config(_))));
        let ok = DMatrix::identity(4, 4);
        assert!(AdversarySpec::from_matrices(4, 1, 1, vec![ok; 3]).is_err());
        let r = AdversarySpec::random(4, 1, 2, 7);
        assert!(r.unitaries.iter().all(|u| unitarity_residual(u.as_ref().unwrap()) < 1e-10));
    }
}
