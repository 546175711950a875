//! Sparse complex state vectors over labeled bases.

use num_complex::Complex64;
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::state::density::DensityMatrix;
use crate::relations::{Relation, ZVectors};
use crate::state::label::{Label, Schema};

/// Amplitudes with magnitude below this are dropped.
pub const PRUNE: f64 = 1e-12;

pub type C64 = Complex64;

#[derive(Clone, Debug)]
pub struct PurifiedState {
    schema: Schema,
    amps: FxHashMap<Label, C64>,
}

impl PurifiedState {
    pub fn zero(schema: Schema) -> Self {
        PurifiedState { schema, amps: FxHashMap::default() }
    }

    pub fn basis(schema: Schema, label: Label) -> Result<Self> {
        if !schema.admits(&label) {
            return Err(Error::SchemaMismatch(format!("label {label:?} does not fit {schema:?}")));
        }
        let mut s = Self::zero(schema);
        s.amps.insert(label, C64::new(1.0, 0.0));
        Ok(s)
    }

    /// Builds a state from (label, amplitude) terms, summing repeats.
    pub fn from_terms<I: IntoIterator<Item = (Label, C64)>>(schema: Schema, terms: I) -> Result<Self> {
        let mut s = Self::zero(schema);
        for (l, c) in terms {
            if !schema.admits(&l) {
                return Err(Error::SchemaMismatch(format!("label {l:?} does not fit {schema:?}")));
            }
            s.add(l, c);
        }
        s.prune();
        Ok(s)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn amplitude(&self, label: &Label) -> C64 {
        self.amps.get(label).copied().unwrap_or_default()
    }

    /// Adds `c` to the amplitude of `label` without pruning.
    pub fn add(&mut self, label: Label, c: C64) {
        *self.amps.entry(label).or_default() += c;
    }

    pub fn prune(&mut self) {
        self.amps.retain(|_, c| c.norm() >= PRUNE);
    }

    /// Terms in canonical label order.
    pub fn terms(&self) -> Vec<(&Label, C64)> {
        let mut v: Vec<_> = self.amps.iter().map(|(l, c)| (l, *c)).collect();
        v.sort_by(|a, b| a.0.cmp(b.0));
        v
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Label, &C64)> {
        self.amps.iter()
    }

    pub fn norm_sqr(&self) -> f64 {
        let mut t = self.terms().into_iter().map(|(_, c)| c.norm_sqr()).collect::<Vec<_>>();
        t.sort_by(|a, b| a.total_cmp(b));
        t.iter().sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&mut self, c: C64) {
        for v in self.amps.values_mut() {
            *v *= c;
        }
    }

    /// self += c · other.
    pub fn axpy(&mut self, c: C64, other: &PurifiedState) -> Result<()> {
        self.schema.expect(&other.schema, "axpy")?;
        for (l, v) in &other.amps {
            self.add(l.clone(), c * v);
        }
        self.prune();
        Ok(())
    }

    /// ⟨self|other⟩, conjugate-linear in `self`.
    pub fn inner_product(&self, other: &PurifiedState) -> Result<C64> {
        self.schema.expect(&other.schema, "inner product")?;
        let mut acc: Vec<(&Label, C64)> = self
            .amps
            .iter()
            .filter_map(|(l, a)| other.amps.get(l).map(|b| (l, a.conj() * b)))
            .collect();
        acc.sort_by(|a, b| a.0.cmp(b.0));
        Ok(acc.into_iter().map(|(_, c)| c).sum())
    }

    /// Largest amplitude gap |self − other| over the union of supports.
    pub fn max_abs_diff(&self, other: &PurifiedState) -> Result<f64> {
        self.schema.expect(&other.schema, "comparison")?;
        let mut worst = 0.0f64;
        for (l, a) in &self.amps {
            worst = worst.max((a - other.amplitude(l)).norm());
        }
        for (l, b) in &other.amps {
            if !self.amps.contains_key(l) {
                worst = worst.max(b.norm());
            }
        }
        Ok(worst)
    }

    /// Replaces the schema after an operator rewrote every label.
    pub(crate) fn from_map(schema: Schema, amps: FxHashMap<Label, C64>) -> Self {
        let mut s = PurifiedState { schema, amps };
        s.prune();
        s
    }

    /// Traces out every register except A and B.
    pub fn reduced_density(&self) -> DensityMatrix {
        #[allow(clippy::type_complexity)]
        fn env(l: &Label) -> (&[Relation; 4], &Option<ZVectors>, &[Option<u8>; 3], Option<u8>) {
            (&l.rels, &l.z, &l.keys, l.aux)
        }
        let nb = self.schema.b_dim as usize;
        let d = self.schema.dim.n() * nb;
        let mut terms: Vec<(&Label, C64)> = self.amps.iter().map(|(l, c)| (l, *c)).collect();
        terms.sort_unstable_by(|x, y| env(x.0).cmp(&env(y.0)).then_with(|| (x.0.a, x.0.b).cmp(&(y.0.a, y.0.b))));
        let mut rho = nalgebra::DMatrix::<C64>::zeros(d, d);
        for group in terms.chunk_by(|x, y| env(x.0) == env(y.0)) {
            for &(li, ci) in group {
                let i = li.a as usize * nb + li.b as usize;
                for &(lj, cj) in group {
                    rho[(i, lj.a as usize * nb + lj.b as usize)] += ci * cj.conj();
                }
            }
        }
        DensityMatrix::new(rho)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relations::Dim;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn inner_product_basics() {
        let dim = Dim::new(4).unwrap();
        let sc = Schema::joint(dim);
        let l0 = Label::joint(0, Relation::empty(), Relation::empty());
        let l1 = Label::joint(1, Relation::empty(), Relation::empty());
        let h = 1.0 / 2f64.sqrt();
        let psi = PurifiedState::from_terms(sc, [(l0.clone(), c(h)), (l1.clone(), C64::new(0.0, h))]).unwrap();
        assert!((psi.inner_product(&psi).unwrap() - c(1.0)).norm() < 1e-12);

        let a = PurifiedState::basis(sc, Label::joint(0, Relation::from_pairs([(0, 1)]), Relation::empty())).unwrap();
        let b = PurifiedState::basis(sc, Label::joint(0, Relation::from_pairs([(0, 2)]), Relation::empty())).unwrap();
        assert_eq!(a.inner_product(&b).unwrap(), c(0.0));

        let other = PurifiedState::zero(Schema::split(dim));
        assert!(matches!(psi.inner_product(&other), Err(Error::SchemaMismatch(_))));
    }

    #[test]
    fn inner_product_is_conjugate_linear_in_first() {
        let dim = Dim::new(2).unwrap();
        let sc = Schema::joint(dim);
        let l0 = Label::joint(0, Relation::empty(), Relation::empty());
        let mut a = PurifiedState::basis(sc, l0.clone()).unwrap();
        a.scale(C64::new(0.0, 1.0));
        let b = PurifiedState::basis(sc, l0).unwrap();
        assert_eq!(a.inner_product(&b).unwrap(), C64::new(0.0, -1.0));
    }

    #[test]
    fn reduced_density_of_product_and_entangled_states() {
        let dim = Dim::new(4).unwrap();
        let sc = Schema::joint(dim);
        let e = Label::joint(0, Relation::empty(), Relation::empty());
        let rho = PurifiedState::basis(sc, e).unwrap().reduced_density();
        assert_eq!(rho.matrix()[(0, 0)], c(1.0));
        assert!((rho.trace().re - 1.0).abs() < 1e-12);

        let x = 2u8;
        let terms = (0..4u8).map(|y| (Label::joint(y, Relation::from_pairs([(x, y)]), Relation::empty()), c(0.5)));
        let rho = PurifiedState::from_terms(sc, terms).unwrap().reduced_density();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 0.25 } else { 0.0 };
                assert!((rho.matrix()[(i, j)] - c(want)).norm() < 1e-12);
            }
        }

        let zero = PurifiedState::zero(sc).reduced_density();
        assert!(zero.matrix().iter().all(|v| v.norm() == 0.0));
    }
}
