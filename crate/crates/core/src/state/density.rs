//! Dense density matrices over the A ⊗ B basis.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    m: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn new(m: DMatrix<Complex64>) -> Self {
        DensityMatrix { m }
    }

    pub fn zeros(d: usize) -> Self {
        DensityMatrix { m: DMatrix::zeros(d, d) }
    }

    /// |i⟩⟨i|.
    pub fn projector(d: usize, i: usize) -> Self {
        let mut m = DMatrix::zeros(d, d);
        m[(i, i)] = Complex64::new(1.0, 0.0);
        DensityMatrix { m }
    }

    /// I / d.
    pub fn maximally_mixed(d: usize) -> Self {
        DensityMatrix { m: DMatrix::identity(d, d).map(|v: Complex64| v / d as f64) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    pub fn trace(&self) -> Complex64 {
        self.m.trace()
    }

    /// max |ρ − ρ†| entrywise.
    pub fn hermitian_residual(&self) -> f64 {
        let adj = self.m.adjoint();
        (&self.m - adj).iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = (&self.m + self.m.adjoint()).map(|v| v * 0.5);
        let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn frobenius_distance(&self, other: &DensityMatrix) -> Result<f64> {
        self.same_dim(other)?;
        Ok((&self.m - &other.m).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt())
    }

    /// Accumulates w · other into self.
    pub fn add_scaled(&mut self, w: f64, other: &DensityMatrix) -> Result<()> {
        self.same_dim(other)?;
        self.m += other.m.map(|v| v * w);
        Ok(())
    }

    fn same_dim(&self, other: &DensityMatrix) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::LengthMismatch { expected: self.dim(), got: other.dim() });
        }
        Ok(())
    }
}

/// ½ Σ |eigenvalues of r1 − r2|.
pub fn trace_distance(r1: &DensityMatrix, r2: &DensityMatrix) -> Result<f64> {
    r1.same_dim(r2)?;
    let diff = DensityMatrix { m: &r1.m - &r2.m };
    Ok(0.5 * diff.eigenvalues().iter().map(|v| v.abs()).sum::<f64>())
}

impl Serialize for DensityMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| [self.m[(i, j)].re, self.m[(i, j)].im]).collect())
            .collect();
        rows.serialize(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_distance_examples() {
        let r = DensityMatrix::projector(2, 0);
        assert!(trace_distance(&r, &r).unwrap().abs() < 1e-12);
        let o = DensityMatrix::projector(2, 1);
        assert!((trace_distance(&r, &o).unwrap() - 1.0).abs() < 1e-12);
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!((trace_distance(&mixed, &r).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = DensityMatrix::projector(2, 0);
        let b = DensityMatrix::projector(3, 0);
        assert!(trace_distance(&a, &b).is_err());
    }

    #[test]
    fn complex_hermitian_spectrum() {
        // [[1, i], [-i, 1]] has eigenvalues 0 and 2
        let i = Complex64::new(0.0, 1.0);
        let one = Complex64::new(1.0, 0.0);
        let m = DMatrix::from_row_slice(2, 2, &[one, i, -i, one]);
        let ev = DensityMatrix::new(m).eigenvalues();
        assert!(ev[0].abs() < 1e-12 && (ev[1] - 2.0).abs() < 1e-12);
    }
}
