//! Haar-distributed unitaries.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;

use crate::state::purified::C64;

/// QR of a complex Ginibre matrix with the phases of R's diagonal moved into Q.
pub fn sample_haar<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<C64> {
    let g = DMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) / std::f64::consts::SQRT_2
    });
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// The i-th unitary of the stream seeded by `seed`.
pub fn seeded_haar(n: usize, seed: u64, index: u64) -> DMatrix<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    sample_haar(n, &mut rng)
}

/// max |U†U − I| entrywise.
pub fn unitarity_residual(u: &DMatrix<C64>) -> f64 {
    let n = u.nrows();
    let g = u.adjoint() * u;
    (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (g[(i, j)] - if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_are_unitary_and_reproducible() {
        let u = seeded_haar(8, 0, 3);
        assert!(unitarity_residual(&u) < 1e-10);
        assert_eq!(u, seeded_haar(8, 0, 3));
        assert_ne!(u, seeded_haar(8, 0, 4));
    }

    #[test]
    fn first_column_averages_to_maximally_mixed() {
        // E[U|0⟩⟨0|U†] = I/N; entries have standard deviation about 1/(N√M)
        let (n, m) = (4, 20_000);
        let mut acc = DMatrix::<C64>::zeros(n, n);
        for i in 0..m {
            let u = seeded_haar(n, 1, i);
            let c = u.column(0).into_owned();
            acc += &c * c.adjoint();
        }
        acc /= C64::new(m as f64, 0.0);
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 / n as f64 } else { 0.0 };
                assert!((acc[(i, j)] - C64::new(want, 0.0)).norm() < 3.0 * 0.25 / (m as f64).sqrt() * 4.0);
            }
        }
    }
}
