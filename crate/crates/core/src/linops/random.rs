//! Random operators for randomized checks.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{hermitize, CMatrix, DensityMatrix, HermitianMatrix, C64};

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> HermitianMatrix {
    HermitianMatrix(hermitize(&ginibre(rng, n, n)))
}

/// Haar-distributed unitary (QR of a Ginibre matrix with phase fix).
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let qr = ginibre(rng, n, n).qr();
    let mut q = qr.q();
    let rr = qr.r();
    for j in 0..n {
        let d = rr[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random state `G G† / Tr{G G†}` with `G` of shape `n × rank`.
///
/// `rank == n` gives a full-rank state almost surely.
pub fn density_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> DensityMatrix {
    let g = ginibre(rng, n, rank.max(1));
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityMatrix::from_trusted(hermitize(&m.unscale(tr)))
}

/// Random probability vector bounded away from zero by `floor`.
pub fn probabilities<R: Rng + ?Sized>(rng: &mut R, n: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| floor + rng.random::<f64>()).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|p| p / s).collect()
}
