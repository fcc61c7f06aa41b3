#![allow(dead_code)]

use dephasing_thermo::linops::{c, random, CMatrix, DensityMatrix};
use dephasing_thermo::liouville::{DephasingCoefficients, Superoperator};
use rand::Rng;

pub fn fig1_state() -> DensityMatrix {
    DensityMatrix::qubit(0.75, c(0.25, 0.0)).unwrap()
}

/// Random `γ` with `γ_jk = γ_kj*`, `γ_jj = 0` in a Haar-random basis.
pub fn random_dephasing<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
) -> (DephasingCoefficients, Superoperator) {
    let basis = random::unitary(rng, n);
    let mut gamma = CMatrix::zeros(n, n);
    for j in 0..n {
        for k in (j + 1)..n {
            let g = c(rng.random_range(-2.0..0.5), rng.random_range(-1.5..1.5));
            gamma[(j, k)] = g;
            gamma[(k, j)] = g.conj();
        }
    }
    let coeffs = DephasingCoefficients::new(gamma, basis).unwrap();
    let l = coeffs.to_superoperator().unwrap();
    (coeffs, l)
}

/// Full-rank random state whose smallest eigenvalue is at least `floor`.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, n: usize, floor: f64) -> DensityMatrix {
    let p = random::probabilities(rng, n, floor);
    let u = random::unitary(rng, n);
    let d = DensityMatrix::diagonal(&p).unwrap();
    DensityMatrix::new(&u * d.matrix() * u.adjoint()).unwrap()
}
