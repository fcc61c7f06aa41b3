//! Time-local generators as dense superoperators.
//!
//! A [`Superoperator`] stores the `N² × N²` matrix acting on column-stacked
//! operators. The module covers GKSL construction, instantaneous fixed points,
//! the minimal-dissipation effective Hamiltonian and the pure-decoherence
//! structure `L[ρ] = Σ_jk γ_jk P_j ρ P_k`.

use nalgebra::{DMatrix, DVector, SVD};
use thiserror::Error;

use crate::linops::{
    self, hermitize, identity, kron, max_abs, CMatrix, DensityMatrix, HermitianMatrix, LinalgError,
    StateTolerance, C64,
};

/// Tolerance of the two superoperator invariants, relative to `max(1, max|M|)`.
pub const INVARIANT_TOL: f64 = 1e-10;
/// Default relative SVD threshold for kernel detection.
pub const KERNEL_TOL: f64 = 1e-9;
/// Threshold for coefficients outside the pure-decoherence pattern.
pub const STRUCTURE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LiouvilleError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("superoperator is not trace annihilating (deviation {deviation:e})")]
    NotTraceAnnihilating { deviation: f64 },
    #[error("superoperator is not Hermiticity preserving (deviation {deviation:e})")]
    NotHermiticityPreserving { deviation: f64 },
    #[error("no IFP found: smallest singular value {smallest:e} exceeds threshold {threshold:e}")]
    NoFixedPoint { smallest: f64, threshold: f64 },
    #[error(
        "not a pure-decoherence generator in this basis: coefficient ({j},{k},{l},{n}) has modulus {magnitude:e}"
    )]
    NotPureDecoherence {
        j: usize,
        k: usize,
        l: usize,
        n: usize,
        magnitude: f64,
    },
    #[error("invalid dephasing coefficients: {0}")]
    InvalidCoefficients(String),
    #[error("basis is not unitary (max |U†U - I| = {deviation:e})")]
    NonUnitaryBasis { deviation: f64 },
}

pub type Result<T> = std::result::Result<T, LiouvilleError>;

/// One dissipative channel `γ (L ρ L† - ½{L†L, ρ})`. The rate may be negative.
#[derive(Debug, Clone, PartialEq)]
pub struct LindbladTerm {
    pub rate: f64,
    pub operator: CMatrix,
}

impl LindbladTerm {
    pub fn new(rate: f64, operator: CMatrix) -> Self {
        Self { rate, operator }
    }
}

pub fn vectorize(x: &CMatrix) -> DVector<C64> {
    DVector::from_column_slice(x.as_slice())
}

pub fn devectorize(v: &DVector<C64>, n: usize) -> CMatrix {
    CMatrix::from_column_slice(n, n, v.as_slice())
}

fn ket_bra(basis: &CMatrix, a: usize, b: usize) -> CMatrix {
    basis.column(a) * basis.column(b).adjoint()
}

fn check_unitary(u: &CMatrix, n: usize) -> Result<()> {
    if u.nrows() != n || u.ncols() != n {
        return Err(LiouvilleError::DimensionMismatch {
            expected: n,
            found: u.nrows(),
        });
    }
    let deviation = linops::max_abs_diff(&(u.adjoint() * u), &identity(n));
    if deviation > 1e-10 {
        return Err(LiouvilleError::NonUnitaryBasis { deviation });
    }
    Ok(())
}

/// Linear map on `N × N` operators stored as an `N² × N²` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    dim: usize,
    matrix: CMatrix,
}

impl Superoperator {
    /// Wraps a matrix after checking both generator invariants.
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        let n2 = matrix.nrows();
        let n = (n2 as f64).sqrt().round() as usize;
        if n == 0 || n * n != n2 || matrix.ncols() != n2 {
            return Err(LiouvilleError::DimensionMismatch {
                expected: n * n,
                found: matrix.ncols(),
            });
        }
        let sup = Self { dim: n, matrix };
        sup.check_invariants()?;
        Ok(sup)
    }

    pub fn zero(n: usize) -> Self {
        Self {
            dim: n,
            matrix: CMatrix::zeros(n * n, n * n),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    fn scale(&self) -> f64 {
        max_abs(&self.matrix).max(1.0)
    }

    /// Largest deviation of `vec(I)† M` from zero.
    pub fn trace_annihilation_deviation(&self) -> f64 {
        let n = self.dim;
        (0..n * n)
            .map(|col| {
                (0..n)
                    .map(|i| self.matrix[(i + n * i, col)])
                    .sum::<C64>()
                    .norm()
            })
            .fold(0.0, f64::max)
    }

    /// Largest deviation of `L[X†] - L[X]†` over the matrix-unit basis.
    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.dim;
        let mut dev: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let lx = devectorize(&self.matrix.column(a + n * b).into_owned(), n);
                let lxd = devectorize(&self.matrix.column(b + n * a).into_owned(), n);
                dev = dev.max(linops::max_abs_diff(&lxd, &lx.adjoint()));
            }
        }
        dev
    }

    pub fn check_invariants(&self) -> Result<()> {
        let tol = INVARIANT_TOL * self.scale();
        let deviation = self.trace_annihilation_deviation();
        if deviation > tol {
            return Err(LiouvilleError::NotTraceAnnihilating { deviation });
        }
        let deviation = self.hermiticity_deviation();
        if deviation > tol {
            return Err(LiouvilleError::NotHermiticityPreserving { deviation });
        }
        Ok(())
    }

    /// `L[X]` for an arbitrary operator.
    pub fn apply_matrix(&self, x: &CMatrix) -> Result<CMatrix> {
        if x.nrows() != self.dim || x.ncols() != self.dim {
            return Err(LiouvilleError::DimensionMismatch {
                expected: self.dim,
                found: x.nrows(),
            });
        }
        Ok(devectorize(&(&self.matrix * vectorize(x)), self.dim))
    }

    /// `L[ρ]`.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<CMatrix> {
        self.apply_matrix(rho.matrix())
    }

    pub fn add(&self, other: &Superoperator) -> Result<Superoperator> {
        if self.dim != other.dim {
            return Err(LiouvilleError::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(Self {
            dim: self.dim,
            matrix: &self.matrix + &other.matrix,
        })
    }
}

/// GKSL generator `-i[H,ρ] + Σ_k γ_k (L_k ρ L_k† - ½{L_k†L_k, ρ})`.
pub fn build_superoperator(h: &HermitianMatrix, terms: &[LindbladTerm]) -> Result<Superoperator> {
    let n = h.dim();
    let id = identity(n);
    let i = C64::new(0.0, 1.0);
    let hm = h.matrix();
    let mut m = (kron(&id, hm) - kron(&hm.transpose(), &id)) * (-i);
    for term in terms {
        let l = &term.operator;
        if l.nrows() != n || l.ncols() != n {
            return Err(LiouvilleError::DimensionMismatch {
                expected: n,
                found: l.nrows(),
            });
        }
        if term.rate == 0.0 {
            continue;
        }
        let ldl = l.adjoint() * l;
        let jump = kron(&l.conjugate(), l);
        let anti = kron(&id, &ldl) + kron(&ldl.transpose(), &id);
        m += (jump - anti.scale(0.5)).scale(term.rate);
    }
    Superoperator::from_matrix(m)
}

/// Kernel of a generator together with positive representatives.
#[derive(Debug, Clone)]
pub struct FixedPoints {
    /// Real-orthonormal Hermitian basis of the kernel.
    pub kernel_basis: Vec<HermitianMatrix>,
    /// Unit-trace positive kernel elements; may be empty.
    pub states: Vec<DensityMatrix>,
    /// Singular values of the superoperator matrix, ascending.
    pub singular_values: Vec<f64>,
}

impl FixedPoints {
    pub fn kernel_dim(&self) -> usize {
        self.kernel_basis.len()
    }
}

fn hermitian_to_real(x: &CMatrix) -> Vec<f64> {
    x.iter().flat_map(|z| [z.re, z.im]).collect()
}

fn real_to_hermitian(v: &[f64], n: usize) -> CMatrix {
    let m = CMatrix::from_iterator(n, n, v.chunks(2).map(|p| C64::new(p[0], p[1])));
    hermitize(&m)
}

/// Instantaneous fixed points: the numerical kernel of `L`.
///
/// Kernel vectors are those right singular vectors whose singular value is at
/// most `tol · σ_max`. The kernel of a Hermiticity-preserving map is closed
/// under `†`, so it is spanned by Hermitian elements; these are returned as a
/// real-orthonormal basis. Positive unit-trace representatives are searched
/// among the projection of `I/N` onto the kernel and the normalized basis
/// elements.
pub fn instantaneous_fixed_points(l: &Superoperator, tol: f64) -> Result<FixedPoints> {
    let n = l.dim();
    let svd = SVD::new(l.matrix().clone(), false, true);
    let v_t = svd.v_t.as_ref().expect("SVD computed with V");
    let sigma_max = svd.singular_values.max();
    let threshold = tol * sigma_max;
    let mut singular_values: Vec<f64> = svd.singular_values.iter().copied().collect();
    singular_values.sort_by(f64::total_cmp);

    let mut candidates: Vec<Vec<f64>> = Vec::new();
    for (idx, s) in svd.singular_values.iter().enumerate() {
        if *s <= threshold {
            let v: DVector<C64> = v_t.row(idx).adjoint();
            let x = devectorize(&v, n);
            let re_part = hermitize(&x);
            let im_part = (&x - x.adjoint()) * C64::new(0.0, -0.5);
            candidates.push(hermitian_to_real(&re_part));
            candidates.push(hermitian_to_real(&im_part));
        }
    }
    if candidates.is_empty() {
        return Err(LiouvilleError::NoFixedPoint {
            smallest: singular_values[0],
            threshold,
        });
    }

    let rows = 2 * n * n;
    let a = DMatrix::from_fn(rows, candidates.len(), |i, j| candidates[j][i]);
    let real_svd = SVD::new(a, true, false);
    let u = real_svd.u.as_ref().expect("SVD computed with U");
    let smax = real_svd.singular_values.max();
    let mut basis_real: Vec<Vec<f64>> = Vec::new();
    for (j, s) in real_svd.singular_values.iter().enumerate() {
        if *s > 1e-8 * smax {
            basis_real.push(u.column(j).iter().copied().collect());
        }
    }
    let kernel_basis: Vec<HermitianMatrix> = basis_real
        .iter()
        .map(|v| HermitianMatrix::new(real_to_hermitian(v, n)))
        .collect::<std::result::Result<_, _>>()?;

    let states = positive_representatives(l, &kernel_basis, &basis_real);
    Ok(FixedPoints {
        kernel_basis,
        states,
        singular_values,
    })
}

fn positive_representatives(
    l: &Superoperator,
    kernel_basis: &[HermitianMatrix],
    basis_real: &[Vec<f64>],
) -> Vec<DensityMatrix> {
    let n = l.dim();
    let mixed = identity(n).unscale(n as f64);
    let mixed_real = hermitian_to_real(&mixed);
    let mut projection = vec![0.0; mixed_real.len()];
    for b in basis_real {
        let overlap: f64 = b.iter().zip(&mixed_real).map(|(x, y)| x * y).sum();
        for (p, x) in projection.iter_mut().zip(b) {
            *p += overlap * x;
        }
    }
    let mut trials = vec![real_to_hermitian(&projection, n)];
    trials.extend(kernel_basis.iter().map(|b| b.matrix().clone()));

    let tolerance = StateTolerance {
        hermitian: 1e-10,
        trace: 1e-10,
        positivity: 1e-10,
    };
    let residual_tol = 1e-8 * l.scale();
    let mut states: Vec<DensityMatrix> = Vec::new();
    for x in trials {
        let tr = x.trace();
        if tr.norm() < 1e-10 {
            continue;
        }
        let x = hermitize(&x.unscale(tr.re));
        let Ok(state) = DensityMatrix::with_tolerance(x, tolerance) else {
            continue;
        };
        let residual = l
            .apply(&state)
            .map(|y| max_abs(&y))
            .unwrap_or(f64::INFINITY);
        if residual > residual_tol {
            continue;
        }
        if states
            .iter()
            .all(|s| linops::max_abs_diff(s.matrix(), state.matrix()) > 1e-9)
        {
            states.push(state);
        }
    }
    states
}

/// Minimal-dissipation Hamiltonian
/// `K = 1/(2iN) Σ_mn [|n⟩⟨m|, L[|m⟩⟨n|]]` in the computational basis.
pub fn effective_hamiltonian(l: &Superoperator) -> HermitianMatrix {
    effective_hamiltonian_in_basis(l, &identity(l.dim())).expect("identity basis is unitary")
}

/// Same sum evaluated in the orthonormal basis given by the columns of `basis`.
pub fn effective_hamiltonian_in_basis(
    l: &Superoperator,
    basis: &CMatrix,
) -> Result<HermitianMatrix> {
    let n = l.dim();
    check_unitary(basis, n)?;
    let mut acc = CMatrix::zeros(n, n);
    for m in 0..n {
        for k in 0..n {
            let x = ket_bra(basis, m, k);
            let y = l.apply_matrix(&x)?;
            let p = ket_bra(basis, k, m);
            acc += &p * &y - &y * &p;
        }
    }
    let k = acc / C64::new(0.0, 2.0 * n as f64);
    Ok(HermitianMatrix::with_tolerance(k, 1e-9)?)
}

/// Rewrites `(H, terms)` with traceless Lindblad operators.
///
/// Shifting `L_k = L'_k + c_k I` moves `γ_k (i/2)(c_k* L'_k - c_k L'_k†)`
/// into the Hamiltonian. The returned `K` is traceless.
pub fn to_minimal_dissipation(
    h: &HermitianMatrix,
    terms: &[LindbladTerm],
) -> Result<(HermitianMatrix, Vec<LindbladTerm>)> {
    let n = h.dim();
    let id = identity(n);
    let i = C64::new(0.0, 1.0);
    let mut k = h.matrix().clone();
    let mut shifted = Vec::with_capacity(terms.len());
    for term in terms {
        let l = &term.operator;
        if l.nrows() != n || l.ncols() != n {
            return Err(LiouvilleError::DimensionMismatch {
                expected: n,
                found: l.nrows(),
            });
        }
        let c = l.trace() / n as f64;
        let lp = l - id.scale(1.0) * c;
        let shift = (&lp * c.conj() - lp.adjoint() * c) * (i * 0.5 * term.rate);
        k += shift;
        shifted.push(LindbladTerm::new(term.rate, lp));
    }
    let k = HermitianMatrix::with_tolerance(k, 1e-10)?.traceless_part();
    Ok((k, shifted))
}

/// Coefficients of `L[ρ] = Σ_jk γ_jk |j⟩⟨j|ρ|k⟩⟨k|` in a fixed orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DephasingCoefficients {
    gamma: CMatrix,
    basis: CMatrix,
}

impl DephasingCoefficients {
    /// Validates `γ_jk = γ_kj*` and `γ_jj = 0` within `1e-10 · max(1, max|γ|)`.
    pub fn new(gamma: CMatrix, basis: CMatrix) -> Result<Self> {
        let n = gamma.nrows();
        if gamma.ncols() != n {
            return Err(LiouvilleError::DimensionMismatch {
                expected: n,
                found: gamma.ncols(),
            });
        }
        check_unitary(&basis, n)?;
        let tol = 1e-10 * max_abs(&gamma).max(1.0);
        for j in 0..n {
            if gamma[(j, j)].norm() > tol {
                return Err(LiouvilleError::InvalidCoefficients(format!(
                    "diagonal coefficient γ_{j}{j} = {} is not zero",
                    gamma[(j, j)]
                )));
            }
            for k in 0..n {
                if (gamma[(j, k)] - gamma[(k, j)].conj()).norm() > tol {
                    return Err(LiouvilleError::InvalidCoefficients(format!(
                        "γ_{j}{k} is not the conjugate of γ_{k}{j}"
                    )));
                }
            }
        }
        let mut gamma = gamma;
        for j in 0..n {
            gamma[(j, j)] = C64::new(0.0, 0.0);
        }
        Ok(Self { gamma, basis })
    }

    pub fn dim(&self) -> usize {
        self.gamma.nrows()
    }

    pub fn gamma(&self) -> &CMatrix {
        &self.gamma
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    /// Superoperator `Σ_jk γ_jk (P_kᵀ ⊗ P_j)`.
    pub fn to_superoperator(&self) -> Result<Superoperator> {
        let n = self.dim();
        let projectors: Vec<CMatrix> = (0..n).map(|j| ket_bra(&self.basis, j, j)).collect();
        let mut m = CMatrix::zeros(n * n, n * n);
        for j in 0..n {
            for k in 0..n {
                let g = self.gamma[(j, k)];
                if g.norm() == 0.0 {
                    continue;
                }
                m += kron(&projectors[k].transpose(), &projectors[j]) * g;
            }
        }
        Superoperator::from_matrix(m)
    }
}

/// Expands `L` over `|j⟩⟨k| · |l⟩⟨n|` in `basis` and extracts `γ_jk = γ_jjkk`.
///
/// Fails with the largest off-pattern coefficient when `L` is not of pure
/// decoherence type in this basis.
pub fn dephasing_coefficients(l: &Superoperator, basis: &CMatrix) -> Result<DephasingCoefficients> {
    let n = l.dim();
    check_unitary(basis, n)?;
    let ud = basis.adjoint();
    let mut gamma = CMatrix::zeros(n, n);
    let mut worst: Option<(usize, usize, usize, usize, f64)> = None;
    let mut largest: f64 = 0.0;
    for k in 0..n {
        for ll in 0..n {
            let y = l.apply_matrix(&ket_bra(basis, k, ll))?;
            let z = &ud * y * basis;
            for j in 0..n {
                for nn in 0..n {
                    let coeff = z[(j, nn)];
                    largest = largest.max(coeff.norm());
                    if j == k && nn == ll {
                        gamma[(k, ll)] = coeff;
                    } else if worst.is_none_or(|w| coeff.norm() > w.4) {
                        worst = Some((j, k, ll, nn, coeff.norm()));
                    }
                }
            }
        }
    }
    if let Some((j, k, l, n, magnitude)) = worst {
        if magnitude > STRUCTURE_TOL * largest.max(1.0) {
            return Err(LiouvilleError::NotPureDecoherence {
                j,
                k,
                l,
                n,
                magnitude,
            });
        }
    }
    DephasingCoefficients::new(gamma, basis.clone())
}

/// `K = (1/N) Σ_n (Σ_m Im γ_mn) |n⟩⟨n|` in the stored basis.
pub fn dephasing_effective_hamiltonian(c: &DephasingCoefficients) -> HermitianMatrix {
    let n = c.dim();
    let mut k = CMatrix::zeros(n, n);
    for col in 0..n {
        let weight: f64 = (0..n).map(|m| c.gamma[(m, col)].im).sum::<f64>() / n as f64;
        k += ket_bra(&c.basis, col, col) * C64::new(weight, 0.0);
    }
    HermitianMatrix::with_tolerance(k, 1e-10).expect("projector sum is Hermitian")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{c, r, random};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;

    fn sigma_z() -> CMatrix {
        HermitianMatrix::sigma_z().into_matrix()
    }

    fn example_generator(omega0: f64, rate: f64) -> Superoperator {
        let h = HermitianMatrix::sigma_z().into_matrix().scale(omega0 / 2.0);
        build_superoperator(
            &HermitianMatrix::new(h).unwrap(),
            &[LindbladTerm::new(rate, sigma_z())],
        )
        .unwrap()
    }

    fn sigma_minus() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[r(0.0), r(1.0), r(0.0), r(0.0)])
    }

    fn thermalizing_qubit(
        omega0: f64,
        beta: f64,
        rate: f64,
    ) -> (HermitianMatrix, Vec<LindbladTerm>) {
        let nbar = 1.0 / ((beta * omega0).exp() - 1.0);
        let h = HermitianMatrix::sigma_z().into_matrix().scale(omega0 / 2.0);
        let down = LindbladTerm::new(rate * (nbar + 1.0), sigma_minus());
        let up = LindbladTerm::new(rate * nbar, sigma_minus().adjoint());
        (HermitianMatrix::new(h).unwrap(), vec![down, up])
    }

    /// Direct operator-form evaluation of the GKSL right-hand side.
    fn gksl_direct(h: &CMatrix, terms: &[LindbladTerm], rho: &CMatrix) -> CMatrix {
        let i = C64::new(0.0, 1.0);
        let mut out = (h * rho - rho * h) * (-i);
        for t in terms {
            let l = &t.operator;
            let ld = l.adjoint();
            let ldl = &ld * l;
            out += (l * rho * &ld - (&ldl * rho + rho * &ldl).scale(0.5)).scale(t.rate);
        }
        out
    }

    #[test]
    fn zero_generator() {
        let s = build_superoperator(&HermitianMatrix::zeros(2), &[]).unwrap();
        assert_eq!(s.matrix(), Superoperator::zero(2).matrix());
        let rho = DensityMatrix::qubit(0.75, r(0.25)).unwrap();
        assert!(max_abs(&Superoperator::zero(2).apply(&rho).unwrap()) == 0.0);
    }

    #[test]
    fn example_generator_coherence_rate() {
        let l = example_generator(1.0, 0.3);
        let rho = DensityMatrix::qubit(0.75, r(0.25)).unwrap();
        let d = l.apply(&rho).unwrap();
        let expected = (c(0.0, 1.0) - r(0.6)) * 0.25;
        assert_abs_diff_eq!((d[(0, 1)] - expected).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d[(0, 0)].norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn diagonal_states_are_fixed() {
        let l = example_generator(1.0, 0.3);
        let rho = DensityMatrix::diagonal(&[0.3, 0.7]).unwrap();
        assert!(max_abs(&l.apply(&rho).unwrap()) < 1e-15);
    }

    #[test]
    fn apply_matches_direct_evaluation() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for n in 2..=4 {
            let h = random::hermitian(&mut rng, n);
            let terms: Vec<_> = (0..3)
                .map(|k| LindbladTerm::new(0.4 - 0.3 * k as f64, random::ginibre(&mut rng, n, n)))
                .collect();
            let l = build_superoperator(&h, &terms).unwrap();
            let rho = random::density_matrix(&mut rng, n, n);
            let got = l.apply(&rho).unwrap();
            let want = gksl_direct(h.matrix(), &terms, rho.matrix());
            assert!(linops::max_abs_diff(&got, &want) < 1e-12);
            assert!(got.trace().norm() < 1e-12);
            assert!(linops::hermitian_deviation(&got) < 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let h = HermitianMatrix::zeros(2);
        let err = build_superoperator(&h, &[LindbladTerm::new(1.0, identity(3))]);
        assert!(matches!(err, Err(LiouvilleError::DimensionMismatch { .. })));
    }

    #[test]
    fn rejects_non_trace_annihilating_matrix() {
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = r(1.0);
        assert!(matches!(
            Superoperator::from_matrix(m),
            Err(LiouvilleError::NotTraceAnnihilating { .. })
        ));
    }

    #[test]
    fn dephasing_kernel_is_diagonal() {
        let fp = instantaneous_fixed_points(&example_generator(1.0, 0.3), KERNEL_TOL).unwrap();
        assert_eq!(fp.kernel_dim(), 2);
        for b in &fp.kernel_basis {
            assert!(b.matrix()[(0, 1)].norm() < 1e-12);
        }
        assert!(fp
            .states
            .iter()
            .any(|s| linops::max_abs_diff(s.matrix(), &identity(2).scale(0.5)) < 1e-12));
    }

    #[test]
    fn zero_generator_kernel() {
        let fp = instantaneous_fixed_points(&Superoperator::zero(2), KERNEL_TOL).unwrap();
        assert_eq!(fp.kernel_dim(), 4);
    }

    #[test]
    fn thermalizing_generator_unique_gibbs() {
        let (h, terms) = thermalizing_qubit(1.0, 2.0, 0.1);
        let l = build_superoperator(&h, &terms).unwrap();
        let fp = instantaneous_fixed_points(&l, KERNEL_TOL).unwrap();
        assert_eq!(fp.kernel_dim(), 1);
        assert_eq!(fp.states.len(), 1);
        let z = 1.0 + (-2.0f64).exp();
        // |0⟩ is the ground state (energy -ω0/2).
        assert_abs_diff_eq!(fp.states[0].matrix()[(0, 0)].re, 1.0 / z, epsilon = 1e-10);
    }

    #[test]
    fn amplitude_damping_fixed_point() {
        let l = build_superoperator(
            &HermitianMatrix::zeros(2),
            &[LindbladTerm::new(1.0, sigma_minus())],
        )
        .unwrap();
        let fp = instantaneous_fixed_points(&l, KERNEL_TOL).unwrap();
        assert_eq!(fp.kernel_dim(), 1);
        assert_eq!(fp.states.len(), 1);
        assert_abs_diff_eq!(fp.states[0].matrix()[(0, 0)].re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn negative_threshold_finds_nothing() {
        let err = instantaneous_fixed_points(&example_generator(1.0, 0.3), -1.0).unwrap_err();
        assert!(matches!(err, LiouvilleError::NoFixedPoint { .. }));
    }

    #[test]
    fn effective_hamiltonian_of_example() {
        let k = effective_hamiltonian(&example_generator(1.0, 0.3));
        let expected = sigma_z().scale(0.5);
        assert!(linops::max_abs_diff(k.matrix(), &expected) < 1e-12);
    }

    #[test]
    fn effective_hamiltonian_pure_dissipator() {
        let l = build_superoperator(
            &HermitianMatrix::zeros(2),
            &[LindbladTerm::new(0.7, sigma_z())],
        )
        .unwrap();
        assert!(max_abs(effective_hamiltonian(&l).matrix()) < 1e-15);
    }

    #[test]
    fn effective_hamiltonian_is_basis_independent() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let h = random::hermitian(&mut rng, 3);
        let terms = vec![LindbladTerm::new(0.5, random::ginibre(&mut rng, 3, 3))];
        let l = build_superoperator(&h, &terms).unwrap();
        let k0 = effective_hamiltonian(&l);
        let u = random::unitary(&mut rng, 3);
        let k1 = effective_hamiltonian_in_basis(&l, &u).unwrap();
        assert!(linops::max_abs_diff(k0.matrix(), k1.matrix()) < 1e-11);
    }

    #[test]
    fn minimal_dissipation_shift() {
        let l_op = sigma_z() + identity(2);
        let h = HermitianMatrix::new(sigma_z().scale(0.5)).unwrap();
        let terms = vec![LindbladTerm::new(0.3, l_op)];
        let (k, shifted) = to_minimal_dissipation(&h, &terms).unwrap();
        assert!(linops::max_abs_diff(&shifted[0].operator, &sigma_z()) < 1e-15);
        let before = build_superoperator(&h, &terms).unwrap();
        let after = build_superoperator(&k, &shifted).unwrap();
        assert!(linops::max_abs_diff(before.matrix(), after.matrix()) < 1e-11);
        let k_eff = effective_hamiltonian(&before);
        assert!(linops::max_abs_diff(k.matrix(), k_eff.matrix()) < 1e-11);
    }

    #[test]
    fn minimal_dissipation_random_consistency() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        for n in 2..=4 {
            let h = random::hermitian(&mut rng, n);
            let terms: Vec<_> = (0..2)
                .map(|_| LindbladTerm::new(0.8, random::ginibre(&mut rng, n, n)))
                .collect();
            let (k, shifted) = to_minimal_dissipation(&h, &terms).unwrap();
            for t in &shifted {
                assert!(t.operator.trace().norm() < 1e-13);
            }
            let before = build_superoperator(&h, &terms).unwrap();
            let after = build_superoperator(&k, &shifted).unwrap();
            assert!(linops::max_abs_diff(before.matrix(), after.matrix()) < 1e-11);
            assert!(k.trace().abs() < 1e-12);
            let k_eff = effective_hamiltonian(&before);
            assert!(linops::max_abs_diff(k.matrix(), k_eff.matrix()) < 1e-11);
        }
    }

    #[test]
    fn traceless_terms_keep_traceless_hamiltonian() {
        let h = HermitianMatrix::new(sigma_z().scale(0.5) + identity(2)).unwrap();
        let terms = vec![LindbladTerm::new(0.3, sigma_z())];
        let (k, shifted) = to_minimal_dissipation(&h, &terms).unwrap();
        assert_eq!(shifted, terms);
        assert!(linops::max_abs_diff(k.matrix(), &sigma_z().scale(0.5)) < 1e-15);
    }

    #[test]
    fn example_dephasing_coefficients() {
        let gamma_t = 0.3;
        let coeffs =
            dephasing_coefficients(&example_generator(1.0, gamma_t), &identity(2)).unwrap();
        let g = coeffs.gamma();
        assert_abs_diff_eq!(
            (g[(0, 1)] - c(-2.0 * gamma_t, 1.0)).norm(),
            0.0,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!((g[(1, 0)] - g[(0, 1)].conj()).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g[(0, 0)].norm(), 0.0);
        let k = dephasing_effective_hamiltonian(&coeffs);
        assert!(linops::max_abs_diff(k.matrix(), &sigma_z().scale(0.5)) < 1e-14);
    }

    #[test]
    fn amplitude_damping_is_not_dephasing() {
        let l = build_superoperator(
            &HermitianMatrix::zeros(2),
            &[LindbladTerm::new(1.0, sigma_minus())],
        )
        .unwrap();
        assert!(matches!(
            dephasing_coefficients(&l, &identity(2)),
            Err(LiouvilleError::NotPureDecoherence { .. })
        ));
    }

    #[test]
    fn real_gamma_gives_zero_hamiltonian() {
        let gamma = CMatrix::from_row_slice(2, 2, &[r(0.0), r(-1.0), r(-1.0), r(0.0)]);
        let coeffs = DephasingCoefficients::new(gamma, identity(2)).unwrap();
        assert!(max_abs(dephasing_effective_hamiltonian(&coeffs).matrix()) == 0.0);
    }

    #[test]
    fn invalid_coefficients_rejected() {
        let gamma = CMatrix::from_row_slice(2, 2, &[r(0.1), r(-1.0), r(-1.0), r(0.0)]);
        assert!(DephasingCoefficients::new(gamma, identity(2)).is_err());
        let gamma = CMatrix::from_row_slice(2, 2, &[r(0.0), c(-1.0, 1.0), c(-1.0, 1.0), r(0.0)]);
        assert!(DephasingCoefficients::new(gamma, identity(2)).is_err());
    }
}
