//! Dense complex linear algebra for small Hilbert spaces.
//!
//! Operators are `nalgebra` matrices of `Complex64`. Two validated newtypes,
//! [`HermitianMatrix`] and [`DensityMatrix`], carry the invariants that the
//! rest of the crate relies on.
//!
//! Vectorization convention (used by `liouville`): column stacking, so that
//! `vec(A X B) = (Bᵀ ⊗ A) vec(X)` and `vec(X)[i + n·j] = X[i, j]`.
//!
//! Entropies are in nats.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

pub mod random;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Hermiticity tolerance (max elementwise |A - A†|).
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Trace tolerance for density matrices.
pub const TRACE_TOL: f64 = 1e-12;
/// Smallest admissible eigenvalue of a density matrix.
pub const POSITIVITY_TOL: f64 = 1e-12;
/// Eigenvalues in `[-ENTROPY_CLIP, 0)` are treated as zero in entropies.
pub const ENTROPY_CLIP: f64 = 1e-10;
/// Default support threshold for the relative entropy.
pub const SUPPORT_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix has no entries")]
    Empty,
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not Hermitian (max |A - A†| = {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("trace is {trace}, expected 1")]
    InvalidTrace { trace: C64 },
    #[error("negative eigenvalue {value:e} below tolerance")]
    NegativeEigenvalue { value: f64 },
    #[error(
        "support violation: eigenvalue {eigenvalue:e} of the reference state carries weight {weight:e} of the first state"
    )]
    SupportViolation { eigenvalue: f64, weight: f64 },
    #[error("subsystem index {index} out of range for {count} subsystems")]
    BadSubsystem { index: usize, count: usize },
}

pub type Result<T> = std::result::Result<T, LinalgError>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn r(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn dagger(a: &CMatrix) -> CMatrix {
    a.adjoint()
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

/// Largest elementwise modulus of `a - b`. Panics on shape mismatch.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in max_abs_diff");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Real part of `Tr{A B}` computed without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn hermitian_deviation(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    dev
}

/// `(A + A†) / 2`.
pub fn hermitize(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

fn check_square(a: &CMatrix) -> Result<usize> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(LinalgError::Empty);
    }
    if a.nrows() != a.ncols() {
        return Err(LinalgError::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    Ok(a.nrows())
}

/// A square matrix equal to its adjoint within [`HERMITIAN_TOL`].
///
/// The stored matrix is exactly Hermitian: the constructor symmetrizes away
/// the admitted round-off.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerance(m, HERMITIAN_TOL)
    }

    /// Accepts `m` when `max |m - m†| <= tol`, scaled by `max(1, max|m|)`.
    pub fn with_tolerance(m: CMatrix, tol: f64) -> Result<Self> {
        check_square(&m)?;
        let deviation = hermitian_deviation(&m);
        if deviation > tol * max_abs(&m).max(1.0) {
            return Err(LinalgError::NotHermitian { deviation });
        }
        Ok(Self(hermitize(&m)))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = r(*d);
        }
        Self(m)
    }

    pub fn zeros(n: usize) -> Self {
        Self(CMatrix::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// `A - Tr{A}/N · I`.
    pub fn traceless_part(&self) -> Self {
        let n = self.dim();
        let shift = self.trace() / n as f64;
        Self(&self.0 - identity(n).scale(shift))
    }

    /// Expectation value `Tr{A ρ}`.
    pub fn expectation(&self, rho: &DensityMatrix) -> f64 {
        trace_product(&self.0, rho.matrix()).re
    }

    /// Pauli σ_z in the convention `σ_z|0⟩ = -|0⟩`, `σ_z|1⟩ = |1⟩`.
    pub fn sigma_z() -> Self {
        Self::from_real_diagonal(&[-1.0, 1.0])
    }

    /// Applies a real function to the spectrum: `V f(Λ) V†`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Self {
        let eig = eig_hermitian(self);
        eig.reconstruct_with(f)
    }
}

/// Eigendecomposition `A = V diag(λ) V†` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let fj = f(self.values[j]);
            for i in 0..n {
                scaled[(i, j)] *= fj;
            }
        }
        HermitianMatrix(hermitize(&(scaled * self.vectors.adjoint())))
    }
}

/// Hermitian eigendecomposition, eigenvalues sorted ascending.
pub fn eig_hermitian(a: &HermitianMatrix) -> HermitianEigen {
    let n = a.dim();
    let eig = SymmetricEigen::new(a.0.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    HermitianEigen { values, vectors }
}

/// Validating wrapper for [`eig_hermitian`] on arbitrary input.
pub fn eig_hermitian_checked(a: &CMatrix) -> Result<HermitianEigen> {
    Ok(eig_hermitian(&HermitianMatrix::new(a.clone())?))
}

/// Tolerances applied when validating a density matrix.
#[derive(Debug, Clone, Copy)]
pub struct StateTolerance {
    pub hermitian: f64,
    pub trace: f64,
    pub positivity: f64,
}

impl Default for StateTolerance {
    fn default() -> Self {
        Self {
            hermitian: HERMITIAN_TOL,
            trace: TRACE_TOL,
            positivity: POSITIVITY_TOL,
        }
    }
}

/// Positive, unit-trace Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerance(m, StateTolerance::default())
    }

    pub fn with_tolerance(m: CMatrix, tol: StateTolerance) -> Result<Self> {
        let h = HermitianMatrix::with_tolerance(m, tol.hermitian)?;
        let trace = h.0.trace();
        if (trace - r(1.0)).norm() > tol.trace {
            return Err(LinalgError::InvalidTrace { trace });
        }
        let min = eig_hermitian(&h).values[0];
        if min < -tol.positivity {
            return Err(LinalgError::NegativeEigenvalue { value: min });
        }
        Ok(Self(h.0))
    }

    /// Pure state `|ψ⟩⟨ψ|` of a (not necessarily normalized) vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let v = DVector::from_column_slice(psi);
        let norm = v.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(LinalgError::NonFinite);
        }
        let v = v.unscale(norm);
        Self::new(&v * v.adjoint())
    }

    pub fn diagonal(probabilities: &[f64]) -> Result<Self> {
        Self::new(HermitianMatrix::from_real_diagonal(probabilities).0)
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self(identity(n).unscale(n as f64))
    }

    /// Qubit state from the population of `|1⟩` and the coherence `⟨0|ρ|1⟩`.
    pub fn qubit(rho11: f64, rho01: C64) -> Result<Self> {
        let m = CMatrix::from_row_slice(2, 2, &[r(1.0 - rho11), rho01, rho01.conj(), r(rho11)]);
        Self::new(m)
    }

    /// Wraps a matrix already known to be a valid state.
    pub(crate) fn from_trusted(m: CMatrix) -> Self {
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn as_hermitian(&self) -> HermitianMatrix {
        HermitianMatrix(self.0.clone())
    }

    pub fn eigen(&self) -> HermitianEigen {
        eig_hermitian(&HermitianMatrix(self.0.clone()))
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix(kron(&self.0, &other.0))
    }

    pub fn purity(&self) -> f64 {
        trace_product(&self.0, &self.0).re
    }

    /// `(1-ε)ρ + ε I/N`.
    pub fn regularized(&self, eps: f64) -> DensityMatrix {
        let n = self.dim();
        DensityMatrix(self.0.scale(1.0 - eps) + identity(n).scale(eps / n as f64))
    }
}

fn clip_eigenvalue(value: f64) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else if value >= -ENTROPY_CLIP {
        Ok(0.0)
    } else {
        Err(LinalgError::NegativeEigenvalue { value })
    }
}

fn entropy_term(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.ln()
    } else {
        0.0
    }
}

/// Shannon entropy (nats) of a probability vector, `0 ln 0 = 0`.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    p.iter().copied().map(entropy_term).sum()
}

/// `S(ρ) = -Tr{ρ ln ρ}` in nats.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let mut s = 0.0;
    for &v in &rho.eigen().values {
        s += entropy_term(clip_eigenvalue(v)?);
    }
    Ok(s)
}

/// Natural logarithm of a positive definite Hermitian matrix.
///
/// Fails if any eigenvalue is not strictly positive.
pub fn log_positive(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    let eig = eig_hermitian(a);
    if let Some(&v) = eig.values.iter().find(|v| **v <= 0.0) {
        return Err(LinalgError::NegativeEigenvalue { value: v });
    }
    Ok(eig.reconstruct_with(f64::ln))
}

/// `D(ρ‖σ) = Tr{ρ ln ρ} - Tr{ρ ln σ}` with the default support threshold.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    relative_entropy_with_tol(rho, sigma, SUPPORT_TOL)
}

/// Relative entropy with an explicit support threshold.
///
/// Eigenvalues of `σ` at or below `support_tol` span its numerical kernel.
/// If `ρ` puts more than `support_tol` weight on that kernel the support
/// condition fails; smaller weights are dropped from `Tr{ρ ln σ}`.
pub fn relative_entropy_with_tol(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    support_tol: f64,
) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(LinalgError::DimensionMismatch {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    let mut neg_entropy = 0.0;
    for &v in &rho.eigen().values {
        neg_entropy -= entropy_term(clip_eigenvalue(v)?);
    }

    let eig_sigma = sigma.eigen();
    let rv = rho.matrix() * &eig_sigma.vectors;
    let mut cross = 0.0;
    for (j, &mu) in eig_sigma.values.iter().enumerate() {
        // weight = ⟨w_j|ρ|w_j⟩
        let w = eig_sigma.vectors.column(j);
        let weight = w.dotc(&rv.column(j)).re;
        if mu <= support_tol {
            if weight > support_tol {
                return Err(LinalgError::SupportViolation {
                    eigenvalue: mu,
                    weight,
                });
            }
            if mu > 0.0 && weight > 0.0 {
                cross += weight * mu.ln();
            }
        } else {
            cross += weight * mu.ln();
        }
    }
    Ok(neg_entropy - cross)
}

/// Traces out every subsystem except `keep`.
///
/// `dims` lists the factor dimensions in tensor order (first factor is the
/// most significant index).
pub fn partial_trace(rho: &DensityMatrix, dims: &[usize], keep: usize) -> Result<DensityMatrix> {
    let total: usize = dims.iter().product();
    if dims.is_empty() || dims.contains(&0) || total != rho.dim() {
        return Err(LinalgError::DimensionMismatch {
            expected: rho.dim(),
            found: total,
        });
    }
    if keep >= dims.len() {
        return Err(LinalgError::BadSubsystem {
            index: keep,
            count: dims.len(),
        });
    }
    let d_keep = dims[keep];
    let d_before: usize = dims[..keep].iter().product();
    let d_after: usize = dims[keep + 1..].iter().product();
    let m = rho.matrix();
    let mut out = CMatrix::zeros(d_keep, d_keep);
    for a in 0..d_keep {
        for b in 0..d_keep {
            let mut acc = C64::new(0.0, 0.0);
            for x in 0..d_before {
                for y in 0..d_after {
                    let row = (x * d_keep + a) * d_after + y;
                    let col = (x * d_keep + b) * d_after + y;
                    acc += m[(row, col)];
                }
            }
            out[(a, b)] = acc;
        }
    }
    Ok(DensityMatrix(hermitize(&out)))
}
