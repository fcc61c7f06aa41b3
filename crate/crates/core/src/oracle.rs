//! Brute-force reference: a qubit coupled to a few truncated bosonic modes.
//!
//! The joint Hilbert space is ordered system first, then the modes in
//! ascending frequency; each mode keeps Fock levels `0..n_max`.
//! `H = (ω₀/2)σ_z ⊗ I + I ⊗ Σ ω_k b_k†b_k + σ_z ⊗ Σ (g_k b_k† + g_k* b_k)`.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::linops::{
    self, c, eig_hermitian, identity, kron, r, trace_product, CMatrix, DensityMatrix,
    HermitianEigen, HermitianMatrix, LinalgError, C64,
};
use crate::spectral::{SpectralDensitySpec, SpectralError};

/// Largest joint dimension the oracle will diagonalize.
pub const MAX_JOINT_DIM: usize = 4096;
/// Largest thermal population allowed above the Fock cutoff of any mode.
pub const THERMAL_TAIL_TOL: f64 = 1e-8;
/// Round-off allowance below zero for the joint relative entropy.
pub const RELENT_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("invalid finite bath: {0}")]
    InvalidSpec(String),
    #[error(
        "mode {index} (ω = {omega}) has thermal tail {tail:e} above n_max = {n_max} at β = {beta}; raise n_max to at least {suggested}"
    )]
    ThermalTail {
        index: usize,
        omega: f64,
        tail: f64,
        n_max: usize,
        beta: f64,
        suggested: usize,
    },
    #[error(
        "joint dimension {dim} exceeds the limit {MAX_JOINT_DIM}; use fewer modes or a smaller n_max (2·n_max^K must stay ≤ {MAX_JOINT_DIM})"
    )]
    DimensionGuard { dim: usize },
}

pub type Result<T> = std::result::Result<T, OracleError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathMode {
    pub omega: f64,
    pub g: C64,
}

/// Discrete bath: modes sorted by frequency, Fock cutoff, inverse temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteBathSpec {
    modes: Vec<BathMode>,
    n_max: usize,
    beta: f64,
}

impl FiniteBathSpec {
    /// Validates the modes and the thermal tail `e^{-βω n_max}` of every mode.
    pub fn new(mut modes: Vec<BathMode>, n_max: usize, beta: f64) -> Result<Self> {
        if modes.is_empty() {
            return Err(OracleError::InvalidSpec(
                "at least one mode is required".into(),
            ));
        }
        if n_max < 2 {
            return Err(OracleError::InvalidSpec(format!(
                "n_max must be at least 2, got {n_max}"
            )));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(OracleError::InvalidSpec(format!(
                "beta must be positive, got {beta}"
            )));
        }
        if let Some(m) = modes
            .iter()
            .find(|m| !(m.omega > 0.0 && m.omega.is_finite()))
        {
            return Err(OracleError::InvalidSpec(format!(
                "mode frequencies must be positive, got {}",
                m.omega
            )));
        }
        if modes
            .iter()
            .any(|m| !(m.g.re.is_finite() && m.g.im.is_finite()))
        {
            return Err(OracleError::InvalidSpec("couplings must be finite".into()));
        }
        modes.sort_by(|a, b| a.omega.total_cmp(&b.omega));
        for (index, m) in modes.iter().enumerate() {
            let tail = (-beta * m.omega * n_max as f64).exp();
            if tail > THERMAL_TAIL_TOL {
                let suggested = ((1.0 / THERMAL_TAIL_TOL).ln() / (beta * m.omega)).ceil() as usize;
                return Err(OracleError::ThermalTail {
                    index,
                    omega: m.omega,
                    tail,
                    n_max,
                    beta,
                    suggested,
                });
            }
        }
        Ok(Self { modes, n_max, beta })
    }

    pub fn modes(&self) -> &[BathMode] {
        &self.modes
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `2 · n_max^K`, or `None` on overflow.
    pub fn joint_dim(&self) -> Option<usize> {
        let mut d: usize = 2;
        for _ in &self.modes {
            d = d.checked_mul(self.n_max)?;
        }
        Some(d)
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Modes with `ω_k` at Gauss–Legendre nodes of `(0, ω_max)` and `|g_k|² = J(ω_k) w_k`.
pub fn discretize_spectral_density(
    j: &SpectralDensitySpec,
    count: usize,
    omega_max: f64,
) -> Result<Vec<BathMode>> {
    if count == 0 {
        return Err(OracleError::InvalidSpec(
            "mode count must be at least 1".into(),
        ));
    }
    if !(omega_max > 0.0 && omega_max.is_finite()) {
        return Err(OracleError::InvalidSpec(format!(
            "omega_max must be positive, got {omega_max}"
        )));
    }
    let (x, w) = gauss_legendre(count);
    Ok(x.iter()
        .zip(&w)
        .map(|(x, w)| {
            let omega = 0.5 * omega_max * (x + 1.0);
            let weight = 0.5 * omega_max * w;
            BathMode {
                omega,
                g: r((j.j(omega) * weight).sqrt()),
            }
        })
        .collect())
}

/// Mode sums `(η_K(t), ⟨H_I⟩_t)` of the continuous-variable bath.
pub fn analytic_finite_bath(modes: &[BathMode], beta: f64, t: f64) -> (f64, f64) {
    let mut eta = 0.0;
    let mut h_i = 0.0;
    for m in modes {
        let g2 = m.g.norm_sqr();
        let s = (0.5 * m.omega * t).sin();
        let one_minus_cos = 2.0 * s * s;
        eta += 2.0 * g2 * one_minus_cos / (m.omega * m.omega) / (0.5 * beta * m.omega).tanh();
        h_i -= 2.0 * g2 * one_minus_cos / m.omega;
    }
    (eta, h_i)
}

fn annihilation(n: usize) -> CMatrix {
    let mut b = CMatrix::zeros(n, n);
    for k in 1..n {
        b[(k - 1, k)] = r((k as f64).sqrt());
    }
    b
}

/// Operators on the joint space plus the one-time eigendecomposition of `H`.
#[derive(Debug, Clone)]
pub struct FiniteBathOracle {
    spec: FiniteBathSpec,
    omega0: f64,
    dims: Vec<usize>,
    h_s: HermitianMatrix,
    h_e: HermitianMatrix,
    h_i: HermitianMatrix,
    bath_gibbs: DensityMatrix,
    ln_z_env: f64,
    eigen: HermitianEigen,
}

impl FiniteBathOracle {
    pub fn new(spec: FiniteBathSpec, omega0: f64) -> Result<Self> {
        let dim = spec.joint_dim().filter(|d| *d <= MAX_JOINT_DIM).ok_or(
            OracleError::DimensionGuard {
                dim: spec.joint_dim().unwrap_or(usize::MAX),
            },
        )?;
        if !omega0.is_finite() {
            return Err(OracleError::InvalidSpec(format!(
                "omega0 must be finite, got {omega0}"
            )));
        }
        let n = spec.n_max;
        let k = spec.modes.len();
        let env_dim = dim / 2;
        let b = annihilation(n);
        let number = b.adjoint() * &b;
        let id_n = identity(n);
        let embed = |op: &CMatrix, slot: usize| {
            (0..k).fold(CMatrix::identity(1, 1), |acc, i| {
                kron(&acc, if i == slot { op } else { &id_n })
            })
        };
        let mut h_env = CMatrix::zeros(env_dim, env_dim);
        let mut coupling = CMatrix::zeros(env_dim, env_dim);
        let mut gibbs_factors = CMatrix::identity(1, 1);
        let mut ln_z_env = 0.0;
        for (slot, m) in spec.modes.iter().enumerate() {
            h_env += embed(&number, slot) * c(m.omega, 0.0);
            let bk = embed(&b, slot);
            coupling += bk.adjoint() * m.g + bk * m.g.conj();
            let weights: Vec<f64> = (0..n)
                .map(|l| (-spec.beta * m.omega * l as f64).exp())
                .collect();
            let z: f64 = weights.iter().sum();
            ln_z_env += z.ln();
            let thermal = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                n,
                weights.iter().map(|w| r(w / z)),
            ));
            gibbs_factors = kron(&gibbs_factors, &thermal);
        }
        let sz = HermitianMatrix::sigma_z().into_matrix();
        let id2 = identity(2);
        let id_e = identity(env_dim);
        let h_s = HermitianMatrix::new(kron(&sz.scale(0.5 * omega0), &id_e))?;
        let h_e = HermitianMatrix::new(kron(&id2, &h_env))?;
        let h_i = HermitianMatrix::new(kron(&sz, &coupling))?;
        let total = HermitianMatrix::new(h_s.matrix() + h_e.matrix() + h_i.matrix())?;
        let eigen = eig_hermitian(&total);
        let bath_gibbs = DensityMatrix::new(gibbs_factors)?;
        let mut dims = vec![2];
        dims.extend(std::iter::repeat_n(n, k));
        Ok(Self {
            spec,
            omega0,
            dims,
            h_s,
            h_e,
            h_i,
            bath_gibbs,
            ln_z_env,
            eigen,
        })
    }

    pub fn spec(&self) -> &FiniteBathSpec {
        &self.spec
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    /// Factor dimensions in tensor order.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn system_hamiltonian(&self) -> &HermitianMatrix {
        &self.h_s
    }

    pub fn bath_hamiltonian(&self) -> &HermitianMatrix {
        &self.h_e
    }

    pub fn interaction_hamiltonian(&self) -> &HermitianMatrix {
        &self.h_i
    }

    /// Truncated bath Gibbs state `e^{-βH_E}/Z_E`.
    pub fn bath_gibbs(&self) -> &DensityMatrix {
        &self.bath_gibbs
    }

    pub fn initial_state(&self, rho_s0: &DensityMatrix) -> Result<DensityMatrix> {
        if rho_s0.dim() != 2 {
            return Err(OracleError::InvalidSpec(format!(
                "system state must be a qubit, got dimension {}",
                rho_s0.dim()
            )));
        }
        Ok(rho_s0.tensor(&self.bath_gibbs))
    }

    /// `e^{-iHt} ρ₀ e^{iHt}` for a joint state `ρ₀`.
    pub fn propagate(&self, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        let v = &self.eigen.vectors;
        let e = &self.eigen.values;
        let rotated = v.adjoint() * rho0.matrix() * v;
        let phased = DMatrix::from_fn(rotated.nrows(), rotated.ncols(), |i, j| {
            rotated[(i, j)] * C64::from_polar(1.0, -(e[i] - e[j]) * t)
        });
        let m = linops::hermitize(&(v * phased * v.adjoint()));
        Ok(DensityMatrix::with_tolerance(
            m,
            linops::StateTolerance {
                hermitian: 1e-10,
                trace: 1e-10,
                positivity: 1e-10,
            },
        )?)
    }

    /// `D(ρ ‖ ρ_S ⊗ ρ_E^eq) = -S(ρ) - Tr{ρ (ln ρ_S ⊗ I + I ⊗ ln ρ_E^eq)}`.
    ///
    /// The logarithm of the reference is assembled from its factors; the bath
    /// factor is `-βH_E - ln Z_E` exactly, so Gibbs weights far below machine
    /// precision never pass through an eigendecomposition.
    pub fn relative_entropy_to_product(
        &self,
        joint: &DensityMatrix,
        rho_s: &DensityMatrix,
    ) -> Result<f64> {
        let ln_s = linops::log_positive(&rho_s.as_hermitian())?;
        let env_dim = joint.dim() / 2;
        let ln_product = kron(ln_s.matrix(), &identity(env_dim))
            + self.h_e.matrix() * c(-self.spec.beta, 0.0)
            - identity(joint.dim()) * c(self.ln_z_env, 0.0);
        let s = linops::von_neumann_entropy(joint)?;
        Ok(-s - trace_product(joint.matrix(), &ln_product).re)
    }

    pub fn reduced_system(&self, joint: &DensityMatrix) -> Result<DensityMatrix> {
        Ok(linops::partial_trace(joint, &self.dims, 0)?)
    }
}

/// Joint state at time `t` starting from `ρ_S0 ⊗ ρ_E^eq`.
pub fn finite_bath_evolve(
    spec: &FiniteBathSpec,
    omega0: f64,
    rho_s0: &DensityMatrix,
    t: f64,
) -> Result<DensityMatrix> {
    let oracle = FiniteBathOracle::new(spec.clone(), omega0)?;
    oracle.propagate(&oracle.initial_state(rho_s0)?, t)
}

/// Global quantities evaluated directly on the joint state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointQuantities {
    pub t: f64,
    pub rho_s: [[C64; 2]; 2],
    /// `⟨H_E⟩_0 - ⟨H_E⟩_t`.
    pub q_gl: f64,
    /// `ΔS_S - β Q_gl`.
    pub sigma_gl: f64,
    /// `D(ρ_SE(t) ‖ ρ_S(t) ⊗ ρ_E^eq)`.
    pub sigma_gl_relent: f64,
    pub interaction_energy: f64,
    /// `Δ⟨H_S⟩ + Δ⟨H_E⟩ + Δ⟨H_I⟩`.
    pub energy_drift: f64,
    pub purity: f64,
}

/// Evaluates the global bookkeeping along joint states `series[k]` at `times[k]`.
pub fn global_quantities_from_joint(
    oracle: &FiniteBathOracle,
    times: &[f64],
    series: &[DensityMatrix],
) -> Result<Vec<JointQuantities>> {
    if times.len() != series.len() || series.is_empty() {
        return Err(OracleError::InvalidSpec(
            "one joint state per time is required".into(),
        ));
    }
    let energy =
        |h: &HermitianMatrix, rho: &DensityMatrix| trace_product(h.matrix(), rho.matrix()).re;
    let first = &series[0];
    let s0 = linops::von_neumann_entropy(&oracle.reduced_system(first)?)?;
    let (hs0, he0, hi0) = (
        energy(&oracle.h_s, first),
        energy(&oracle.h_e, first),
        energy(&oracle.h_i, first),
    );
    let beta = oracle.spec.beta;
    times
        .iter()
        .zip(series)
        .map(|(&t, rho)| {
            let rho_s = oracle.reduced_system(rho)?;
            let s = linops::von_neumann_entropy(&rho_s)?;
            let (hs, he, hi) = (
                energy(&oracle.h_s, rho),
                energy(&oracle.h_e, rho),
                energy(&oracle.h_i, rho),
            );
            let q_gl = he0 - he;
            let relent = oracle.relative_entropy_to_product(rho, &rho_s)?;
            let m = rho_s.matrix();
            Ok(JointQuantities {
                t,
                rho_s: [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]],
                q_gl,
                sigma_gl: (s - s0) - beta * q_gl,
                sigma_gl_relent: relent,
                interaction_energy: hi - hi0,
                energy_drift: (hs - hs0) + (he - he0) + (hi - hi0),
                purity: rho.purity(),
            })
        })
        .collect()
}

/// Side-by-side comparison of the mode-sum formulas with the joint evolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleRow {
    pub t: f64,
    pub coherence_analytic: f64,
    pub coherence_exact: f64,
    pub interaction_analytic: f64,
    pub interaction_exact: f64,
    pub q_gl_analytic: f64,
    pub q_gl_exact: f64,
    pub sigma_gl_analytic: f64,
    pub sigma_gl_exact: f64,
    pub sigma_gl_relent: f64,
    pub energy_drift: f64,
    pub population_drift: f64,
}

impl OracleRow {
    pub const COLUMNS: [&'static str; 12] = [
        "t",
        "coherence_analytic",
        "coherence_exact",
        "H_I_analytic",
        "H_I_exact",
        "Q_gl_analytic",
        "Q_gl_exact",
        "Sigma_gl_analytic",
        "Sigma_gl_exact",
        "Sigma_gl_relent",
        "energy_drift",
        "population_drift",
    ];

    pub fn values(&self) -> [f64; 12] {
        [
            self.t,
            self.coherence_analytic,
            self.coherence_exact,
            self.interaction_analytic,
            self.interaction_exact,
            self.q_gl_analytic,
            self.q_gl_exact,
            self.sigma_gl_analytic,
            self.sigma_gl_exact,
            self.sigma_gl_relent,
            self.energy_drift,
            self.population_drift,
        ]
    }
}

/// Largest deviations over a comparison run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OracleSummary {
    pub coherence: f64,
    pub interaction_energy: f64,
    pub q_gl: f64,
    pub sigma_gl_analytic: f64,
    pub sigma_gl_clausius_vs_relent: f64,
    pub energy_conservation: f64,
    pub min_sigma_gl_relent: f64,
}

impl OracleSummary {
    /// `(name, deviation)` pairs in report order.
    pub fn checks(&self) -> [(&'static str, f64); 6] {
        [
            ("coherence magnitude", self.coherence),
            ("interaction energy", self.interaction_energy),
            ("Q_gl", self.q_gl),
            ("Sigma_gl analytic vs exact", self.sigma_gl_analytic),
            (
                "Sigma_gl Clausius vs relative entropy",
                self.sigma_gl_clausius_vs_relent,
            ),
            ("energy conservation", self.energy_conservation),
        ]
    }

    /// All deviations within `tol` and `Sigma_gl_relent` nonnegative up to
    /// [`RELENT_FLOOR`].
    pub fn passes(&self, tol: f64) -> bool {
        self.checks().iter().all(|(_, d)| *d <= tol) && self.min_sigma_gl_relent >= -RELENT_FLOOR
    }
}

/// Runs the exact evolution and the mode-sum formulas on `times`.
pub fn compare(
    oracle: &FiniteBathOracle,
    rho_s0: &DensityMatrix,
    times: &[f64],
) -> Result<(Vec<OracleRow>, OracleSummary)> {
    let initial = oracle.initial_state(rho_s0)?;
    let series = times
        .iter()
        .map(|&t| oracle.propagate(&initial, t))
        .collect::<Result<Vec<_>>>()?;
    let joint = global_quantities_from_joint(oracle, times, &series)?;
    let beta = oracle.spec.beta;
    let s0 = linops::von_neumann_entropy(rho_s0)?;
    let c0 = rho_s0.matrix()[(0, 1)].norm();
    let p0 = rho_s0.matrix()[(1, 1)].re;
    let mut summary = OracleSummary {
        min_sigma_gl_relent: f64::INFINITY,
        ..OracleSummary::default()
    };
    let mut rows = Vec::with_capacity(times.len());
    for q in &joint {
        let (eta, h_i) = analytic_finite_bath(&oracle.spec.modes, beta, q.t);
        let analytic = crate::dephasing::state_from_eta(rho_s0, oracle.omega0, q.t, eta)
            .map_err(|e| OracleError::InvalidSpec(e.to_string()))?;
        let s = linops::von_neumann_entropy(&analytic)?;
        let row = OracleRow {
            t: q.t,
            coherence_analytic: c0 * (-eta).exp(),
            coherence_exact: q.rho_s[0][1].norm(),
            interaction_analytic: h_i,
            interaction_exact: q.interaction_energy,
            q_gl_analytic: h_i,
            q_gl_exact: q.q_gl,
            sigma_gl_analytic: (s - s0) - beta * h_i,
            sigma_gl_exact: q.sigma_gl,
            sigma_gl_relent: q.sigma_gl_relent,
            energy_drift: q.energy_drift,
            population_drift: (q.rho_s[1][1].re - p0).abs(),
        };
        summary.coherence = summary
            .coherence
            .max((row.coherence_analytic - row.coherence_exact).abs());
        summary.interaction_energy = summary
            .interaction_energy
            .max((row.interaction_analytic - row.interaction_exact).abs());
        summary.q_gl = summary.q_gl.max((row.q_gl_analytic - row.q_gl_exact).abs());
        summary.sigma_gl_analytic = summary
            .sigma_gl_analytic
            .max((row.sigma_gl_analytic - row.sigma_gl_exact).abs());
        summary.sigma_gl_clausius_vs_relent = summary
            .sigma_gl_clausius_vs_relent
            .max((row.sigma_gl_exact - row.sigma_gl_relent).abs());
        summary.energy_conservation = summary.energy_conservation.max(row.energy_drift.abs());
        summary.min_sigma_gl_relent = summary.min_sigma_gl_relent.min(row.sigma_gl_relent);
        rows.push(row);
    }
    Ok((rows, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{self, TemperatureSpec};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn default_spec() -> FiniteBathSpec {
        FiniteBathSpec::new(
            vec![
                BathMode {
                    omega: 2.5,
                    g: r(0.25),
                },
                BathMode {
                    omega: 1.5,
                    g: r(0.2),
                },
            ],
            8,
            2.0,
        )
        .unwrap()
    }

    #[test]
    fn gauss_legendre_rules() {
        let (x, w) = gauss_legendre(1);
        assert_eq!((x[0], w[0]), (0.0, 2.0));
        for n in [2, 5, 16, 64] {
            let (x, w) = gauss_legendre(n);
            assert_relative_eq!(w.iter().sum::<f64>(), 2.0, max_relative = 1e-14);
            let deg = 2 * n - 2;
            let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert_relative_eq!(integral, 2.0 / (deg as f64 + 1.0), max_relative = 1e-13);
            assert!(x.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn single_mode_discretization() {
        let j = SpectralDensitySpec::ohmic(1.0, 1.0).unwrap();
        let modes = discretize_spectral_density(&j, 1, 4.0).unwrap();
        assert_eq!(modes[0].omega, 2.0);
        assert_relative_eq!(modes[0].g.norm_sqr(), j.j(2.0) * 4.0, max_relative = 1e-15);
    }

    #[test]
    fn zeroth_moment_of_discretization() {
        let j = SpectralDensitySpec::ohmic(1.0, 1.0).unwrap();
        let modes = discretize_spectral_density(&j, 64, 30.0).unwrap();
        let total: f64 = modes.iter().map(|m| m.g.norm_sqr()).sum();
        assert_relative_eq!(total, 1.0, max_relative = 1e-10);
    }

    #[test]
    fn mode_sum_converges_to_continuum() {
        let j = SpectralDensitySpec::ohmic(1.0, 1.0).unwrap();
        let temp = TemperatureSpec::finite(1.0).unwrap();
        let modes = discretize_spectral_density(&j, 64, 30.0).unwrap();
        let (eta_k, _) = analytic_finite_bath(&modes, 1.0, 1.0);
        let eta = spectral::decoherence_eta(&j, &temp, 1.0).unwrap();
        assert_relative_eq!(eta_k, eta, max_relative = 1e-4);
    }

    #[test]
    fn single_mode_closed_forms() {
        let modes = [BathMode {
            omega: 1.0,
            g: r(0.5),
        }];
        let (eta, h_i) = analytic_finite_bath(&modes, 2.0, std::f64::consts::PI);
        assert_relative_eq!(eta, 1.0 / 1.0f64.tanh(), max_relative = 1e-14);
        assert_relative_eq!(h_i, -1.0, max_relative = 1e-14);
        assert_eq!(analytic_finite_bath(&modes, 2.0, 0.0), (0.0, 0.0));
    }

    #[test]
    fn spec_validation() {
        let hot = FiniteBathSpec::new(
            vec![BathMode {
                omega: 1.0,
                g: r(0.1),
            }],
            2,
            0.2,
        );
        assert!(matches!(hot, Err(OracleError::ThermalTail { .. })));
        assert!(FiniteBathSpec::new(vec![], 8, 2.0).is_err());
        assert!(FiniteBathSpec::new(
            vec![BathMode {
                omega: -1.0,
                g: r(0.1)
            }],
            8,
            2.0
        )
        .is_err());
        let spec = default_spec();
        assert_eq!(spec.modes()[0].omega, 1.5);
        assert_eq!(spec.joint_dim(), Some(128));
    }

    #[test]
    fn dimension_guard() {
        let modes = vec![
            BathMode {
                omega: 5.0,
                g: r(0.1)
            };
            4
        ];
        let spec = FiniteBathSpec::new(modes, 12, 2.0).unwrap();
        assert!(matches!(
            FiniteBathOracle::new(spec, 1.0),
            Err(OracleError::DimensionGuard { dim: 41472 })
        ));
    }

    #[test]
    fn initial_state_is_product() {
        let oracle = FiniteBathOracle::new(default_spec(), 1.0).unwrap();
        let rho_s0 = DensityMatrix::qubit(0.75, r(0.25)).unwrap();
        let joint = finite_bath_evolve(oracle.spec(), 1.0, &rho_s0, 0.0).unwrap();
        let expected = rho_s0.tensor(oracle.bath_gibbs());
        assert!(linops::max_abs_diff(joint.matrix(), expected.matrix()) < 1e-12);
        let reduced = oracle.reduced_system(&joint).unwrap();
        assert!(linops::max_abs_diff(reduced.matrix(), rho_s0.matrix()) < 1e-12);
    }

    #[test]
    fn diagonal_system_state_is_stationary() {
        let oracle = FiniteBathOracle::new(default_spec(), 1.0).unwrap();
        let rho_s0 = DensityMatrix::diagonal(&[0.3, 0.7]).unwrap();
        let initial = oracle.initial_state(&rho_s0).unwrap();
        for t in [0.7, 3.0, 9.0] {
            let reduced = oracle
                .reduced_system(&oracle.propagate(&initial, t).unwrap())
                .unwrap();
            assert!(linops::max_abs_diff(reduced.matrix(), rho_s0.matrix()) < 1e-10);
        }
    }

    #[test]
    fn joint_bookkeeping_identities() {
        let oracle = FiniteBathOracle::new(default_spec(), 1.0).unwrap();
        let rho_s0 = DensityMatrix::qubit(0.75, r(0.25)).unwrap();
        let times: Vec<f64> = (0..=8).map(|k| k as f64 * 1.25).collect();
        let (rows, summary) = compare(&oracle, &rho_s0, &times).unwrap();
        assert_eq!(rows[0].q_gl_exact, 0.0);
        assert_abs_diff_eq!(rows[0].sigma_gl_relent, 0.0, epsilon = 1e-12);
        assert!(summary.interaction_energy < 1e-6);
        assert!(summary.energy_conservation < 1e-9);
        assert!(summary.sigma_gl_clausius_vs_relent < 1e-6);
        assert!(summary.min_sigma_gl_relent >= -RELENT_FLOOR);
        for row in &rows {
            assert_abs_diff_eq!(row.q_gl_exact, row.interaction_exact, epsilon = 1e-9);
            assert!(row.population_drift < 1e-10);
        }
    }

    #[test]
    fn purity_is_conserved() {
        let oracle = FiniteBathOracle::new(default_spec(), 1.0).unwrap();
        let rho_s0 = DensityMatrix::qubit(0.6, c(0.2, 0.1)).unwrap();
        let initial = oracle.initial_state(&rho_s0).unwrap();
        let p0 = initial.purity();
        for t in [1.0, 4.0] {
            assert_abs_diff_eq!(
                oracle.propagate(&initial, t).unwrap().purity(),
                p0,
                epsilon = 1e-10
            );
        }
    }
}
