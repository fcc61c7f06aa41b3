//! The exactly solvable qubit dephasing model.
//!
//! Basis convention: index 0 is the `σ_z = -1` state and index 1 the
//! `σ_z = +1` state, so `H_S = (ω₀/2) σ_z = diag(-ω₀/2, ω₀/2)` and the
//! coherence `ρ⁰¹ = ⟨0|ρ|1⟩` rotates as `e^{iω₀t}`.

use log::debug;
use nalgebra::DVector;
use thiserror::Error;

use crate::linops::{
    self, c, hermitize, CMatrix, DensityMatrix, HermitianMatrix, LinalgError, StateTolerance, C64,
};
use crate::liouville::{
    build_superoperator, devectorize, vectorize, LindbladTerm, LiouvilleError, Superoperator,
};
use crate::spectral::{
    self, Kernel, QuadOptions, SpectralDensitySpec, SpectralError, TemperatureSpec,
};

/// Most negative eigenvalue tolerated after an integrator step.
pub const POSITIVITY_DRIFT_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DephasingError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Liouville(#[from] LiouvilleError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),
    #[error("the dephasing model needs a qubit state, got dimension {0}")]
    NotQubit(usize),
    #[error(
        "integration drift at t = {t}: eigenvalue {eigenvalue:e} below -{POSITIVITY_DRIFT_TOL:e}; try a smaller step"
    )]
    IntegrationDrift { t: f64, eigenvalue: f64 },
}

pub type Result<T> = std::result::Result<T, DephasingError>;

/// Qubit frequency plus bath description.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub omega0: f64,
    pub spectral: SpectralDensitySpec,
    pub temperature: TemperatureSpec,
}

impl ModelParams {
    pub fn new(
        omega0: f64,
        spectral: SpectralDensitySpec,
        temperature: TemperatureSpec,
    ) -> Result<Self> {
        if !omega0.is_finite() {
            return Err(DephasingError::InvalidParameter(format!(
                "omega0 must be finite, got {omega0}"
            )));
        }
        Ok(Self {
            omega0,
            spectral,
            temperature,
        })
    }

    /// Ohmic bath at inverse temperature `beta`.
    pub fn ohmic(omega0: f64, alpha: f64, cutoff: f64, beta: f64) -> Result<Self> {
        Self::new(
            omega0,
            SpectralDensitySpec::ohmic(alpha, cutoff)?,
            TemperatureSpec::finite(beta)?,
        )
    }

    /// `H_S = (ω₀/2) σ_z`.
    pub fn system_hamiltonian(&self) -> HermitianMatrix {
        system_hamiltonian(self.omega0)
    }
}

pub fn system_hamiltonian(omega0: f64) -> HermitianMatrix {
    HermitianMatrix::from_real_diagonal(&[-0.5 * omega0, 0.5 * omega0])
}

/// Uniform grid `0, h, 2h, …, t_end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_end: f64,
    step: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, step: f64) -> Result<Self> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(DephasingError::InvalidGrid(format!(
                "t_end must be positive, got {t_end}"
            )));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(DephasingError::InvalidGrid(format!(
                "step must be positive, got {step}"
            )));
        }
        let ratio = t_end / step;
        let steps = ratio.round();
        if steps < 1.0 || (ratio - steps).abs() > 1e-9 * steps.max(1.0) {
            return Err(DephasingError::InvalidGrid(format!(
                "step {step} does not divide t_end {t_end}"
            )));
        }
        Ok(Self {
            t_end,
            step,
            steps: steps as usize,
        })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of steps; the grid has `steps + 1` points.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.t_end
        } else {
            k as f64 * self.step
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.time(k)).collect()
    }
}

fn check_qubit(rho: &DensityMatrix) -> Result<()> {
    if rho.dim() != 2 {
        return Err(DephasingError::NotQubit(rho.dim()));
    }
    Ok(())
}

/// State with unchanged populations and coherence `ρ⁰¹(0) e^{iω₀t} e^{-η}`.
pub fn state_from_eta(
    rho0: &DensityMatrix,
    omega0: f64,
    t: f64,
    eta: f64,
) -> Result<DensityMatrix> {
    check_qubit(rho0)?;
    let m0 = rho0.matrix();
    let coherence = m0[(0, 1)] * C64::from_polar((-eta).exp(), omega0 * t);
    let mut m = m0.clone();
    m[(0, 1)] = coherence;
    m[(1, 0)] = coherence.conj();
    Ok(DensityMatrix::new(m)?)
}

/// Exact reduced state at time `t`.
pub fn analytic_state(p: &ModelParams, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
    check_qubit(rho0)?;
    let eta = spectral::decoherence_eta(&p.spectral, &p.temperature, t)?;
    state_from_eta(rho0, p.omega0, t, eta)
}

/// Exact reduced states on every grid point.
pub fn analytic_trajectory(
    p: &ModelParams,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
) -> Result<Vec<(f64, DensityMatrix)>> {
    grid.times()
        .into_iter()
        .map(|t| analytic_state(p, rho0, t).map(|s| (t, s)))
        .collect()
}

/// `-i[(ω₀/2)σ_z, ·] + Γ (σ_z · σ_z - ·)`.
pub fn generator_with_rate(omega0: f64, gamma: f64) -> Result<Superoperator> {
    Ok(build_superoperator(
        &system_hamiltonian(omega0),
        &[LindbladTerm::new(
            gamma,
            HermitianMatrix::sigma_z().into_matrix(),
        )],
    )?)
}

/// Exact time-local generator with the rate `Γ(t)`.
pub fn exact_generator(p: &ModelParams, t: f64) -> Result<Superoperator> {
    let gamma = spectral::rate_gamma(&p.spectral, &p.temperature, t)?;
    generator_with_rate(p.omega0, gamma)
}

/// `Γ` and `Γ̇` sampled on a uniform grid, interpolated by cubic Hermite splines.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    step: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl RateTable {
    pub fn new(p: &ModelParams, grid: &TimeGrid) -> Result<Self> {
        let opts = QuadOptions::with_rel_tol(spectral::DEFAULT_TOL);
        let mut values = Vec::with_capacity(grid.steps() + 1);
        let mut slopes = Vec::with_capacity(grid.steps() + 1);
        for t in grid.times() {
            let g =
                spectral::spectral_integral(&p.spectral, &p.temperature, Kernel::Gamma, t, &opts)?;
            let d = spectral::spectral_integral(
                &p.spectral,
                &p.temperature,
                Kernel::GammaDerivative,
                t,
                &opts,
            )?;
            values.push(g.value);
            slopes.push(d.value);
        }
        Ok(Self {
            step: grid.step(),
            values,
            slopes,
        })
    }

    pub fn node_values(&self) -> &[f64] {
        &self.values
    }

    /// Interpolated `Γ(t)`; `t` is clamped to the tabulated range.
    pub fn eval(&self, t: f64) -> f64 {
        let last = self.values.len() - 1;
        let x = (t / self.step).clamp(0.0, last as f64);
        let k = (x.floor() as usize).min(last.saturating_sub(1));
        if last == 0 {
            return self.values[0];
        }
        let s = x - k as f64;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.values[k]
            + h10 * self.step * self.slopes[k]
            + h01 * self.values[k + 1]
            + h11 * self.step * self.slopes[k + 1]
    }
}

/// Output of [`integrate_tcl`].
#[derive(Debug, Clone)]
pub struct TclTrajectory {
    pub points: Vec<(f64, DensityMatrix)>,
    /// Largest `|Tr ρ - 1|` removed by renormalization over all steps.
    pub max_trace_drift: f64,
    /// Largest `max|ρ - ρ†|` removed by Hermitization over all steps.
    pub max_hermiticity_drift: f64,
}

impl TclTrajectory {
    pub fn states(&self) -> impl Iterator<Item = &DensityMatrix> {
        self.points.iter().map(|(_, s)| s)
    }
}

/// Classic fourth-order Runge–Kutta on the vectorized state.
///
/// The generator is evaluated at `t`, `t + h/2` and `t + h`; the end-point
/// evaluation is reused for the next step. After each step the state is
/// Hermitized and trace-normalized, and an eigenvalue below
/// [`POSITIVITY_DRIFT_TOL`] aborts the integration.
pub fn integrate_tcl<G>(
    mut generator: G,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
) -> Result<TclTrajectory>
where
    G: FnMut(f64) -> Result<Superoperator>,
{
    let n = rho0.dim();
    let h = grid.step();
    let tolerance = StateTolerance {
        hermitian: 1e-8,
        trace: 1e-8,
        positivity: POSITIVITY_DRIFT_TOL,
    };
    let mut points = Vec::with_capacity(grid.steps() + 1);
    points.push((0.0, rho0.clone()));
    let mut v: DVector<C64> = vectorize(rho0.matrix());
    let mut l_start = generator(0.0)?;
    if l_start.dim() != n {
        return Err(LiouvilleError::DimensionMismatch {
            expected: n,
            found: l_start.dim(),
        }
        .into());
    }
    let (mut max_trace_drift, mut max_hermiticity_drift) = (0.0f64, 0.0f64);
    let half = c(0.5 * h, 0.0);
    let full = c(h, 0.0);
    for k in 0..grid.steps() {
        let t = grid.time(k);
        let t_next = grid.time(k + 1);
        let l_mid = generator(t + 0.5 * h)?;
        let l_end = generator(t_next)?;
        let k1 = l_start.matrix() * &v;
        let k2 = l_mid.matrix() * (&v + &k1 * half);
        let k3 = l_mid.matrix() * (&v + &k2 * half);
        let k4 = l_end.matrix() * (&v + &k3 * full);
        v += (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * c(h / 6.0, 0.0);

        let raw = devectorize(&v, n);
        let herm_drift = linops::hermitian_deviation(&raw);
        let trace = raw.trace();
        let trace_drift = (trace - c(1.0, 0.0)).norm();
        max_trace_drift = max_trace_drift.max(trace_drift);
        max_hermiticity_drift = max_hermiticity_drift.max(herm_drift);
        if trace_drift > 1e-12 || herm_drift > 1e-12 {
            debug!("t = {t_next}: trace drift {trace_drift:e}, hermiticity drift {herm_drift:e}");
        }
        let fixed: CMatrix = hermitize(&raw).unscale(trace.re);
        let state = match DensityMatrix::with_tolerance(fixed, tolerance) {
            Ok(s) => s,
            Err(LinalgError::NegativeEigenvalue { value }) => {
                return Err(DephasingError::IntegrationDrift {
                    t: t_next,
                    eigenvalue: value,
                })
            }
            Err(e) => return Err(e.into()),
        };
        v = vectorize(state.matrix());
        points.push((t_next, state));
        l_start = l_end;
    }
    Ok(TclTrajectory {
        points,
        max_trace_drift,
        max_hermiticity_drift,
    })
}

/// Integrates the exact master equation of the model with a tabulated rate.
pub fn integrate_model(
    p: &ModelParams,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
) -> Result<TclTrajectory> {
    check_qubit(rho0)?;
    let table = RateTable::new(p, grid)?;
    integrate_tcl(|t| generator_with_rate(p.omega0, table.eval(t)), rho0, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{identity, max_abs, max_abs_diff, r};
    use crate::liouville::{dephasing_coefficients, effective_hamiltonian};
    use approx::assert_abs_diff_eq;

    fn fig1_state() -> DensityMatrix {
        DensityMatrix::qubit(0.75, r(0.25)).unwrap()
    }

    fn fig1_params() -> ModelParams {
        ModelParams::ohmic(1.0, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn grid_validation() {
        let g = TimeGrid::new(10.0, 1e-3).unwrap();
        assert_eq!(g.steps(), 10_000);
        assert_eq!(g.time(g.steps()), 10.0);
        assert!(TimeGrid::new(1.0, 0.3).is_err());
        assert!(TimeGrid::new(0.0, 0.1).is_err());
        assert!(TimeGrid::new(1.0, -0.1).is_err());
    }

    #[test]
    fn diagonal_state_is_stationary() {
        let rho0 = DensityMatrix::diagonal(&[0.4, 0.6]).unwrap();
        let s = analytic_state(&fig1_params(), &rho0, 3.0).unwrap();
        assert_eq!(s.matrix(), rho0.matrix());
    }

    #[test]
    fn initial_state_returned_at_zero() {
        let s = analytic_state(&fig1_params(), &fig1_state(), 0.0).unwrap();
        assert!(max_abs_diff(s.matrix(), fig1_state().matrix()) < 1e-16);
    }

    #[test]
    fn coherence_magnitude_at_one() {
        let p = fig1_params();
        let eta = spectral::decoherence_eta(&p.spectral, &p.temperature, 1.0).unwrap();
        let s = analytic_state(&p, &fig1_state(), 1.0).unwrap();
        assert_abs_diff_eq!(
            s.matrix()[(0, 1)].norm(),
            0.25 * (-eta).exp(),
            epsilon = 1e-15
        );
        assert_eq!(s.matrix()[(1, 1)], fig1_state().matrix()[(1, 1)]);
    }

    #[test]
    fn exact_generator_structure() {
        let p = fig1_params();
        let l0 = exact_generator(&p, 0.0).unwrap();
        let commutator = build_superoperator(&p.system_hamiltonian(), &[]).unwrap();
        assert!(max_abs_diff(l0.matrix(), commutator.matrix()) < 1e-15);
        for t in [0.5, 2.0] {
            let l = exact_generator(&p, t).unwrap();
            let g = spectral::rate_gamma(&p.spectral, &p.temperature, t).unwrap();
            let coeffs = dephasing_coefficients(&l, &identity(2)).unwrap();
            let expected = c(-2.0 * g, p.omega0);
            assert_abs_diff_eq!(
                (coeffs.gamma()[(0, 1)] - expected).norm(),
                0.0,
                epsilon = 1e-13
            );
            let k = effective_hamiltonian(&l);
            assert!(max_abs_diff(k.matrix(), p.system_hamiltonian().matrix()) < 1e-13);
        }
    }

    #[test]
    fn zero_generator_keeps_state() {
        let grid = TimeGrid::new(1.0, 0.1).unwrap();
        let traj = integrate_tcl(|_| Ok(Superoperator::zero(2)), &fig1_state(), &grid).unwrap();
        assert_eq!(traj.points.len(), 11);
        for s in traj.states() {
            assert!(max_abs_diff(s.matrix(), fig1_state().matrix()) < 1e-15);
        }
    }

    #[test]
    fn commutator_generator_keeps_coherence_magnitude() {
        let grid = TimeGrid::new(10.0, 1e-2).unwrap();
        let traj = integrate_tcl(|_| generator_with_rate(1.0, 0.0), &fig1_state(), &grid).unwrap();
        for (t, s) in &traj.points {
            let z = s.matrix()[(0, 1)];
            assert_abs_diff_eq!(z.norm(), 0.25, epsilon = 1e-10);
            let phase = (z / c(0.25, 0.0)).arg();
            let expected = C64::from_polar(1.0, *t).arg();
            assert_abs_diff_eq!(phase, expected, epsilon = 1e-8);
        }
    }

    #[test]
    fn rate_table_interpolation_error() {
        let p = fig1_params();
        let grid = TimeGrid::new(3.0, 1e-2).unwrap();
        let table = RateTable::new(&p, &grid).unwrap();
        for k in 0..300 {
            let t = (k as f64 + 0.5) * 1e-2;
            let direct = spectral::rate_gamma(&p.spectral, &p.temperature, t).unwrap();
            assert_abs_diff_eq!(table.eval(t), direct, epsilon = 1e-9);
        }
        assert_eq!(table.eval(0.0), 0.0);
    }

    #[test]
    fn integrated_model_matches_analytic_solution() {
        let p = fig1_params();
        let rho0 = fig1_state();
        let grid = TimeGrid::new(3.0, 1e-2).unwrap();
        let traj = integrate_model(&p, &rho0, &grid).unwrap();
        for (t, s) in traj.points.iter().step_by(25) {
            let exact = analytic_state(&p, &rho0, *t).unwrap();
            assert!(max_abs_diff(s.matrix(), exact.matrix()) < 1e-8);
            assert_abs_diff_eq!(s.matrix()[(1, 1)].re, 0.75, epsilon = 1e-10);
        }
        assert!(traj.max_trace_drift < 1e-10);
        assert!(traj.max_hermiticity_drift < 1e-10);
    }

    #[test]
    fn strongly_negative_rate_breaks_positivity() {
        let grid = TimeGrid::new(5.0, 1e-2).unwrap();
        let err =
            integrate_tcl(|_| generator_with_rate(1.0, -1.0), &fig1_state(), &grid).unwrap_err();
        assert!(matches!(err, DephasingError::IntegrationDrift { .. }));
    }

    #[test]
    fn rejects_non_qubit() {
        let rho = DensityMatrix::maximally_mixed(3);
        assert!(matches!(
            analytic_state(&fig1_params(), &rho, 1.0),
            Err(DephasingError::NotQubit(3))
        ));
        assert!(max_abs(rho.matrix()) > 0.0);
    }
}
