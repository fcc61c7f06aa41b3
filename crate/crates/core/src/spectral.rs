//! Spectral densities and the bath integrals of the dephasing model.
//!
//! With `w(ω) = J(ω)/ω` the three integrals are
//!
//! ```text
//! η(t)     = 2 ∫ w(ω) (1 - cos ωt)/ω · coth(βω/2) dω
//! Γ(t)     =   ∫ w(ω) sin(ωt)          · coth(βω/2) dω
//! ⟨H_I⟩_t  = -2 ∫ w(ω) (1 - cos ωt)                 dω
//! ```
//!
//! All integrands are evaluated in forms that stay finite and cancellation
//! free as `ω → 0`: `(1 - cos ωt)/ω = (t²ω/2) sinc²(ωt/2)` and
//! `ω coth(βω/2) = (2/β) x coth x` with `x = βω/2`.

pub mod quadrature;

use std::io::Read;
use std::path::Path;

use thiserror::Error;

pub use quadrature::{quad_semiinfinite, Estimate, QuadError, QuadOptions};

/// Default relative tolerance of every spectral integral.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Above this value of `t · ω_c` the integration range is split at the zeros of `sin(ωt)`.
pub const OSCILLATORY_THRESHOLD: f64 = 10.0;
const TRUNCATION_SAFETY: f64 = 15.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported combination: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("spectral density table: {0}")]
    Table(String),
}

pub type Result<T> = std::result::Result<T, SpectralError>;

/// Bath temperature; `Zero` replaces `coth(βω/2)` by one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TemperatureSpec {
    Finite { beta: f64 },
    Zero,
}

impl TemperatureSpec {
    pub fn finite(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(SpectralError::InvalidParameter(format!(
                "beta must be positive and finite, got {beta}"
            )));
        }
        Ok(Self::Finite { beta })
    }

    pub fn beta(&self) -> Option<f64> {
        match *self {
            Self::Finite { beta } => Some(beta),
            Self::Zero => None,
        }
    }

    /// `coth(βω/2)`, or 1 at zero temperature.
    pub fn coth(&self, omega: f64) -> f64 {
        match *self {
            Self::Finite { beta } => 1.0 / (0.5 * beta * omega).tanh(),
            Self::Zero => 1.0,
        }
    }

    /// `ω coth(βω/2)` without the `ω → 0` cancellation.
    fn omega_coth(&self, omega: f64) -> f64 {
        match *self {
            Self::Finite { beta } => 2.0 / beta * xcoth(0.5 * beta * omega),
            Self::Zero => omega,
        }
    }
}

/// `x coth x`, continuous through `x = 0`.
pub fn xcoth(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 + x * x / 3.0
    } else {
        x / x.tanh()
    }
}

/// `sin x / x`, continuous through `x = 0`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Ohmic density with exponential cutoff, `J(ω) = α ω e^{-ω/Ω}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OhmicSpec {
    pub alpha: f64,
    pub cutoff: f64,
}

/// Piecewise-linear `J(ω)` on a grid; zero outside the sampled range.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedDensity {
    omega: Vec<f64>,
    j: Vec<f64>,
}

impl TabulatedDensity {
    pub fn new(omega: Vec<f64>, j: Vec<f64>) -> Result<Self> {
        if omega.len() != j.len() {
            return Err(SpectralError::Table(format!(
                "{} frequencies but {} values",
                omega.len(),
                j.len()
            )));
        }
        if omega.len() < 2 {
            return Err(SpectralError::Table("need at least two samples".into()));
        }
        if omega.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(SpectralError::Table(
                "frequencies must be finite and nonnegative".into(),
            ));
        }
        if omega.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SpectralError::Table(
                "frequencies must be strictly increasing".into(),
            ));
        }
        if let Some(bad) = j.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(SpectralError::Table(format!(
                "J({}) = {} is negative or not finite",
                omega[bad], j[bad]
            )));
        }
        Ok(Self { omega, j })
    }

    /// Parses a CSV with header `omega,J`.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| SpectralError::Table(e.to_string()))?
            .clone();
        if headers.len() != 2 || &headers[0] != "omega" || &headers[1] != "J" {
            return Err(SpectralError::Table(format!(
                "expected header `omega,J`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let (mut omega, mut j) = (Vec::new(), Vec::new());
        for (line, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| SpectralError::Table(e.to_string()))?;
            let parse = |k: usize| {
                record[k].parse::<f64>().map_err(|e| {
                    SpectralError::Table(format!("row {}: `{}`: {e}", line + 2, &record[k]))
                })
            };
            omega.push(parse(0)?);
            j.push(parse(1)?);
        }
        Self::new(omega, j)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())
            .map_err(|e| SpectralError::Table(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_csv(file)
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn values(&self) -> &[f64] {
        &self.j
    }

    pub fn eval(&self, w: f64) -> f64 {
        let n = self.omega.len();
        if w < self.omega[0] || w > self.omega[n - 1] {
            return 0.0;
        }
        let k = self.omega.partition_point(|x| *x <= w).clamp(1, n - 1);
        let (w0, w1) = (self.omega[k - 1], self.omega[k]);
        let s = (w - w0) / (w1 - w0);
        self.j[k - 1] * (1.0 - s) + self.j[k] * s
    }

    /// Exact moments `(∫J, ∫ωJ)` of the interpolant.
    fn moments(&self) -> (f64, f64) {
        self.omega
            .windows(2)
            .zip(self.j.windows(2))
            .fold((0.0, 0.0), |(m0, m1), (w, j)| {
                let (a, b) = (w[0], w[1]);
                let h = b - a;
                (
                    m0 + 0.5 * h * (j[0] + j[1]),
                    m1 + h / 6.0 * (2.0 * a * j[0] + a * j[1] + b * j[0] + 2.0 * b * j[1]),
                )
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpectralDensitySpec {
    Ohmic(OhmicSpec),
    Tabulated(TabulatedDensity),
}

impl SpectralDensitySpec {
    pub fn ohmic(alpha: f64, cutoff: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(SpectralError::InvalidParameter(format!(
                "alpha must be nonnegative, got {alpha}"
            )));
        }
        if !(cutoff > 0.0 && cutoff.is_finite()) {
            return Err(SpectralError::InvalidParameter(format!(
                "cutoff must be positive, got {cutoff}"
            )));
        }
        Ok(Self::Ohmic(OhmicSpec { alpha, cutoff }))
    }

    pub fn tabulated(omega: Vec<f64>, j: Vec<f64>) -> Result<Self> {
        TabulatedDensity::new(omega, j).map(Self::Tabulated)
    }

    pub fn j(&self, w: f64) -> f64 {
        match self {
            Self::Ohmic(o) => o.alpha * w * (-w / o.cutoff).exp(),
            Self::Tabulated(t) => t.eval(w),
        }
    }

    /// `J(ω)/ω`.
    pub fn reduced(&self, w: f64) -> f64 {
        match self {
            Self::Ohmic(o) => o.alpha * (-w / o.cutoff).exp(),
            Self::Tabulated(t) => t.eval(w) / w,
        }
    }

    /// Frequency scale used to place breakpoints: `Ω`, or `∫ωJ / ∫J` for tables.
    pub fn characteristic_frequency(&self) -> f64 {
        match self {
            Self::Ohmic(o) => o.cutoff,
            Self::Tabulated(t) => {
                let (m0, m1) = t.moments();
                if m0 > 0.0 {
                    m1 / m0
                } else {
                    t.omega[t.omega.len() - 1]
                }
            }
        }
    }

    /// `∫₀^∞ J(ω) dω`.
    pub fn zeroth_moment(&self) -> f64 {
        match self {
            Self::Ohmic(o) => o.alpha * o.cutoff * o.cutoff,
            Self::Tabulated(t) => t.moments().0,
        }
    }

    /// Integration domain `[lo, hi]` for a relative tolerance.
    fn domain(&self, tol: f64) -> (f64, f64) {
        match self {
            Self::Ohmic(o) => (0.0, o.cutoff * ((1.0 / tol).ln() + TRUNCATION_SAFETY)),
            Self::Tabulated(t) => (t.omega[0], t.omega[t.omega.len() - 1]),
        }
    }
}

/// The frequency integrals available for a given spectral density.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    /// Decoherence function `η(t)`.
    Eta,
    /// Dephasing rate `Γ(t) = η̇/2`.
    Gamma,
    /// `Γ̇(t)`, used for Hermite interpolation of tabulated rates.
    GammaDerivative,
    /// `⟨H_I⟩_t`; temperature independent.
    InteractionEnergy,
}

impl Kernel {
    fn integrand(self, temp: &TemperatureSpec, t: f64, w: f64) -> f64 {
        match self {
            Kernel::Eta => {
                let s = sinc(0.5 * w * t);
                t * t * s * s * temp.omega_coth(w)
            }
            Kernel::Gamma => t * sinc(w * t) * temp.omega_coth(w),
            Kernel::GammaDerivative => (w * t).cos() * temp.omega_coth(w),
            Kernel::InteractionEnergy => {
                let s = (0.5 * w * t).sin();
                -4.0 * s * s
            }
        }
    }

    /// Bound on `∫_W^∞ |integrand|` for the Ohmic density.
    fn ohmic_tail(self, o: &OhmicSpec, temp: &TemperatureSpec, upper: f64) -> f64 {
        let e = (-upper / o.cutoff).exp();
        let mass = o.alpha * o.cutoff * e;
        let coth = temp.coth(upper);
        match self {
            Kernel::Eta => 4.0 * coth * mass / upper,
            Kernel::Gamma => coth * mass,
            Kernel::GammaDerivative => coth * o.alpha * o.cutoff * (upper + o.cutoff) * e,
            Kernel::InteractionEnergy => 4.0 * mass,
        }
    }
}

/// A spectral integral with its error budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralIntegral {
    pub value: f64,
    /// Quadrature error estimate on the truncated domain.
    pub error: f64,
    /// Upper bound on the neglected tail beyond the truncation frequency.
    pub tail_bound: f64,
    pub intervals: usize,
}

fn breakpoints(j: &SpectralDensitySpec, t: f64, lo: f64, hi: f64) -> Vec<f64> {
    let wc = j.characteristic_frequency();
    let mut points = vec![lo, hi];
    if t * wc > OSCILLATORY_THRESHOLD {
        let step = std::f64::consts::PI / t;
        let first = (lo / step).floor() as usize + 1;
        let last = (hi / step).ceil() as usize;
        points.extend((first..last).map(|k| k as f64 * step));
    } else {
        points.extend([wc, 4.0 * wc, 12.0 * wc]);
    }
    if let SpectralDensitySpec::Tabulated(tab) = j {
        points.extend_from_slice(&tab.omega);
    }
    points.retain(|p| *p >= lo && *p <= hi);
    points.sort_by(f64::total_cmp);
    points.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * hi);
    points
}

/// Evaluates one bath integral at time `t ≥ 0`.
pub fn spectral_integral(
    j: &SpectralDensitySpec,
    temp: &TemperatureSpec,
    kernel: Kernel,
    t: f64,
    opts: &QuadOptions,
) -> Result<SpectralIntegral> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(SpectralError::InvalidParameter(format!(
            "time must be finite and nonnegative, got {t}"
        )));
    }
    if !(opts.rel_tol > 0.0 && opts.rel_tol < 1.0) {
        return Err(SpectralError::InvalidParameter(format!(
            "relative tolerance must lie in (0, 1), got {}",
            opts.rel_tol
        )));
    }
    let (lo, hi) = j.domain(opts.rel_tol);
    let tail_bound = match j {
        SpectralDensitySpec::Ohmic(o) => kernel.ohmic_tail(o, temp, hi),
        SpectralDensitySpec::Tabulated(_) => 0.0,
    };
    let no_integral = (t == 0.0 && kernel != Kernel::GammaDerivative)
        || matches!(j, SpectralDensitySpec::Ohmic(o) if o.alpha == 0.0)
        || hi <= lo;
    if no_integral {
        return Ok(SpectralIntegral {
            value: 0.0,
            error: 0.0,
            tail_bound: 0.0,
            intervals: 0,
        });
    }
    let points = breakpoints(j, t, lo, hi);
    let f = |w: f64| j.reduced(w) * kernel.integrand(temp, t, w);
    let est = quadrature::integrate(f, &points, opts)?;
    log::trace!(
        "{kernel:?} t={t}: value {} error {:e} tail {:e} intervals {}",
        est.value,
        est.error,
        tail_bound,
        est.intervals
    );
    Ok(SpectralIntegral {
        value: est.value,
        error: est.error,
        tail_bound,
        intervals: est.intervals,
    })
}

fn value_of(
    j: &SpectralDensitySpec,
    temp: &TemperatureSpec,
    kernel: Kernel,
    t: f64,
) -> Result<f64> {
    spectral_integral(j, temp, kernel, t, &QuadOptions::with_rel_tol(DEFAULT_TOL)).map(|r| r.value)
}

/// Decoherence function `η(t)`.
pub fn decoherence_eta(j: &SpectralDensitySpec, temp: &TemperatureSpec, t: f64) -> Result<f64> {
    value_of(j, temp, Kernel::Eta, t)
}

/// Dephasing rate `Γ(t)`.
pub fn rate_gamma(j: &SpectralDensitySpec, temp: &TemperatureSpec, t: f64) -> Result<f64> {
    value_of(j, temp, Kernel::Gamma, t)
}

/// Time derivative `Γ̇(t)`.
pub fn rate_gamma_derivative(
    j: &SpectralDensitySpec,
    temp: &TemperatureSpec,
    t: f64,
) -> Result<f64> {
    value_of(j, temp, Kernel::GammaDerivative, t)
}

/// Interaction energy `⟨H_I⟩_t`.
pub fn interaction_energy(j: &SpectralDensitySpec, t: f64) -> Result<f64> {
    value_of(j, &TemperatureSpec::Zero, Kernel::InteractionEnergy, t)
}

/// Long-time Ohmic dephasing rate `απ/β`.
pub fn markov_rate(alpha: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(SpectralError::InvalidParameter(format!(
            "beta must be positive, got {beta}"
        )));
    }
    Ok(alpha * std::f64::consts::PI / beta)
}

/// `⟨H_I⟩_t = -2αΩ (Ωt)²/(1 + (Ωt)²)`.
pub fn ohmic_interaction_energy(alpha: f64, cutoff: f64, t: f64) -> f64 {
    let x = cutoff * t;
    -2.0 * alpha * cutoff * x * x / (1.0 + x * x)
}

/// Zero-temperature `η₀(t) = α ln(1 + Ω²t²)`.
pub fn ohmic_eta(alpha: f64, cutoff: f64, temp: &TemperatureSpec, t: f64) -> Result<f64> {
    match temp {
        TemperatureSpec::Zero => {
            let x = cutoff * t;
            Ok(alpha * (x * x).ln_1p())
        }
        TemperatureSpec::Finite { .. } => Err(SpectralError::Unsupported(
            "no closed form for the finite-temperature decoherence function".into(),
        )),
    }
}

/// Zero-temperature `Γ₀(t) = αΩ²t/(1 + Ω²t²)`.
pub fn ohmic_gamma(alpha: f64, cutoff: f64, temp: &TemperatureSpec, t: f64) -> Result<f64> {
    match temp {
        TemperatureSpec::Zero => {
            let x = cutoff * t;
            Ok(alpha * cutoff * x / (1.0 + x * x))
        }
        TemperatureSpec::Finite { .. } => Err(SpectralError::Unsupported(
            "no closed form for the finite-temperature dephasing rate".into(),
        )),
    }
}

/// Whichever Ohmic closed forms exist for the requested temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OhmicClosedForms {
    pub eta: Option<f64>,
    pub gamma: Option<f64>,
    pub interaction_energy: f64,
}

pub fn ohmic_closed_forms(
    alpha: f64,
    cutoff: f64,
    temp: &TemperatureSpec,
    t: f64,
) -> OhmicClosedForms {
    OhmicClosedForms {
        eta: ohmic_eta(alpha, cutoff, temp, t).ok(),
        gamma: ohmic_gamma(alpha, cutoff, temp, t).ok(),
        interaction_energy: ohmic_interaction_energy(alpha, cutoff, t),
    }
}
