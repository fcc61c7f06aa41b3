//! Globally adaptive 21-point Gauss–Kronrod quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error(
        "quadrature did not converge after {intervals} intervals (last estimate {last:e}, previous {previous:e}, error {error:e})"
    )]
    NonConvergence {
        last: f64,
        previous: f64,
        error: f64,
        intervals: usize,
    },
    #[error("integrand is not finite at x = {x}")]
    NonFinite { x: f64 },
    #[error("invalid quadrature input: {0}")]
    InvalidInput(String),
}

/// Value and estimated absolute error of a quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Upper bound on the number of subintervals beyond the initial breakpoints.
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 0.0,
            max_intervals: 4000,
        }
    }
}

impl QuadOptions {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One 21-point Kronrod evaluation with the QUADPACK error heuristic.
fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<Panel, QuadError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    let fc = f(center);
    if !fc.is_finite() {
        return Err(QuadError::NonFinite { x: center });
    }
    let mut resk = fc * WGK[10];
    let mut resg = 0.0;
    let mut resabs = fc.abs() * WGK[10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let (x1, x2) = (center - dx, center + dx);
        let (f1, f2) = (f(x1), f(x2));
        if !f1.is_finite() {
            return Err(QuadError::NonFinite { x: x1 });
        }
        if !f2.is_finite() {
            return Err(QuadError::NonFinite { x: x2 });
        }
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * resk;
    let mut resasc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = resk * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut error = ((resk - resg) * half).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * resabs);
    }
    Ok(Panel {
        a,
        b,
        value,
        error,
        abs: resabs,
    })
}

/// Integrates `f` over `[breakpoints[0], breakpoints[last]]`.
///
/// Every gap between consecutive breakpoints starts as its own interval; the
/// interval with the largest error estimate is bisected until the summed
/// error drops below `max(abs_tol, rel_tol·|I|, rel_tol·1e-3·∫|f|)`.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    breakpoints: &[f64],
    opts: &QuadOptions,
) -> Result<Estimate, QuadError> {
    if breakpoints.len() < 2 {
        return Err(QuadError::InvalidInput(
            "at least two breakpoints are required".into(),
        ));
    }
    if breakpoints.windows(2).any(|w| !(w[1] > w[0])) || breakpoints.iter().any(|x| !x.is_finite())
    {
        return Err(QuadError::InvalidInput(
            "breakpoints must be finite and strictly increasing".into(),
        ));
    }
    if !(opts.rel_tol > 0.0) && !(opts.abs_tol > 0.0) {
        return Err(QuadError::InvalidInput(
            "a positive tolerance is required".into(),
        ));
    }

    let mut heap = BinaryHeap::with_capacity(breakpoints.len() + 64);
    let (mut value, mut error, mut abs) = (0.0, 0.0, 0.0);
    for w in breakpoints.windows(2) {
        let p = gk21(&mut f, w[0], w[1])?;
        value += p.value;
        error += p.error;
        abs += p.abs;
        heap.push(p);
    }
    let initial = heap.len();
    let mut previous = value;
    let target = |value: f64, abs: f64| {
        opts.abs_tol
            .max(opts.rel_tol * value.abs())
            .max(opts.rel_tol * 1e-3 * abs)
    };

    while error > target(value, abs) {
        if heap.len() >= initial + opts.max_intervals {
            return Err(QuadError::NonConvergence {
                last: value,
                previous,
                error,
                intervals: heap.len(),
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // Interval has shrunk to machine resolution; nothing left to gain.
            heap.push(worst);
            return Err(QuadError::NonConvergence {
                last: value,
                previous,
                error,
                intervals: heap.len(),
            });
        }
        let left = gk21(&mut f, worst.a, mid)?;
        let right = gk21(&mut f, mid, worst.b)?;
        previous = value;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        abs += left.abs + right.abs - worst.abs;
        heap.push(left);
        heap.push(right);
    }

    let intervals = heap.len();
    let mut panels = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let value = panels.iter().map(|p| p.value).sum();
    let error = panels.iter().map(|p| p.error).sum();
    Ok(Estimate {
        value,
        error,
        intervals,
    })
}

/// `∫₀^∞ f(x) dx` via the substitution `x = u/(1-u)`.
///
/// `f` must decay fast enough for the transformed integrand to vanish at
/// `u → 1`; the Kronrod nodes never touch the endpoint itself.
pub fn quad_semiinfinite<F: FnMut(f64) -> f64>(mut f: F, tol: f64) -> Result<f64, QuadError> {
    if !(tol > 0.0) {
        return Err(QuadError::InvalidInput("tolerance must be positive".into()));
    }
    let g = |u: f64| {
        let s = 1.0 - u;
        let x = u / s;
        let fx = f(x);
        if fx == 0.0 {
            0.0
        } else {
            fx / (s * s)
        }
    };
    let opts = QuadOptions {
        rel_tol: tol,
        abs_tol: 0.0,
        max_intervals: 4000,
    };
    integrate(g, &[0.0, 0.25, 0.5, 0.75, 1.0], &opts).map(|e| e.value)
}
