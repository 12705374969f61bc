//! Globally adaptive Gauss-Kronrod (7/15) quadrature for real and complex
//! integrands.
//!
//! The integration range is cut into caller-supplied panels; the panel with
//! the largest error estimate is bisected until the summed estimate meets
//! `max(rel_tol * |I|, abs_tol)`. Panels are refined in a fixed order so the
//! result is bit-for-bit reproducible.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Tolerances and damping shared by the quadrature and the Fourier pricer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Fourier damping `R`; `None` selects the default rule.
    #[serde(default)]
    pub damping: Option<f64>,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_subdivisions: 2000,
            damping: None,
        }
    }
}

impl QuadratureConfig {
    pub fn with_damping(mut self, damping: f64) -> Self {
        self.damping = Some(damping);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.rel_tol >= 0.0 && self.abs_tol >= 0.0) || (self.rel_tol == 0.0 && self.abs_tol == 0.0)
        {
            return Err(Error::InvalidInput(
                "quadrature tolerances must be non-negative and not both zero".into(),
            ));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::InvalidInput("max_subdivisions must be positive".into()));
        }
        Ok(())
    }
}

/// Integral value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
    pub subdivisions: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Finite(f64, f64),
    /// The whole real line, truncated symmetrically where `|f|` has decayed.
    RealLine,
}

/// Values the integrator can accumulate.
pub trait Integrand: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl Integrand for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Integrand for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
    /// error estimate is already at the rounding floor; bisection cannot help
    saturated: bool,
    order: usize,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.order.cmp(&self.order))
    }
}

fn gauss_kronrod_15<T, F>(f: &F, a: f64, b: f64, order: usize) -> Segment<T>
where
    T: Integrand,
    F: Fn(f64) -> T,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let abs_half = half.abs();

    let f_center = f(center);
    let mut kronrod = f_center * WGK[7];
    let mut gauss = f_center * WG[3];
    let mut res_abs = WGK[7] * f_center.magnitude();
    let mut samples = [(T::zero(), T::zero()); 7];

    for (j, sample) in samples.iter_mut().enumerate() {
        let dx = half * XGK[j];
        let lo = f(center - dx);
        let hi = f(center + dx);
        kronrod = kronrod + (lo + hi) * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + (lo + hi) * WG[j / 2];
        }
        res_abs += WGK[j] * (lo.magnitude() + hi.magnitude());
        *sample = (lo, hi);
    }

    let mean = kronrod * 0.5;
    let mut res_asc = WGK[7] * (f_center - mean).magnitude();
    for (j, (lo, hi)) in samples.iter().enumerate() {
        res_asc += WGK[j] * ((*lo - mean).magnitude() + (*hi - mean).magnitude());
    }

    let value = kronrod * half;
    res_abs *= abs_half;
    res_asc *= abs_half;
    let mut error = ((kronrod - gauss) * half).magnitude();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * res_abs;
    let mut saturated = false;
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) && error <= floor {
        error = floor;
        saturated = true;
    }
    Segment {
        a,
        b,
        value,
        error,
        saturated,
        order,
    }
}

/// Integrates `f` over consecutive panels `[p0,p1], [p1,p2], ...`.
pub fn integrate_panels<T, F>(f: F, breakpoints: &[f64], cfg: &QuadratureConfig) -> Result<Estimate<T>>
where
    T: Integrand,
    F: Fn(f64) -> T,
{
    cfg.validate()?;
    if breakpoints.len() < 2 {
        return Err(Error::InvalidInput("need at least two breakpoints".into()));
    }
    if breakpoints.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("breakpoints must be finite".into()));
    }

    let mut order = 0;
    let mut heap = BinaryHeap::new();
    for w in breakpoints.windows(2) {
        if w[0] == w[1] {
            continue;
        }
        heap.push(gauss_kronrod_15(&f, w[0], w[1], order));
        order += 1;
    }
    let mut frozen: Vec<Segment<T>> = Vec::new();
    let mut subdivisions = 0;

    loop {
        let (value, error) = totals(heap.iter().chain(frozen.iter()));
        let tol = (cfg.rel_tol * value.magnitude()).max(cfg.abs_tol);
        if error <= tol {
            return Ok(Estimate {
                value,
                error,
                subdivisions,
            });
        }
        if heap.is_empty() {
            // every panel sits at its rounding floor; fine unless the floor is
            // large against the value, which means cancellation
            if error <= 1e3 * f64::EPSILON * value.magnitude() {
                return Ok(Estimate {
                    value,
                    error,
                    subdivisions,
                });
            }
            return Err(Error::QuadratureNoConvergence {
                estimate: value.magnitude(),
                error,
            });
        }
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        let too_narrow = mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b);
        if worst.saturated || too_narrow {
            frozen.push(worst);
            continue;
        }
        if subdivisions >= cfg.max_subdivisions {
            return Err(Error::QuadratureNoConvergence {
                estimate: value.magnitude(),
                error,
            });
        }
        subdivisions += 1;
        heap.push(gauss_kronrod_15(&f, worst.a, mid, order));
        heap.push(gauss_kronrod_15(&f, mid, worst.b, order + 1));
        order += 2;
    }
}

fn totals<'a, T: Integrand + 'a>(segments: impl Iterator<Item = &'a Segment<T>>) -> (T, f64) {
    // sum in panel order so the result does not depend on heap layout
    let mut all: Vec<&Segment<T>> = segments.collect();
    all.sort_by(|x, y| x.a.total_cmp(&y.a));
    all.iter().fold((T::zero(), 0.0), |(v, e), s| (v + s.value, e + s.error))
}

/// Symmetric breakpoints `0, ±scale, ±2 scale, ±4 scale, ...` out to `±limit`.
pub fn geometric_breakpoints(scale: f64, limit: f64) -> Vec<f64> {
    let mut positive = Vec::new();
    let mut x = scale;
    while x < limit {
        positive.push(x);
        x *= 2.0;
    }
    positive.push(limit);
    let mut points: Vec<f64> = positive.iter().rev().map(|x| -x).collect();
    points.push(0.0);
    points.extend(positive);
    points
}

/// Integrates a real function over a finite interval or the real line.
pub fn adaptive_integrate<F>(f: F, domain: Domain, cfg: &QuadratureConfig) -> Result<Estimate<f64>>
where
    F: Fn(f64) -> f64,
{
    match domain {
        Domain::Finite(a, b) => integrate_panels(f, &[a, b], cfg),
        Domain::RealLine => {
            let limit = real_line_cutoff(&f, cfg.abs_tol)?;
            integrate_panels(f, &geometric_breakpoints(1.0, limit), cfg)
        }
    }
}

/// Smallest power-of-two `U` with `|f(x)| |x|` below `abs_tol / 2` at
/// `±U`, `±1.5U` and `±2U`; the integral is then taken over `[-2U, 2U]`.
fn real_line_cutoff<F: Fn(f64) -> f64>(f: &F, abs_tol: f64) -> Result<f64> {
    let small = |x: f64| (f(x).abs() * x.abs()) < 0.5 * abs_tol.max(f64::MIN_POSITIVE);
    let mut u = 1.0;
    while u < 1e12 {
        if [u, 1.5 * u, 2.0 * u].iter().all(|&x| small(x) && small(-x)) {
            return Ok(2.0 * u);
        }
        u *= 2.0;
    }
    Err(Error::QuadratureNoConvergence {
        estimate: f64::NAN,
        error: f64::INFINITY,
    })
}
