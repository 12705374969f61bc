//! Single-strike option prices by damped Fourier inversion.
//!
//! With `x0 = log(K / S0)` and damping `R`,
//!
//! ```text
//! E[(S0 e^{X_t} - K)^+] = K / (2 pi) int (K/S0)^{iu-R} phi_t(-u-iR) / ((R-iu)(R-1-iu)) du
//! ```
//!
//! holds for `1 < R < lambda_plus`; the same expression with
//! `-lambda_minus < R < 0` yields the put. Returned call and put prices are
//! discounted by `e^{-rT}`. The linear payoff `E[(X_t - k)^+]` uses the
//! kernel `1 / (R - iu)^2` with `0 < R < lambda_plus`.
//!
//! The integration range is truncated where `|phi_t|` along the shifted
//! line has decayed enough that the discarded tails cannot exceed a tenth
//! of the absolute tolerance, then integrated adaptively on geometric
//! panels.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::levy::{LevyExponent, TemperedStableParams};
use crate::quadrature::{geometric_breakpoints, integrate_panels};

pub use crate::quadrature::QuadratureConfig;

/// Damping that minimises the integrand modulus at `u = 0`,
/// `t kappa(R) - R k - log|kernel|` with `kappa(R) = psi(-iR)` the cumulant
/// generating function. The objective is convex on each admissible
/// interval, so a golden-section search suffices. Far from this minimum
/// the integrand is exponentially large and the integral is pure cancellation.
fn optimal_damping(exponent: &LevyExponent, k: f64, t: f64, kernel: Kernel, lo: f64, hi: f64) -> f64 {
    let objective = |r: f64| -> f64 {
        let kappa = exponent.eval_unchecked(Complex64::new(0.0, -r)).re;
        t * kappa - r * k + kernel.eval(r, 0.0).norm().ln()
    };
    // stay clear of the endpoints, where kappa or the kernel is singular
    let width = hi - lo;
    let (mut a, mut b) = (lo + 1e-3 * width, hi - 1e-3 * width);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (objective(x1), objective(x2));
    for _ in 0..60 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = objective(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = objective(x2);
        }
    }
    0.5 * (a + b)
}

/// Upper end used when a side has no jumps and the strip is unbounded.
const UNBOUNDED_DAMPING: f64 = 1e3;

/// Call damping chosen by [`optimal_damping`] inside `(1, lambda_plus)`.
pub fn default_damping(model: &TemperedStableParams, k: f64, t: f64) -> Result<f64> {
    let exponent = LevyExponent::new(model)?;
    let hi = (-model.strip().0).min(UNBOUNDED_DAMPING);
    Ok(optimal_damping(&exponent, k, t, Kernel::Exponential, 1.0, hi))
}

/// Put damping chosen by [`optimal_damping`] inside `(-lambda_minus, 0)`.
pub fn default_put_damping(model: &TemperedStableParams, k: f64, t: f64) -> Result<f64> {
    let exponent = LevyExponent::new(model)?;
    let lo = (-model.strip().1).max(-UNBOUNDED_DAMPING);
    Ok(optimal_damping(&exponent, k, t, Kernel::Exponential, lo, 0.0))
}

fn check_damping(damping: f64, lower: f64, upper: f64) -> Result<f64> {
    if damping > lower && damping < upper && damping.is_finite() {
        Ok(damping)
    } else {
        Err(Error::DampingOutOfStrip {
            damping,
            lower,
            upper,
        })
    }
}

#[derive(Clone, Copy)]
enum Kernel {
    /// `(e^x - e^{x0})^+`
    Exponential,
    /// `(x - x0)^+`
    Linear,
}

impl Kernel {
    fn eval(self, damping: f64, u: f64) -> Complex64 {
        let a = Complex64::new(damping, -u);
        match self {
            Kernel::Exponential => (a * (a - 1.0)).inv(),
            Kernel::Linear => (a * a).inv(),
        }
    }
}

/// `(1 / 2 pi) int e^{(iu-R) x0} phi_t(-u-iR) kernel(u) du`, real part.
fn fourier_integral(
    exponent: &LevyExponent,
    t: f64,
    x0: f64,
    damping: f64,
    kernel: Kernel,
    abs_tol: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let integrand = |u: f64| -> Complex64 {
        let z = Complex64::new(-u, -damping);
        let phase = Complex64::new(-damping * x0, u * x0);
        (exponent.eval_unchecked(z) * t + phase).exp() * kernel.eval(damping, u)
    };
    // |e^{(iu-R)x0}| = e^{-R x0}; the tail beyond U is bounded by U * envelope(U)
    // once |phi_t| is decreasing, on each side
    let envelope = |u: f64| -> f64 {
        let z = Complex64::new(-u, -damping);
        (t * exponent.eval_unchecked(z).re - damping * x0).exp() * kernel.eval(damping, u).norm()
    };
    let tail_budget = 0.1 * abs_tol * 2.0 * PI;
    let mut limit = 16.0;
    loop {
        let tail = 2.0 * limit * envelope(limit).max(envelope(1.5 * limit)).max(envelope(2.0 * limit));
        if tail < tail_budget {
            limit *= 2.0;
            break;
        }
        limit *= 2.0;
        if limit > 1e13 {
            return Err(Error::QuadratureNoConvergence {
                estimate: f64::NAN,
                error: tail / (2.0 * PI),
            });
        }
    }

    let local = QuadratureConfig {
        abs_tol: abs_tol * 2.0 * PI,
        ..*cfg
    };
    let est = integrate_panels(integrand, &geometric_breakpoints(1.0, limit), &local)?;
    let value = est.value / (2.0 * PI);
    let residue_bound = (1e-9 * value.re.abs()).max(est.error + local.abs_tol);
    if value.im.abs() > residue_bound {
        return Err(Error::QuadratureNoConvergence {
            estimate: value.re,
            error: value.im.abs(),
        });
    }
    Ok(value.re)
}

fn check_contract(s0: f64, strike: f64, t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("maturity must be positive, got {t}")));
    }
    if !(s0 > 0.0 && s0.is_finite()) || !(strike > 0.0 && strike.is_finite()) {
        return Err(Error::InvalidInput("spot and strike must be positive".into()));
    }
    Ok(())
}

/// Undiscounted `E[(e^{X_t} - e^k)^+]` with `S0 = 1`, using a damping in
/// `(1, lambda_plus)` (call representation) or `(-lambda_minus, 0)` (put
/// representation plus parity).
fn forward_exponential(
    exponent: &LevyExponent,
    model: &TemperedStableParams,
    k: f64,
    t: f64,
    damping: f64,
    abs_tol: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let v = k.exp() * fourier_integral(exponent, t, k, damping, Kernel::Exponential, abs_tol * (-k).exp(), cfg)?;
    if damping > 1.0 {
        Ok(v)
    } else {
        // put representation: call = put + E[e^X] - e^k
        Ok(v + (model.r * t).exp() - k.exp())
    }
}

fn call_damping(model: &TemperedStableParams, k: f64, t: f64, cfg: &QuadratureConfig) -> Result<f64> {
    // phi_t(-u - iR) needs -R inside the strip
    let (strip_lo, strip_hi) = model.strip();
    match cfg.damping {
        None => default_damping(model, k, t),
        Some(r) if r < 0.0 => check_damping(r, -strip_hi, 0.0),
        Some(r) => check_damping(r, 1.0, -strip_lo),
    }
}

fn put_damping(model: &TemperedStableParams, k: f64, t: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let (_, strip_hi) = model.strip();
    match cfg.damping {
        None => default_put_damping(model, k, t),
        Some(r) if r < 0.0 => check_damping(r, -strip_hi, 0.0),
        Some(_) => call_damping(model, k, t, cfg),
    }
}

/// Undiscounted forward call `E[(e^{X_t} - e^k)^+]`.
pub fn forward_call(model: &TemperedStableParams, k: f64, t: f64, cfg: &QuadratureConfig) -> Result<f64> {
    check_contract(1.0, k.exp(), t)?;
    let exponent = LevyExponent::new(model)?;
    let damping = call_damping(model, k, t, cfg)?;
    forward_exponential(&exponent, model, k, t, damping, cfg.abs_tol, cfg)
}

/// Undiscounted forward put `E[(e^k - e^{X_t})^+]`.
pub fn forward_put(model: &TemperedStableParams, k: f64, t: f64, cfg: &QuadratureConfig) -> Result<f64> {
    check_contract(1.0, k.exp(), t)?;
    let exponent = LevyExponent::new(model)?;
    let damping = put_damping(model, k, t, cfg)?;
    let v = k.exp() * fourier_integral(&exponent, t, k, damping, Kernel::Exponential, cfg.abs_tol * (-k).exp(), cfg)?;
    if damping < 0.0 {
        Ok(v)
    } else {
        Ok(v - (model.r * t).exp() + k.exp())
    }
}

/// Discounted European call on `S0 e^{X_T}` struck at `K`.
pub fn price_call_fourier(
    model: &TemperedStableParams,
    s0: f64,
    strike: f64,
    t: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    check_contract(s0, strike, t)?;
    let exponent = LevyExponent::new(model)?;
    let k = (strike / s0).ln();
    let damping = call_damping(model, k, t, cfg)?;
    let scale = s0 * (-model.r * t).exp();
    Ok(scale * forward_exponential(&exponent, model, k, t, damping, cfg.abs_tol / scale, cfg)?)
}

/// Discounted European put. By default the put is integrated directly with
/// a negative damping; a positive `cfg.damping` routes it through the call
/// and put-call parity instead.
pub fn price_put_fourier(
    model: &TemperedStableParams,
    s0: f64,
    strike: f64,
    t: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    check_contract(s0, strike, t)?;
    let scale = s0 * (-model.r * t).exp();
    let k = (strike / s0).ln();
    let local = QuadratureConfig {
        abs_tol: cfg.abs_tol / scale,
        ..*cfg
    };
    Ok(scale * forward_put(model, k, t, &local)?)
}

/// `E[(X_t - k)^+]` for the martingale-drifted log-price.
pub fn price_linear_call(model: &TemperedStableParams, k: f64, t: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) || !k.is_finite() {
        return Err(Error::InvalidInput("need t > 0 and finite k".into()));
    }
    let exponent = LevyExponent::new(model)?;
    let upper = (-model.strip().0).min(UNBOUNDED_DAMPING);
    let damping = match cfg.damping {
        None => optimal_damping(&exponent, k, t, Kernel::Linear, 0.0, upper),
        Some(r) => check_damping(r, 0.0, -model.strip().0)?,
    };
    fourier_integral(&exponent, t, k, damping, Kernel::Linear, cfg.abs_tol, cfg)
}

/// Undiscounted out-of-the-money forward price: call for `k > 0`, put for `k < 0`.
pub fn forward_otm(model: &TemperedStableParams, k: f64, t: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if k >= 0.0 {
        forward_call(model, k, t, cfg)
    } else {
        forward_put(model, k, t, cfg)
    }
}
