//! Black-Scholes prices in forward units (`S0 = 1`, zero rate), the small
//! time expansion along the moving strike, and implied volatility.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{normal_cdf, normal_pdf};

fn check_inputs(t: f64, k: f64, sigma: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("maturity must be positive, got {t}")));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidInput(format!("volatility must be non-negative, got {sigma}")));
    }
    if !k.is_finite() {
        return Err(Error::InvalidInput(format!("log-strike must be finite, got {k}")));
    }
    Ok(())
}

// Out-of-the-money legs evaluated directly so that small prices keep their
// relative accuracy; in-the-money prices add the intrinsic value on top.

fn otm_call(k: f64, s: f64) -> f64 {
    let d_plus = -k / s + 0.5 * s;
    let d_minus = d_plus - s;
    (normal_cdf(d_plus) - k.exp() * normal_cdf(d_minus)).max(0.0)
}

fn otm_put(k: f64, s: f64) -> f64 {
    let d_plus = -k / s + 0.5 * s;
    let d_minus = d_plus - s;
    (k.exp() * normal_cdf(-d_minus) - normal_cdf(-d_plus)).max(0.0)
}

/// `E[(e^{sigma W_t - sigma^2 t / 2} - e^k)^+]`. At `sigma = 0` this is the
/// intrinsic value `(1 - e^k)^+`.
pub fn bs_call(t: f64, k: f64, sigma: f64) -> Result<f64> {
    check_inputs(t, k, sigma)?;
    if sigma == 0.0 {
        return Ok((-k.exp_m1()).max(0.0));
    }
    let s = sigma * t.sqrt();
    Ok(if k >= 0.0 {
        otm_call(k, s)
    } else {
        -k.exp_m1() + otm_put(k, s)
    })
}

/// `E[(e^k - e^{sigma W_t - sigma^2 t / 2})^+]`.
pub fn bs_put(t: f64, k: f64, sigma: f64) -> Result<f64> {
    check_inputs(t, k, sigma)?;
    if sigma == 0.0 {
        return Ok(k.exp_m1().max(0.0));
    }
    let s = sigma * t.sqrt();
    Ok(if k <= 0.0 {
        otm_put(k, s)
    } else {
        k.exp_m1() + otm_call(k, s)
    })
}

pub fn bs_price(t: f64, k: f64, sigma: f64, is_call: bool) -> Result<f64> {
    if is_call {
        bs_call(t, k, sigma)
    } else {
        bs_put(t, k, sigma)
    }
}

/// d price / d sigma (identical for calls and puts).
pub fn bs_vega(t: f64, k: f64, sigma: f64) -> f64 {
    let s = sigma * t.sqrt();
    normal_pdf(-k / s + 0.5 * s) * t.sqrt()
}

/// `E[(sigma W_t - k)^+]`; at `sigma = 0` returns `(-k)^+`.
pub fn bachelier_call(t: f64, k: f64, sigma: f64) -> Result<f64> {
    check_inputs(t, k, sigma)?;
    if sigma == 0.0 {
        return Ok((-k).max(0.0));
    }
    let s = sigma * t.sqrt();
    let z = k / s;
    Ok(s * normal_pdf(z) - k * normal_cdf(-z))
}

/// Two-term expansion of the call price along `k_t = theta sqrt(t log 1/t)`:
///
/// ```text
/// sigma / sqrt(2 pi) t^(1/2 + theta^2 / (2 sigma^2))
///     [ (sigma/theta)^2 / log(1/t) - 3 (sigma/theta)^4 / log^2(1/t) ]
/// ```
///
/// Only the formula is evaluated; for `theta < 0` it describes the
/// out-of-the-money put leg.
pub fn bs_call_expansion(t: f64, theta: f64, sigma: f64) -> Result<f64> {
    if !(t > 0.0 && t < (-1.0f64).exp()) {
        return Err(Error::InvalidInput(format!("expansion needs t in (0, 1/e), got {t}")));
    }
    if theta == 0.0 || !theta.is_finite() {
        return Err(Error::InvalidInput("theta must be non-zero".into()));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidInput("sigma must be positive".into()));
    }
    let log_inv_t = -t.ln();
    let ratio = (sigma / theta).powi(2);
    let power = 0.5 + theta * theta / (2.0 * sigma * sigma);
    let bracket = ratio / log_inv_t - 3.0 * ratio * ratio / (log_inv_t * log_inv_t);
    Ok(sigma / (2.0 * PI).sqrt() * (power * t.ln()).exp() * bracket)
}

/// An option price quoted in forward units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionQuote {
    pub t: f64,
    pub k: f64,
    pub is_call: bool,
    pub price: f64,
}

impl OptionQuote {
    pub fn call(t: f64, k: f64, price: f64) -> Self {
        Self { t, k, is_call: true, price }
    }

    pub fn put(t: f64, k: f64, price: f64) -> Self {
        Self { t, k, is_call: false, price }
    }

    /// Open interval of prices for which an implied volatility exists.
    pub fn arbitrage_bounds(&self) -> (f64, f64) {
        if self.is_call {
            ((-self.k.exp_m1()).max(0.0), 1.0)
        } else {
            (self.k.exp_m1().max(0.0), self.k.exp())
        }
    }
}

const MAX_ITERATIONS: usize = 200;

/// Inverts the Black-Scholes price.
///
/// Bisection on `[1e-8, 5]` (widened if the price lies outside that range)
/// down to a bracket of width 1e-4, then safeguarded Newton on the log of the
/// out-of-the-money price until the step falls below 1e-12 relative.
pub fn implied_vol(quote: &OptionQuote) -> Result<f64> {
    let OptionQuote { t, k, price, .. } = *quote;
    check_inputs(t, k, 0.0)?;
    let (lower, upper) = quote.arbitrage_bounds();
    if !(price > lower && price < upper) {
        return Err(Error::PriceOutOfBounds { price, lower, upper });
    }
    // by parity the time value of either option is the out-of-the-money price
    let target = price - lower;
    let otm = |sigma: f64| -> f64 {
        let s = sigma * t.sqrt();
        if k >= 0.0 {
            otm_call(k, s)
        } else {
            otm_put(k, s)
        }
    };

    let mut lo = 1e-8;
    let mut hi = 5.0;
    let mut iterations = 0;
    while otm(hi) < target {
        hi *= 2.0;
        iterations += 1;
        if iterations > MAX_ITERATIONS || !hi.is_finite() {
            return Err(Error::NoConvergence { iterations });
        }
    }
    while otm(lo) > target {
        lo *= 0.1;
        iterations += 1;
        if iterations > MAX_ITERATIONS || lo == 0.0 {
            return Err(Error::NoConvergence { iterations });
        }
    }

    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        if otm(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
        if iterations > MAX_ITERATIONS {
            return Err(Error::NoConvergence { iterations });
        }
    }

    let log_target = target.ln();
    let mut sigma = 0.5 * (lo + hi);
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let p = otm(sigma);
        if p <= 0.0 {
            // underflowed: fall back to a bisection step
            lo = sigma;
            sigma = 0.5 * (lo + hi);
            continue;
        }
        if p < target {
            lo = sigma;
        } else {
            hi = sigma;
        }
        let step = (p.ln() - log_target) * p / bs_vega(t, k, sigma);
        let mut next = sigma - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - sigma).abs() <= 1e-12 * sigma || hi - lo <= 1e-15 * sigma {
            return Ok(next);
        }
        sigma = next;
    }
    Err(Error::NoConvergence { iterations })
}
