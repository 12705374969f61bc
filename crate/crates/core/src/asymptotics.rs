//! Short-maturity formulas under the moving log-strike
//! `k_t = theta sqrt(t log(1/t))`: price approximations, the implied
//! volatility expansion, its explicit form for tempered stable jumps, the
//! limiting smile and the at-the-money stable limit.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bs::{bs_call, bs_put};
use crate::error::{Error, Result};
use crate::levy::JumpActivityConstants;
use crate::special::gamma;

fn check_short_maturity(t: f64) -> Result<()> {
    if t > 0.0 && t < (-1.0f64).exp() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("maturity must lie in (0, 1/e), got {t}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MovingStrike {
    pub theta: f64,
    pub t: f64,
    pub k_t: f64,
}

pub fn moving_strike(theta: f64, t: f64) -> Result<MovingStrike> {
    check_short_maturity(t)?;
    if theta == 0.0 || !theta.is_finite() {
        return Err(Error::InvalidInput(format!("theta must be non-zero and finite, got {theta}")));
    }
    let k_t = theta * (t * (-t.ln())).sqrt();
    Ok(MovingStrike { theta, t, k_t })
}

fn check_strike_and_alpha(k: f64, alpha: f64, c_tail: f64) -> Result<()> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidInput(format!("strike distance must be positive, got {k}")));
    }
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::InvalidInput(format!("alpha must lie in (1, 2), got {alpha}")));
    }
    if !(c_tail >= 0.0 && c_tail.is_finite()) {
        return Err(Error::InvalidInput(format!("tail constant must be non-negative, got {c_tail}")));
    }
    Ok(())
}

/// `bs_call(t, k, sigma) + t k^(1-alpha) c_tail / (alpha - 1)` for an
/// infinite-variation positive side.
pub fn infvar_call_approx(t: f64, k: f64, sigma: f64, alpha_plus: f64, c_plus_tail: f64) -> Result<f64> {
    check_strike_and_alpha(k, alpha_plus, c_plus_tail)?;
    let jump = t * k.powf(1.0 - alpha_plus) * c_plus_tail / (alpha_plus - 1.0);
    Ok(bs_call(t, k, sigma)? + jump)
}

/// Put struck at log-strike `-k`:
/// `E[(e^-k - e^(sigma W_t - sigma^2 t/2))^+] + t k^(1-alpha) c_tail / (alpha - 1)`.
pub fn infvar_put_approx(t: f64, k: f64, sigma: f64, alpha_minus: f64, c_minus_tail: f64) -> Result<f64> {
    check_strike_and_alpha(k, alpha_minus, c_minus_tail)?;
    let jump = t * k.powf(1.0 - alpha_minus) * c_minus_tail / (alpha_minus - 1.0);
    Ok(bs_put(t, -k, sigma)? + jump)
}

fn check_gamma(g: f64) -> Result<()> {
    if g >= 0.0 && g.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("finite-variation integral must be finite and >= 0, got {g}")))
    }
}

/// `bs_call(t, k, sigma) + t gamma_plus`.
pub fn finvar_call_approx(t: f64, k: f64, sigma: f64, gamma_plus: f64) -> Result<f64> {
    check_gamma(gamma_plus)?;
    Ok(bs_call(t, k, sigma)? + t * gamma_plus)
}

/// Put at log-strike `-k` plus `t gamma_minus`.
pub fn finvar_put_approx(t: f64, k: f64, sigma: f64, gamma_minus: f64) -> Result<f64> {
    check_gamma(gamma_minus)?;
    Ok(bs_put(t, -k, sigma)? + t * gamma_minus)
}

/// `J_t(x) = log x / log t - log log(1/t) / log(1/t)`.
pub fn j_t(t: f64, x: f64) -> Result<f64> {
    check_short_maturity(t)?;
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::InvalidInput(format!("J_t needs a positive argument, got {x}")));
    }
    let l = -t.ln();
    Ok(x.ln() / t.ln() - l.ln() / l)
}

/// Implied volatility at `k_t` read off from a price through `L = J_t(price)`.
pub fn implied_vol_from_price_expansion(t: f64, theta: f64, price: f64) -> Result<f64> {
    if theta == 0.0 || !theta.is_finite() {
        return Err(Error::InvalidInput(format!("theta must be non-zero and finite, got {theta}")));
    }
    let l = j_t(t, price)?;
    let m = 2.0 * l - 1.0;
    if m <= 0.0 {
        return Err(Error::ExpansionOutsideDomain(m));
    }
    let a = theta.abs();
    let m32 = m.powf(1.5);
    Ok(a / m.sqrt() + a * (m32 * (2.0 * PI).sqrt() / a).ln() / (m32 * -t.ln()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    JumpDominated,
    DiffusionDominated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmileExpansion {
    pub strike: MovingStrike,
    /// Price approximation at `k_t` on the relevant wing (call for
    /// `theta > 0`, put otherwise).
    pub approx_price: f64,
    /// `L_t(theta)`, i.e. `J_t` of `approx_price`.
    pub l_value: f64,
    pub branch: Branch,
    /// `I` (infinite variation) or `F` (finite variation) correction.
    pub correction: f64,
    pub sigma_t: f64,
    pub sigma_0: f64,
}

#[derive(Debug, Clone, Copy)]
enum Wing {
    InfVar { alpha: f64, c_tail: f64 },
    FinVar { gamma: f64 },
}

impl Wing {
    fn of(theta: f64, activity: &JumpActivityConstants) -> Wing {
        let (alpha, c_tail, g) = if theta > 0.0 {
            (activity.alpha_plus, activity.c_plus_tail, activity.gamma_plus)
        } else {
            (activity.alpha_minus, activity.c_minus_tail, activity.gamma_minus)
        };
        if alpha > 1.0 {
            Wing::InfVar { alpha, c_tail }
        } else {
            Wing::FinVar { gamma: g.unwrap_or(0.0) }
        }
    }

    fn active(&self) -> bool {
        match *self {
            Wing::InfVar { c_tail, .. } => c_tail > 0.0,
            Wing::FinVar { gamma } => gamma > 0.0,
        }
    }

    /// Wing slope of the limiting smile.
    fn slope(&self) -> f64 {
        match *self {
            Wing::InfVar { alpha, .. } => 1.0 / (2.0 - alpha).sqrt(),
            Wing::FinVar { .. } => 1.0,
        }
    }

    /// Smallest `|theta|` at which the jumps take over from the diffusion.
    fn threshold(&self, sigma: f64) -> f64 {
        sigma / self.slope()
    }
}

/// Explicit implied-volatility expansion at the moving strike for the
/// wing selected by `sign(theta)`.
pub fn corollary_expansion(
    t: f64,
    theta: f64,
    sigma: f64,
    activity: &JumpActivityConstants,
) -> Result<SmileExpansion> {
    let strike = moving_strike(theta, t)?;
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidInput(format!("sigma must be >= 0, got {sigma}")));
    }
    let wing = Wing::of(theta, activity);
    if !wing.active() {
        return Err(Error::UncoveredCase(format!(
            "no jump activity on the {} wing",
            if theta > 0.0 { "call" } else { "put" }
        )));
    }
    let a = theta.abs();
    let k = a * (t * -t.ln()).sqrt();
    let log_inv = -t.ln();
    let loglog = log_inv.ln() / log_inv;
    let (approx_price, correction) = match wing {
        Wing::InfVar { alpha, c_tail } => {
            let price = if theta > 0.0 {
                infvar_call_approx(t, k, sigma, alpha, c_tail)?
            } else {
                infvar_put_approx(t, k, sigma, alpha, c_tail)?
            };
            let inner = (2.0 - alpha).powf(1.5) * c_tail * (2.0 * PI).sqrt() / (a.powf(alpha) * (alpha - 1.0));
            let i = (3.0 - alpha) / (2.0 * (2.0 - alpha)) * loglog + inner.ln() / ((2.0 - alpha) * log_inv);
            (price, i)
        }
        Wing::FinVar { gamma } => {
            let price = if theta > 0.0 {
                finvar_call_approx(t, k, sigma, gamma)?
            } else {
                finvar_put_approx(t, k, sigma, gamma)?
            };
            let f = loglog + (gamma * (2.0 * PI).sqrt() / a).ln() / log_inv;
            (price, f)
        }
    };
    let slope = wing.slope();
    let jump_level = a * slope;
    let (branch, sigma_t) = if a >= wing.threshold(sigma) {
        (Branch::JumpDominated, jump_level * (1.0 + correction))
    } else {
        (Branch::DiffusionDominated, sigma)
    };
    Ok(SmileExpansion {
        strike,
        approx_price,
        l_value: j_t(t, approx_price)?,
        branch,
        correction,
        sigma_t,
        sigma_0: jump_level.max(sigma),
    })
}

/// Limiting smile `max{-theta/sqrt(1-(a_- - 1)^+), sigma, theta/sqrt(1-(a_+ - 1)^+)}`.
/// A wing without jump activity contributes nothing.
pub fn limit_smile(theta: f64, sigma: f64, activity: &JumpActivityConstants) -> Result<f64> {
    if theta == 0.0 || !theta.is_finite() {
        return Err(Error::InvalidInput(format!("theta must be non-zero and finite, got {theta}")));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidInput(format!("sigma must be >= 0, got {sigma}")));
    }
    let wing = Wing::of(theta, activity);
    if wing.active() {
        Ok((theta.abs() * wing.slope()).max(sigma))
    } else if sigma > 0.0 {
        Ok(sigma)
    } else {
        Err(Error::UncoveredCase("neither jumps on this wing nor diffusion".into()))
    }
}

fn check_stable_inputs(c: f64, alpha: f64) -> Result<()> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::InvalidInput(format!("alpha must lie in (1, 2), got {alpha}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidInput(format!("c must be positive, got {c}")));
    }
    Ok(())
}

/// `(2c)^(1/a) / pi * Gamma(1 - 1/a) * (-Gamma(a) cos(pi a / 2))^(1/a)`.
///
/// Note: this is the constant as usually quoted. For the symmetric stable
/// law with Lévy density `c / |x|^(1+a)` the mean of the positive part is
/// [`stable_positive_part_mean`], which carries `Gamma(-a)` in place of
/// `Gamma(a)` and is larger by the factor `(Gamma(-a)/Gamma(a))^(1/a)`
/// (about 1.92 at `a = 1.5`). Fourier prices converge to the latter.
pub fn atm_stable_constant(c: f64, alpha: f64) -> Result<f64> {
    check_stable_inputs(c, alpha)?;
    let inner = -gamma(alpha)? * (PI * alpha / 2.0).cos();
    Ok((2.0 * c).powf(1.0 / alpha) / PI * gamma(1.0 - 1.0 / alpha)? * inner.powf(1.0 / alpha))
}

/// `t^(1/a) * atm_stable_constant(c, a)`.
pub fn atm_price_approx(t: f64, c: f64, alpha: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("maturity must be positive, got {t}")));
    }
    Ok(t.powf(1.0 / alpha) * atm_stable_constant(c, alpha)?)
}

/// `E[Z^+]` for the symmetric stable `Z` with Lévy density `c / |x|^(1+a)`:
/// `Gamma(1 - 1/a) s / pi` with scale `s^a = -2 c Gamma(-a) cos(pi a / 2)`.
pub fn stable_positive_part_mean(c: f64, alpha: f64) -> Result<f64> {
    check_stable_inputs(c, alpha)?;
    let scale = (-2.0 * c * gamma(-alpha)? * (PI * alpha / 2.0).cos()).powf(1.0 / alpha);
    Ok(gamma(1.0 - 1.0 / alpha)? * scale / PI)
}
