//! Generalised tempered stable models with an optional Brownian part.
//!
//! The Lévy density is
//!
//! ```text
//! nu(x) = c+ exp(-lambda+ x) / x^(1+alpha+)          x > 0
//!       = c- exp(-lambda- |x|) / |x|^(1+alpha-)      x < 0
//! ```
//!
//! and the log-price drift is always the one that makes `exp(X_t - r t)` a
//! martingale. The triplet drift is quoted against the truncation function
//! `x 1{|x| <= 1}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_panels, QuadratureConfig};
use crate::special::gamma;

/// Model parameters. Construct with [`TemperedStableParams::new`] or parse
/// with [`TemperedStableParams::from_json`]; both validate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemperedStableParams {
    pub c_plus: f64,
    pub c_minus: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub alpha_plus: f64,
    pub alpha_minus: f64,
    pub sigma: f64,
    pub r: f64,
}

impl TemperedStableParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        c_plus: f64,
        c_minus: f64,
        lambda_plus: f64,
        lambda_minus: f64,
        alpha_plus: f64,
        alpha_minus: f64,
        sigma: f64,
        r: f64,
    ) -> Result<Self> {
        let m = Self {
            c_plus,
            c_minus,
            lambda_plus,
            lambda_minus,
            alpha_plus,
            alpha_minus,
            sigma,
            r,
        };
        m.validate()?;
        Ok(m)
    }

    /// Same jump law on both half-lines.
    pub fn symmetric(c: f64, lambda: f64, alpha: f64, sigma: f64, r: f64) -> Result<Self> {
        Self::new(c, c, lambda, lambda, alpha, alpha, sigma, r)
    }

    /// Black-Scholes dynamics. The tempering and stability fields are inert
    /// placeholders since both jump scales are zero.
    pub fn pure_diffusion(sigma: f64, r: f64) -> Result<Self> {
        Self::new(0.0, 0.0, 10.0, 10.0, 1.5, 1.5, sigma, r)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain struct serialises")
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.c_plus,
            self.c_minus,
            self.lambda_plus,
            self.lambda_minus,
            self.alpha_plus,
            self.alpha_minus,
            self.sigma,
            self.r,
        ];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("all parameters must be finite".into()));
        }
        if self.c_plus < 0.0 || self.c_minus < 0.0 {
            return Err(Error::InvalidModel("jump scales must be non-negative".into()));
        }
        if self.sigma < 0.0 {
            return Err(Error::InvalidModel("sigma must be non-negative".into()));
        }
        if self.lambda_plus <= 1.0 {
            return Err(Error::MomentConditionFailed(self.lambda_plus));
        }
        if self.lambda_minus <= 0.0 {
            return Err(Error::InvalidModel("lambda_minus must be positive".into()));
        }
        for (name, a) in [("alpha_plus", self.alpha_plus), ("alpha_minus", self.alpha_minus)] {
            if !(a > 0.0 && a < 2.0) {
                return Err(Error::InvalidModel(format!("{name} = {a} must lie in (0, 2)")));
            }
            if (a - 1.0).abs() < 1e-6 {
                return Err(Error::InvalidModel(format!(
                    "{name} = {a} is too close to 1 (log case not supported)"
                )));
            }
        }
        if self.c_plus == 0.0 && self.c_minus == 0.0 && self.sigma == 0.0 {
            return Err(Error::InvalidModel(
                "degenerate model: no jumps and no diffusion".into(),
            ));
        }
        Ok(())
    }

    pub fn has_jumps(&self) -> bool {
        self.c_plus > 0.0 || self.c_minus > 0.0
    }

    pub(crate) fn positive_side(&self) -> JumpSide {
        JumpSide {
            c: self.c_plus,
            lambda: self.lambda_plus,
            alpha: self.alpha_plus,
        }
    }

    pub(crate) fn negative_side(&self) -> JumpSide {
        JumpSide {
            c: self.c_minus,
            lambda: self.lambda_minus,
            alpha: self.alpha_minus,
        }
    }

    /// Lévy density at `x != 0`.
    pub fn levy_density(&self, x: f64) -> f64 {
        if x > 0.0 {
            self.positive_side().density(x)
        } else if x < 0.0 {
            self.negative_side().density(-x)
        } else {
            f64::INFINITY
        }
    }

    /// Open strip `(lower, upper)` of admissible `Im(u)` for `E[e^{iuX}]`.
    /// A side without jumps imposes no bound.
    pub fn strip(&self) -> (f64, f64) {
        let lower = if self.c_plus > 0.0 {
            -self.lambda_plus
        } else {
            f64::NEG_INFINITY
        };
        let upper = if self.c_minus > 0.0 {
            self.lambda_minus
        } else {
            f64::INFINITY
        };
        (lower, upper)
    }
}

/// One half-line of the jump measure, in "jump size magnitude" coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct JumpSide {
    pub c: f64,
    pub lambda: f64,
    pub alpha: f64,
}

impl JumpSide {
    pub fn density(&self, y: f64) -> f64 {
        if self.c == 0.0 {
            0.0
        } else {
            self.c * (-self.lambda * y).exp() / y.powf(1.0 + self.alpha)
        }
    }

    /// Cumulant of the side evaluated at `w = i u s`, where `s = +1` for the
    /// positive side and `-1` for the negative side:
    /// `c Gamma(-alpha) [(lambda - w)^alpha - lambda^alpha (+ w alpha lambda^(alpha-1))]`.
    /// The linear term is present only for infinite variation, where the
    /// small jumps have to be compensated.
    fn cumulant(&self, scale: f64, w: Complex64) -> Complex64 {
        if self.c == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let a = self.alpha;
        let l = self.lambda;
        let mut v = (Complex64::new(l, 0.0) - w).powf(a) - l.powf(a);
        if a > 1.0 {
            v += w * (a * l.powf(a - 1.0));
        }
        v * scale
    }
}

/// Lévy triplet `(sigma^2, nu, gamma)`; `gamma` always comes from
/// [`martingale_drift`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevyTriplet {
    pub sigma_sq: f64,
    pub jump_density: TemperedStableParams,
    pub gamma: f64,
}

impl LevyTriplet {
    pub fn of(model: &TemperedStableParams) -> Result<Self> {
        Ok(Self {
            sigma_sq: model.sigma * model.sigma,
            jump_density: *model,
            gamma: martingale_drift(model)?,
        })
    }
}

/// Precomputed characteristic exponent `psi` with `E[e^{iuX_t}] = e^{t psi(u)}`.
#[derive(Debug, Clone, Copy)]
pub struct LevyExponent {
    plus: JumpSide,
    minus: JumpSide,
    plus_scale: f64,
    minus_scale: f64,
    sigma_sq: f64,
    /// drift against fully compensated (alpha > 1) / uncompensated (alpha < 1) jumps
    drift: f64,
    strip: (f64, f64),
}

impl LevyExponent {
    pub fn new(model: &TemperedStableParams) -> Result<Self> {
        model.validate()?;
        let plus = model.positive_side();
        let minus = model.negative_side();
        let scale = |s: &JumpSide| -> Result<f64> {
            if s.c == 0.0 {
                Ok(0.0)
            } else {
                Ok(s.c * gamma(-s.alpha)?)
            }
        };
        let plus_scale = scale(&plus)?;
        let minus_scale = scale(&minus)?;
        let sigma_sq = model.sigma * model.sigma;
        let one = Complex64::new(1.0, 0.0);
        let jump_at_minus_i = plus.cumulant(plus_scale, one) + minus.cumulant(minus_scale, -one);
        let drift = model.r - 0.5 * sigma_sq - jump_at_minus_i.re;
        Ok(Self {
            plus,
            minus,
            plus_scale,
            minus_scale,
            sigma_sq,
            drift,
            strip: model.strip(),
        })
    }

    pub fn strip(&self) -> (f64, f64) {
        self.strip
    }

    /// `psi(u)` without the strip check (callers that have already checked).
    pub fn eval_unchecked(&self, u: Complex64) -> Complex64 {
        let iu = Complex64::i() * u;
        iu * self.drift - u * u * (0.5 * self.sigma_sq)
            + self.plus.cumulant(self.plus_scale, iu)
            + self.minus.cumulant(self.minus_scale, -iu)
    }

    pub fn eval(&self, u: Complex64) -> Result<Complex64> {
        let (lower, upper) = self.strip;
        if !(u.im > lower && u.im < upper) {
            return Err(Error::FrequencyOutOfStrip {
                re: u.re,
                im: u.im,
                lower,
                upper,
            });
        }
        Ok(self.eval_unchecked(u))
    }
}

/// `psi(u)`, the characteristic exponent of `X_1`.
pub fn characteristic_exponent(model: &TemperedStableParams, u: Complex64) -> Result<Complex64> {
    LevyExponent::new(model)?.eval(u)
}

/// Triplet drift (truncation `x 1{|x|<=1}`) making `psi(-i) = r`.
pub fn martingale_drift(model: &TemperedStableParams) -> Result<f64> {
    let exponent = LevyExponent::new(model)?;
    let mut gamma = exponent.drift;
    // positive side: jumps +y; negative side: jumps -y
    for (side, sign) in [(model.positive_side(), 1.0), (model.negative_side(), -1.0)] {
        if side.c == 0.0 {
            continue;
        }
        if side.alpha > 1.0 {
            // full compensation -> truncated: subtract int_{|x|>1} x nu(dx)
            gamma -= sign * side.c * large_jump_first_moment(side.lambda, side.alpha)?;
        } else {
            // no compensation -> truncated: add int_{|x|<=1} x nu(dx)
            gamma += sign * side.c * small_jump_first_moment(side.lambda, side.alpha)?;
        }
    }
    Ok(gamma)
}

fn moment_cfg() -> QuadratureConfig {
    QuadratureConfig {
        rel_tol: 1e-14,
        abs_tol: 1e-300,
        max_subdivisions: 500,
        damping: None,
    }
}

/// `int_1^inf y^-alpha e^{-lambda y} dy`
fn large_jump_first_moment(lambda: f64, alpha: f64) -> Result<f64> {
    let span = 45.0 / lambda;
    let breaks: Vec<f64> = (0..=16).map(|i| span * (i as f64 / 16.0).powi(2)).collect();
    let est = integrate_panels(
        |s: f64| (1.0 + s).powf(-alpha) * (-lambda * (1.0 + s)).exp(),
        &breaks,
        &moment_cfg(),
    )?;
    Ok(est.value)
}

/// `int_0^1 y^-alpha e^{-lambda y} dy` for `alpha < 1`, after `y = v^(1/(1-alpha))`.
fn small_jump_first_moment(lambda: f64, alpha: f64) -> Result<f64> {
    let p = 1.0 / (1.0 - alpha);
    let est = integrate_panels(
        |v: f64| (-lambda * v.powf(p)).exp() * p,
        &[0.0, 0.25, 0.5, 0.75, 1.0],
        &moment_cfg(),
    )?;
    Ok(est.value)
}

/// Small-jump activity constants of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpActivityConstants {
    pub alpha_plus: f64,
    pub alpha_minus: f64,
    /// `lim x^alpha+ nu((x, inf))` as `x -> 0`, equal to `c_plus / alpha_plus`.
    pub c_plus_tail: f64,
    pub c_minus_tail: f64,
    /// `int_(0,inf) (e^x - 1) nu(dx)`; `None` when the side has infinite variation.
    pub gamma_plus: Option<f64>,
    /// `int_(-inf,0) (1 - e^x) nu(dx)`; `None` when the side has infinite variation.
    pub gamma_minus: Option<f64>,
}

pub fn jump_activity_constants(model: &TemperedStableParams) -> Result<JumpActivityConstants> {
    model.validate()?;
    let tail = |s: JumpSide| if s.c == 0.0 { 0.0 } else { s.c / s.alpha };
    // side_sign = +1: (lambda - 1)^a - lambda^a ; -1: lambda^a - (lambda + 1)^a
    let fv_integral = |s: JumpSide, side_sign: f64| -> Result<Option<f64>> {
        if s.c == 0.0 {
            return Ok(Some(0.0));
        }
        if s.alpha > 1.0 {
            return Ok(None);
        }
        let a = s.alpha;
        let bracket = if side_sign > 0.0 {
            (s.lambda - 1.0).powf(a) - s.lambda.powf(a)
        } else {
            s.lambda.powf(a) - (s.lambda + 1.0).powf(a)
        };
        Ok(Some(s.c * gamma(-a)? * bracket))
    };
    Ok(JumpActivityConstants {
        alpha_plus: model.alpha_plus,
        alpha_minus: model.alpha_minus,
        c_plus_tail: tail(model.positive_side()),
        c_minus_tail: tail(model.negative_side()),
        gamma_plus: fv_integral(model.positive_side(), 1.0)?,
        gamma_minus: fv_integral(model.negative_side(), -1.0)?,
    })
}

/// Blumenthal-Getoor indices of the positive and negative jump parts; zero
/// for a side without jumps.
pub fn blumenthal_getoor(model: &TemperedStableParams) -> Result<(f64, f64)> {
    model.validate()?;
    let bg = |c: f64, a: f64| if c > 0.0 { a } else { 0.0 };
    Ok((
        bg(model.c_plus, model.alpha_plus),
        bg(model.c_minus, model.alpha_minus),
    ))
}
