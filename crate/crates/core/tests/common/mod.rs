//! Checks shared by the property suite and the acceptance target.
#![allow(dead_code)]

use levy_smile::asymptotics::{limit_smile, moving_strike};
use levy_smile::bs::{bs_call, bs_price, bs_put, implied_vol, OptionQuote};
use levy_smile::fourier::{forward_call, forward_put, price_linear_call, QuadratureConfig};
use levy_smile::levy::{characteristic_exponent, jump_activity_constants, LevyExponent, TemperedStableParams};
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub type Check = std::result::Result<(), TestCaseError>;

pub fn model() -> impl Strategy<Value = TemperedStableParams> {
    (
        0.05..2.0f64,
        0.05..2.0f64,
        2.5..15.0f64,
        1.5..15.0f64,
        0.2..1.9f64,
        0.2..1.9f64,
        0.0..0.4f64,
        0.0..0.1f64,
    )
        .prop_filter_map("valid model", |(cp, cm, lp, lm, ap, am, s, r)| {
            TemperedStableParams::new(cp, cm, lp, lm, ap, am, s, r).ok()
        })
}

pub fn bs_parity_and_symmetry(t: f64, k: f64, s: f64) -> Check {
    let c = bs_call(t, k, s).unwrap();
    let p = bs_put(t, k, s).unwrap();
    prop_assert!((c - p - (1.0 - k.exp())).abs() < 1e-12);
    // C(k) = 1 - e^k + e^k C(-k)
    let mirror = 1.0 - k.exp() + k.exp() * bs_call(t, -k, s).unwrap();
    prop_assert!((c - mirror).abs() < 1e-12);
    Ok(())
}

pub fn implied_vol_round_trip(t: f64, k: f64, s: f64, call: bool) -> Check {
    // stay where the price carries enough vega to pin sigma
    if k.abs() / (s * t.sqrt()) >= 5.0 {
        return Ok(());
    }
    let price = bs_price(t, k, s, call).unwrap();
    let quote = if call {
        OptionQuote::call(t, k, price)
    } else {
        OptionQuote::put(t, k, price)
    };
    let back = implied_vol(&quote).unwrap();
    prop_assert!((back - s).abs() < 1e-10, "{back} vs {s}");
    Ok(())
}

pub fn exponent_hermitian(m: &TemperedStableParams, u: f64) -> Check {
    let e = LevyExponent::new(m).unwrap();
    let a = e.eval(Complex64::new(u, 0.0)).unwrap();
    let b = e.eval(Complex64::new(-u, 0.0)).unwrap();
    prop_assert!((a - b.conj()).norm() <= 1e-12 * (1.0 + a.norm()));
    prop_assert!(a.re <= 1e-12 * (1.0 + a.norm()));
    Ok(())
}

pub fn martingale(m: &TemperedStableParams) -> Check {
    let psi = characteristic_exponent(m, Complex64::new(0.0, -1.0)).unwrap();
    prop_assert!((psi.re - m.r).abs() < 1e-10 && psi.im.abs() < 1e-10);
    Ok(())
}

pub fn limit_smile_shape(theta: f64, sigma: f64) -> Check {
    let m = TemperedStableParams::symmetric(1.0, 3.0, 1.5, sigma, 0.0).unwrap();
    let act = jump_activity_constants(&m).unwrap();
    let up = limit_smile(theta, sigma, &act).unwrap();
    let down = limit_smile(-theta, sigma, &act).unwrap();
    prop_assert!((up - down).abs() < 1e-12);
    prop_assert!(up >= sigma);
    Ok(())
}

/// Prices at five dampings spread over the part of `(1, lambda_plus)` where
/// the integrand modulus at `u = 0` stays below 1e3 times the price; beyond
/// it the inversion is cancellation whatever the integrator.
pub fn damping_invariance(m: &TemperedStableParams, t: f64, k: f64) -> Check {
    let base = QuadratureConfig::default();
    let reference = forward_call(m, k, t, &base).unwrap();
    let amplitude = |r: f64| {
        let kappa = characteristic_exponent(m, Complex64::new(0.0, -r)).unwrap().re;
        (t * kappa - r * k).exp() / (r * (r - 1.0))
    };
    let hi = m.lambda_plus;
    let usable: Vec<f64> = (1..400)
        .map(|i| 1.0 + i as f64 / 400.0 * (hi - 1.0))
        .filter(|&r| amplitude(r) < 1e3 * reference)
        .collect();
    prop_assert!(usable.len() >= 5, "only {} usable dampings", usable.len());
    let step = (usable.len() - 1) as f64 / 4.0;
    for i in 0..5 {
        let r = usable[(i as f64 * step).round() as usize];
        let p = forward_call(m, k, t, &base.with_damping(r)).unwrap();
        prop_assert!((p - reference).abs() < 1e-8, "R={r}: {p} vs {reference}");
    }
    Ok(())
}

pub fn fourier_parity(m: &TemperedStableParams, t: f64, k: f64) -> Check {
    let cfg = QuadratureConfig::default();
    let c = forward_call(m, k, t, &cfg).unwrap();
    let p = forward_put(m, k, t, &cfg).unwrap();
    prop_assert!((c - p - ((m.r * t).exp() - k.exp())).abs() < 1e-9);
    Ok(())
}

pub fn fourier_diffusion(s: f64, t: f64, k: f64) -> Check {
    let m = TemperedStableParams::pure_diffusion(s, 0.0).unwrap();
    let c = forward_call(&m, k, t, &QuadratureConfig::default()).unwrap();
    prop_assert!((c - bs_call(t, k, s).unwrap()).abs() < 1e-9);
    Ok(())
}

/// `|call(k_t) - e^{k_t} linear(k_t)| / t` along `t = 1e-2 .. 1e-6` for the
/// CGMY model `c = 1, lambda = 3, alpha = 1.5`.
pub fn lemma_ratios(theta: f64) -> Vec<f64> {
    let m = TemperedStableParams::symmetric(1.0, 3.0, 1.5, 0.0, 0.0).unwrap();
    let cfg = QuadratureConfig::default();
    (2..=6)
        .map(|n| {
            let t = 10f64.powi(-n);
            let k = moving_strike(theta, t).unwrap().k_t;
            let c = forward_call(&m, k, t, &cfg).unwrap();
            let l = price_linear_call(&m, k, t, &cfg).unwrap();
            (c - k.exp() * l).abs() / t
        })
        .collect()
}

/// Short-time limit of the ratio: `int_0^inf (e^x - 1 - x) nu(dx)` for the
/// same model, by the double-exponential rule.
pub fn lemma_limit() -> f64 {
    use quadrature::double_exponential::integrate;
    let nu = |x: f64| (-3.0 * x).exp() / x.powf(2.5);
    let g = |x: f64| {
        if x > 0.1 {
            x.exp_m1() - x
        } else {
            let (mut term, mut sum) = (x * x / 2.0, 0.0);
            for n in 3..30 {
                sum += term;
                term *= x / n as f64;
            }
            sum
        }
    };
    // y = u^4 flattens the x^-1/2 singularity at 0
    integrate(|u: f64| 4.0 * u.powi(3) * g(u.powi(4)) * nu(u.powi(4)), 0.0, 1.0, 1e-14).integral
        + integrate(|x| g(x) * nu(x), 1.0, 40.0, 1e-14).integral
}

/// `(ratio - 1) log^3(1/t)` and the remainder inside the braces of the
/// expansion, `log^3(1/t) |C / prefactor - bracket|`, along
/// `t = e^-6 .. e^-14`.
pub fn bs_expansion_orders(theta: f64, sigma: f64) -> (Vec<f64>, Vec<f64>) {
    use levy_smile::bs::bs_call_expansion;
    let mut ratio = Vec::new();
    let mut brace = Vec::new();
    for n in 6..=14 {
        let l = n as f64;
        let t = (-l).exp();
        let k = moving_strike(theta, t).unwrap().k_t;
        let c = bs_call(t, k, sigma).unwrap();
        let e = bs_call_expansion(t, theta, sigma).unwrap();
        ratio.push((c / e - 1.0).abs() * l.powi(3));
        let r = (sigma / theta).powi(2);
        let pref = sigma / (2.0 * std::f64::consts::PI).sqrt() * t.powf(0.5 + theta * theta / (2.0 * sigma * sigma));
        brace.push((c / pref - (r / l - 3.0 * r * r / (l * l))).abs() * l.powi(3));
    }
    (ratio, brace)
}
