//! Experiment drivers behind the command-line tool: the validation table,
//! the ATM and OTM convergence studies and the smile study. Each driver
//! returns rows; CSV output lives here too so it stays byte-stable.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::asymptotics::{
    atm_stable_constant, corollary_expansion, infvar_call_approx, infvar_put_approx, limit_smile,
    moving_strike,
};
use crate::bs::{implied_vol, OptionQuote};
use crate::error::{Error, Result};
use crate::fourier::{forward_call, forward_put, price_call_fourier, price_linear_call, price_put_fourier};
use crate::levy::{jump_activity_constants, TemperedStableParams};
use crate::mc::{mc_price, Payoff, PayoffSpec, SimConfig, Simulator};
use crate::par::{map_indexed, ExecMode};
use crate::quadrature::QuadratureConfig;

pub const CSV_HEADER: &str =
    "t,theta,k_t,exact_price,approx_price,normalised_price,implied_vol,expansion_vol,limit_value";

/// One CSV record; `None` fields are written empty.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub t: f64,
    pub theta: Option<f64>,
    pub k_t: Option<f64>,
    pub exact_price: Option<f64>,
    pub approx_price: Option<f64>,
    pub normalised_price: Option<f64>,
    pub implied_vol: Option<f64>,
    pub expansion_vol: Option<f64>,
    pub limit_value: Option<f64>,
}

pub fn write_csv<W: Write>(rows: &[ExperimentRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER.split(','))
        .map_err(|e| Error::Config(e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::Config(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Config(e.to_string()))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl ThetaGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0) || self.stop < self.start {
            return Err(Error::Config("theta_grid needs step > 0 and stop >= start".into()));
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| self.start + self.step * i as f64).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSettings {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    /// Moving-strike `theta` values; empty selects the power rule
    /// (`converge-otm`) or the grid (`smile`).
    pub theta: Vec<f64>,
    pub alpha_prime: f64,
    pub theta_grid: ThetaGrid,
    /// Smile maturities, used unless `use_t_grid` is set.
    pub maturities: Vec<f64>,
    /// Take smile maturities from `t_min`, `t_max`, `points` instead.
    pub use_t_grid: bool,
    /// Tolerance on the final-row limit check (`converge-*`) or on the
    /// expansion error (`approx-quality`). `None` disables the check.
    pub tol: Option<f64>,
    pub expansion_only: bool,
    pub quadrature: QuadratureConfig,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        Self {
            t_min: 1e-6,
            t_max: 1e-1,
            points: 25,
            theta: Vec::new(),
            alpha_prime: 1.9,
            theta_grid: ThetaGrid {
                start: 0.05,
                stop: 0.6,
                step: 0.025,
            },
            maturities: vec![1.0 / 12.0, 1.0 / 52.0, 1.0 / 365.0, 0.1 / 365.0],
            use_t_grid: false,
            tol: None,
            expansion_only: false,
            quadrature: QuadratureConfig::default(),
        }
    }
}

/// Model plus experiment settings, as read from a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: TemperedStableParams,
    #[serde(default)]
    pub experiment: ExperimentSettings,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.model.validate()?;
        Ok(cfg)
    }

    /// Shipped configs: `cgmy` (c=1, lambda=3, alpha=1.5), `smile-pure-jump`
    /// and `smile-diffusion` (c=0.01, lambda=3, alpha=1.5, sigma 0 / 0.2).
    pub fn preset(name: &str) -> Option<Self> {
        let text = match name {
            "cgmy" => include_str!("../configs/cgmy.json"),
            "smile-pure-jump" => include_str!("../configs/smile_pure_jump.json"),
            "smile-diffusion" => include_str!("../configs/smile_diffusion.json"),
            _ => return None,
        };
        Some(Self::from_json(text).expect("shipped config parses"))
    }
}

pub const PRESETS: &[&str] = &["cgmy", "smile-pure-jump", "smile-diffusion"];

/// Rows plus diagnostics from one run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOutput {
    pub rows: Vec<ExperimentRow>,
    /// Rows emitted with an empty implied vol.
    pub warnings: usize,
    /// Tolerance checks that failed.
    pub failures: Vec<String>,
}

/// `points` log-spaced maturities from `t_max` down to `t_min`.
pub fn log_grid(t_max: f64, t_min: f64, points: usize) -> Result<Vec<f64>> {
    if !(t_min > 0.0 && t_min <= t_max && t_max.is_finite()) {
        return Err(Error::Config(format!("need 0 < t_min <= t_max, got {t_min}, {t_max}")));
    }
    match points {
        0 => Err(Error::Config("points must be at least 1".into())),
        1 => Ok(vec![t_max]),
        n => {
            let (a, b) = (t_max.ln(), t_min.ln());
            let mut g: Vec<f64> = (0..n)
                .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
                .collect();
            g[0] = t_max;
            g[n - 1] = t_min;
            Ok(g)
        }
    }
}

fn collect<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    results.into_iter().collect()
}

fn require_zero_rate(model: &TemperedStableParams) -> Result<()> {
    if model.r != 0.0 {
        return Err(Error::Config("the asymptotic experiments assume r = 0".into()));
    }
    Ok(())
}

/// ATM convergence: `normalised_price = t^(-1/alpha) * call(k=0)`,
/// `approx_price` holds the linear-payoff price `E[X_t^+]` and
/// `limit_value` the constant `C(c, alpha)`.
pub fn cmd_converge_atm(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let m = &cfg.model;
    require_zero_rate(m)?;
    if m.c_plus == 0.0 || m.c_plus != m.c_minus || m.alpha_plus != m.alpha_minus || m.sigma != 0.0 {
        return Err(Error::Config(
            "ATM normalisation needs symmetric jumps (c+ = c- > 0, alpha+ = alpha-) and sigma = 0".into(),
        ));
    }
    let alpha = m.alpha_plus;
    let c_const = atm_stable_constant(m.c_plus, alpha).map_err(|e| Error::Config(e.to_string()))?;
    let s = &cfg.experiment;
    let grid = log_grid(s.t_max, s.t_min, s.points)?;
    let q = s.quadrature;
    let rows = collect(map_indexed(ExecMode::Parallel, grid.len(), |i| {
        let t = grid[i];
        let exact = forward_call(m, 0.0, t, &q)?;
        let linear = price_linear_call(m, 0.0, t, &q)?;
        Ok(ExperimentRow {
            t,
            k_t: Some(0.0),
            exact_price: Some(exact),
            approx_price: Some(linear),
            normalised_price: Some(exact * t.powf(-1.0 / alpha)),
            limit_value: Some(c_const),
            ..Default::default()
        })
    }))?;
    let mut out = RunOutput {
        rows,
        ..Default::default()
    };
    if let (Some(tol), Some(last)) = (s.tol, out.rows.last()) {
        let ratio = last.normalised_price.unwrap() / c_const;
        if (ratio - 1.0).abs() > tol {
            out.failures.push(format!(
                "t={}: normalised ATM price / C = {ratio:.6}, tolerance {tol}",
                last.t
            ));
        }
    }
    Ok(out)
}

/// Out-of-the-money convergence along `k_t = t^(1/alpha')` or the moving
/// strike. `normalised_price = price / (t |k_t|^(1-alpha))`, limit
/// `c / (alpha (alpha - 1))`; negative `theta` uses puts and the negative side.
pub fn cmd_converge_otm(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let m = &cfg.model;
    require_zero_rate(m)?;
    let s = &cfg.experiment;
    let act = jump_activity_constants(m)?;
    let grid = log_grid(s.t_max, s.t_min, s.points)?;
    let rules: Vec<Option<f64>> = if s.theta.is_empty() {
        if !(s.alpha_prime > 0.0) {
            return Err(Error::Config("alpha_prime must be positive".into()));
        }
        vec![None]
    } else {
        s.theta.iter().map(|&th| Some(th)).collect()
    };
    for rule in &rules {
        let call_side = rule.is_none_or(|th| th > 0.0);
        let (alpha, c_tail) = if call_side {
            (act.alpha_plus, act.c_plus_tail)
        } else {
            (act.alpha_minus, act.c_minus_tail)
        };
        if !(alpha > 1.0 && alpha < 2.0 && c_tail > 0.0) {
            return Err(Error::Config(
                "OTM normalisation needs infinite-variation jumps on the relevant side".into(),
            ));
        }
        if rule == &Some(0.0) {
            return Err(Error::Config("theta must be non-zero".into()));
        }
    }
    let q = s.quadrature;
    let n = grid.len();
    let rows = collect(map_indexed(ExecMode::Parallel, rules.len() * n, |i| {
        let rule = rules[i / n];
        let t = grid[i % n];
        let k = match rule {
            None => t.powf(1.0 / s.alpha_prime),
            Some(th) => moving_strike(th, t)?.k_t,
        };
        let (exact, approx, alpha, c_tail) = if k > 0.0 {
            let exact = forward_call(m, k, t, &q)?;
            let approx = infvar_call_approx(t, k, m.sigma, act.alpha_plus, act.c_plus_tail)?;
            (exact, approx, act.alpha_plus, act.c_plus_tail)
        } else {
            let exact = forward_put(m, k, t, &q)?;
            let approx = infvar_put_approx(t, -k, m.sigma, act.alpha_minus, act.c_minus_tail)?;
            (exact, approx, act.alpha_minus, act.c_minus_tail)
        };
        Ok(ExperimentRow {
            t,
            theta: rule,
            k_t: Some(k),
            exact_price: Some(exact),
            approx_price: Some(approx),
            normalised_price: Some(exact / (t * k.abs().powf(1.0 - alpha))),
            limit_value: Some(c_tail / (alpha - 1.0)),
            ..Default::default()
        })
    }))?;
    let mut out = RunOutput {
        rows,
        ..Default::default()
    };
    if let Some(tol) = s.tol {
        for block in out.rows.chunks(n) {
            let last = block.last().unwrap();
            let ratio = last.normalised_price.unwrap() / last.limit_value.unwrap();
            if (ratio - 1.0).abs() > tol {
                out.failures.push(format!(
                    "t={} k_t={}: normalised price / limit = {ratio:.6}, tolerance {tol}",
                    last.t,
                    last.k_t.unwrap()
                ));
            }
        }
    }
    Ok(out)
}

/// Smile at the moving strike: implied vol of the exact price, the explicit
/// expansion and the limiting smile, for every maturity and `theta`.
/// With `expansion_only` the limit column is left empty and `tol` bounds
/// `|expansion / implied - 1|`.
pub fn cmd_smile(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let m = &cfg.model;
    require_zero_rate(m)?;
    let s = &cfg.experiment;
    let act = jump_activity_constants(m)?;
    let maturities = if s.use_t_grid {
        log_grid(s.t_max, s.t_min, s.points)?
    } else {
        s.maturities.clone()
    };
    let thetas = if s.theta.is_empty() {
        s.theta_grid.values()?
    } else {
        s.theta.clone()
    };
    if maturities.is_empty() || thetas.is_empty() {
        return Err(Error::Config("smile needs at least one maturity and one theta".into()));
    }
    for &th in &thetas {
        // model-level problems surface before any pricing
        limit_smile(th, m.sigma, &act).map_err(|e| Error::Config(e.to_string()))?;
        corollary_expansion(maturities[0].min(0.1), th, m.sigma, &act)
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let q = s.quadrature;
    let n = thetas.len();
    let results = map_indexed(ExecMode::Parallel, maturities.len() * n, |i| -> Result<(ExperimentRow, bool)> {
        let t = maturities[i / n];
        let th = thetas[i % n];
        let k = moving_strike(th, t)?.k_t;
        let (exact, quote) = if k > 0.0 {
            let p = forward_call(m, k, t, &q)?;
            (p, OptionQuote::call(t, k, p))
        } else {
            let p = forward_put(m, k, t, &q)?;
            (p, OptionQuote::put(t, k, p))
        };
        let iv = match implied_vol(&quote) {
            Ok(v) => Some(v),
            Err(Error::PriceOutOfBounds { .. }) | Err(Error::NoConvergence { .. }) => None,
            Err(e) => return Err(e),
        };
        let exp = corollary_expansion(t, th, m.sigma, &act)?;
        let limit = if s.expansion_only {
            None
        } else {
            Some(limit_smile(th, m.sigma, &act)?)
        };
        Ok((
            ExperimentRow {
                t,
                theta: Some(th),
                k_t: Some(k),
                exact_price: Some(exact),
                approx_price: Some(exp.approx_price),
                implied_vol: iv,
                expansion_vol: Some(exp.sigma_t),
                limit_value: limit,
                ..Default::default()
            },
            iv.is_none(),
        ))
    });
    let mut out = RunOutput::default();
    for r in results {
        let (row, warn) = r?;
        out.warnings += warn as usize;
        out.rows.push(row);
    }
    if let (true, Some(tol)) = (s.expansion_only, s.tol) {
        for r in &out.rows {
            if let (Some(iv), Some(ev)) = (r.implied_vol, r.expansion_vol) {
                let rel = (ev / iv - 1.0).abs();
                if rel > tol {
                    out.failures.push(format!(
                        "t={} theta={}: expansion {ev:.6} vs implied {iv:.6} (rel {rel:.3e}), tolerance {tol}",
                        r.t,
                        r.theta.unwrap()
                    ));
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptionType {
    Call,
    Put,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableRow {
    pub option: OptionType,
    pub s0: f64,
    pub strike: f64,
    pub t: f64,
    pub model: TemperedStableParams,
    pub reference: f64,
    /// Value from an earlier independent study, shown for comparison.
    #[serde(default)]
    pub wang: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableConfig {
    pub rows: Vec<TableRow>,
    #[serde(default = "default_table_tol")]
    pub tol: f64,
    /// Monte Carlo cross-check paths per row; 0 skips it.
    #[serde(default)]
    pub mc_paths: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
}

fn default_table_tol() -> f64 {
    1e-4
}

impl TableConfig {
    pub fn default_fixture() -> Self {
        Self::from_json(include_str!("../configs/table.json")).expect("shipped table parses")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        if cfg.rows.is_empty() {
            return Err(Error::Config("table config has no rows".into()));
        }
        if !(cfg.tol >= 0.0) {
            return Err(Error::Config("tol must be non-negative".into()));
        }
        for r in &cfg.rows {
            r.model.validate()?;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableLine {
    pub row: TableRow,
    pub computed: f64,
    pub rel_error: f64,
    pub pass: bool,
    /// Discounted Monte Carlo estimate and standard error.
    pub mc: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableReport {
    pub lines: Vec<TableLine>,
    pub tol: f64,
}

impl TableReport {
    pub fn all_pass(&self) -> bool {
        self.lines.iter().all(|l| l.pass)
    }
}

impl fmt::Display for TableReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.lines.iter().enumerate() {
            let r = &l.row;
            write!(
                f,
                "row {} {:?} S0={} K={} T={} r={} alpha={}: computed {:.10} reference {} rel {:.2e} {}",
                i + 1,
                r.option,
                r.s0,
                r.strike,
                r.t,
                r.model.r,
                r.model.alpha_plus,
                l.computed,
                r.reference,
                l.rel_error,
                if l.pass { "PASS" } else { "FAIL" }
            )?;
            if let Some(w) = r.wang {
                write!(f, " (earlier study {w})")?;
            }
            if let Some((est, se)) = l.mc {
                write!(f, " mc {est:.6} +- {se:.2e}")?;
            }
            writeln!(f)?;
        }
        writeln!(f, "tolerance {:e}: {}", self.tol, if self.all_pass() { "PASS" } else { "FAIL" })
    }
}

/// Prices every table row by Fourier inversion, compares against the
/// reference column and optionally adds a Monte Carlo cross-check.
pub fn cmd_table(cfg: &TableConfig) -> Result<TableReport> {
    let q = cfg.quadrature;
    let lines = collect(map_indexed(ExecMode::Sequential, cfg.rows.len(), |i| {
        let row = &cfg.rows[i];
        let m = &row.model;
        let computed = match row.option {
            OptionType::Call => price_call_fourier(m, row.s0, row.strike, row.t, &q)?,
            OptionType::Put => price_put_fourier(m, row.s0, row.strike, row.t, &q)?,
        };
        let rel_error = (computed / row.reference - 1.0).abs();
        let mc = if cfg.mc_paths > 0 {
            let sim = Simulator::new(m, row.t, None)?;
            let samples = sim.simulate(&SimConfig {
                n_paths: cfg.mc_paths,
                seed: cfg.seed,
                ..SimConfig::default()
            })?;
            let payoff = match row.option {
                OptionType::Call => Payoff::Call,
                OptionType::Put => Payoff::Put,
            };
            let (est, se) = mc_price(
                &samples,
                PayoffSpec {
                    payoff,
                    k: (row.strike / row.s0).ln(),
                },
            );
            let scale = row.s0 * (-m.r * row.t).exp();
            Some((scale * est, scale * se))
        } else {
            None
        };
        Ok(TableLine {
            row: row.clone(),
            computed,
            rel_error,
            pass: rel_error <= cfg.tol,
            mc,
        })
    }))?;
    Ok(TableReport { lines, tol: cfg.tol })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_empty_fields() {
        let mut buf = Vec::new();
        let row = ExperimentRow {
            t: 0.5,
            exact_price: Some(0.25),
            ..Default::default()
        };
        write_csv(&[row], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, format!("{CSV_HEADER}\n0.5,,,0.25,,,,,\n"));
    }

    #[test]
    fn grids() {
        let g = log_grid(1e-1, 1e-6, 25).unwrap();
        assert_eq!(g.len(), 25);
        assert_eq!(g[0], 1e-1);
        assert_eq!(g[24], 1e-6);
        assert_eq!(log_grid(1.0, 1.0, 1).unwrap(), vec![1.0]);
        assert!(log_grid(1e-6, 1e-1, 3).is_err());
        let th = ExperimentSettings::default().theta_grid.values().unwrap();
        assert_eq!(th.len(), 23);
        assert!((th[22] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn strict_config_parsing() {
        let bad = r#"{"model": {"c_plus": 1, "c_minus": 1, "lambda_plus": 3, "lambda_minus": 3,
            "alpha_plus": 1.5, "alpha_minus": 1.5, "sigma": 0, "r": 0}, "extra": 1}"#;
        assert!(matches!(ExperimentConfig::from_json(bad), Err(Error::Config(_))));
        assert!(TableConfig::from_json(r#"{"rows": []}"#).is_err());
        assert!(TableConfig::from_json("").is_err());
        for p in PRESETS {
            assert!(ExperimentConfig::preset(p).is_some());
        }
    }

    #[test]
    fn table_fixture_rows() {
        let report = cmd_table(&TableConfig::default_fixture()).unwrap();
        assert!(report.all_pass(), "{report}");
        assert_eq!(report.lines[2].row.option, OptionType::Put);
    }

    #[test]
    fn atm_rejects_diffusion_only() {
        let mut cfg = ExperimentConfig::preset("cgmy").unwrap();
        cfg.model = TemperedStableParams::pure_diffusion(0.2, 0.0).unwrap();
        assert!(matches!(cmd_converge_atm(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn smile_limit_shapes() {
        let mut cfg = ExperimentConfig::preset("smile-diffusion").unwrap();
        cfg.experiment.maturities = vec![1.0 / 365.0];
        let out = cmd_smile(&cfg).unwrap();
        for r in &out.rows {
            let th = r.theta.unwrap();
            let want = if th <= 0.2 * 0.5f64.sqrt() { 0.2 } else { th / 0.5f64.sqrt() };
            assert!((r.limit_value.unwrap() - want).abs() < 1e-15);
        }
    }
}
