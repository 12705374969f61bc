//! Monte Carlo draws of `X_t`: jumps larger than a cutoff `eps` come from a
//! compound Poisson sampler, smaller ones are replaced by a Gaussian with the
//! same variance.
//!
//! Streams: base path `i` draws from ChaCha8 seeded with `seed`, stream
//! `i / BLOCK`, in path order within the block. Results therefore do not
//! depend on how many threads fill the blocks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::{JumpSide, TemperedStableParams};
use crate::par::{map_indexed, ExecMode};
use crate::quadrature::{integrate_panels, QuadratureConfig};

/// Paths per RNG stream.
pub const BLOCK: usize = 4096;
const GRID: usize = 1024;
const ZGRID: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n_paths: usize,
    /// Starting small-jump cutoff, see [`Simulator::new`].
    #[serde(default)]
    pub epsilon: Option<f64>,
    pub seed: u64,
    #[serde(default)]
    pub antithetic: bool,
    #[serde(default)]
    pub mode: ExecMode,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_paths: 1_000_000,
            epsilon: None,
            seed: 0x5eed,
            antithetic: false,
            mode: ExecMode::Parallel,
        }
    }
}

/// Draws of `X_t`. With antithetics, entries `2j` and `2j+1` form a pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub values: Vec<f64>,
    pub antithetic: bool,
    /// Cutoff actually used.
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payoff {
    Call,
    Put,
    LinearCall,
}

/// Payoff on log-strike `k` in forward units: `(e^X - e^k)^+`,
/// `(e^k - e^X)^+` or `(X - k)^+`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffSpec {
    pub payoff: Payoff,
    pub k: f64,
}

fn tight() -> QuadratureConfig {
    QuadratureConfig {
        rel_tol: 1e-13,
        abs_tol: 0.0,
        max_subdivisions: 5000,
        damping: None,
    }
}

/// `int_0^eps y^2 nu(dy)` on one side, after `y = eps v^(1/(2-a))`.
fn small_jump_variance(side: &JumpSide, eps: f64) -> Result<f64> {
    if side.c == 0.0 {
        return Ok(0.0);
    }
    let p = 2.0 - side.alpha;
    let scale = side.c * eps.powf(p) / p;
    let est = integrate_panels(
        |v: f64| (-side.lambda * eps * v.powf(1.0 / p)).exp(),
        &[0.0, 0.5, 1.0],
        &tight(),
    )?;
    Ok(scale * est.value)
}

/// `int_eps^inf (e^(s y) - 1) nu(dy)` on one side with `s = +-1`.
fn large_jump_compensator(side: &JumpSide, eps: f64, s: f64) -> Result<f64> {
    if side.c == 0.0 {
        return Ok(0.0);
    }
    let decay = side.lambda - s;
    let upper = eps + 60.0 / decay;
    let est = integrate_panels(
        |y: f64| (s * y).exp_m1() * side.density(y),
        &log_breakpoints(eps, upper),
        &tight(),
    )?;
    Ok(est.value)
}

fn log_breakpoints(lo: f64, hi: f64) -> Vec<f64> {
    let mut pts = vec![lo];
    let mut x = lo * 2.0;
    while x < hi {
        pts.push(x);
        x *= 2.0;
    }
    pts.push(hi);
    pts
}

/// Inverse of the tail `T(x) = int_x^inf nu(dy)` on `[eps, x_max]`.
///
/// `log x` is tabulated against `z = log(T(x) / T(eps))` on a uniform grid
/// and interpolated by cubic Hermite with exact slopes, so a draw costs one
/// log, one cubic and one exp. Nodes are solved against the exact tail.
#[derive(Debug, Clone)]
struct TailSampler {
    intensity: f64,
    z_min: f64,
    dz: f64,
    log_x: Vec<f64>,
    slope: Vec<f64>,
}

/// Exact tail on a log-spaced `x` grid; only used while building the table.
struct TailGrid<'a> {
    side: &'a JumpSide,
    xs: Vec<f64>,
    tail: Vec<f64>,
}

impl<'a> TailGrid<'a> {
    fn new(side: &'a JumpSide, eps: f64, x_max: f64) -> Result<Self> {
        let (l0, l1) = (eps.ln(), x_max.ln());
        let xs: Vec<f64> = (0..GRID)
            .map(|i| (l0 + (l1 - l0) * i as f64 / (GRID - 1) as f64).exp())
            .collect();
        let mut tail = vec![0.0; GRID];
        let cfg = tight();
        tail[GRID - 1] = integrate_panels(
            |y: f64| side.density(y),
            &[x_max, x_max + 40.0 / side.lambda],
            &cfg,
        )?
        .value;
        for i in (0..GRID - 1).rev() {
            let piece = integrate_panels(|y: f64| side.density(y), &[xs[i], xs[i + 1]], &cfg)?;
            tail[i] = tail[i + 1] + piece.value;
        }
        Ok(Self { side, xs, tail })
    }

    fn tail_at(&self, x: f64) -> Result<f64> {
        let j = self.xs.partition_point(|&v| v <= x).saturating_sub(1).min(GRID - 2);
        let piece = integrate_panels(|y: f64| self.side.density(y), &[self.xs[j], x], &tight())?;
        Ok(self.tail[j] - piece.value)
    }

    /// `x` with `T(x) = target`, by Newton in `log x` from a grid bracket.
    fn solve(&self, target: f64) -> Result<f64> {
        let j = self.tail.partition_point(|&v| v >= target).clamp(1, GRID - 1) - 1;
        let (lo, hi) = (self.xs[j].ln(), self.xs[j + 1].ln());
        let (t0, t1) = (self.tail[j].ln(), self.tail[j + 1].ln());
        let mut lx = lo + (hi - lo) * (t0 - target.ln()) / (t0 - t1);
        for _ in 0..8 {
            let x = lx.exp();
            let f = self.tail_at(x)?.ln() - target.ln();
            let d = -x * self.side.density(x) / self.tail_at(x)?;
            let step = f / d;
            lx = (lx - step).clamp(lo, hi);
            if step.abs() < 1e-14 {
                break;
            }
        }
        Ok(lx.exp())
    }
}

impl TailSampler {
    fn new(side: &JumpSide, eps: f64) -> Result<Self> {
        let x_max = (36.0 / side.lambda).max(4.0 * eps);
        let grid = TailGrid::new(side, eps, x_max)?;
        let intensity = grid.tail[0];
        let z_min = (grid.tail[GRID - 1] / intensity).ln();
        let dz = -z_min / (ZGRID - 1) as f64;
        let mut log_x = Vec::with_capacity(ZGRID);
        let mut slope = Vec::with_capacity(ZGRID);
        for i in 0..ZGRID {
            let z = if i == ZGRID - 1 { 0.0 } else { z_min + dz * i as f64 };
            let target = intensity * z.exp();
            let x = if i == 0 {
                x_max
            } else if i == ZGRID - 1 {
                eps
            } else {
                grid.solve(target)?
            };
            log_x.push(x.ln());
            // d log x / dz = -T / (x nu(x))
            slope.push(-target / (x * side.density(x)));
        }
        Ok(Self {
            intensity,
            z_min,
            dz,
            log_x,
            slope,
        })
    }

    /// Jump size with `T(x) = u * T(eps)`, `u` in `(0, 1]`.
    #[inline]
    fn invert(&self, u: f64) -> f64 {
        let z = u.ln();
        if z <= self.z_min {
            return self.log_x[0].exp();
        }
        let pos = (z - self.z_min) / self.dz;
        let j = (pos as usize).min(ZGRID - 2);
        let s = pos - j as f64;
        let (y0, y1) = (self.log_x[j], self.log_x[j + 1]);
        let (m0, m1) = (self.slope[j] * self.dz, self.slope[j + 1] * self.dz);
        let s2 = s * s;
        let s3 = s2 * s;
        let lx = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * m1;
        lx.exp()
    }
}

/// Precomputed pieces of the approximating process for one model.
#[derive(Debug, Clone)]
pub struct Simulator {
    drift: f64,
    gauss_var: f64,
    sides: Vec<(TailSampler, f64)>,
    epsilon: f64,
    t: f64,
}

impl Simulator {
    /// Builds the sampler for maturity `t`. The cutoff starts at `epsilon`
    /// (0.1 if `None`) and is halved until `sqrt(t s(eps)^2) / eps >= 10`.
    pub fn new(model: &TemperedStableParams, t: f64, epsilon: Option<f64>) -> Result<Self> {
        model.validate()?;
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidInput(format!("maturity must be positive, got {t}")));
        }
        let mut eps = epsilon.unwrap_or(0.1);
        check_cutoff(eps)?;
        let sides = [model.positive_side(), model.negative_side()];
        if model.has_jumps() {
            let small_var = |eps: f64| -> Result<f64> {
                Ok(small_jump_variance(&sides[0], eps)? + small_jump_variance(&sides[1], eps)?)
            };
            while (t * small_var(eps)?).sqrt() / eps < 10.0 {
                eps *= 0.5;
            }
        }
        Self::with_cutoff(model, t, eps)
    }

    /// Sampler with exactly the cutoff `eps`, no adjustment.
    pub fn with_cutoff(model: &TemperedStableParams, t: f64, eps: f64) -> Result<Self> {
        model.validate()?;
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidInput(format!("maturity must be positive, got {t}")));
        }
        check_cutoff(eps)?;
        let sides = [(model.positive_side(), 1.0), (model.negative_side(), -1.0)];
        let s2 = small_jump_variance(&sides[0].0, eps)? + small_jump_variance(&sides[1].0, eps)?;
        let mut drift = model.r - 0.5 * model.sigma * model.sigma - 0.5 * s2;
        let mut samplers = Vec::new();
        for (side, s) in sides {
            if side.c == 0.0 {
                continue;
            }
            drift -= large_jump_compensator(&side, eps, s)?;
            samplers.push((TailSampler::new(&side, eps)?, s));
        }
        Ok(Self {
            drift,
            gauss_var: model.sigma * model.sigma + s2,
            sides: samplers,
            epsilon: eps,
            t,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Drift of the approximating process; it makes `E[e^X_t] = e^(rt)` exact.
    pub fn drift(&self) -> f64 {
        self.drift
    }

    /// Jump intensities `(positive, negative)` above the cutoff.
    pub fn intensities(&self) -> Vec<f64> {
        self.sides.iter().map(|(s, _)| s.intensity).collect()
    }

    pub fn simulate(&self, cfg: &SimConfig) -> Result<Samples> {
        let t = self.t;
        if cfg.n_paths == 0 {
            return Err(Error::InvalidInput("n_paths must be at least 1".into()));
        }
        let per_path = if cfg.antithetic { 2 } else { 1 };
        let base = cfg.n_paths.div_ceil(per_path);
        let blocks = base.div_ceil(BLOCK);
        let poissons: Vec<(Option<Poisson<f64>>, &TailSampler, f64)> = self
            .sides
            .iter()
            .map(|(s, sign)| (Poisson::new(s.intensity * t).ok(), s, *sign))
            .collect();
        let mean = self.drift * t;
        let sd = (self.gauss_var * t).sqrt();
        let chunks = map_indexed(cfg.mode, blocks, |b| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(b as u64);
            let start = b * BLOCK;
            let end = (start + BLOCK).min(base);
            let mut out = Vec::with_capacity((end - start) * per_path);
            for _ in start..end {
                let z: f64 = rng.sample(StandardNormal);
                let mut jumps = 0.0;
                for (poisson, sampler, sign) in &poissons {
                    if let Some(p) = poisson {
                        let n = p.sample(&mut rng) as u64;
                        for _ in 0..n {
                            let u = 1.0 - rng.gen::<f64>();
                            jumps += sign * sampler.invert(u);
                        }
                    }
                }
                out.push(mean + sd * z + jumps);
                if cfg.antithetic {
                    out.push(mean - sd * z + jumps);
                }
            }
            out
        });
        let mut values = Vec::with_capacity(base * per_path);
        for c in chunks {
            values.extend(c);
        }
        values.truncate(cfg.n_paths.max(if cfg.antithetic { 2 } else { 1 }));
        if cfg.antithetic && values.len() % 2 == 1 {
            values.pop();
        }
        Ok(Samples {
            values,
            antithetic: cfg.antithetic,
            epsilon: self.epsilon,
        })
    }
}

fn check_cutoff(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidCutoff(eps))
    }
}

/// Paired draws under the cutoffs of `fine` and `coarse` (`coarse` the larger,
/// same model and maturity). Jumps come from the fine sampler; the coarse
/// path keeps those above its cutoff, which is exact Poisson thinning, and
/// both share the Gaussian draw. The difference of any payoff estimate is
/// then a measure of cutoff bias rather than of sampling noise.
pub fn simulate_coupled(fine: &Simulator, coarse: &Simulator, cfg: &SimConfig) -> Result<(Samples, Samples)> {
    if !(coarse.epsilon >= fine.epsilon) || coarse.t != fine.t || coarse.sides.len() != fine.sides.len() {
        return Err(Error::InvalidInput(
            "coupling needs the same model and maturity with coarse cutoff >= fine".into(),
        ));
    }
    if cfg.n_paths == 0 || cfg.antithetic {
        return Err(Error::InvalidInput("coupling needs n_paths >= 1 and no antithetics".into()));
    }
    let t = fine.t;
    let poissons: Vec<(Option<Poisson<f64>>, &TailSampler, f64)> = fine
        .sides
        .iter()
        .map(|(s, sign)| (Poisson::new(s.intensity * t).ok(), s, *sign))
        .collect();
    let (mean_f, sd_f) = (fine.drift * t, (fine.gauss_var * t).sqrt());
    let (mean_c, sd_c) = (coarse.drift * t, (coarse.gauss_var * t).sqrt());
    let cut = coarse.epsilon;
    let blocks = cfg.n_paths.div_ceil(BLOCK);
    let chunks = map_indexed(cfg.mode, blocks, |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(b as u64);
        let start = b * BLOCK;
        let end = (start + BLOCK).min(cfg.n_paths);
        let mut out = Vec::with_capacity(end - start);
        for _ in start..end {
            let z: f64 = rng.sample(StandardNormal);
            let (mut all, mut large) = (0.0, 0.0);
            for (poisson, sampler, sign) in &poissons {
                if let Some(p) = poisson {
                    let n = p.sample(&mut rng) as u64;
                    for _ in 0..n {
                        let x = sampler.invert(1.0 - rng.gen::<f64>());
                        all += sign * x;
                        if x > cut {
                            large += sign * x;
                        }
                    }
                }
            }
            out.push((mean_f + sd_f * z + all, mean_c + sd_c * z + large));
        }
        out
    });
    let (f, c): (Vec<f64>, Vec<f64>) = chunks.into_iter().flatten().unzip();
    let wrap = |values, epsilon| Samples {
        values,
        antithetic: false,
        epsilon,
    };
    Ok((wrap(f, fine.epsilon), wrap(c, coarse.epsilon)))
}

/// Draws of `X_t` under `model`.
pub fn simulate_increments(model: &TemperedStableParams, t: f64, cfg: &SimConfig) -> Result<Samples> {
    Simulator::new(model, t, cfg.epsilon)?.simulate(cfg)
}

/// Sample mean and standard error of the payoff; antithetic pairs are
/// averaged first.
pub fn mc_price(samples: &Samples, spec: PayoffSpec) -> (f64, f64) {
    let ek = spec.k.exp();
    let payoff = |x: f64| match spec.payoff {
        Payoff::Call => (x.exp() - ek).max(0.0),
        Payoff::Put => (ek - x.exp()).max(0.0),
        Payoff::LinearCall => (x - spec.k).max(0.0),
    };
    let values: Vec<f64> = if samples.antithetic {
        samples
            .values
            .chunks_exact(2)
            .map(|p| 0.5 * (payoff(p[0]) + payoff(p[1])))
            .collect()
    } else {
        samples.values.iter().map(|&x| payoff(x)).collect()
    };
    mean_and_se(&values)
}

/// Mean of `e^X` and its standard error.
pub fn mc_exp_moment(samples: &Samples) -> (f64, f64) {
    let v: Vec<f64> = samples.values.iter().map(|x| x.exp()).collect();
    mean_and_se(&v)
}

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
