//! Radial Bessel processes of dimension `δ`.
//!
//! `X` solves `dX = dB + (δ-1)/2 cot(X) dt` on `(0, π)` and `Y = cos X`
//! solves `dY = -sqrt(1 - Y²) dB - (δ/2) Y dt`. Transition densities of `Y`
//! are Gegenbauer series: for `δ >= 2` the process lives forever and the
//! series uses index `δ/2 - 1/2`; for `δ < 2` it is killed at `±1` and the
//! series of the killed density uses index `3/2 - δ/2`.
//!
//! The samplers at the bottom share no code with the series and are used as
//! a Monte Carlo oracle for them.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::csvio::write_table;
use crate::error::{Result, SleError};
use crate::numerics::{gauss_legendre, integrate_adaptive, replica_rng, rng_from_seed};

/// Series tails are truncated once the bound on the remainder drops below this.
pub const TAIL_TOLERANCE: f64 = 1e-12;
/// Default truncation order of a [`BesselLaw`].
pub const DEFAULT_ORDER: usize = 400;

/// `C_n^{(α)}(x)` by the three-term recurrence.
pub fn gegenbauer(n: usize, alpha: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 2.0 * alpha * x;
    for k in 1..n {
        let k = k as f64;
        let next = (2.0 * x * (k + alpha) * cur - (k + 2.0 * alpha - 1.0) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `C_0 .. C_{n_max}` at `x`, written into `out`.
pub fn gegenbauer_values(n_max: usize, alpha: f64, x: f64, out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    if n_max == 0 {
        return;
    }
    out.push(2.0 * alpha * x);
    for k in 1..n_max {
        let kf = k as f64;
        let next = (2.0 * x * (kf + alpha) * out[k] - (kf + 2.0 * alpha - 1.0) * out[k - 1]) / (kf + 1.0);
        out.push(next);
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(SleError::Unsupported(format!("Gegenbauer norms need alpha > 0, got {alpha}")))
    }
}

fn ln_norm(n: usize, alpha: f64) -> f64 {
    let n_f = n as f64;
    PI.ln() + ln_gamma(2.0 * alpha + n_f)
        - (2.0 * alpha - 1.0) * 2f64.ln()
        - (alpha + n_f).ln()
        - ln_gamma(n_f + 1.0)
        - 2.0 * ln_gamma(alpha)
}

fn ln_supnorm(n: usize, alpha: f64) -> f64 {
    let n_f = n as f64;
    ln_gamma(n_f + 2.0 * alpha) - ln_gamma(n_f + 1.0) - ln_gamma(2.0 * alpha)
}

/// `∫ (1-x²)^{α-1/2} C_n^{(α)}(x)² dx` over `[-1, 1]`.
pub fn gegenbauer_norm(n: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(ln_norm(n, alpha).exp())
}

/// `max |C_n^{(α)}|` over `[-1, 1]`, attained at `x = ±1`.
pub fn gegenbauer_supnorm(n: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if n == 0 {
        return Ok(1.0);
    }
    Ok(ln_supnorm(n, alpha).exp())
}

/// Gegenbauer polynomials of one index with cached norms.
#[derive(Debug, Clone, PartialEq)]
pub struct GegenbauerBasis {
    pub alpha: f64,
    pub n_max: usize,
    pub norms: Vec<f64>,
}

impl GegenbauerBasis {
    pub fn new(alpha: f64, n_max: usize) -> Result<Self> {
        check_alpha(alpha)?;
        let norms = (0..=n_max).map(|n| ln_norm(n, alpha).exp()).collect();
        Ok(GegenbauerBasis { alpha, n_max, norms })
    }

    pub fn values(&self, x: f64) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n_max + 1);
        gegenbauer_values(self.n_max, self.alpha, x, &mut v);
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `δ >= 2`: the process never reaches the boundary.
    Live,
    /// `δ < 2`: the process is killed on hitting the boundary.
    Killed,
}

/// Survival probability together with its one-term approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Survival {
    pub probability: f64,
    pub proxy: f64,
}

/// Transition law of `Y = cos X` as a truncated Gegenbauer series.
#[derive(Debug, Clone, PartialEq)]
pub struct BesselLaw {
    pub delta: f64,
    pub n_max: usize,
    pub regime: Regime,
    basis: GegenbauerBasis,
}

impl BesselLaw {
    pub fn new(delta: f64) -> Result<Self> {
        Self::with_order(delta, DEFAULT_ORDER)
    }

    pub fn with_order(delta: f64, n_max: usize) -> Result<Self> {
        if !delta.is_finite() {
            return Err(SleError::InvalidInput(format!("delta must be finite, got {delta}")));
        }
        let regime = if delta >= 2.0 { Regime::Live } else { Regime::Killed };
        let alpha = match regime {
            Regime::Live => 0.5 * delta - 0.5,
            Regime::Killed => 1.5 - 0.5 * delta,
        };
        Ok(BesselLaw { delta, n_max, regime, basis: GegenbauerBasis::new(alpha, n_max)? })
    }

    /// Gegenbauer index of the series.
    pub fn alpha(&self) -> f64 {
        self.basis.alpha
    }

    /// Decay rate of the `n`-th series term.
    pub fn rate(&self, n: usize) -> f64 {
        let n = n as f64;
        match self.regime {
            Regime::Live => 0.5 * n * (n + self.delta - 1.0),
            Regime::Killed => 0.5 * (n + 1.0) * (n + 2.0 - self.delta),
        }
    }

    /// Log of `supnorm² / norm · e^{-rate t}`, which bounds the `n`-th term
    /// uniformly in `x, y` (the weights are at most one).
    fn ln_term_bound(&self, n: usize, t: f64) -> f64 {
        let a = self.alpha();
        2.0 * ln_supnorm(n, a) - ln_norm(n, a) - self.rate(n) * t
    }

    /// Smallest order whose remainder bound is below [`TAIL_TOLERANCE`].
    pub fn required_order(&self, t: f64) -> Result<usize> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(SleError::InvalidInput(format!("t must be positive, got {t}")));
        }
        const HARD_CAP: usize = 1 << 20;
        let mut bounds = Vec::new();
        let mut prev = f64::INFINITY;
        for n in 0..HARD_CAP {
            let b = self.ln_term_bound(n, t);
            bounds.push(b);
            if b < -80.0 && b < prev {
                break;
            }
            prev = b;
        }
        if bounds.len() == HARD_CAP {
            return Err(SleError::IncreaseOrder { t, required: HARD_CAP });
        }
        let mut tail = 0.0;
        for (n, b) in bounds.iter().enumerate().rev() {
            let term = b.exp();
            if tail + term >= TAIL_TOLERANCE {
                return Ok(n);
            }
            tail += term;
        }
        Ok(0)
    }

    /// Remainder bound after truncating at `order`.
    pub fn tail_bound(&self, t: f64, order: usize) -> f64 {
        let mut tail = 0.0;
        let mut n = order + 1;
        loop {
            let b = self.ln_term_bound(n, t);
            tail += b.exp();
            if b < -80.0 && b < self.ln_term_bound(n - 1, t) {
                return tail;
            }
            n += 1;
        }
    }

    /// `e^{-rate_n t} / norm_n` for `n` up to the required order.
    fn coefficients(&self, t: f64) -> Result<Vec<f64>> {
        let order = self.required_order(t)?;
        if order > self.n_max {
            return Err(SleError::IncreaseOrder { t, required: order });
        }
        Ok((0..=order).map(|n| (-self.rate(n) * t).exp() / self.basis.norms[n]).collect())
    }

    fn series(&self, coef: &[f64], x: f64, y: f64) -> f64 {
        let a = self.alpha();
        let n = coef.len() - 1;
        let (mut cx, mut cy) = (Vec::with_capacity(n + 1), Vec::with_capacity(n + 1));
        gegenbauer_values(n, a, x, &mut cx);
        gegenbauer_values(n, a, y, &mut cy);
        coef.iter().zip(cx.iter().zip(&cy)).map(|(c, (u, v))| c * u * v).sum()
    }

    fn require(&self, regime: Regime) -> Result<()> {
        if self.regime == regime {
            return Ok(());
        }
        Err(SleError::InvalidInput(match regime {
            Regime::Live => format!("delta = {} < 2: use the killed density", self.delta),
            Regime::Killed => format!("delta = {} >= 2: the process is never killed", self.delta),
        }))
    }

    /// Transition density of `Y` from `x` to `y` at time `t` (`δ >= 2`).
    pub fn transition_density_y(&self, t: f64, x: f64, y: f64) -> Result<f64> {
        self.require(Regime::Live)?;
        check_unit(x)?;
        check_unit(y)?;
        let coef = self.coefficients(t)?;
        Ok(weight(y, 0.5 * self.delta - 1.0) * self.series(&coef, x, y))
    }

    /// Transition density of `X` on `(0, π)`.
    pub fn transition_density_x(&self, t: f64, x: f64, y: f64) -> Result<f64> {
        check_angle(x)?;
        check_angle(y)?;
        Ok(self.transition_density_y(t, x.cos(), y.cos())? * y.sin())
    }

    /// Sub-probability density of `Y_t` on the event that the killed
    /// process is still alive (`δ < 2`).
    pub fn killed_density(&self, t: f64, x: f64, y: f64) -> Result<f64> {
        self.require(Regime::Killed)?;
        check_unit(x)?;
        check_unit(y)?;
        let coef = self.coefficients(t)?;
        Ok(weight(x, 1.0 - 0.5 * self.delta) * self.series(&coef, x, y))
    }

    /// Leading term of the killed density, which does not depend on `y`.
    pub fn killed_leading_term(&self, t: f64, x: f64) -> Result<f64> {
        self.require(Regime::Killed)?;
        check_unit(x)?;
        Ok(weight(x, 1.0 - 0.5 * self.delta) / self.basis.norms[0] * (-self.rate(0) * t).exp())
    }

    /// `P_x[T > t]` by quadrature of the killed density, and the proxy
    /// `2 p̃(t, x)` built from its leading term.
    pub fn survival_probability(&self, t: f64, x: f64) -> Result<Survival> {
        self.require(Regime::Killed)?;
        check_unit(x)?;
        let coef = self.coefficients(t)?;
        let n = coef.len() - 1;
        let a = self.alpha();
        let mut cx = Vec::new();
        gegenbauer_values(n, a, x, &mut cx);
        // ∫ C_k over [-1, 1] for every k at once
        let mut moments = vec![0.0; n + 1];
        let mut cy = Vec::with_capacity(n + 1);
        let rule = gauss_legendre();
        for (node, w) in rule.nodes().zip(rule.weights()) {
            gegenbauer_values(n, a, *node, &mut cy);
            for (m, v) in moments.iter_mut().zip(&cy) {
                *m += w * v;
            }
        }
        let sum: f64 = (0..=n).map(|k| coef[k] * cx[k] * moments[k]).sum();
        let probability = weight(x, 1.0 - 0.5 * self.delta) * sum;
        Ok(Survival { probability, proxy: 2.0 * self.killed_leading_term(t, x)? })
    }

    /// Density of `Y_t` started at `x0`, averaged over `grid` equal cells of
    /// `[-1, 1]`: rows `(x0, cell centre, t, value)`. Cell averages make the
    /// row sum times the cell width equal to the total mass.
    pub fn density_table(&self, t: f64, x0: f64, grid: usize) -> Result<Vec<[f64; 4]>> {
        if grid == 0 {
            return Err(SleError::InvalidInput("grid must be positive".into()));
        }
        check_unit(x0)?;
        let width = 2.0 / grid as f64;
        let rule = gauss_legendre();
        (0..grid)
            .map(|j| {
                let (lo, hi) = (-1.0 + j as f64 * width, -1.0 + (j + 1) as f64 * width);
                // y = cos θ removes the endpoint singularity of the weight
                let (th_lo, th_hi) = (hi.min(1.0).acos(), lo.max(-1.0).acos());
                let mut err = None;
                let mass = rule.integrate(th_lo, th_hi, |th| {
                    let y = th.cos();
                    let v = match self.regime {
                        Regime::Live => self.transition_density_y(t, x0, y),
                        Regime::Killed => self.killed_density(t, x0, y),
                    };
                    match v {
                        Ok(v) => v * th.sin(),
                        Err(e) => {
                            err.get_or_insert(e);
                            0.0
                        }
                    }
                });
                match err {
                    Some(e) => Err(e),
                    None => Ok([x0, 0.5 * (lo + hi), t, mass / width]),
                }
            })
            .collect()
    }
}

fn weight(x: f64, power: f64) -> f64 {
    if power == 0.0 {
        1.0
    } else {
        (1.0 - x * x).max(0.0).powf(power)
    }
}

fn check_unit(x: f64) -> Result<()> {
    if (-1.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(SleError::InvalidInput(format!("{x} is outside [-1, 1]")))
    }
}

fn check_angle(x: f64) -> Result<()> {
    if (0.0..=PI).contains(&x) {
        Ok(())
    } else {
        Err(SleError::InvalidInput(format!("{x} is outside [0, π]")))
    }
}

fn ln_stationary_normalizer(delta: f64) -> f64 {
    0.5 * PI.ln() + ln_gamma(0.5 * delta) - ln_gamma(0.5 * delta + 0.5)
}

/// Stationary density `∝ (1 - y²)^{δ/2 - 1}` of `Y`. Defined for all
/// `δ > 0`; below 2 it is the stationary law of the process that is
/// continued past the boundary rather than killed.
pub fn stationary_density_y(delta: f64, y: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(SleError::NoStationaryLaw { delta });
    }
    check_unit(y)?;
    Ok(weight(y, 0.5 * delta - 1.0) / ln_stationary_normalizer(delta).exp())
}

/// Stationary density of `X = arccos Y` on `[0, π]`.
pub fn stationary_density_x(delta: f64, x: f64) -> Result<f64> {
    check_angle(x)?;
    Ok(stationary_density_y(delta, x.cos())? * x.sin())
}

/// Scale function `h(x) = ∫_{π/2}^x sin(s)^{1-δ} ds`; `h(X)` is a local
/// martingale.
pub fn scale_function(delta: f64, x: f64) -> Result<f64> {
    if !(x > 0.0 && x < PI) {
        return Err(SleError::InvalidInput(format!("{x} is outside (0, π)")));
    }
    let p = 1.0 - delta;
    Ok(integrate_adaptive(FRAC_PI_2, x, 1e-13, &|s: f64| s.sin().powf(p)))
}

/// Euler–Maruyama path of `Y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePathY {
    pub dt: f64,
    pub y: Vec<f64>,
    /// First time the killed path reaches `±1`.
    pub lifetime: Option<f64>,
    /// Whether killing was requested; controls the `alive` CSV column.
    pub killed: bool,
}

impl SamplePathY {
    /// Columns `t, y` and, for killed paths, `alive`.
    pub fn write_csv<W: Write>(&self, out: W, comment: Option<&str>) -> Result<()> {
        let mut header = vec!["t", "y"];
        if self.killed {
            header.push("alive");
        }
        let rows = self.y.iter().enumerate().map(|(k, &y)| {
            let t = k as f64 * self.dt;
            let mut row = vec![t, y];
            if self.killed {
                let alive = self.lifetime.map_or(true, |l| t < l);
                row.push(if alive { 1.0 } else { 0.0 });
            }
            row
        });
        write_table(out, comment, &header, rows)
    }
}

/// Euler–Maruyama for `Y` with diffusion coefficient `sqrt((1 - y²) ∨ 0)`,
/// clamped to `[-1, 1]`. With `killed` and `δ < 2` the first step that
/// reaches `±1` sets the lifetime and the path is frozen from then on;
/// otherwise the path runs to the end.
pub fn sample_y_path(delta: f64, y0: f64, t: f64, steps: usize, seed: u64, killed: bool) -> Result<SamplePathY> {
    if !(y0 > -1.0 && y0 < 1.0) {
        return Err(SleError::InvalidInput(format!("y0 = {y0} is outside (-1, 1)")));
    }
    if !(t > 0.0 && t.is_finite()) || steps == 0 || !delta.is_finite() {
        return Err(SleError::InvalidInput("need t > 0, steps > 0 and finite delta".into()));
    }
    let dt = t / steps as f64;
    let sq = dt.sqrt();
    let kill = killed && delta < 2.0;
    let mut rng = rng_from_seed(seed);
    let mut y = Vec::with_capacity(steps + 1);
    y.push(y0);
    let mut cur = y0;
    let mut lifetime = None;
    for k in 0..steps {
        if lifetime.is_none() {
            let xi: f64 = rng.sample(StandardNormal);
            let q = (1.0 - cur * cur).max(0.0).sqrt();
            cur = (cur - q * sq * xi - 0.5 * delta * cur * dt).clamp(-1.0, 1.0);
            if kill && cur.abs() >= 1.0 {
                lifetime = Some((k + 1) as f64 * dt);
            }
        }
        y.push(cur);
    }
    Ok(SamplePathY { dt, y, lifetime, killed })
}

/// Euler–Maruyama for `X` itself.
///
/// Near the boundary the step is refined so that the `cot` drift stays
/// small relative to the distance to the boundary. Without killing,
/// overshoots are reflected back into `(0, π)`. With killing, a step ends
/// the path if it leaves the interval or if the Brownian bridge between the
/// two end points would have crossed the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XSampler {
    pub delta: f64,
    pub dt: f64,
    pub killed: bool,
}

/// End state of one [`XSampler`] run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XOutcome {
    pub x: f64,
    pub lifetime: Option<f64>,
}

impl XSampler {
    pub fn new(delta: f64, dt: f64, killed: bool) -> Result<Self> {
        if !(dt > 0.0) || !delta.is_finite() {
            return Err(SleError::InvalidInput("need dt > 0 and finite delta".into()));
        }
        Ok(XSampler { delta, dt, killed: killed && delta < 2.0 })
    }

    pub fn run<R: Rng>(&self, x0: f64, t_end: f64, rng: &mut R) -> XOutcome {
        let b = 0.5 * (self.delta - 1.0);
        let mut x = x0;
        let mut t = 0.0;
        while t < t_end {
            let d = x.min(PI - x);
            let mut h = self.dt.min(t_end - t);
            if b != 0.0 {
                h = h.min((0.05 * d * d / b.abs()).max(1e-4 * self.dt));
            }
            let xi: f64 = rng.sample(StandardNormal);
            let mut next = x + b / x.tan() * h + h.sqrt() * xi;
            t += h;
            if self.killed {
                // the hit happened somewhere inside the step; its midpoint
                // halves the bias of the recorded lifetime
                let hit = t - 0.5 * h;
                if next <= 0.0 || next >= PI {
                    return XOutcome { x: next.clamp(0.0, PI), lifetime: Some(hit) };
                }
                let cross = (-2.0 * x * next / h).exp() + (-2.0 * (PI - x) * (PI - next) / h).exp();
                if rng.gen::<f64>() < cross {
                    return XOutcome { x: next, lifetime: Some(hit) };
                }
            } else {
                while !(next > 0.0 && next < PI) {
                    next = if next <= 0.0 { -next } else { 2.0 * PI - next };
                    if next == 0.0 {
                        next = f64::MIN_POSITIVE;
                    }
                }
            }
            x = next;
        }
        XOutcome { x, lifetime: None }
    }
}

/// Runs `paths` independent copies in parallel; path `i` uses the stream
/// from `replica_rng(seed, i)`.
pub fn sample_x_ensemble(sampler: &XSampler, x0: f64, t_end: f64, paths: usize, seed: u64) -> Vec<XOutcome> {
    (0..paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(seed, i);
            sampler.run(x0, t_end, &mut rng)
        })
        .collect()
}
