//! Ergodic averages of the harmonic measure seen from infinity.
//!
//! For a whole-plane SLE(κ;ρ) curve the gap `Z = λ - q` is stationary with
//! law `μ ∝ sin(x/2)^p`, `p = (4/κ)(ρ/2 + 1)`, and long capacity-time
//! averages of `f(Z)` converge to `∫ f dμ`. The tip of a chordal SLE_κ
//! curve looks like such a curve with `ρ = κ + 2` (so `p = 8/κ + 2`), and
//! the end of a radial SLE_κ curve like one with `ρ = 0` (so `p = 4/κ`).
//! The experiments here unzip simulated curves from the tip outward and
//! compare the resulting averages against quadrature.

use std::f64::consts::PI;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::csvio::write_table;
use crate::error::{Result, SleError};
use crate::loewner::{compute_trace, unzip_wholeplane, DrivingPath, ExtractOptions, Kind, C64};
use crate::numerics::{integrate_adaptive, interp_linear, replica_seed, rng_from_seed, sin2};
use crate::sle::{sample_brownian_driving, sample_wholeplane_driving, DiffusionPath, Sigma, SleParams, StationaryLaw};
use crate::stats::{batch_means_stderr, ks_two_sample, mean_and_stderr, KsResult};

/// Version of the JSON report layout.
pub const SCHEMA_VERSION: u32 = 1;
/// Share of the usable capacity range, counted from the deep end, that
/// enters a tip average.
pub const WINDOW_FRACTION: f64 = 0.6;
/// Batches used for the time-average standard error.
pub const BATCHES: usize = 50;
/// Largest tolerated share of failed replicas.
pub const MAX_DROP_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestFunction {
    One,
    Cos,
    Sin,
}

impl TestFunction {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            TestFunction::One => 1.0,
            TestFunction::Cos => x.cos(),
            TestFunction::Sin => x.sin(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TestFunction::One => "one",
            TestFunction::Cos => "cos",
            TestFunction::Sin => "sin",
        }
    }
}

impl FromStr for TestFunction {
    type Err = SleError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one" | "1" | "const" => Ok(TestFunction::One),
            "cos" => Ok(TestFunction::Cos),
            "sin" => Ok(TestFunction::Sin),
            _ => Err(SleError::InvalidInput(format!("unknown test function {s:?} (one, cos, sin)"))),
        }
    }
}

/// `∫ f sin(x/2)^p dx / ∫ sin(x/2)^p dx` over `(0, 2π)`.
pub fn analytic_average(f: TestFunction, p: f64) -> Result<f64> {
    if !(p > -1.0 && p.is_finite()) {
        return Err(SleError::InvalidInput(format!("sin(x/2)^{p} is not integrable")));
    }
    // fold onto [0, π] and put x = s^m, which cancels the x^p singularity at 0
    let m = (1.0 / (p + 1.0)).ceil().max(1.0);
    let w = |x: f64| sin2(x).max(0.0).powf(p);
    let jac = |s: f64| m * s.powf(m - 1.0);
    let top = PI.powf(1.0 / m);
    let num = integrate_adaptive(0.0, top, 1e-13, &|s: f64| {
        let x = s.powf(m);
        (f.eval(x) + f.eval(2.0 * PI - x)) * w(x) * jac(s)
    });
    let den = integrate_adaptive(0.0, top, 1e-13, &|s: f64| 2.0 * w(s.powf(m)) * jac(s));
    Ok(num / den)
}

/// Closed form of the cosine average: `-p / (p + 2)`.
pub fn cos_average_closed_form(p: f64) -> f64 {
    -p / (p + 2.0)
}

/// Empirical average against its stationary target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgodicReport {
    pub schema_version: u32,
    pub experiment: String,
    pub test_function: TestFunction,
    /// Exponent `p` of the stationary weight `sin(x/2)^p`.
    pub exponent: f64,
    pub empirical: f64,
    pub analytic: f64,
    pub stderr: f64,
    /// Capacity length averaged over (per replica, mean over replicas).
    pub horizon: f64,
    pub replicas: usize,
    pub dropped: usize,
    pub window_fraction: Option<f64>,
    /// Bias bound for truncated futures (radial experiment only).
    pub truncation_estimate: Option<f64>,
    /// Set when the standard error exceeds the requested tolerance.
    pub flagged: bool,
    pub config: serde_json::Value,
}

impl ErgodicReport {
    pub fn deviation(&self) -> f64 {
        self.empirical - self.analytic
    }

    /// Deviation in units of the standard error.
    pub fn z_score(&self) -> f64 {
        self.deviation() / self.stderr
    }
}

/// Exponent of the stationary law claimed by a path.
fn path_exponent(path: &DiffusionPath) -> Result<f64> {
    let law = path.law.ok_or_else(|| SleError::InvalidInput("path carries no law tag".into()))?;
    Ok(4.0 / law.kappa * law.sigma.sign() * (0.5 * law.rho + 1.0))
}

/// Trapezoid time average of `f(Z)` over the whole path, with a batch-means
/// standard error. A standard error above `tolerance` flags the report but
/// is not an error.
pub fn diffusion_time_average(path: &DiffusionPath, f: TestFunction, tolerance: Option<f64>) -> Result<ErgodicReport> {
    let p = path_exponent(path)?;
    if path.len() < 2 * BATCHES + 1 {
        return Err(SleError::InvalidInput(format!("path too short for {BATCHES} batches")));
    }
    let cells: Vec<f64> = path.z.windows(2).map(|w| 0.5 * (f.eval(w[0]) + f.eval(w[1]))).collect();
    let empirical = cells.iter().sum::<f64>() / cells.len() as f64;
    let stderr = batch_means_stderr(&cells, BATCHES);
    let law = path.law.expect("checked above");
    Ok(ErgodicReport {
        schema_version: SCHEMA_VERSION,
        experiment: "diffusion".into(),
        test_function: f,
        exponent: p,
        empirical,
        analytic: analytic_average(f, p)?,
        stderr,
        horizon: cells.len() as f64 * path.dt,
        replicas: 1,
        dropped: 0,
        window_fraction: None,
        truncation_estimate: None,
        flagged: tolerance.is_some_and(|t| stderr > t),
        config: serde_json::json!({
            "kappa": law.kappa, "rho": law.rho, "sigma": law.sigma,
            "t0": path.t0, "dt": path.dt, "steps": cells.len(),
        }),
    })
}

/// One point of a tip stream: the piece of the curve after parameter `s`
/// has whole-plane capacity `v` and its right side carries harmonic measure
/// `h` seen from infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TipRecord {
    pub s: f64,
    pub v: f64,
    pub h: f64,
}

pub fn write_tip_records<W: Write>(records: &[TipRecord], out: W, comment: Option<&str>) -> Result<()> {
    write_table(out, comment, &["s", "v", "h"], records.iter().map(|r| vec![r.s, r.v, r.h]))
}

/// Unzips `curve` (anchored at 0) and labels entry `j` with the parameter
/// `param(index_j)`. Records come out with `v` increasing.
fn tip_records_of(curve: &[C64], param: impl Fn(usize) -> f64) -> Result<Vec<TipRecord>> {
    let u = unzip_wholeplane(curve, &ExtractOptions::default())?;
    let z = u.z();
    Ok((0..u.cap.len())
        .map(|j| TipRecord { s: param(u.index[j]), v: u.cap[j], h: z[j] / (2.0 * PI) })
        .collect())
}

/// Tip stream of a chordal trace stopped at its last grid time: the curve
/// is reversed and translated so that the tip sits at the origin.
pub fn chordal_tip_records(points: &[C64], t0: f64, dt: f64) -> Result<Vec<TipRecord>> {
    let n = points.len() - 1;
    let tip = points[n];
    let curve: Vec<C64> = (0..=n).map(|j| points[n - j] - tip).collect();
    tip_records_of(&curve, |j| t0 + (n - j) as f64 * dt)
}

/// Tip stream of a radial trace heading to 0. The part of the future after
/// the last grid time is replaced by the segment from the last point to 0.
pub fn radial_tip_records(points: &[C64], t0: f64, dt: f64) -> Result<Vec<TipRecord>> {
    let n = points.len() - 1;
    let mut curve = Vec::with_capacity(n + 2);
    curve.push(C64::new(0.0, 0.0));
    curve.extend((0..=n).map(|j| points[n - j]));
    tip_records_of(&curve, |j| t0 + (n + 1 - j.max(1)) as f64 * dt)
}

/// Capacity-weighted average of `f(2πh)` over `v ∈ [lo, hi]`, with `h`
/// linear in `v` between records.
pub fn window_average(records: &[TipRecord], f: TestFunction, lo: f64, hi: f64) -> Result<f64> {
    if !(hi > lo) {
        return Err(SleError::InvalidInput(format!("empty capacity window [{lo}, {hi}]")));
    }
    let (mut acc, mut len) = (0.0, 0.0);
    for w in records.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (v0, v1) = (a.v.max(lo), b.v.min(hi));
        if v1 <= v0 {
            continue;
        }
        let at = |v: f64| a.h + (b.h - a.h) * (v - a.v) / (b.v - a.v);
        let (h0, h1) = (at(v0), at(v1));
        // Simpson on the clipped piece
        let hm = 0.5 * (h0 + h1);
        let g = |h: f64| f.eval(2.0 * PI * h);
        // weights applied after the 1-4-1 mean so that f = 1 gives exactly 1
        acc += (v1 - v0) * ((g(h0) + 4.0 * g(hm) + g(h1)) / 6.0);
        len += v1 - v0;
    }
    if len <= 0.0 {
        return Err(SleError::InvalidInput(format!("no records inside [{lo}, {hi}]")));
    }
    Ok(acc / len)
}

/// Deepest `fraction` of the capacity range `[lo, hi]`.
fn deep_window(lo: f64, hi: f64, fraction: f64) -> (f64, f64) {
    (lo, lo + fraction * (hi - lo))
}

/// Outcome of one tip replica.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TipReplica {
    pub index: usize,
    pub records: Vec<TipRecord>,
    pub window: (f64, f64),
    pub average: f64,
}

/// Replicas plus the aggregate report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TipExperiment {
    pub report: ErgodicReport,
    pub replicas: Vec<TipReplica>,
}

impl TipExperiment {
    /// Running average from the deep end of each window, averaged over
    /// replicas: rows `(depth, running_average, replicas)` on `points`
    /// depths spanning the shortest window.
    pub fn running_average(&self, f: TestFunction, points: usize) -> Result<Vec<[f64; 3]>> {
        let span = self.replicas.iter().map(|r| r.window.1 - r.window.0).fold(f64::INFINITY, f64::min);
        if self.replicas.is_empty() || !(span > 0.0) || points == 0 {
            return Ok(Vec::new());
        }
        (1..=points)
            .map(|k| {
                let d = span * k as f64 / points as f64;
                let vals = self
                    .replicas
                    .iter()
                    .map(|r| window_average(&r.records, f, r.window.0, r.window.0 + d))
                    .collect::<Result<Vec<f64>>>()?;
                Ok([d, vals.iter().sum::<f64>() / vals.len() as f64, vals.len() as f64])
            })
            .collect()
    }

    pub fn write_running_average<W: Write>(&self, f: TestFunction, points: usize, out: W, comment: Option<&str>) -> Result<()> {
        let rows = self.running_average(f, points)?;
        write_table(out, comment, &["depth", "running_average", "replicas"], rows.iter().map(|r| r.to_vec()))
    }
}

fn check_drops(dropped: usize, replicas: usize) -> Result<()> {
    if dropped as f64 > MAX_DROP_FRACTION * replicas as f64 {
        return Err(SleError::TooManyDrops { dropped, replicas });
    }
    Ok(())
}

fn aggregate(
    experiment: &str,
    f: TestFunction,
    p: f64,
    replicas: Vec<TipReplica>,
    requested: usize,
    truncation_estimate: Option<f64>,
    config: serde_json::Value,
) -> Result<TipExperiment> {
    let dropped = requested - replicas.len();
    check_drops(dropped, requested)?;
    let avgs: Vec<f64> = replicas.iter().map(|r| r.average).collect();
    let (empirical, stderr) = mean_and_stderr(&avgs);
    let horizon = replicas.iter().map(|r| r.window.1 - r.window.0).sum::<f64>() / replicas.len() as f64;
    let report = ErgodicReport {
        schema_version: SCHEMA_VERSION,
        experiment: experiment.into(),
        test_function: f,
        exponent: p,
        empirical,
        analytic: analytic_average(f, p)?,
        stderr,
        horizon,
        replicas: replicas.len(),
        dropped,
        window_fraction: Some(WINDOW_FRACTION),
        truncation_estimate,
        flagged: false,
        config,
    };
    Ok(TipExperiment { report, replicas })
}

/// Parameters of the chordal tip experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChordalTipConfig {
    pub kappa: f64,
    pub t0: f64,
    pub steps: usize,
    pub replicas: usize,
    pub seed: u64,
    pub f: TestFunction,
}

/// Per replica: chordal SLE_κ on `[0, t0]`, tip stream of the reversed
/// curve, average of `f(2πh)` over the deepest window. The target exponent
/// is `p = 8/κ + 2`.
pub fn chordal_tip_experiment(cfg: &ChordalTipConfig) -> Result<TipExperiment> {
    if !(cfg.kappa > 0.0 && cfg.kappa < 4.0) {
        return Err(SleError::InvalidInput(format!("kappa must lie in (0, 4), got {}", cfg.kappa)));
    }
    if cfg.steps < 1000 || cfg.replicas == 0 || !(cfg.t0 > 0.0) {
        return Err(SleError::InvalidInput("need steps >= 1000, replicas >= 1 and t0 > 0".into()));
    }
    let run = |i: usize| -> Result<TipReplica> {
        let d = sample_brownian_driving(cfg.kappa, cfg.t0, cfg.steps, replica_seed(cfg.seed, i))?;
        let tr = compute_trace(&d)?;
        let records = chordal_tip_records(&tr.points, 0.0, d.dt)?;
        let (lo, hi) = (records[0].v, records[records.len() - 1].v);
        let window = deep_window(lo, hi, WINDOW_FRACTION);
        let average = window_average(&records, cfg.f, window.0, window.1)?;
        Ok(TipReplica { index: i, records, window, average })
    };
    let replicas: Vec<TipReplica> = (0..cfg.replicas).into_par_iter().filter_map(|i| run(i).ok()).collect();
    let config = serde_json::to_value(cfg).expect("plain config");
    aggregate("chordal-tip", cfg.f, 8.0 / cfg.kappa + 2.0, replicas, cfg.replicas, None, config)
}

/// Capacity kept clear of the truncated end in the radial experiment.
pub const TRUNCATION_MARGIN: f64 = 2.0;

/// Parameters of the radial tip experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialTipConfig {
    pub kappa: f64,
    /// Radial capacity at which the future curve is cut off.
    pub t_future: f64,
    pub steps: usize,
    pub replicas: usize,
    pub seed: u64,
    pub f: TestFunction,
}

/// Usable window of a radial stream: the deepest [`WINDOW_FRACTION`] of
/// the range lying more than [`TRUNCATION_MARGIN`] above its deep end.
fn radial_window(records: &[TipRecord]) -> Result<(f64, f64)> {
    let lo = records[0].v + TRUNCATION_MARGIN;
    let hi = records[records.len() - 1].v;
    if !(hi > lo) {
        return Err(SleError::InvalidInput("radial horizon too short for the truncation margin".into()));
    }
    Ok(deep_window(lo, hi, WINDOW_FRACTION))
}

/// Radial SLE_κ on `[0, t_future]`. The unseen future `β([t_future, ∞])` is
/// replaced by a segment to 0. The report's truncation estimate is the mean
/// absolute change of the replica averages when the horizon is halved,
/// measured on the window of the halved run.
pub fn radial_tip_experiment(cfg: &RadialTipConfig) -> Result<TipExperiment> {
    if !(cfg.kappa > 0.0 && cfg.kappa <= 4.0) {
        return Err(SleError::InvalidInput(format!("kappa must lie in (0, 4], got {}", cfg.kappa)));
    }
    if cfg.steps < 2 || cfg.replicas == 0 || !(cfg.t_future > 0.0) {
        return Err(SleError::InvalidInput("need steps >= 2, replicas >= 1 and t_future > 0".into()));
    }
    let run = |i: usize| -> Result<(TipReplica, f64)> {
        let b = sample_brownian_driving(cfg.kappa, cfg.t_future, cfg.steps, replica_seed(cfg.seed, i))?;
        let d = DrivingPath::new(Kind::Radial, 0.0, b.dt, b.lambda, None)?;
        let tr = compute_trace(&d)?;
        let records = radial_tip_records(&tr.points, 0.0, d.dt)?;
        let window = radial_window(&records)?;
        let average = window_average(&records, cfg.f, window.0, window.1)?;
        let half = radial_tip_records(&tr.points[..=cfg.steps / 2], 0.0, d.dt)?;
        let hw = radial_window(&half)?;
        let change = (window_average(&records, cfg.f, hw.0, hw.1)? - window_average(&half, cfg.f, hw.0, hw.1)?).abs();
        Ok((TipReplica { index: i, records, window, average }, change))
    };
    let out: Vec<(TipReplica, f64)> = (0..cfg.replicas).into_par_iter().filter_map(|i| run(i).ok()).collect();
    let estimate = out.iter().map(|o| o.1).sum::<f64>() / out.len().max(1) as f64;
    let replicas = out.into_iter().map(|o| o.0).collect();
    let config = serde_json::to_value(cfg).expect("plain config");
    aggregate("radial-tip", cfg.f, 4.0 / cfg.kappa, replicas, cfg.replicas, Some(estimate), config)
}

/// Parameters of the reversibility check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReversibilityConfig {
    pub kappa: f64,
    pub replicas: usize,
    pub seed: u64,
    /// Force weight; `None` means `κ + 2`, the reversible case.
    pub rho: Option<f64>,
    /// Start capacity of the simulated whole-plane curves.
    pub t_start: f64,
    pub steps: usize,
    /// Capacity at which `Z` is compared.
    pub probe: f64,
    /// Bootstrap resamples for the rejection rate; 0 skips it.
    pub resamples: usize,
}

impl ReversibilityConfig {
    pub fn new(kappa: f64, replicas: usize, seed: u64) -> Self {
        ReversibilityConfig { kappa, replicas, seed, rho: None, t_start: -3.0, steps: 3000, probe: -1.0, resamples: 0 }
    }

    pub fn rho(&self) -> f64 {
        self.rho.unwrap_or(self.kappa + 2.0)
    }
}

/// Two-sample comparison of `Z(probe)` between forward curves and reversed
/// recentered curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReversibilityReport {
    pub schema_version: u32,
    pub kappa: f64,
    pub rho: f64,
    pub forward: Vec<f64>,
    pub reversed: Vec<f64>,
    pub ks: KsResult,
    /// First half of the forward sample against the second half.
    pub split_half: KsResult,
    /// Share of bootstrap resamples rejected at the 1% level.
    pub rejection_rate: Option<f64>,
    pub dropped: usize,
    pub config: serde_json::Value,
}

/// `Z` at capacity `probe` of the curve `γ(t_start .. 0)` reversed and
/// recentered at `γ(0)`, with the base point 0 appended.
fn reversed_z(points: &[C64], probe: f64) -> Result<f64> {
    let n = points.len() - 1;
    let end = points[n];
    let mut curve: Vec<C64> = (0..=n).map(|j| points[n - j] - end).collect();
    curve.push(-end);
    // capacity is at least log(diameter / 4), so everything past a prefix
    // of diameter 4 e^{probe + 0.5} lies beyond the probe
    let reach = 4.0 * (probe + 0.5).exp();
    let mut cut = curve.len();
    for (j, z) in curve.iter().enumerate() {
        if z.norm() > reach {
            cut = (j + 1).min(curve.len());
            break;
        }
    }
    let u = unzip_wholeplane(&curve[..cut], &ExtractOptions::default())?;
    let last = *u.cap.last().expect("non-empty");
    if !(u.cap[0] < probe && last > probe) {
        return Err(SleError::InvalidInput(format!("capacity {probe} is outside [{}, {last}]", u.cap[0])));
    }
    Ok(interp_linear(&u.cap, &u.z(), probe))
}

fn forward_z(params: &SleParams, cfg: &ReversibilityConfig) -> Result<f64> {
    let d = sample_wholeplane_driving(params, cfg.t_start, cfg.steps)?;
    let k = d.grid_index(cfg.probe)?;
    let q = d.q.as_ref().expect("whole-plane drivers carry q");
    Ok(d.lambda[k] - q[k])
}

/// Reversed and forward ensembles of `Z(probe)`. Forward values come from
/// an independent set of replicas so that the two samples are independent.
pub fn reversibility_check(cfg: &ReversibilityConfig) -> Result<ReversibilityReport> {
    if !(cfg.kappa > 0.0 && cfg.kappa < 4.0) {
        return Err(SleError::InvalidInput(format!("kappa must lie in (0, 4), got {}", cfg.kappa)));
    }
    if cfg.replicas < 4 || !(cfg.t_start < cfg.probe && cfg.probe < 0.0) {
        return Err(SleError::InvalidInput("need replicas >= 4 and t_start < probe < 0".into()));
    }
    let rho = cfg.rho();
    let params = |seed: u64| SleParams::new(cfg.kappa, rho, Sigma::Forward, seed);
    let reversed: Vec<f64> = (0..cfg.replicas)
        .into_par_iter()
        .filter_map(|i| {
            let d = sample_wholeplane_driving(&params(replica_seed(cfg.seed, i)), cfg.t_start, cfg.steps).ok()?;
            let tr = compute_trace(&d).ok()?;
            reversed_z(&tr.points, cfg.probe).ok()
        })
        .collect();
    let dropped = cfg.replicas - reversed.len();
    check_drops(dropped, cfg.replicas)?;
    let fwd_base = replica_seed(cfg.seed, usize::MAX);
    let forward = (0..cfg.replicas)
        .into_par_iter()
        .map(|i| forward_z(&params(replica_seed(fwd_base, i)), cfg))
        .collect::<Result<Vec<f64>>>()?;
    let half = forward.len() / 2;
    let ks = ks_two_sample(&forward, &reversed);
    let split_half = ks_two_sample(&forward[..half], &forward[half..]);
    let rejection_rate = (cfg.resamples > 0).then(|| {
        let mut rng = rng_from_seed(replica_seed(cfg.seed, usize::MAX - 1));
        bootstrap_rejection_rate(&forward, &reversed, cfg.resamples, 0.01, &mut rng)
    });
    Ok(ReversibilityReport {
        schema_version: SCHEMA_VERSION,
        kappa: cfg.kappa,
        rho,
        forward,
        reversed,
        ks,
        split_half,
        rejection_rate,
        dropped,
        config: serde_json::to_value(cfg).expect("plain config"),
    })
}

/// Share of bootstrap resamples (with replacement, original sizes) whose
/// two-sample KS test rejects at `level`: an estimate of the power of the
/// test against the alternative the two samples represent.
pub fn bootstrap_rejection_rate<R: rand::Rng>(a: &[f64], b: &[f64], resamples: usize, level: f64, rng: &mut R) -> f64 {
    let draw = |xs: &[f64], rng: &mut R| -> Vec<f64> { (0..xs.len()).map(|_| xs[rng.gen_range(0..xs.len())]).collect() };
    let mut rejected = 0;
    for _ in 0..resamples {
        let (ra, rb) = (draw(a, rng), draw(b, rng));
        if !ks_two_sample(&ra, &rb).passes(level) {
            rejected += 1;
        }
    }
    rejected as f64 / resamples as f64
}

/// Stationary law of `Z` for whole-plane SLE(κ;ρ).
pub fn wholeplane_stationary_law(kappa: f64, rho: f64) -> Result<StationaryLaw> {
    StationaryLaw::new(crate::sle::delta_of(kappa, rho, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sle::sample_stationary;
    use approx::assert_relative_eq;

    #[test]
    fn analytic_examples() {
        for p in [0.5, 1.0, 2.0, 4.0, 6.0] {
            assert_relative_eq!(analytic_average(TestFunction::One, p).unwrap(), 1.0, epsilon = 1e-12);
            assert!(analytic_average(TestFunction::Sin, p).unwrap().abs() < 1e-12);
            assert_relative_eq!(
                analytic_average(TestFunction::Cos, p).unwrap(),
                cos_average_closed_form(p),
                epsilon = 1e-10
            );
        }
        assert_relative_eq!(analytic_average(TestFunction::Cos, 4.0).unwrap(), -2.0 / 3.0, epsilon = 1e-10);
        assert!(analytic_average(TestFunction::One, -1.0).is_err());
    }

    #[test]
    fn parse_test_functions() {
        assert_eq!("cos".parse::<TestFunction>().unwrap(), TestFunction::Cos);
        assert_eq!("one".parse::<TestFunction>().unwrap(), TestFunction::One);
        assert!("tan".parse::<TestFunction>().is_err());
    }

    #[test]
    fn constant_time_average_is_exact() {
        let params = SleParams::new(4.0, 6.0, Sigma::Forward, 3);
        let path = sample_stationary(&params, 50.0, 5000).unwrap();
        let r = diffusion_time_average(&path, TestFunction::One, None).unwrap();
        assert_eq!(r.empirical, 1.0);
        assert_eq!(r.exponent, 4.0);
        assert_relative_eq!(r.horizon, 50.0, epsilon = 1e-9);
    }

    #[test]
    fn window_average_of_linear_stream() {
        let recs: Vec<TipRecord> = (0..11)
            .map(|k| TipRecord { s: -(k as f64), v: k as f64, h: 0.05 * k as f64 })
            .collect();
        assert_relative_eq!(window_average(&recs, TestFunction::One, 0.0, 10.0).unwrap(), 1.0);
        // cos(2πh) with h = v/20 over [0, 10]: (1/10) ∫ cos(πv/10) dv = 0
        assert!(window_average(&recs, TestFunction::Cos, 0.0, 10.0).unwrap().abs() < 1e-4);
        assert!(window_average(&recs, TestFunction::Cos, 20.0, 30.0).is_err());
    }

    #[test]
    fn chordal_stream_invariants() {
        let d = sample_brownian_driving(2.0, 1.0, 1000, 4).unwrap();
        let tr = compute_trace(&d).unwrap();
        let recs = chordal_tip_records(&tr.points, 0.0, d.dt).unwrap();
        for w in recs.windows(2) {
            assert!(w[1].v > w[0].v && w[1].s < w[0].s);
        }
        assert!(recs.iter().all(|r| r.h > 0.0 && r.h < 1.0));
    }

    #[test]
    fn bootstrap_rate_detects_a_shift() {
        let a: Vec<f64> = (0..200).map(|k| k as f64 / 200.0).collect();
        let b: Vec<f64> = a.iter().map(|x| x + 0.3).collect();
        let mut rng = rng_from_seed(1);
        assert!(bootstrap_rejection_rate(&a, &b, 50, 0.01, &mut rng) > 0.9);
        assert!(bootstrap_rejection_rate(&a, &a, 50, 0.01, &mut rng) < 0.5);
    }
}
