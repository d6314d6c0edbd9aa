//! Random driving functions: Brownian SLE drivers and the SLE(κ;ρ) system
//! with a force point.
//!
//! With `Z = λ - q` the system reads
//!
//! ```text
//! dZ = sqrt(κ) dB + σ (ρ/2 + 1) cot(Z/2) dt,    dq = -σ cot(Z/2) dt,
//! ```
//!
//! and `X_s = Z(4s/κ) / 2` is a radial Bessel process of dimension
//! `δ = (4/κ) σ (ρ/2 + 1) + 1`.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::csvio;
use crate::error::{Result, SleError};
use crate::loewner::{DrivingPath, Kind};
use crate::numerics::{cot2, integrate, rng_from_seed};

/// Forward (`+1`) or backward (`-1`) Loewner direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sigma {
    Forward,
    Backward,
}

impl Sigma {
    pub fn sign(self) -> f64 {
        match self {
            Sigma::Forward => 1.0,
            Sigma::Backward => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SleParams {
    pub kappa: f64,
    pub rho: f64,
    pub sigma: Sigma,
    pub seed: u64,
    /// Admit `δ ∈ (1, 2)` for stationary constructions.
    #[serde(default)]
    pub extended_regime: bool,
}

impl SleParams {
    pub fn new(kappa: f64, rho: f64, sigma: Sigma, seed: u64) -> Self {
        SleParams { kappa, rho, sigma, seed, extended_regime: false }
    }

    pub fn delta(&self) -> f64 {
        delta_of(self.kappa, self.rho, self.sigma.sign())
    }

    /// Drift coefficient of `Z`: `σ (ρ/2 + 1)`.
    fn drift(&self) -> f64 {
        self.sigma.sign() * (0.5 * self.rho + 1.0)
    }

    fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(SleError::InvalidInput(format!("kappa must be positive, got {}", self.kappa)));
        }
        if !self.rho.is_finite() {
            return Err(SleError::InvalidInput("rho must be finite".into()));
        }
        Ok(())
    }

    fn check_stationary(&self) -> Result<()> {
        self.validate()?;
        let d = self.delta();
        let ok = if self.extended_regime { d > 1.0 } else { d >= 2.0 };
        if ok {
            Ok(())
        } else {
            Err(SleError::NoStationaryLaw { delta: d })
        }
    }
}

/// `δ = (4/κ) σ (ρ/2 + 1) + 1`.
pub fn delta_of(kappa: f64, rho: f64, sigma: f64) -> f64 {
    4.0 / kappa * sigma * (0.5 * rho + 1.0) + 1.0
}

/// Law a path claims to follow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LawTag {
    pub kappa: f64,
    pub rho: f64,
    pub sigma: Sigma,
}

/// Samples of `(λ, q, Z)` on a uniform grid starting at `t0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionPath {
    pub t0: f64,
    pub dt: f64,
    pub lambda: Vec<f64>,
    pub q: Vec<f64>,
    pub z: Vec<f64>,
    /// Time at which `Z` reached the boundary, when it did.
    pub lifetime: Option<f64>,
    pub law: Option<LawTag>,
}

impl DiffusionPath {
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// Driving path of the given kind carrying the force point.
    pub fn to_driving(&self, kind: Kind) -> Result<DrivingPath> {
        DrivingPath::new(kind, self.t0, self.dt, self.lambda.clone(), Some(self.q.clone()))
    }

    pub fn write_csv<W: Write>(&self, out: W, comment: Option<&str>) -> Result<()> {
        let rows = (0..self.len()).map(|k| vec![self.time(k), self.lambda[k], self.q[k], self.z[k]]);
        csvio::write_table(out, comment, &["t", "lambda", "q", "z"], rows)
    }
}

/// `λ = sqrt(κ) B` on `[0, t]`, `λ(0) = 0`.
pub fn sample_brownian_driving(kappa: f64, t: f64, steps: usize, seed: u64) -> Result<DrivingPath> {
    if !(kappa >= 0.0 && t > 0.0 && steps >= 2) {
        return Err(SleError::InvalidInput("need kappa >= 0, t > 0 and steps >= 2".into()));
    }
    let dt = t / steps as f64;
    let sd = (kappa * dt).sqrt();
    let mut rng = rng_from_seed(seed);
    let mut lambda = Vec::with_capacity(steps + 1);
    let mut x = 0.0;
    lambda.push(x);
    for _ in 0..steps {
        let n: f64 = rng.sample(StandardNormal);
        x += sd * n;
        lambda.push(x);
    }
    DrivingPath::new(Kind::Chordal, 0.0, dt, lambda, None)
}

/// Deepest recursion of the step-halving safeguard.
const MAX_HALVINGS: u32 = 40;

struct Stepper {
    c: f64,
    sqk: f64,
    sigma: f64,
    confine: bool,
}

impl Stepper {
    /// One Euler–Maruyama step of length `h` with Brownian increment `db`.
    /// Returns the new `Z` and the increment of `q`, or `None` if `Z` left
    /// `(0, 2π)` in the unconfined regime.
    fn step(&self, z: f64, h: f64, db: f64, rng: &mut ChaCha8Rng, depth: u32) -> Option<(f64, f64)> {
        let cz = cot2(z);
        let zp = z + self.c * cz * h + self.sqk * db;
        let dq = -self.sigma * cz * h;
        if zp > 0.0 && zp < 2.0 * PI {
            return Some((zp, dq));
        }
        if !self.confine {
            return None;
        }
        if depth >= MAX_HALVINGS {
            return Some((zp.clamp(1e-12, 2.0 * PI - 1e-12), dq));
        }
        // split the step, drawing the Brownian midpoint from the bridge
        let n: f64 = rng.sample(StandardNormal);
        let db1 = 0.5 * db + 0.5 * h.sqrt() * n;
        let (z1, q1) = self.step(z, 0.5 * h, db1, rng, depth + 1)?;
        let (z2, q2) = self.step(z1, 0.5 * h, db - db1, rng, depth + 1)?;
        Some((z2, q1 + q2))
    }
}

fn integrate_system(
    params: &SleParams,
    x: f64,
    y: f64,
    t0: f64,
    t: f64,
    steps: usize,
    rng: &mut ChaCha8Rng,
) -> Result<DiffusionPath> {
    if steps < 1 || !(t > 0.0) {
        return Err(SleError::InvalidInput("need t > 0 and steps >= 1".into()));
    }
    let z0 = x - y;
    if !(z0 > 0.0 && z0 < 2.0 * PI) {
        return Err(SleError::InvalidInput(format!("x - y = {z0} outside (0, 2π)")));
    }
    let dt = t / steps as f64;
    let st = Stepper {
        c: params.drift(),
        sqk: params.kappa.sqrt(),
        sigma: params.sigma.sign(),
        confine: params.delta() >= 2.0,
    };
    let mut p = DiffusionPath {
        t0,
        dt,
        lambda: Vec::with_capacity(steps + 1),
        q: Vec::with_capacity(steps + 1),
        z: Vec::with_capacity(steps + 1),
        lifetime: None,
        law: Some(LawTag { kappa: params.kappa, rho: params.rho, sigma: params.sigma }),
    };
    let (mut z, mut q) = (z0, y);
    p.lambda.push(x);
    p.q.push(y);
    p.z.push(z);
    let sdt = dt.sqrt();
    for k in 0..steps {
        let n: f64 = rng.sample(StandardNormal);
        match st.step(z, dt, sdt * n, rng, 0) {
            Some((zn, dq)) => {
                z = zn;
                q += dq;
            }
            None => {
                p.lifetime = Some(t0 + (k + 1) as f64 * dt);
                break;
            }
        }
        // store Z as the rounded difference so that λ - q = Z holds exactly
        let lam = q + z;
        z = lam - q;
        p.lambda.push(lam);
        p.q.push(q);
        p.z.push(z);
    }
    Ok(p)
}

/// Euler–Maruyama solution of the SLE(κ;ρ) system started from `λ(0) = x`,
/// `q(0) = y`. For `δ < 2` the path stops when `Z` reaches the boundary and
/// the exit time is reported as its lifetime.
pub fn sample_kappa_rho(params: &SleParams, x: f64, y: f64, t: f64, steps: usize) -> Result<DiffusionPath> {
    params.validate()?;
    let mut rng = rng_from_seed(params.seed);
    integrate_system(params, x, y, 0.0, t, steps, &mut rng)
}

/// Stationary law `μ_δ` of `Z`, density proportional to `sin(x/2)^{δ-1}`
/// on `(0, 2π)`, tabulated for inverse-CDF sampling.
#[derive(Debug, Clone)]
pub struct StationaryLaw {
    pub delta: f64,
    x: Arc<Vec<f64>>,
    cdf: Arc<Vec<f64>>,
}

/// Cells of the inverse-CDF table.
pub const TABLE_SIZE: usize = 4096;

impl StationaryLaw {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(SleError::NoStationaryLaw { delta });
        }
        let p = delta - 1.0;
        let h = 2.0 * PI / TABLE_SIZE as f64;
        let x: Vec<f64> = (0..=TABLE_SIZE).map(|i| i as f64 * h).collect();
        let rule = gauss_quad::GaussLegendre::new(8).expect("degree >= 2");
        let mut cdf = Vec::with_capacity(TABLE_SIZE + 1);
        let mut acc = 0.0;
        cdf.push(0.0);
        for i in 0..TABLE_SIZE {
            acc += rule.integrate(x[i], x[i + 1], |s| (0.5 * s).sin().max(0.0).powf(p));
            cdf.push(acc);
        }
        for c in cdf.iter_mut() {
            *c /= acc;
        }
        Ok(StationaryLaw { delta, x: Arc::new(x), cdf: Arc::new(cdf) })
    }

    pub fn cdf(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        if z >= 2.0 * PI {
            return 1.0;
        }
        crate::numerics::interp_linear(&self.x, &self.cdf, z)
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|&c| c <= u).clamp(1, TABLE_SIZE);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let w = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        self.x[i - 1] + w * (self.x[i] - self.x[i - 1])
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen();
        self.quantile(u).clamp(1e-12, 2.0 * PI - 1e-12)
    }

    /// `E[f(Z)]` by quadrature.
    pub fn mean(&self, f: impl Fn(f64) -> f64) -> f64 {
        let p = self.delta - 1.0;
        let w = |s: f64| (0.5 * s).sin().powf(p);
        integrate(0.0, 2.0 * PI, |s| f(s) * w(s)) / integrate(0.0, 2.0 * PI, w)
    }
}

/// Stationary SLE(κ;ρ) pair on `[t0, t0 + t]`: `Z(t0) ~ μ_δ`, `λ(t0)`
/// uniform on `[0, 2π)`.
pub fn sample_stationary_from(params: &SleParams, t0: f64, t: f64, steps: usize) -> Result<DiffusionPath> {
    params.check_stationary()?;
    let law = StationaryLaw::new(params.delta())?;
    let mut rng = rng_from_seed(params.seed);
    let x: f64 = rng.gen::<f64>() * 2.0 * PI;
    let z = law.sample(&mut rng);
    integrate_system(params, x, x - z, t0, t, steps, &mut rng)
}

/// Stationary SLE(κ;ρ) pair on `[0, t]`.
pub fn sample_stationary(params: &SleParams, t: f64, steps: usize) -> Result<DiffusionPath> {
    sample_stationary_from(params, 0.0, t, steps)
}

/// Whole-plane SLE(κ;ρ) driving on `[t_start, 0]`.
pub fn sample_wholeplane_driving(params: &SleParams, t_start: f64, steps: usize) -> Result<DrivingPath> {
    if params.sigma != Sigma::Forward {
        return Err(SleError::InvalidInput("whole-plane drivers use the forward sign".into()));
    }
    if !(t_start < 0.0) {
        return Err(SleError::InvalidInput("t_start must be negative".into()));
    }
    sample_stationary_from(params, t_start, -t_start, steps)?.to_driving(Kind::WholePlane)
}

/// Reverses a stationary backward path on `[0, t0]`: `λ_rev(s) = λ(t0 - s)`,
/// with `q` re-integrated under the forward sign from `q_rev(0) = q(t0)`.
/// The result claims the law of forward SLE(κ; -4 - ρ).
pub fn reverse_driving(path: &DiffusionPath, t0: f64) -> Result<DiffusionPath> {
    let x = (t0 - path.t0) / path.dt;
    let n = x.round();
    if (x - n).abs() > 1e-9 || n < 1.0 || n as usize >= path.len() {
        return Err(SleError::InvalidInput(format!("t0 = {t0} is not an interior grid time of the path")));
    }
    let n = n as usize;
    let lambda: Vec<f64> = (0..=n).map(|k| path.lambda[n - k]).collect();
    let mut q = Vec::with_capacity(n + 1);
    q.push(path.q[n]);
    for k in 0..n {
        let qk = q[k];
        q.push(qk + cot2(qk - lambda[k]) * path.dt);
    }
    let z = lambda.iter().zip(&q).map(|(l, q)| l - q).collect();
    let law = path.law.map(|l| LawTag {
        kappa: l.kappa,
        rho: -4.0 - l.rho,
        sigma: match l.sigma {
            Sigma::Forward => Sigma::Backward,
            Sigma::Backward => Sigma::Forward,
        },
    });
    Ok(DiffusionPath { t0: 0.0, dt: path.dt, lambda, q, z, lifetime: None, law })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn delta_values() {
        assert_eq!(delta_of(4.0, 2.0, 1.0), 3.0);
        for k in [0.5, 2.0, 4.0, 7.0] {
            assert_relative_eq!(delta_of(k, -k / 2.0 - 2.0, -1.0), 2.0, epsilon = 1e-12);
            assert_relative_eq!(delta_of(k, -k - 6.0, -1.0), 3.0 + 8.0 / k, epsilon = 1e-12);
            assert_relative_eq!(delta_of(k, -k - 6.0, -1.0), delta_of(k, k + 2.0, 1.0), epsilon = 1e-12);
        }
        assert_eq!(delta_of(4.0, -10.0, -1.0), 5.0);
    }

    #[test]
    fn brownian_driver_is_deterministic() {
        let a = sample_brownian_driving(2.0, 1.0, 100, 5).unwrap();
        let b = sample_brownian_driving(2.0, 1.0, 100, 5).unwrap();
        assert_eq!(a, b);
        let z = sample_brownian_driving(0.0, 1.0, 100, 5).unwrap();
        assert!(z.lambda.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn stationary_table() {
        let law = StationaryLaw::new(3.0).unwrap();
        assert_relative_eq!(law.cdf(PI), 0.5, epsilon = 1e-12);
        assert_relative_eq!(law.mean(f64::cos), -0.5, epsilon = 1e-12);
        // closed-form CDF for δ = 3: (x - sin x) / 2π
        for x in [0.3, 1.0, 2.0, 5.5] {
            assert_relative_eq!(law.cdf(x), (x - x.sin()) / (2.0 * PI), epsilon = 1e-6);
            assert_relative_eq!(law.quantile(law.cdf(x)), x, epsilon = 1e-6);
        }
    }

    #[test]
    fn confined_paths_stay_inside() {
        let p = SleParams::new(4.0, 2.0, Sigma::Forward, 3);
        let path = sample_stationary(&p, 50.0, 50_000).unwrap();
        assert!(path.z.iter().all(|&z| z > 0.0 && z < 2.0 * PI));
        for k in 0..path.len() {
            assert_eq!(path.lambda[k] - path.q[k], path.z[k]);
        }
        assert!(path.lifetime.is_none());
    }

    #[test]
    fn unconfined_paths_die() {
        // δ = 1: Z is a Brownian motion with no drift
        let p = SleParams::new(4.0, -2.0, Sigma::Forward, 9);
        let path = sample_kappa_rho(&p, 1.0, 0.0, 100.0, 100_000).unwrap();
        assert!(path.lifetime.is_some());
        assert_eq!(path.len() as f64 - 1.0, (path.lifetime.unwrap() / path.dt).round() - 1.0);
    }

    #[test]
    fn stationary_rejects_low_dimension() {
        let p = SleParams::new(4.0, -2.0, Sigma::Forward, 1);
        assert!(matches!(sample_stationary(&p, 1.0, 10), Err(SleError::NoStationaryLaw { .. })));
        let mut p = SleParams::new(4.0, -1.0, Sigma::Forward, 1);
        assert!(sample_stationary(&p, 1.0, 10).is_err());
        p.extended_regime = true;
        assert!(sample_stationary(&p, 1.0, 10).is_ok());
    }

    #[test]
    fn double_reversal() {
        let p = SleParams::new(2.0, -4.0, Sigma::Backward, 4);
        let path = sample_stationary(&p, 1.0, 1000).unwrap();
        let r = reverse_driving(&path, 1.0).unwrap();
        let rr = reverse_driving(&r, 1.0).unwrap();
        assert_eq!(rr.lambda, path.lambda);
        let law = r.law.unwrap();
        assert_eq!((law.rho, law.sigma), (0.0, Sigma::Forward));
    }
}
