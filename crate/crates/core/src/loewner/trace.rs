use serde::{Deserialize, Serialize};

use super::atom::{ElementaryMap, Realization};
use super::stack::WholePlaneSeed;
use super::{DrivingPath, Kind, Trace, C64};
use crate::error::{Result, SleError};

/// Options for [`compute_trace_with`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TraceOptions {
    pub realization: Realization,
    /// Offset of the starting point into the domain. Only the ODE
    /// realization needs one; `None` means `sqrt(dt) / 10` there and 0 for
    /// the closed form, which is exact at the driving point.
    pub epsilon: Option<f64>,
}

/// `β(t_k) = g_{t_k}^{-1}(driving point)` for every grid time.
pub fn compute_trace(driving: &DrivingPath) -> Result<Trace> {
    compute_trace_with(driving, &TraceOptions::default())
}

pub fn compute_trace_with(driving: &DrivingPath, opts: &TraceOptions) -> Result<Trace> {
    driving.validate()?;
    let kind = driving.kind;
    let atoms: Vec<ElementaryMap> = driving.lambda[1..]
        .iter()
        .map(|&l| ElementaryMap::new(kind, driving.dt, l).with_realization(opts.realization))
        .collect();
    let eps = match (opts.realization, opts.epsilon) {
        (_, Some(e)) => e,
        (Realization::ClosedFormSlit, None) => 0.0,
        (Realization::OdeStep, None) => driving.dt.sqrt() / 10.0,
    };
    let seed = (kind == Kind::WholePlane).then(|| WholePlaneSeed { angle: driving.lambda[0], cap: driving.t0 });
    let points = unwind(kind, &atoms, seed.as_ref(), &driving.lambda, eps)?;
    Ok(Trace { kind, t0: driving.t0, dt: driving.dt, points })
}

/// Whole-plane trace for steps of variable length: `steps[k] = (tau, lambda)`
/// after a seed segment of capacity `seed_cap` and angle `seed_angle`.
/// Returns one point per step plus the seed tip.
pub fn synthesize_wholeplane(seed_cap: f64, seed_angle: f64, steps: &[(f64, f64)]) -> Result<Vec<C64>> {
    let atoms: Vec<ElementaryMap> = steps.iter().map(|&(t, l)| ElementaryMap::new(Kind::WholePlane, t, l)).collect();
    let mut lambda = Vec::with_capacity(steps.len() + 1);
    lambda.push(seed_angle);
    lambda.extend(steps.iter().map(|s| s.1));
    let seed = WholePlaneSeed { angle: seed_angle, cap: seed_cap };
    unwind(Kind::WholePlane, &atoms, Some(&seed), &lambda, 0.0)
}

fn start_point(kind: Kind, lambda: f64, eps: f64) -> C64 {
    match kind {
        Kind::Chordal => C64::new(lambda, eps),
        Kind::Radial => C64::from_polar(1.0 - eps, lambda),
        Kind::WholePlane => C64::from_polar(1.0 + eps, lambda),
    }
}

fn unwind(
    kind: Kind,
    atoms: &[ElementaryMap],
    seed: Option<&WholePlaneSeed>,
    lambda: &[f64],
    eps: f64,
) -> Result<Vec<C64>> {
    let mut points = Vec::with_capacity(lambda.len());
    points.push(match seed {
        Some(s) => s.tip(),
        None => kind.boundary_point(lambda[0]),
    });
    for n in 1..lambda.len() {
        let mut w = start_point(kind, lambda[n], eps);
        for a in atoms[..n].iter().rev() {
            w = a.inverse(w);
        }
        if let Some(s) = seed {
            w = s.inverse(w);
        }
        if !w.is_finite() {
            return Err(SleError::NumericalBlowup { step: n });
        }
        points.push(w);
    }
    Ok(points)
}

/// The backward trace `β_{t0}`: points at grid times `t <= t0`, with
/// `β_{t0}(t0)` the root on the boundary.
///
/// Step `k` of the backward flow (from `t_{k-1}` to `t_k`) uses the sample
/// at its left end point, so that this equals the forward trace of the
/// reversed driving read backwards.
pub fn backward_trace(driving: &DrivingPath, t0: f64) -> Result<Trace> {
    if driving.kind == Kind::WholePlane {
        return Err(SleError::Unsupported("backward whole-plane traces".into()));
    }
    driving.validate()?;
    let n0 = driving.grid_index(t0)?;
    if n0 == 0 {
        return Ok(Trace {
            kind: driving.kind,
            t0: driving.t0,
            dt: driving.dt,
            points: vec![driving.kind.boundary_point(driving.lambda[0])],
        });
    }
    let reversed: Vec<f64> = (0..=n0).map(|m| driving.lambda[n0 - m]).collect();
    let rev = DrivingPath::new(driving.kind, 0.0, driving.dt, reversed, None)?;
    let mut points = compute_trace(&rev)?.points;
    points.reverse();
    Ok(Trace { kind: driving.kind, t0: driving.t0, dt: driving.dt, points })
}

/// Normalized backward radial trace with its truncation estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedTrace {
    /// `β(t_j) ≈ e^{t_max} β_{t_max}(t_j)` for grid times up to `t_max / 2`.
    pub trace: Trace,
    /// Largest change over `t <= t_max / 4` when the horizon is halved,
    /// relative to the size of the curve there.
    pub truncation_estimate: f64,
}

/// Approximates the normalized trace of a backward radial process by the
/// finite horizon `t_max`.
pub fn normalized_backward_trace(driving: &DrivingPath, t_max: f64, tolerance: f64) -> Result<NormalizedTrace> {
    if driving.kind != Kind::Radial {
        return Err(SleError::Unsupported("normalized traces are defined for backward radial drivings".into()));
    }
    let n = driving.grid_index(t_max)?;
    if n < 4 {
        return Err(SleError::InvalidInput("t_max must cover at least four steps".into()));
    }
    let nh = n / 2;
    let nq = nh / 2;
    let th = driving.time(nh);
    let full = backward_trace(driving, t_max)?;
    let half = backward_trace(driving, th)?;
    let (sf, sh) = (t_max.exp(), th.exp());
    let mut diff: f64 = 0.0;
    let mut size: f64 = 0.0;
    for j in 0..=nq {
        let a = sf * full.points[j];
        let b = sh * half.points[j];
        diff = diff.max((a - b).norm());
        size = size.max(a.norm());
    }
    let estimate = diff / size;
    if !(estimate <= tolerance) {
        return Err(SleError::NotConverged { estimate, tolerance });
    }
    let points = full.points[..=nh].iter().map(|z| sf * z).collect();
    Ok(NormalizedTrace {
        trace: Trace { kind: Kind::Radial, t0: driving.t0, dt: driving.dt, points },
        truncation_estimate: estimate,
    })
}

/// `F_{t_max, t1}(z) = e^{t_max} f_{t_max, t1}(z)` for the backward radial
/// flow driven by `driving`.
pub fn normalized_map(driving: &DrivingPath, t1: f64, t_max: f64, z: C64) -> Result<C64> {
    if driving.kind != Kind::Radial {
        return Err(SleError::Unsupported("normalized maps are defined for backward radial drivings".into()));
    }
    let k1 = driving.grid_index(t1)?;
    let n = driving.grid_index(t_max)?;
    if k1 > n {
        return Err(SleError::InvalidInput("t1 must not exceed t_max".into()));
    }
    let mut w = z;
    for j in k1 + 1..=n {
        w = ElementaryMap::new(Kind::Radial, driving.dt, driving.lambda[j - 1]).inverse(w);
    }
    Ok(t_max.exp() * w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_driving_chordal_trace_is_vertical() {
        let d = DrivingPath::constant(Kind::Chordal, 0.0, 0.001, 1000, 0.0).unwrap();
        let tr = compute_trace(&d).unwrap();
        for (k, t) in [(250, 0.25f64), (1000, 1.0)] {
            let exact = C64::new(0.0, 2.0 * t.sqrt());
            assert!((tr.points[k] - exact).norm() < 1e-12 * exact.norm());
        }
    }

    #[test]
    fn ode_trace_is_close_to_closed_form() {
        let d = DrivingPath::constant(Kind::Radial, 0.0, 0.01, 50, 0.3).unwrap();
        let a = compute_trace(&d).unwrap();
        let b = compute_trace_with(&d, &TraceOptions { realization: Realization::OdeStep, epsilon: None }).unwrap();
        let err = a.points.iter().zip(&b.points).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(err < 0.05, "{err}");
    }

    #[test]
    fn backward_trace_root_is_exact() {
        let d = DrivingPath::new(Kind::Radial, 0.0, 0.1, vec![0.0, 0.3, -0.2, 0.5], None).unwrap();
        let b = backward_trace(&d, 0.3).unwrap();
        assert_eq!(b.points[3], C64::from_polar(1.0, 0.5));
        let z = backward_trace(&DrivingPath::constant(Kind::Chordal, 0.0, 0.01, 100, 0.0).unwrap(), 1.0).unwrap();
        assert_relative_eq!(z.points[36].im, 2.0 * 0.64f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn constant_backward_radial_is_symmetric() {
        let d = DrivingPath::constant(Kind::Radial, 0.0, 0.05, 800, 0.0).unwrap();
        let nt = normalized_backward_trace(&d, 40.0, 1e-2).unwrap();
        assert!(nt.truncation_estimate < 1e-3);
        // β(t) = e^{t_max} r(t_max - t), r the tip of a radial slit: r / (1 + r)^2 = e^{-s} / 4
        let tip = |s: f64| {
            let w = 0.25 * (-s).exp();
            let b = 1.0 - 2.0 * w;
            2.0 * w / (b + (b * b - 4.0 * w * w).sqrt())
        };
        for (j, z) in nt.trace.points.iter().enumerate().step_by(20) {
            assert!(z.im.abs() < 1e-9 * z.norm());
            assert_relative_eq!(z.re, 40f64.exp() * tip(40.0 - 0.05 * j as f64), max_relative = 1e-8);
        }
        assert_relative_eq!(nt.trace.points[0].re, 0.25, max_relative = 1e-6);
    }
}
