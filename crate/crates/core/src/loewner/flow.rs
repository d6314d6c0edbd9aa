//! Direct integration of the backward flow `f_{t2,t1}`.
//!
//! This shares nothing with the atom composition used for traces, so it can
//! serve as an independent check on it.

use super::{DrivingPath, Kind, C64};
use crate::error::{Result, SleError};

/// Step size relative to the squared distance to the singularity.
const STEP_FACTOR: f64 = 0.002;
const MIN_STEP: f64 = 1e-14;

/// `f_{t2,t1}(z)`: the solution at time `t2` of the backward equation
/// started from `z` at time `t1`. For `t2 < t1` the equation is run in
/// reverse, which inverts `f_{t1,t2}` and may leave the domain.
///
/// The driving is piecewise constant with the left end point sample on each
/// grid interval, matching [`super::backward_trace`].
pub fn backward_flow_eval(driving: &DrivingPath, t1: f64, t2: f64, z: C64) -> Result<C64> {
    let kind = driving.kind;
    if kind == Kind::WholePlane {
        return Err(SleError::Unsupported("backward whole-plane flows".into()));
    }
    driving.validate()?;
    let (lo, hi) = (driving.t0, driving.t_end());
    for t in [t1, t2] {
        if !(t >= lo - 1e-12 && t <= hi + 1e-12) {
            return Err(SleError::InvalidInput(format!("time {t} outside [{lo}, {hi}]")));
        }
    }
    let in_domain = |w: C64| match kind {
        Kind::Chordal => w.im >= 0.0,
        _ => w.norm() <= 1.0,
    };
    if !in_domain(z) {
        return Err(SleError::InvalidInput(format!("{z} is outside the {} domain", kind.name())));
    }
    let dir = if t2 >= t1 { 1.0 } else { -1.0 };
    let mut t = t1;
    let mut w = z;
    while (t2 - t) * dir > 1e-15 {
        // grid interval containing the direction of travel
        let x = (t - driving.t0) / driving.dt;
        let k = if dir > 0.0 { (x + 1e-9).floor() } else { (x - 1e-9).ceil() - 1.0 };
        let k = (k.max(0.0) as usize).min(driving.steps() - 1);
        let edge = if dir > 0.0 { driving.time(k + 1).min(t2) } else { driving.time(k).max(t2) };
        let lam = driving.lambda[k];
        let e = kind.boundary_point(lam);
        let field = |u: C64| -> C64 {
            match kind {
                Kind::Chordal => -2.0 / (u - lam),
                _ => -u * (e + u) / (e - u),
            }
        };
        while (edge - t) * dir > 1e-15 {
            let d = (w - e).norm();
            let h = (STEP_FACTOR * d * d).min(0.01).min((edge - t).abs());
            if h < MIN_STEP || !w.is_finite() {
                return Err(SleError::FlowTerminated { time: t });
            }
            let s = dir * h;
            let k1 = field(w);
            let k2 = field(w + 0.5 * s * k1);
            let k3 = field(w + 0.5 * s * k2);
            let k4 = field(w + s * k3);
            w += s / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t += s;
            if !in_domain(w) {
                return Err(SleError::FlowTerminated { time: t });
            }
        }
        t = edge;
    }
    Ok(w)
}
