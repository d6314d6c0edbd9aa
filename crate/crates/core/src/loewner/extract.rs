//! Whole-plane driving functions of a polygonal curve by greedy unzipping.
//!
//! After the initial stub `[0, z_s]` is removed with its exact exterior map,
//! each following curve point is peeled off with one radial slit: if the
//! point currently sits at `r e^{ia}` outside the unit disc, the slit from
//! `e^{ia}` to `r e^{ia}` has capacity `log(1 + (r - 1)^2 / (4r))` and its
//! exterior map sends the point to `e^{ia}`. The angle `a` is the driving
//! value for that step, and the base point `0` is carried along the unit
//! circle by the boundary action of the same map.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::atom::{forward_angle, ElementaryMap};
use super::stack::WholePlaneSeed;
use super::{DrivingPath, Kind, C64};
use crate::error::{Result, SleError};
use crate::numerics::{interp_linear, wrap_pi};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractOptions {
    /// The first point must satisfy `|z_0| <= anchor_tol * max |z|`.
    pub anchor_tol: f64,
    /// Points whose running whole-plane capacity bound `log(max|z| / 4)`
    /// stays below this value are absorbed into the initial segment.
    pub capacity_floor: f64,
    /// Steps of the uniform output grid; defaults to one per peeled point.
    pub grid_steps: Option<usize>,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions { anchor_tol: 1e-8, capacity_floor: f64::NEG_INFINITY, grid_steps: None }
    }
}

/// Raw unzipping output: entry 0 is the initial segment, entry `j > 0` the
/// slit peeling curve point `index[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unzipped {
    pub index: Vec<usize>,
    /// Whole-plane capacity of the curve up to `index[j]`.
    pub cap: Vec<f64>,
    /// Driving value (unwrapped, continuous in `j`).
    pub lambda: Vec<f64>,
    /// Angle of the preimage of the base point, with `lambda - q ∈ (0, 2π)`.
    pub q: Vec<f64>,
}

impl Unzipped {
    /// `Z = lambda - q`, which is 2π times the harmonic measure from
    /// infinity of the right side of the curve.
    pub fn z(&self) -> Vec<f64> {
        self.lambda.iter().zip(&self.q).map(|(l, q)| l - q).collect()
    }

    /// Step list `(tau, lambda)` suitable for
    /// [`super::synthesize_wholeplane`].
    pub fn steps(&self) -> Vec<(f64, f64)> {
        (1..self.cap.len()).map(|j| (self.cap[j] - self.cap[j - 1], self.lambda[j])).collect()
    }
}

pub fn unzip_wholeplane(curve: &[C64], opts: &ExtractOptions) -> Result<Unzipped> {
    if curve.len() < 8 {
        return Err(SleError::InvalidInput(format!("curve has {} points, at least 8 are needed", curve.len())));
    }
    if let Some(i) = curve.iter().position(|z| !z.is_finite()) {
        return Err(SleError::InvalidInput(format!("curve point {i} is not finite")));
    }
    let z0 = curve[0];
    let scale = curve.iter().map(|z| (z - z0).norm()).fold(0.0, f64::max);
    if z0.norm() > opts.anchor_tol * scale.max(z0.norm()) {
        return Err(SleError::BadAnchor { distance: z0.norm() });
    }
    let pts: Vec<C64> = curve.iter().map(|z| z - z0).collect();
    let m = pts.len() - 1;

    let mut s = 1;
    let mut rmax = pts[1].norm();
    while s + 1 < m {
        let r = rmax.max(pts[s + 1].norm());
        if (r / 4.0).ln() > opts.capacity_floor {
            break;
        }
        rmax = r;
        s += 1;
    }
    let tip = pts[s];
    if tip.norm() == 0.0 {
        return Err(SleError::NotUnzippable { index: s, reason: "repeated base point".into() });
    }
    let seed = WholePlaneSeed { angle: tip.arg(), cap: (tip.norm() / 4.0).ln() };
    let mut rest: Vec<C64> = pts[s + 1..].iter().map(|&z| seed.forward(z)).collect();

    let n = m - s;
    let mut out = Unzipped {
        index: Vec::with_capacity(n + 1),
        cap: Vec::with_capacity(n + 1),
        lambda: Vec::with_capacity(n + 1),
        q: Vec::with_capacity(n + 1),
    };
    out.index.push(s);
    out.cap.push(seed.cap);
    out.lambda.push(seed.angle);
    out.q.push(seed.angle - PI);

    for j in 0..n {
        let w = rest[j];
        let r = w.norm();
        if !r.is_finite() {
            return Err(SleError::NumericalBlowup { step: j + 1 });
        }
        if r <= 1.0 + 1e-14 {
            return Err(SleError::NotUnzippable {
                index: s + 1 + j,
                reason: "point lies on the hull of the earlier points".into(),
            });
        }
        let prev = *out.lambda.last().unwrap();
        let a = prev + wrap_pi(w.arg() - prev);
        let tau = ((r - 1.0).powi(2) / (4.0 * r)).ln_1p();
        let atom = ElementaryMap::new(Kind::WholePlane, tau, a);
        for z in rest[j + 1..].iter_mut() {
            *z = atom.forward(*z);
        }
        let q_prev = *out.q.last().unwrap();
        let mut q = a + forward_angle(wrap_pi(q_prev - a), tau);
        while q >= a {
            q -= 2.0 * PI;
        }
        while q <= a - 2.0 * PI {
            q += 2.0 * PI;
        }
        out.index.push(s + 1 + j);
        out.cap.push(out.cap.last().unwrap() + tau);
        out.lambda.push(a);
        out.q.push(q);
    }
    Ok(out)
}

/// Whole-plane driving `(lambda, q)` of a curve ordered from its base point
/// 0 outward, resampled on a uniform capacity grid.
pub fn extract_wholeplane_driving(curve: &[C64], opts: &ExtractOptions) -> Result<DrivingPath> {
    let u = unzip_wholeplane(curve, opts)?;
    let steps = opts.grid_steps.unwrap_or(u.cap.len() - 1).max(1);
    let (c0, c1) = (u.cap[0], *u.cap.last().unwrap());
    let dt = (c1 - c0) / steps as f64;
    let grid: Vec<f64> = (0..=steps).map(|k| c0 + k as f64 * dt).collect();
    let lambda = grid.iter().map(|&t| interp_linear(&u.cap, &u.lambda, t)).collect();
    let q = grid.iter().map(|&t| interp_linear(&u.cap, &u.q, t)).collect();
    DrivingPath::new(Kind::WholePlane, c0, dt, lambda, Some(q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn segment(len: f64, angle: f64, n: usize) -> Vec<C64> {
        (0..=n).map(|k| C64::from_polar(len * k as f64 / n as f64, angle)).collect()
    }

    #[test]
    fn straight_segment() {
        let u = unzip_wholeplane(&segment(3.0, 0.7, 40), &ExtractOptions::default()).unwrap();
        assert_relative_eq!(*u.cap.last().unwrap(), (3.0f64 / 4.0).ln(), epsilon = 1e-10);
        for z in u.z() {
            assert_relative_eq!(z, PI, epsilon = 1e-9);
        }
        for l in &u.lambda {
            assert_relative_eq!(*l, 0.7, epsilon = 1e-9);
        }
    }

    #[test]
    fn anchor_and_size_checks() {
        let mut c = segment(1.0, 0.0, 10);
        assert!(matches!(unzip_wholeplane(&c[..5], &ExtractOptions::default()), Err(SleError::InvalidInput(_))));
        for z in c.iter_mut() {
            *z += C64::new(0.1, 0.0);
        }
        assert!(matches!(unzip_wholeplane(&c, &ExtractOptions::default()), Err(SleError::BadAnchor { .. })));
    }

    #[test]
    fn self_intersection_is_rejected() {
        // out along the real axis and straight back
        let mut c = segment(1.0, 0.0, 10);
        c.extend((1..8).map(|k| C64::new(1.0 - 0.1 * k as f64, 0.0)));
        assert!(matches!(
            unzip_wholeplane(&c, &ExtractOptions::default()),
            Err(SleError::NotUnzippable { .. })
        ));
    }

    #[test]
    fn resynthesis_reproduces_the_curve() {
        // a spiral-ish polygon
        let c: Vec<C64> = (0..60)
            .map(|k| {
                let t = k as f64 / 59.0;
                C64::from_polar(t * (1.0 + t), 3.0 * t)
            })
            .collect();
        let u = unzip_wholeplane(&c, &ExtractOptions::default()).unwrap();
        let pts = super::super::synthesize_wholeplane(u.cap[0], u.lambda[0], &u.steps()).unwrap();
        for (p, z) in pts.iter().zip(&c[1..]) {
            assert!((p - z).norm() < 1e-9, "{p} vs {z}");
        }
        for z in u.z() {
            assert!(z > 0.0 && z < 2.0 * PI);
        }
    }
}
