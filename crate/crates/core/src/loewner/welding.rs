use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::atom::{forward_angle, inverse_angle};
use super::{DrivingPath, Kind};
use crate::error::{Result, SleError};
use crate::numerics::wrap_pi;

/// Boundary welding of a backward radial process, evaluated pointwise.
///
/// A boundary angle is pushed through the inverse atoms until one of them
/// swallows it; the two sides of that atom's slit are glued by reflection
/// about the driving angle, and the mirror point is pulled back through the
/// earlier atoms.
#[derive(Debug, Clone)]
pub struct Welder {
    dt: f64,
    /// Driving value of step `k + 1` (left end point sample).
    angles: Vec<f64>,
}

impl Welder {
    pub fn new(driving: &DrivingPath) -> Result<Self> {
        if driving.kind != Kind::Radial {
            return Err(SleError::Unsupported("weldings are computed for backward radial drivings".into()));
        }
        driving.validate()?;
        Ok(Welder { dt: driving.dt, angles: driving.lambda[..driving.steps()].to_vec() })
    }

    /// Step at which `x` is swallowed and its relative angle just before.
    fn absorb(&self, x: f64) -> Option<(usize, f64)> {
        let mut y = x;
        for (k, &a) in self.angles.iter().enumerate() {
            let rel = wrap_pi(y - a);
            match inverse_angle(rel, self.dt) {
                None => return Some((k, rel)),
                Some(p) => y = a + p,
            }
        }
        None
    }

    /// Number of steps after which `x` is welded, if it is.
    pub fn absorption_step(&self, x: f64) -> Option<usize> {
        self.absorb(x).map(|(k, _)| k + 1)
    }

    /// Angle welded to `x`, in `(-π, π]`, or `None` if `x` is still on the
    /// boundary at the final time.
    pub fn partner(&self, x: f64) -> Option<f64> {
        let (k, rel) = self.absorb(x)?;
        let mut y = self.angles[k] - rel;
        for &a in self.angles[..k].iter().rev() {
            y = a + forward_angle(wrap_pi(y - a), self.dt);
        }
        Some(wrap_pi(y))
    }

    /// Position at the final time of a boundary angle that is never welded.
    pub fn flow(&self, x: f64) -> Option<f64> {
        let mut y = x;
        for &a in &self.angles {
            y = a + inverse_angle(wrap_pi(y - a), self.dt)?;
        }
        Some(y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeldingTable {
    pub grid: Vec<f64>,
    /// `None` marks grid points not welded by the final time.
    pub partner: Vec<Option<f64>>,
    /// `λ(0)`, plus the force point `q(0)` when it survives to the end.
    pub fixed_points: Vec<f64>,
    pub max_involution_error: f64,
}

impl WeldingTable {
    pub fn unwelded(&self) -> impl Iterator<Item = f64> + '_ {
        self.grid.iter().zip(&self.partner).filter(|(_, p)| p.is_none()).map(|(x, _)| *x)
    }
}

/// Welding on a uniform grid of `grid_size` angles, offset by half a cell
/// from `λ(0)`.
pub fn compute_welding(driving: &DrivingPath, grid_size: usize) -> Result<WeldingTable> {
    if grid_size < 2 {
        return Err(SleError::InvalidInput("grid_size must be at least 2".into()));
    }
    let w = Welder::new(driving)?;
    let l0 = driving.lambda[0];
    let grid: Vec<f64> = (0..grid_size)
        .map(|j| wrap_pi(l0 - PI + 2.0 * PI * (j as f64 + 0.5) / grid_size as f64))
        .collect();
    let partner: Vec<Option<f64>> = grid.iter().map(|&x| w.partner(x)).collect();
    let mut err: f64 = 0.0;
    for (x, p) in grid.iter().zip(&partner) {
        if let Some(p) = p {
            let back = w.partner(*p).ok_or_else(|| SleError::NumericalBlowup { step: 0 })?;
            err = err.max(wrap_pi(back - x).abs());
        }
    }
    let mut fixed_points = vec![wrap_pi(l0)];
    if let Some(q) = &driving.q {
        if w.flow(q[0]).is_some() {
            fixed_points.push(wrap_pi(q[0]));
        }
    }
    Ok(WeldingTable { grid, partner, fixed_points, max_involution_error: err })
}
