use serde::{Deserialize, Serialize};

use super::atom::{ElementaryMap, Realization};
use super::{DrivingPath, Kind, C64};
use crate::error::{Result, SleError};

/// Initial whole-plane hull: the segment from 0 to `4 e^{cap} e^{i angle}`,
/// whose exterior map sends its tip to `e^{i angle}` and its base point 0
/// to `-e^{i angle}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WholePlaneSeed {
    pub angle: f64,
    pub cap: f64,
}

impl WholePlaneSeed {
    fn half_length(&self) -> f64 {
        2.0 * self.cap.exp()
    }

    /// Exterior map of the segment onto the outside of the unit disc.
    pub fn forward(&self, z: C64) -> C64 {
        let rot = C64::from_polar(1.0, self.angle);
        let c = self.half_length();
        let u = z / rot - c;
        let s = (u * u - c * c).sqrt();
        let (p, m) = (u + s, u - s);
        let w = if (p.norm_sqr() - m.norm_sqr()).abs() <= 1e-15 * p.norm_sqr() {
            // on the segment itself: keep the side given by Im u
            if (p.im >= 0.0) == (u.im >= 0.0) {
                p
            } else {
                m
            }
        } else if p.norm_sqr() > m.norm_sqr() {
            p
        } else {
            m
        };
        rot * w / c
    }

    pub fn inverse(&self, w: C64) -> C64 {
        let rot = C64::from_polar(1.0, self.angle);
        let c = self.half_length();
        let v = w / rot;
        rot * (0.5 * c * (v + 1.0 / v) + c)
    }

    pub fn tip(&self) -> C64 {
        C64::from_polar(2.0 * self.half_length(), self.angle)
    }
}

/// Composition `g = atom_n ∘ ... ∘ atom_1 (∘ seed)` realizing a forward
/// Loewner map at the final time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapStack {
    pub kind: Kind,
    pub atoms: Vec<ElementaryMap>,
    /// Loewner-time capacity: `t` for chordal (half-plane capacity `2t`),
    /// disc capacity for radial, whole-plane capacity for whole-plane.
    pub cap: f64,
    pub seed: Option<WholePlaneSeed>,
}

/// Builds the forward stack driven by `driving`, with step `k` using the
/// sample at its right end point.
pub fn evolve_forward(driving: &DrivingPath) -> Result<MapStack> {
    MapStack::from_driving(driving, Realization::ClosedFormSlit)
}

fn on_boundary(kind: Kind, w: C64) -> bool {
    // a point on the hull picks up roundoff that the square-root branch
    // point amplifies to about 1e-8
    const TOL: f64 = 1e-7;
    match kind {
        Kind::Chordal => w.im <= TOL * (1.0 + w.norm()),
        Kind::Radial => w.norm() >= 1.0 - TOL,
        Kind::WholePlane => w.norm() <= 1.0 + TOL,
    }
}

impl MapStack {
    /// Identity map (zero capacity) for chordal and radial kinds.
    pub fn identity(kind: Kind) -> Result<Self> {
        if kind == Kind::WholePlane {
            return Err(SleError::Unsupported("a whole-plane map needs a seed hull".into()));
        }
        Ok(MapStack { kind, atoms: Vec::new(), cap: 0.0, seed: None })
    }

    pub fn from_driving(driving: &DrivingPath, realization: Realization) -> Result<Self> {
        driving.validate()?;
        let atoms: Vec<ElementaryMap> = driving.lambda[1..]
            .iter()
            .map(|&l| ElementaryMap::new(driving.kind, driving.dt, l).with_realization(realization))
            .collect();
        let (cap, seed) = match driving.kind {
            Kind::WholePlane => {
                let seed = WholePlaneSeed { angle: driving.lambda[0], cap: driving.t0 };
                (driving.t_end(), Some(seed))
            }
            _ => (driving.steps() as f64 * driving.dt, None),
        };
        Ok(MapStack { kind: driving.kind, atoms, cap, seed })
    }

    /// Half-plane capacity of a chordal hull.
    pub fn hcap(&self) -> f64 {
        2.0 * self.cap
    }

    /// `self` followed by `later`; capacities add.
    pub fn then(mut self, later: MapStack) -> Result<Self> {
        if later.kind != self.kind || later.seed.is_some() {
            return Err(SleError::InvalidInput("stacks of different kinds cannot be chained".into()));
        }
        self.cap += later.cap;
        self.atoms.extend(later.atoms);
        Ok(self)
    }

    fn check_domain(&self, z: C64) -> Result<()> {
        let ok = z.is_finite()
            && match self.kind {
                Kind::Chordal => z.im > 0.0,
                Kind::Radial => z.norm() < 1.0,
                Kind::WholePlane => true,
            };
        if ok {
            Ok(())
        } else {
            Err(SleError::InvalidInput(format!("{z} is outside the {} domain", self.kind.name())))
        }
    }

    /// `g(z)`. Points swallowed by the hull are reported as such.
    pub fn eval(&self, z: C64) -> Result<C64> {
        self.check_domain(z)?;
        let inside = |step: usize| SleError::InsideHull { point: format!("{z}"), step };
        let mut w = z;
        if let Some(seed) = &self.seed {
            w = seed.forward(w);
            if on_boundary(self.kind, w) {
                return Err(inside(0));
            }
        }
        for (k, a) in self.atoms.iter().enumerate() {
            w = a.forward(w);
            if !w.is_finite() {
                return Err(SleError::NumericalBlowup { step: k + 1 });
            }
            if on_boundary(self.kind, w) {
                return Err(inside(k + 1));
            }
        }
        Ok(w)
    }

    /// `g^{-1}(w)` on the closure of the reference domain.
    pub fn eval_inverse(&self, w: C64) -> Result<C64> {
        let mut z = w;
        for (k, a) in self.atoms.iter().enumerate().rev() {
            z = a.inverse(z);
            if !z.is_finite() {
                return Err(SleError::NumericalBlowup { step: k + 1 });
            }
        }
        if let Some(seed) = &self.seed {
            z = seed.inverse(z);
        }
        Ok(z)
    }
}
