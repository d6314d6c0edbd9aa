//! Elementary one-step maps.
//!
//! Over a step of length `tau` with driving value `a` held constant, each
//! Loewner equation is solved in closed form by a slit map:
//!
//! * chordal: `g(z) = a + sqrt((z - a)^2 + 4 tau)`, the map removing a
//!   vertical slit of height `2 sqrt(tau)` above `a`;
//! * radial: `G(z) = e^{ia} k^{-1}(e^{tau} k(e^{-ia} z))` with the Koebe
//!   function `k(z) = z / (1 + z)^2` and the root inside the disc, removing
//!   a radial slit from `e^{ia}` towards 0;
//! * whole-plane: the same formula with the root outside the disc, which is
//!   the radial atom conjugated by the reflection `z -> 1/conj(z)`.
//!
//! The inverses replace `tau` by `-tau`. An [`ElementaryMap`] can also be
//! realized by integrating the Loewner ODE with classical RK4
//! ([`Realization::OdeStep`]); this path exists as an independent check on
//! the closed forms.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{Kind, C64};

/// How an atom is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Realization {
    #[default]
    ClosedFormSlit,
    OdeStep,
}

/// RK4 substeps per atom in the ODE realization.
pub const ODE_SUBSTEPS: usize = 64;

/// One time step of a Loewner evolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementaryMap {
    pub kind: Kind,
    pub dt: f64,
    pub lambda: f64,
    pub realization: Realization,
}

/// Square root in the closed upper half-plane. On the real axis the sign
/// follows `hint`.
fn sqrt_h(w: C64, hint: f64) -> C64 {
    let s = w.sqrt();
    if s.im < 0.0 || (s.im == 0.0 && hint < 0.0) {
        -s
    } else {
        s
    }
}

#[inline]
fn koebe(z: C64) -> C64 {
    let d = 1.0 + z;
    z / (d * d)
}

/// Root of `k(z) = w`: the one inside the closed disc if `!outer`, else the
/// reciprocal one. When both roots are on the circle, the one whose
/// imaginary part has the sign of `hint` is taken.
fn koebe_inv(w: C64, outer: bool, hint: f64) -> C64 {
    if !w.is_finite() {
        return C64::new(-1.0, 0.0);
    }
    if w == C64::new(0.0, 0.0) {
        return if outer { C64::new(f64::INFINITY, 0.0) } else { w };
    }
    let b = 1.0 - 2.0 * w;
    let s = (1.0 - 4.0 * w).sqrt();
    let (p, m) = (b + s, b - s);
    let d = if p.norm_sqr() >= m.norm_sqr() { p } else { m };
    let small = 2.0 * w / d;
    let big = d / (2.0 * w);
    let r = small.norm();
    if (r - 1.0).abs() < 1e-12 {
        // both roots on the circle
        return if (small.im >= 0.0) == (hint >= 0.0) { small } else { big };
    }
    if outer {
        big
    } else {
        small
    }
}

/// Relative angle `phi` reached by the boundary point at relative angle
/// `psi` under a forward radial (or whole-plane) atom of length `tau`.
pub fn forward_angle(psi: f64, tau: f64) -> f64 {
    let h = 0.5 * psi;
    let num = (-(-tau).exp_m1() + (-tau).exp() * h.sin().powi(2)).sqrt();
    let den = (-0.5 * tau).exp() * h.cos().abs();
    let phi = 2.0 * num.atan2(den);
    if psi < 0.0 {
        -phi
    } else {
        phi
    }
}

/// Half-width of the arc swallowed by an inverse radial atom of length `tau`.
pub fn swallowed_half_width(tau: f64) -> f64 {
    2.0 * (-0.5 * tau).exp().acos()
}

/// Inverse of [`forward_angle`]; `None` when the point is swallowed, i.e.
/// sent onto the slit.
pub fn inverse_angle(phi: f64, tau: f64) -> Option<f64> {
    let h = 0.5 * phi;
    let c = (0.5 * tau).exp() * h.cos().abs();
    if c >= 1.0 {
        return None;
    }
    let num = (tau.exp() * h.sin().powi(2) - tau.exp_m1()).max(0.0).sqrt();
    let psi = 2.0 * num.atan2(c);
    Some(if phi < 0.0 { -psi } else { psi })
}

/// Chordal analogue of [`forward_angle`], on relative positions `x - a`.
pub fn forward_real(x: f64, tau: f64) -> f64 {
    (x * x + 4.0 * tau).sqrt().copysign(x)
}

/// Chordal analogue of [`inverse_angle`].
pub fn inverse_real(x: f64, tau: f64) -> Option<f64> {
    let v = x * x - 4.0 * tau;
    if v <= 0.0 {
        None
    } else {
        Some(v.sqrt().copysign(x))
    }
}

impl ElementaryMap {
    pub fn new(kind: Kind, dt: f64, lambda: f64) -> Self {
        ElementaryMap { kind, dt, lambda, realization: Realization::ClosedFormSlit }
    }

    pub fn with_realization(mut self, realization: Realization) -> Self {
        self.realization = realization;
        self
    }

    /// `g` for this step.
    pub fn forward(&self, z: C64) -> C64 {
        match self.realization {
            Realization::ClosedFormSlit => self.closed_form(z, self.dt),
            Realization::OdeStep => self.rk4(z, 1.0),
        }
    }

    /// `g^{-1}` for this step.
    pub fn inverse(&self, w: C64) -> C64 {
        match self.realization {
            Realization::ClosedFormSlit => self.closed_form(w, -self.dt),
            Realization::OdeStep => self.rk4(w, -1.0),
        }
    }

    fn closed_form(&self, z: C64, tau: f64) -> C64 {
        match self.kind {
            Kind::Chordal => {
                let u = z - self.lambda;
                self.lambda + sqrt_h(u * u + 4.0 * tau, u.re)
            }
            Kind::Radial | Kind::WholePlane => {
                let rot = C64::from_polar(1.0, self.lambda);
                let u = z / rot;
                let w = koebe(u) * tau.exp();
                rot * koebe_inv(w, self.kind == Kind::WholePlane, u.im)
            }
        }
    }

    fn field(&self, z: C64) -> C64 {
        match self.kind {
            Kind::Chordal => 2.0 / (z - self.lambda),
            Kind::Radial | Kind::WholePlane => {
                let e = C64::from_polar(1.0, self.lambda);
                z * (e + z) / (e - z)
            }
        }
    }

    fn rk4(&self, mut z: C64, sign: f64) -> C64 {
        let h = sign * self.dt / ODE_SUBSTEPS as f64;
        for _ in 0..ODE_SUBSTEPS {
            let k1 = self.field(z);
            let k2 = self.field(z + 0.5 * h * k1);
            let k3 = self.field(z + 0.5 * h * k2);
            let k4 = self.field(z + h * k3);
            z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        z
    }

    /// Action on boundary positions (angles for radial and whole-plane,
    /// real points for chordal).
    pub fn forward_boundary(&self, x: f64) -> f64 {
        match self.kind {
            Kind::Chordal => self.lambda + forward_real(x - self.lambda, self.dt),
            _ => self.lambda + forward_angle(crate::numerics::wrap_pi(x - self.lambda), self.dt),
        }
    }

    /// Inverse boundary action; `None` for swallowed points.
    pub fn inverse_boundary(&self, x: f64) -> Option<f64> {
        match self.kind {
            Kind::Chordal => inverse_real(x - self.lambda, self.dt).map(|y| self.lambda + y),
            _ => inverse_angle(crate::numerics::wrap_pi(x - self.lambda), self.dt).map(|y| self.lambda + y),
        }
    }

    /// Image of the slit tip under `g`, i.e. the driving point.
    pub fn tip(&self) -> C64 {
        match self.kind {
            Kind::Chordal => C64::new(self.lambda, 2.0 * self.dt.sqrt()),
            _ => {
                // tip radius r solves r / (1 + r)^2 = e^{-tau} / 4
                let r = koebe_inv(C64::new(0.25 * (-self.dt).exp(), 0.0), self.kind == Kind::WholePlane, 0.0);
                C64::from_polar(r.re, self.lambda)
            }
        }
    }

    /// Capacity increment measured from the map itself: half-plane capacity
    /// over two for chordal, `log g'(0)` for radial and `-log` of the
    /// leading coefficient at infinity for whole-plane.
    pub fn measured_capacity(&self) -> f64 {
        match self.kind {
            Kind::Chordal => {
                // for a vertical slit y^2 - Im(g)^2 equals 2 hcap at every height
                let y = 4.0 * self.dt.sqrt() + 1.0;
                let g = self.forward(C64::new(self.lambda, y));
                (y * y - g.im * g.im) / 4.0
            }
            Kind::Radial | Kind::WholePlane => {
                // Taylor / Laurent coefficient of z by the trapezoid rule on a circle
                let tip = self.tip().norm();
                let r = if self.kind == Kind::Radial { 0.5 * tip } else { 2.0 * tip };
                let m = 128;
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..m {
                    let e = C64::from_polar(1.0, 2.0 * PI * j as f64 / m as f64);
                    acc += self.forward(r * e) / e;
                }
                let coef = acc / (m as f64 * r);
                if self.kind == Kind::Radial {
                    coef.norm().ln()
                } else {
                    -coef.norm().ln()
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn chordal_slit_tip_maps_to_driving_point() {
        let m = ElementaryMap::new(Kind::Chordal, 0.25, 0.3);
        let g = m.forward(m.tip());
        assert!((g - c(0.3, 0.0)).norm() < 1e-15);
        assert!((m.inverse(c(0.3, 0.0)) - c(0.3, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn radial_tip_and_derivative() {
        let m = ElementaryMap::new(Kind::Radial, 0.1, 0.7);
        let g = m.forward(m.tip());
        assert!((g - C64::from_polar(1.0, 0.7)).norm() < 1e-7, "{g}");
        assert!(m.forward(c(0.0, 0.0)).norm() < 1e-16);
        assert_relative_eq!(m.measured_capacity(), 0.1, max_relative = 1e-10);
    }

    #[test]
    fn wholeplane_is_reflected_radial() {
        let r = ElementaryMap::new(Kind::Radial, 0.05, -1.2);
        let w = ElementaryMap::new(Kind::WholePlane, 0.05, -1.2);
        for z in [c(2.0, 1.0), c(-3.0, 0.5), c(0.2, -1.5)] {
            let refl = |z: C64| 1.0 / z.conj();
            assert!((w.forward(z) - refl(r.forward(refl(z)))).norm() < 1e-13);
        }
        assert_relative_eq!(w.measured_capacity(), 0.05, max_relative = 1e-10);
    }

    #[test]
    fn ode_realization_tracks_closed_form() {
        for kind in [Kind::Chordal, Kind::Radial, Kind::WholePlane] {
            let m = ElementaryMap::new(kind, 1e-3, 0.4);
            let o = m.with_realization(Realization::OdeStep);
            let z = match kind {
                Kind::Chordal => c(0.9, 0.7),
                Kind::Radial => c(0.1, 0.5),
                Kind::WholePlane => c(-1.5, 2.0),
            };
            assert!((m.forward(z) - o.forward(z)).norm() < 1e-12);
            assert!((m.inverse(z) - o.inverse(z)).norm() < 1e-12);
            assert_relative_eq!(o.measured_capacity(), 1e-3, max_relative = 1e-6);
            assert_relative_eq!(m.measured_capacity(), 1e-3, max_relative = 1e-10);
        }
    }

    #[test]
    fn boundary_action_matches_complex_map() {
        let m = ElementaryMap::new(Kind::Radial, 0.2, 0.0);
        for psi in [0.3, -1.0, 2.5, PI] {
            let phi = forward_angle(psi, 0.2);
            let g = m.forward(C64::from_polar(1.0, psi));
            assert!((g - C64::from_polar(1.0, phi)).norm() < 1e-12, "psi={psi}");
            assert_relative_eq!(inverse_angle(phi, 0.2).unwrap(), psi, epsilon = 1e-12);
        }
        let w0 = swallowed_half_width(0.2);
        assert!(inverse_angle(0.99 * w0, 0.2).is_none());
        assert!(inverse_angle(1.01 * w0, 0.2).is_some());
    }

    proptest! {
        #[test]
        fn atoms_invert(kind in 0usize..3, tau in 1e-5f64..0.5, lam in -3.0f64..3.0,
                        a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let kind = [Kind::Chordal, Kind::Radial, Kind::WholePlane][kind];
            let m = ElementaryMap::new(kind, tau, lam);
            let z = match kind {
                Kind::Chordal => c(4.0 * a - 2.0, 0.05 + 3.0 * b),
                Kind::Radial => C64::from_polar(0.95 * a, 2.0 * PI * b),
                Kind::WholePlane => C64::from_polar(1.05 + 3.0 * a, 2.0 * PI * b),
            };
            let back = m.inverse(m.forward(z));
            prop_assert!((back - z).norm() < 1e-9 * (1.0 + z.norm()), "{} vs {}", back, z);
        }

        #[test]
        fn chordal_forward_maps_into_upper_half_plane(tau in 1e-5f64..1.0, x in -3.0f64..3.0, y in 1e-3f64..3.0) {
            let m = ElementaryMap::new(Kind::Chordal, tau, 0.1);
            prop_assert!(m.forward(c(x, y)).im > 0.0);
            prop_assert!(m.inverse(c(x, y)).im > 0.0);
        }
    }
}
