//! Small numerical helpers shared by the other modules: quadrature rules,
//! angle bookkeeping, seeded random streams and CSV float formatting.

use std::f64::consts::PI;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Number of Gauss–Legendre nodes used for every integral over `[-1, 1]`.
pub const GL_NODES: usize = 512;

/// Shared 512-node Gauss–Legendre rule.
pub fn gauss_legendre() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(GL_NODES).expect("degree >= 2"))
}

/// Integrates `f` over `[a, b]` with the shared rule.
pub fn integrate(a: f64, b: f64, f: impl FnMut(f64) -> f64) -> f64 {
    gauss_legendre().integrate(a, b, f)
}

/// Integrates `f(y)` over `[-1, 1]` after substituting `y = cos θ`.
///
/// Integrands carrying a `(1 - y²)^a` factor become `sin(θ)^(2a+1)` times a
/// smooth function, which the Gauss rule handles far better than the raw
/// endpoint singularity.
pub fn integrate_pm1(mut f: impl FnMut(f64) -> f64) -> f64 {
    gauss_legendre().integrate(0.0, PI, |theta| f(theta.cos()) * theta.sin())
}

/// Adaptive Gauss–Legendre quadrature on `[a, b]` (bisection until two
/// consecutive levels agree to `tol`).
pub fn integrate_adaptive(a: f64, b: f64, tol: f64, f: &impl Fn(f64) -> f64) -> f64 {
    fn gl10(a: f64, b: f64, f: &impl Fn(f64) -> f64) -> f64 {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(10).expect("degree >= 2"))
            .integrate(a, b, f)
    }
    fn rec(a: f64, b: f64, whole: f64, tol: f64, depth: u32, f: &impl Fn(f64) -> f64) -> f64 {
        let m = 0.5 * (a + b);
        let left = gl10(a, m, f);
        let right = gl10(m, b, f);
        let both = left + right;
        if depth == 0 || (both - whole).abs() <= tol * (1.0 + both.abs()) {
            return both;
        }
        // below roundoff there is nothing left to resolve
        let tol = (0.5 * tol).max(1e-16);
        rec(a, m, left, tol, depth - 1, f) + rec(m, b, right, tol, depth - 1, f)
    }
    if a == b {
        return 0.0;
    }
    rec(a, b, gl10(a, b, f), tol, 48, f)
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_pi(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_2pi(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y >= 2.0 * PI {
        0.0
    } else {
        y
    }
}

/// `cot(x / 2)`.
#[inline]
pub fn cot2(x: f64) -> f64 {
    let h = 0.5 * x;
    h.cos() / h.sin()
}

/// `sin(x / 2)`.
#[inline]
pub fn sin2(x: f64) -> f64 {
    (0.5 * x).sin()
}

/// Seeded random stream. Every generator in the crate draws from one of these.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed for replica `index` of an experiment with base seed `base`.
///
/// The splitting rule is `mix(base) XOR index`, where `mix` is the
/// SplitMix64 finalizer. Plain `base XOR index` would give bases `b` and
/// `b ^ 1` the same set of replica seeds; mixing the base first keeps the
/// replica sets of different bases apart.
pub fn replica_seed(base: u64, index: usize) -> u64 {
    let mut z = base.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    (z ^ (z >> 31)) ^ index as u64
}

/// Stream for replica `index`.
pub fn replica_rng(base: u64, index: usize) -> ChaCha8Rng {
    rng_from_seed(replica_seed(base, index))
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{:.16e}", x)
}

/// Linear interpolation of `(xs, ys)` at `x`; `xs` must be increasing.
/// Values outside the range are clamped to the end points.
pub fn interp_linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let i = xs.partition_point(|&v| v <= x);
    let (x0, x1) = (xs[i - 1], xs[i]);
    let w = (x - x0) / (x1 - x0);
    ys[i - 1] * (1.0 - w) + ys[i] * w
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn substituted_rule_handles_sqrt_weight() {
        let half_disc = integrate_pm1(|y| (1.0 - y * y).sqrt());
        assert_relative_eq!(half_disc, PI / 2.0, max_relative = 1e-13);
    }

    #[test]
    fn adaptive_rule_on_steep_integrand() {
        // ∫_{0.01}^{π/2} csc² = cot(0.01)
        let v = integrate_adaptive(0.01, PI / 2.0, 1e-13, &|t: f64| 1.0 / t.sin().powi(2));
        assert_relative_eq!(v, 1.0 / 0.01f64.tan(), max_relative = 1e-10);
    }

    #[test]
    fn wrapping() {
        assert_relative_eq!(wrap_pi(3.0 * PI), PI, epsilon = 1e-12);
        assert_relative_eq!(wrap_pi(-0.5), -0.5);
        assert_relative_eq!(wrap_2pi(-0.5), 2.0 * PI - 0.5);
    }

    #[test]
    fn interpolation_clamps() {
        let xs = [0.0, 1.0, 2.0];
        let ys = [0.0, 10.0, 0.0];
        assert_eq!(interp_linear(&xs, &ys, -1.0), 0.0);
        assert_eq!(interp_linear(&xs, &ys, 0.5), 5.0);
        assert_eq!(interp_linear(&xs, &ys, 1.5), 5.0);
    }

    #[test]
    fn seventeen_digits() {
        let s = fmt_f64(0.1);
        assert_eq!(s.parse::<f64>().unwrap(), 0.1);
        assert_eq!(s, "1.0000000000000001e-1");
    }
}
