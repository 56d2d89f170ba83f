//! Shared machinery for angular quadratures over `x = pi*theta/alpha` in
//! `[0, pi/2]` (the half-opening, used with even/odd parity).
//!
//! Integrands in this problem develop boundary layers against the wall
//! `x = pi/2` whose width can be far below one ulp of `pi/2`. The interval is
//! therefore split at `pi/4`: the outer half is parametrised by the distance
//! from the wall `u = pi/2 - x`, so trigonometric factors are computed from
//! `u` directly (`cos x = sin u`, `sin x = cos u`) and stay accurate down to
//! denormal distances.

use crate::error::Result;
use crate::numerics::{adaptive_vec, QuadratureSpec};

pub(crate) const SPLIT: f64 = std::f64::consts::FRAC_PI_4;

/// Trigonometric data for one angular node, accurate near the wall.
#[derive(Debug, Clone, Copy)]
pub(crate) struct AngleSample {
    /// x = pi*theta/alpha in [0, pi/2]
    pub x: f64,
    /// distance from the wall, u = pi/2 - x (exact on the wall side)
    pub u: f64,
    pub cos_x: f64,
    pub sin_x: f64,
}

impl AngleSample {
    pub fn from_x(x: f64) -> Self {
        AngleSample {
            x,
            u: std::f64::consts::FRAC_PI_2 - x,
            cos_x: x.cos(),
            sin_x: x.sin(),
        }
    }

    pub fn from_wall_distance(u: f64) -> Self {
        AngleSample {
            x: std::f64::consts::FRAC_PI_2 - u,
            u,
            cos_x: u.sin(),
            sin_x: u.cos(),
        }
    }

    pub fn sin_2x(&self) -> f64 {
        2.0 * self.sin_x * self.cos_x
    }

    pub fn cos_2x(&self) -> f64 {
        (self.sin_x - self.cos_x) * (self.sin_x + self.cos_x) * -1.0
    }

    /// cos(p*x) evaluated without cancellation on the wall side.
    pub fn cos_px(&self, p: f64) -> f64 {
        if self.u < SPLIT {
            let (s, c) = (p * std::f64::consts::FRAC_PI_2).sin_cos();
            let (su, cu) = (p * self.u).sin_cos();
            c * cu + s * su
        } else {
            (p * self.x).cos()
        }
    }

    /// sin(p*x) evaluated without cancellation on the wall side.
    pub fn sin_px(&self, p: f64) -> f64 {
        if self.u < SPLIT {
            let (s, c) = (p * std::f64::consts::FRAC_PI_2).sin_cos();
            let (su, cu) = (p * self.u).sin_cos();
            s * cu - c * su
        } else {
            (p * self.x).sin()
        }
    }
}

/// Adaptive quadrature of an `N`-component integrand over `x` in `[0, pi/2]`,
/// evaluated through [`AngleSample`] so the wall side keeps full precision.
pub(crate) fn integrate_half_angle<const N: usize>(
    f: &dyn Fn(&AngleSample) -> [f64; N],
    spec: &QuadratureSpec,
) -> Result<[f64; N]> {
    let inner = adaptive_vec(
        &|x| f(&AngleSample::from_x(x)),
        0.0,
        SPLIT,
        spec,
    )
    .map_err(|e| e.with_context("angular quadrature, centre side"))?;
    let outer = adaptive_vec(
        &|u| f(&AngleSample::from_wall_distance(u)),
        0.0,
        SPLIT,
        spec,
    )
    .map_err(|e| e.with_context("angular quadrature, wall side"))?;
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = inner.value[i] + outer.value[i];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_identities() {
        for &x in &[0.0, 0.3, 1.0, 1.5, std::f64::consts::FRAC_PI_2 - 1e-12] {
            let s = AngleSample::from_x(x);
            assert!((s.cos_x - x.cos()).abs() < 1e-15);
            assert!((s.sin_2x() - (2.0 * x).sin()).abs() < 1e-14);
            assert!((s.cos_2x() - (2.0 * x).cos()).abs() < 1e-14);
            assert!((s.cos_px(0.7) - (0.7 * x).cos()).abs() < 1e-14);
        }
        // far below one ulp of pi/2: from_wall_distance stays exact
        let u = 1e-30;
        let s = AngleSample::from_wall_distance(u);
        assert!((s.cos_x - u).abs() <= 1e-45);
        let p = 0.95;
        // cos(p x) = cos(p pi/2) cos(p u) + sin(p pi/2) sin(p u)
        let expect = (p * std::f64::consts::FRAC_PI_2).cos() + (p * std::f64::consts::FRAC_PI_2).sin() * p * u;
        assert!(((s.cos_px(p) - expect) / expect).abs() < 1e-14);
    }

    #[test]
    fn integrates_cos_squared() {
        let spec = QuadratureSpec::default();
        let v = integrate_half_angle(&|s: &AngleSample| [s.cos_x * s.cos_x], &spec).unwrap();
        assert!((v[0] - std::f64::consts::PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn resolves_narrow_wall_layer() {
        // integral of q/(u^2+q^2) du from 0 to pi/2 -> atan(pi/(2q)) ~ pi/2
        let q = 1e-18;
        let spec = QuadratureSpec::default();
        let v = integrate_half_angle(
            &|s: &AngleSample| [q / (s.u * s.u + q * q)],
            &spec,
        )
        .unwrap();
        let exact = (std::f64::consts::FRAC_PI_2 / q).atan();
        assert!(
            (v[0] - exact).abs() < 1e-9 * exact,
            "layer integral {} vs {}",
            v[0],
            exact
        );
    }
}
