//! The electrostatic self-energy ("image" potential) of a unit charge inside a
//! polarizable wedge of opening angle `alpha`, in the perfect-screening limit.
//!
//! The potential energy separates as `e*phi(r, theta) = [k(alpha) -
//! f(theta, alpha)] / (4 r)` in atomic units, with `k` an angle-independent
//! coefficient and `f` an angular profile, both given by integrals over the
//! unit interval with an inverse-square-root endpoint at zero and a removable
//! 0/0 singularity at one. An independent method-of-images construction at
//! `alpha = pi/n` serves as an oracle.

use crate::angular::AngleSample;
use crate::error::{Error, Result};
use crate::numerics::{integrate_unit, EndpointHint, QuadratureSpec};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

/// Wedge opening geometry. The material response is frozen at the
/// perfect-screening limit (`contrast = 1`, outer permittivity `1`); any other
/// value is rejected at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WedgeGeometry {
    alpha: f64,
    material_contrast: f64,
    outer_permittivity: f64,
}

impl WedgeGeometry {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0 * std::f64::consts::PI) {
            return Err(Error::Domain(format!(
                "opening angle must lie in (0, 2*pi], got {alpha}"
            )));
        }
        Ok(WedgeGeometry {
            alpha,
            material_contrast: 1.0,
            outer_permittivity: 1.0,
        })
    }

    /// Constructor that states the material assumptions explicitly; values
    /// other than the frozen limit are rejected.
    pub fn with_materials(alpha: f64, contrast: f64, outer_permittivity: f64) -> Result<Self> {
        if contrast != 1.0 || outer_permittivity != 1.0 {
            return Err(Error::Domain(
                "only the perfect-screening limit (contrast = 1, eps1 = 1) is supported".into(),
            ));
        }
        Self::new(alpha)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn material_contrast(&self) -> f64 {
        self.material_contrast
    }

    pub fn outer_permittivity(&self) -> f64 {
        self.outer_permittivity
    }

    /// A point is inside the vacuum opening iff `r > 0` and `|theta| < alpha/2`.
    pub fn is_inside(&self, r: f64, theta: f64) -> bool {
        r > 0.0 && theta.abs() < 0.5 * self.alpha
    }
}

// ---------------------------------------------------------------------------
// k(alpha)
// ---------------------------------------------------------------------------

/// The integrand of the `k` coefficient as printed (including the
/// `(pi -+ alpha)` coefficients, excluding the `2/(alpha*pi)` prefactor).
///
/// The numerator is a triple 0/0 cancellation at `eta -> 1`; for small
/// `1 - eta` it is evaluated by its series, elsewhere by `expm1`-based
/// groupings.
pub fn k_integrand(alpha: f64, eta: f64) -> f64 {
    let s = std::f64::consts::PI / alpha;
    if eta >= 1.0 {
        return k_integrand_limit(alpha);
    }
    let w = 1.0 - eta; // exact for eta >= 0.5
    alpha * k_integrand_reduced(s, eta, w)
}

/// Value of the `k` integrand at the removable endpoint `eta = 1`:
/// `(pi^2 - alpha^2) / (6 alpha)`.
pub fn k_integrand_limit(alpha: f64) -> f64 {
    let pi = std::f64::consts::PI;
    (pi * pi - alpha * alpha) / (6.0 * alpha)
}

/// alpha-reduced integrand: numerator written with `s = pi/alpha` only.
fn k_integrand_reduced(s: f64, eta: f64, w: f64) -> f64 {
    let w_cut = (0.25 / s.max(1.0)).min(0.2);
    let c_big = -(s * (-w).ln_1p()).exp_m1(); // 1 - eta^s
    let numerator = if w < w_cut {
        k_numerator_series(s, w)
    } else {
        let a_big = -((s + 1.0) * (-w).ln_1p()).exp_m1(); // 1 - eta^(s+1)
        let b_big = c_big - w; // eta - eta^s
        (s - 1.0) * a_big - (s + 1.0) * b_big
    };
    numerator / (eta.sqrt() * w * w * c_big)
}

/// Series of `(s-1)(1 - eta^(s+1)) - (s+1)(eta - eta^s)` in `w = 1 - eta`:
/// `sum_{j>=3} (-1)^(j+1) [ (s-1) C(s+1,j) - (s+1) C(s,j) ] w^j`.
fn k_numerator_series(s: f64, w: f64) -> f64 {
    let mut bin_a = (s + 1.0) * s * (s - 1.0) / 6.0; // C(s+1, 3)
    let mut bin_b = s * (s - 1.0) * (s - 2.0) / 6.0; // C(s, 3)
    let mut sign = 1.0; // (-1)^(j+1) at j = 3
    let mut wj = w * w * w;
    let mut total = 0.0;
    for j in 3..200 {
        let cj = sign * ((s - 1.0) * bin_a - (s + 1.0) * bin_b);
        let term = cj * wj;
        total += term;
        if term.abs() <= 1e-17 * total.abs() + 1e-300 {
            break;
        }
        let jf = j as f64;
        bin_a *= (s + 1.0 - jf) / (jf + 1.0);
        bin_b *= (s - jf) / (jf + 1.0);
        sign = -sign;
        wj *= w;
    }
    total
}

fn k_cache() -> &'static RwLock<HashMap<(u64, u64), f64>> {
    static CACHE: OnceLock<RwLock<HashMap<(u64, u64), f64>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// The angle-independent coefficient `k(alpha)`, including the
/// `2/(alpha*pi)` prefactor.
pub fn k_coefficient(alpha: f64, spec: &QuadratureSpec) -> Result<f64> {
    let geometry = WedgeGeometry::new(alpha)?;
    let alpha = geometry.alpha();
    let s = std::f64::consts::PI / alpha;
    let quad = QuadratureSpec {
        endpoint_hint: EndpointHint::Both,
        ..spec.clone()
    };
    let r = integrate_unit(
        |eta| {
            if eta >= 1.0 {
                k_integrand_limit(alpha) / alpha
            } else {
                k_integrand_reduced(s, eta, 1.0 - eta)
            }
        },
        &quad,
    )
    .map_err(|e| e.with_context(&format!("k coefficient at alpha={alpha}")))?;
    Ok(2.0 / std::f64::consts::PI * r.value)
}

/// Memoised `k(alpha)`; results are identical to [`k_coefficient`].
pub fn k_coefficient_cached(alpha: f64, spec: &QuadratureSpec) -> Result<f64> {
    let key = (alpha.to_bits(), spec.relative_tolerance.to_bits());
    if let Some(v) = k_cache().read().expect("k cache poisoned").get(&key) {
        return Ok(*v);
    }
    let v = k_coefficient(alpha, spec)?;
    k_cache()
        .write()
        .expect("k cache poisoned")
        .entry(key)
        .or_insert(v);
    Ok(v)
}

// ---------------------------------------------------------------------------
// f(theta, alpha)
// ---------------------------------------------------------------------------

/// The integrand of the angular profile `f` as printed (excluding the
/// `2/alpha` prefactor). Uses the grouping
/// `(1 - eta^s)(1 + eta^s) / [ (1 - eta^s)^2 + 4 eta^s cos^2(pi theta/alpha) ]`
/// which is free of cancellation for `theta` strictly inside the opening.
pub fn f_integrand(theta: f64, alpha: f64, eta: f64) -> f64 {
    let s = std::f64::consts::PI / alpha;
    let cos_phi = (std::f64::consts::PI * theta / alpha).cos();
    f_integrand_reduced(s, cos_phi * cos_phi, eta)
}

/// Value of the `f` integrand at the removable endpoint `eta = 1`:
/// `(pi/alpha) / (2 cos^2(pi theta / alpha))`.
pub fn f_integrand_limit(theta: f64, alpha: f64) -> f64 {
    let s = std::f64::consts::PI / alpha;
    let cos_phi = (std::f64::consts::PI * theta / alpha).cos();
    s / (2.0 * cos_phi * cos_phi)
}

fn f_integrand_reduced(s: f64, cos_phi_sq: f64, eta: f64) -> f64 {
    if eta >= 1.0 {
        return s / (2.0 * cos_phi_sq);
    }
    let w = 1.0 - eta;
    let ln_eta = (-w).ln_1p();
    let es = (s * ln_eta).exp();
    let c_big = -(s * ln_eta).exp_m1();
    let denom = c_big * c_big + 4.0 * es * cos_phi_sq;
    c_big * (1.0 + es) / (eta.sqrt() * w * denom)
}

/// The angular profile `f(theta, alpha)`, including the `2/alpha` prefactor.
/// Diverges as `theta -> +-alpha/2`; the product with `cos(pi theta/alpha)`
/// tends to `pi/alpha` there.
pub fn f_profile(theta: f64, alpha: f64, spec: &QuadratureSpec) -> Result<f64> {
    let geometry = WedgeGeometry::new(alpha)?;
    if theta.abs() >= 0.5 * alpha {
        return Err(Error::Domain(format!(
            "theta = {theta} lies on or inside the material (|theta| >= alpha/2 = {})",
            0.5 * alpha
        )));
    }
    let _ = geometry;
    let s = std::f64::consts::PI / alpha;
    let cos_phi = (std::f64::consts::PI * theta / alpha).cos();
    let c2 = cos_phi * cos_phi;
    let quad = QuadratureSpec {
        endpoint_hint: EndpointHint::Both,
        ..spec.clone()
    };
    let r = integrate_unit(|eta| f_integrand_reduced(s, c2, eta), &quad)
        .map_err(|e| e.with_context(&format!("f profile at theta={theta}, alpha={alpha}")))?;
    Ok(2.0 / alpha * r.value)
}

/// `f` with the cosine supplied in squared form (used by the kernel where the
/// near-wall cosine is known to better precision than `theta` itself).
fn f_from_cos_phi_sq(alpha: f64, cos_phi_sq: f64, spec: &QuadratureSpec) -> Result<f64> {
    let s = std::f64::consts::PI / alpha;
    let quad = QuadratureSpec {
        endpoint_hint: EndpointHint::Both,
        ..spec.clone()
    };
    let r = integrate_unit(|eta| f_integrand_reduced(s, cos_phi_sq, eta), &quad)
        .map_err(|e| e.with_context(&format!("f profile (cos^2={cos_phi_sq}, alpha={alpha})")))?;
    Ok(2.0 / alpha * r.value)
}

// ---------------------------------------------------------------------------
// method-of-images oracle at alpha = pi/n
// ---------------------------------------------------------------------------

/// Self-energy of a unit charge between two perfectly conducting half-planes
/// with opening `alpha = pi/n`, from the `2n - 1` Kelvin images generated by
/// successive reflection across both walls. In atomic units the self-energy is
/// half the charge-image interaction sum.
pub fn image_oracle(r: f64, theta: f64, n: u32) -> Result<f64> {
    if n < 1 {
        return Err(Error::Domain("image oracle requires n >= 1".into()));
    }
    let alpha = std::f64::consts::PI / n as f64;
    if !(r > 0.0) || theta.abs() >= 0.5 * alpha {
        return Err(Error::Domain(format!(
            "point (r={r}, theta={theta}) not strictly inside the pi/{n} opening"
        )));
    }
    let upper = 0.5 * alpha;
    let lower = -0.5 * alpha;
    // Reflect alternately starting at each wall; angles live on the covering
    // line, signs flip with every reflection.
    let mut images: Vec<(f64, f64)> = Vec::with_capacity(2 * n as usize - 1);
    let mut angle = theta;
    let mut sign = 1.0;
    let mut wall_up = true;
    while images.len() < 2 * n as usize - 1 {
        angle = 2.0 * if wall_up { upper } else { lower } - angle;
        sign = -sign;
        images.push((angle, sign));
        wall_up = !wall_up;
        if images.len() >= 2 * n as usize - 1 {
            break;
        }
    }
    let mut angle_d = theta;
    let mut sign_d = 1.0;
    let mut wall_up_d = false;
    while images.len() < 2 * n as usize - 1 {
        angle_d = 2.0 * if wall_up_d { upper } else { lower } - angle_d;
        sign_d = -sign_d;
        images.push((angle_d, sign_d));
        wall_up_d = !wall_up_d;
    }
    let mut energy = 0.0;
    for (phi, q) in images {
        let d = 2.0 * r * (0.5 * (theta - phi)).sin().abs();
        energy += 0.5 * q / d;
    }
    Ok(energy)
}

// ---------------------------------------------------------------------------
// composed potential
// ---------------------------------------------------------------------------

/// `e*phi(r, theta) = [k(alpha) - f(theta, alpha)] / (4 r)` in Hartree,
/// exactly homogeneous of degree -1 in `r`.
pub fn image_potential_energy(
    r: f64,
    theta: f64,
    geometry: &WedgeGeometry,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("require r > 0, got {r}")));
    }
    if !geometry.is_inside(r, theta) {
        return Err(Error::Domain(format!(
            "point (r={r}, theta={theta}) outside the opening |theta| < {}",
            0.5 * geometry.alpha()
        )));
    }
    let k = k_coefficient_cached(geometry.alpha(), spec)?;
    let f = f_profile(theta, geometry.alpha(), spec)?;
    Ok((k - f) / (4.0 * r))
}

// ---------------------------------------------------------------------------
// angular kernel: per-alpha cache of k and the smooth wall profile
// ---------------------------------------------------------------------------

/// Barycentric Chebyshev interpolant on Chebyshev-Lobatto nodes of `[0, pi/2]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChebyshevInterpolant {
    nodes: Vec<f64>,
    values: Vec<f64>,
}

impl ChebyshevInterpolant {
    /// Lobatto nodes `x_j = (pi/4)(1 + cos(j pi / n))`, j = 0..=n, so the
    /// first node sits exactly on the wall `x = pi/2`.
    pub fn build(n: usize, mut f: impl FnMut(f64) -> Result<f64>) -> Result<Self> {
        let quarter = std::f64::consts::FRAC_PI_4;
        let mut nodes = Vec::with_capacity(n + 1);
        let mut values = Vec::with_capacity(n + 1);
        for j in 0..=n {
            let x = quarter * (1.0 + (j as f64 * std::f64::consts::PI / n as f64).cos());
            nodes.push(x);
            values.push(f(x)?);
        }
        Ok(ChebyshevInterpolant { nodes, values })
    }

    pub fn eval(&self, x: f64) -> f64 {
        // barycentric weights for Chebyshev-Lobatto: (-1)^j, halved at ends
        let n = self.nodes.len() - 1;
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..=n {
            let dx = x - self.nodes[j];
            if dx == 0.0 {
                return self.values[j];
            }
            let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n {
                w *= 0.5;
            }
            let t = w / dx;
            num += t * self.values[j];
            den += t;
        }
        num / den
    }
}

/// Whether the smooth wall profile is interpolated or recomputed on demand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileMode {
    /// Chebyshev interpolation of `w(x) = f * cos(pi theta/alpha)` (fast path).
    Interpolated,
    /// Direct quadrature of `f` at every request (acceptance path).
    Direct,
}

/// Per-alpha evaluation kernel: memoised `k(alpha)` plus the smooth wall
/// profile `w(x) = f(alpha x / pi, alpha) * cos(x)`, which extends
/// continuously to the wall with value `pi/alpha`. Energies built from this
/// kernel never evaluate the divergent `f` itself near the wall.
#[derive(Debug, Clone)]
pub struct AngularKernel {
    alpha: f64,
    k: f64,
    spec: QuadratureSpec,
    mode: ProfileMode,
    interpolant: Option<ChebyshevInterpolant>,
}

/// Below this wall distance the direct mode returns the exact wall limit
/// `pi/alpha`; the profile is smooth, so the error is O(u).
const DIRECT_WALL_FLOOR: f64 = 1e-10;

impl AngularKernel {
    pub fn new(geometry: &WedgeGeometry, spec: &QuadratureSpec, mode: ProfileMode) -> Result<Self> {
        let alpha = geometry.alpha();
        let k = k_coefficient_cached(alpha, spec)?;
        let interpolant = match mode {
            ProfileMode::Interpolated => Some(ChebyshevInterpolant::build(64, |x| {
                Self::wall_profile_direct(alpha, x, spec)
            })?),
            ProfileMode::Direct => None,
        };
        Ok(AngularKernel {
            alpha,
            k,
            spec: spec.clone(),
            mode,
            interpolant,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn mode(&self) -> ProfileMode {
        self.mode
    }

    /// `w(x) = f(alpha x/pi, alpha) cos(x)` computed by direct quadrature.
    fn wall_profile_direct(alpha: f64, x: f64, spec: &QuadratureSpec) -> Result<f64> {
        let nu = std::f64::consts::PI / alpha;
        let u = std::f64::consts::FRAC_PI_2 - x;
        if u.abs() < DIRECT_WALL_FLOOR {
            return Ok(nu);
        }
        let cos_x = if u < 0.3 { u.sin() } else { x.cos() };
        let f = f_from_cos_phi_sq(alpha, cos_x * cos_x, spec)?;
        Ok(f * cos_x)
    }

    /// The smooth wall profile at an angular sample.
    pub(crate) fn wall_profile_at(&self, sample: &AngleSample) -> Result<f64> {
        match self.mode {
            ProfileMode::Interpolated => Ok(self
                .interpolant
                .as_ref()
                .expect("interpolant present in interpolated mode")
                .eval(sample.x)),
            ProfileMode::Direct => {
                let nu = std::f64::consts::PI / self.alpha;
                if sample.u < DIRECT_WALL_FLOOR {
                    return Ok(nu);
                }
                let f = f_from_cos_phi_sq(self.alpha, sample.cos_x * sample.cos_x, &self.spec)?;
                Ok(f * sample.cos_x)
            }
        }
    }

    /// Public wall-profile accessor in terms of `x = pi theta / alpha`.
    pub fn wall_profile(&self, x: f64) -> Result<f64> {
        self.wall_profile_at(&AngleSample::from_x(x))
    }
}

// ---------------------------------------------------------------------------
// field grid
// ---------------------------------------------------------------------------

/// Request for a polar evaluation grid covering the full circle.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridRequest {
    pub r_max: f64,
    pub radial_count: usize,
    pub angular_count: usize,
}

/// Potential energy sampled on a polar grid. Angular nodes span the full
/// circle; nodes on or inside the material are masked out and carry a NaN
/// sentinel in `values`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldGrid {
    pub alpha: f64,
    pub r_nodes: Vec<f64>,
    pub theta_nodes: Vec<f64>,
    /// row-major `[i_r * theta_nodes.len() + i_theta]`, Hartree
    pub values: Vec<f64>,
    pub inside: Vec<bool>,
}

impl FieldGrid {
    pub fn value_at(&self, ir: usize, itheta: usize) -> f64 {
        self.values[ir * self.theta_nodes.len() + itheta]
    }

    pub fn inside_at(&self, ir: usize, itheta: usize) -> bool {
        self.inside[ir * self.theta_nodes.len() + itheta]
    }

    /// CSV with header `r,theta,x,y,e_phi,inside`. Cartesian offsets follow
    /// the bisector-vertical orientation (`y = r cos(theta)`, `x = r
    /// sin(theta)`), which the planar limit fixes. Units are stated in the
    /// preamble; masked nodes print `nan`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("# image potential grid; lengths in Bohr, energies in Hartree\n");
        out.push_str(&format!("# alpha_rad = {:.12e}\n", self.alpha));
        out.push_str("r,theta,x,y,e_phi,inside\n");
        for (ir, &r) in self.r_nodes.iter().enumerate() {
            for (it, &th) in self.theta_nodes.iter().enumerate() {
                let v = self.value_at(ir, it);
                let inside = self.inside_at(ir, it);
                let vtxt = if inside {
                    format!("{:.12e}", v)
                } else {
                    "nan".to_string()
                };
                out.push_str(&format!(
                    "{:.12e},{:.12e},{:.12e},{:.12e},{},{}\n",
                    r,
                    th,
                    r * th.sin(),
                    r * th.cos(),
                    vtxt,
                    if inside { 1 } else { 0 }
                ));
            }
        }
        out
    }

    /// JSON document mirroring the CSV fields (masked values become null).
    pub fn to_json(&self) -> serde_json::Value {
        let nt = self.theta_nodes.len();
        let rows: Vec<serde_json::Value> = self
            .r_nodes
            .iter()
            .enumerate()
            .flat_map(|(ir, &r)| {
                let values = &self.values;
                let inside = &self.inside;
                let theta_nodes = &self.theta_nodes;
                theta_nodes.iter().enumerate().map(move |(it, &th)| {
                    let ins = inside[ir * nt + it];
                    serde_json::json!({
                        "r": r,
                        "theta": th,
                        "x": r * th.sin(),
                        "y": r * th.cos(),
                        "e_phi": if ins { serde_json::json!(values[ir * nt + it]) } else { serde_json::Value::Null },
                        "inside": ins,
                    })
                })
            })
            .collect();
        serde_json::json!({
            "units": {"length": "bohr", "energy": "hartree"},
            "alpha_rad": self.alpha,
            "nodes": rows,
        })
    }
}

/// Evaluate the image potential on a polar grid. Angular nodes are uniform
/// over the full circle (never exactly on a wall for the inside set); the
/// potential at each interior node agrees with the scalar
/// [`image_potential_energy`] call.
pub fn potential_grid(
    geometry: &WedgeGeometry,
    request: &GridRequest,
    spec: &QuadratureSpec,
) -> Result<FieldGrid> {
    if request.radial_count < 2 || request.angular_count < 2 {
        return Err(Error::Domain("grid counts must be at least 2".into()));
    }
    if !(request.r_max > 0.0) {
        return Err(Error::Domain("grid r_max must be positive".into()));
    }
    let alpha = geometry.alpha();
    let k = k_coefficient_cached(alpha, spec)?;
    let nr = request.radial_count;
    let nt = request.angular_count;
    let r_nodes: Vec<f64> = (0..nr)
        .map(|j| request.r_max * (j + 1) as f64 / nr as f64)
        .collect();
    let theta_nodes: Vec<f64> = (0..nt)
        .map(|i| -std::f64::consts::PI + 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / nt as f64)
        .collect();
    // f is independent of r: evaluate once per interior angular node
    let mut f_values = vec![f64::NAN; nt];
    for (i, &th) in theta_nodes.iter().enumerate() {
        if th.abs() < 0.5 * alpha {
            f_values[i] = f_profile(th, alpha, spec)
                .map_err(|e| e.with_context(&format!("grid node theta={th}")))?;
        }
    }
    let mut values = vec![f64::NAN; nr * nt];
    let mut inside = vec![false; nr * nt];
    for (j, &r) in r_nodes.iter().enumerate() {
        for (i, &th) in theta_nodes.iter().enumerate() {
            if geometry.is_inside(r, th) {
                inside[j * nt + i] = true;
                values[j * nt + i] = (k - f_values[i]) / (4.0 * r);
            }
        }
    }
    Ok(FieldGrid {
        alpha,
        r_nodes,
        theta_nodes,
        values,
        inside,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::with_tolerance(1e-12)
    }

    #[test]
    fn geometry_validation() {
        assert!(WedgeGeometry::new(0.0).is_err());
        assert!(WedgeGeometry::new(-1.0).is_err());
        assert!(WedgeGeometry::new(2.0 * std::f64::consts::PI + 0.1).is_err());
        assert!(WedgeGeometry::new(2.0 * std::f64::consts::PI).is_ok());
        assert!(WedgeGeometry::with_materials(1.0, 0.5, 1.0).is_err());
        assert!(WedgeGeometry::with_materials(1.0, 1.0, 2.0).is_err());
        let g = WedgeGeometry::new(std::f64::consts::PI).unwrap();
        assert!(g.is_inside(1.0, 0.0));
        assert!(!g.is_inside(1.0, std::f64::consts::FRAC_PI_2));
        assert!(!g.is_inside(0.0, 0.0));
    }

    #[test]
    fn k_analytic_limits() {
        let pi = std::f64::consts::PI;
        assert!(k_coefficient(pi, &spec()).unwrap().abs() <= 1e-8);
        assert!((k_coefficient(pi / 2.0, &spec()).unwrap() - 1.0).abs() <= 1e-7);
        assert!((k_coefficient(2.0 * pi, &spec()).unwrap() + 1.0 / pi).abs() <= 1e-7);
    }

    #[test]
    fn k_reference_values() {
        // frozen from independent quadrature of the raw integrand
        let k1 = k_coefficient(3.0 * std::f64::consts::PI / 10.0, &spec()).unwrap();
        assert!((k1 - 2.795591330470).abs() < 1e-8, "k(3pi/10) = {k1}");
        let k2 = k_coefficient(1.5 * std::f64::consts::PI, &spec()).unwrap();
        assert!((k2 + 0.230199641080).abs() < 1e-8, "k(3pi/2) = {k2}");
    }

    #[test]
    fn k_integrand_endpoint_limit() {
        // numerically extrapolated integrand values at eta -> 1 match the
        // closed-form removable limit
        for alpha in [0.9, 2.0, std::f64::consts::PI, 5.0] {
            let lim = k_integrand_limit(alpha);
            let near = k_integrand(alpha, 1.0 - 1e-7);
            assert!(
                ((near - lim) / lim).abs() < 1e-6,
                "alpha={alpha}: {near} vs {lim}"
            );
        }
    }

    #[test]
    fn f_planar_secant() {
        for th in [0.0, 0.3, 0.8, 1.2, 1.45] {
            let f = f_profile(th, std::f64::consts::PI, &spec()).unwrap();
            let want = 1.0 / th.cos();
            assert!(
                ((f - want) / want).abs() <= 1e-8,
                "f({th}, pi) = {f}, want {want}"
            );
        }
    }

    #[test]
    fn f_right_angle_value() {
        let f = f_profile(0.0, std::f64::consts::FRAC_PI_2, &spec()).unwrap();
        assert!((f - 2.0 * 2.0f64.sqrt()).abs() <= 1e-7, "f(0, pi/2) = {f}");
    }

    #[test]
    fn f_parity() {
        for (th, alpha) in [(0.4, 2.5), (0.9, 3.0), (1.2, 5.0)] {
            let a = f_profile(th, alpha, &spec()).unwrap();
            let b = f_profile(-th, alpha, &spec()).unwrap();
            assert!((a - b).abs() <= 1e-10 * a.abs());
        }
    }

    #[test]
    fn f_domain_errors() {
        assert!(f_profile(0.8, 1.6, &spec()).is_err());
        assert!(f_profile(-0.8, 1.6, &spec()).is_err());
    }

    #[test]
    fn f_integrand_endpoint_limit() {
        for (th, alpha) in [(0.2, 2.0), (0.0, std::f64::consts::PI), (0.5, 4.0)] {
            let lim = f_integrand_limit(th, alpha);
            let near = f_integrand(th, alpha, 1.0 - 1e-8);
            assert!(((near - lim) / lim).abs() < 1e-6);
        }
    }

    #[test]
    fn wall_limit_of_profile_product() {
        // f(theta, alpha) cos(pi theta/alpha) -> pi/alpha as theta -> alpha/2
        for alpha in [std::f64::consts::FRAC_PI_2, std::f64::consts::PI, 1.5 * std::f64::consts::PI] {
            let nu = std::f64::consts::PI / alpha;
            // Richardson extrapolation from two wall distances
            let h1 = 1e-3;
            let h2 = 5e-4;
            let v = |h: f64| {
                let th = 0.5 * alpha * (1.0 - h);
                f_profile(th, alpha, &spec()).unwrap() * (std::f64::consts::PI * th / alpha).cos()
            };
            let v1 = v(h1);
            let v2 = v(h2);
            let extrap = v2 + (v2 - v1);
            assert!(
                (extrap - nu).abs() < 1e-4,
                "alpha={alpha}: extrapolated {extrap}, want {nu}"
            );
        }
    }

    #[test]
    fn image_oracle_basics() {
        // single plane: charge at height d has energy -1/(4d)
        let d = 1.3;
        let u = image_oracle(d, 0.0, 1).unwrap();
        assert!((u + 1.0 / (4.0 * d)).abs() < 1e-14);
        // right-angle corner on the bisector: distances d1 = d2 = r/sqrt(2)
        let r = 2.0;
        let u = image_oracle(r, 0.0, 2).unwrap();
        let want = 0.25 * (1.0 / r - 2.0 * 2.0f64.sqrt() / r);
        assert!((u - want).abs() < 1e-14);
        // generic angle
        let th = 0.21;
        let u = image_oracle(r, th, 2).unwrap();
        let a4 = std::f64::consts::FRAC_PI_4;
        let want = 0.25 * (1.0 / r - 1.0 / (r * (a4 - th).sin()) - 1.0 / (r * (a4 + th).sin()));
        assert!((u - want).abs() < 1e-13);
        assert!(image_oracle(1.0, 0.0, 0).is_err());
    }

    #[test]
    fn oracle_agreement_with_composed_potential() {
        // alpha = pi/n: (k - f)/(4r) must match the Kelvin image sum
        let mut rng_state = 123456789u64;
        let mut next = move || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (rng_state >> 11) as f64 / (1u64 << 53) as f64
        };
        for n in [1u32, 2, 3] {
            let alpha = std::f64::consts::PI / n as f64;
            let geom = WedgeGeometry::new(alpha).unwrap();
            for _ in 0..20 {
                let r = 0.5 + 4.5 * next();
                let th = (next() - 0.5) * 0.98 * alpha;
                let lhs = image_potential_energy(r, th, &geom, &spec()).unwrap();
                let rhs = image_oracle(r, th, n).unwrap();
                assert!(
                    ((lhs - rhs) / rhs).abs() <= 1e-6,
                    "n={n} r={r} th={th}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn potential_homogeneity_and_planar_value() {
        let geom = WedgeGeometry::new(std::f64::consts::PI).unwrap();
        let v1 = image_potential_energy(1.7, 0.0, &geom, &spec()).unwrap();
        assert!((v1 + 1.0 / (4.0 * 1.7)).abs() < 1e-8);
        let v2 = image_potential_energy(3.4, 0.0, &geom, &spec()).unwrap();
        assert!((v2 - v1 / 2.0).abs() < 1e-12 * v1.abs());
    }

    #[test]
    fn right_angle_potential_value() {
        let geom = WedgeGeometry::new(std::f64::consts::FRAC_PI_2).unwrap();
        let v = image_potential_energy(1.0, 0.0, &geom, &spec()).unwrap();
        let want = (1.0 - 2.0 * 2.0f64.sqrt()) / 4.0;
        assert!((v - want).abs() < 1e-7, "{v} vs {want}");
    }

    #[test]
    fn potential_domain_errors() {
        let geom = WedgeGeometry::new(1.0).unwrap();
        assert!(image_potential_energy(-1.0, 0.0, &geom, &spec()).is_err());
        assert!(image_potential_energy(1.0, 0.6, &geom, &spec()).is_err());
    }

    #[test]
    fn cached_k_matches_uncached() {
        let alpha = 2.31;
        let a = k_coefficient(alpha, &spec()).unwrap();
        let b = k_coefficient_cached(alpha, &spec()).unwrap();
        let c = k_coefficient_cached(alpha, &spec()).unwrap();
        assert!(a == b && b == c);
    }

    #[test]
    fn kernel_interpolant_matches_direct() {
        let geom = WedgeGeometry::new(2.4).unwrap();
        let q = QuadratureSpec::with_tolerance(1e-12);
        let interp = AngularKernel::new(&geom, &q, ProfileMode::Interpolated).unwrap();
        let direct = AngularKernel::new(&geom, &q, ProfileMode::Direct).unwrap();
        for &x in &[0.0, 0.3, 0.9, 1.3, 1.5, 1.5705] {
            let a = interp.wall_profile(x).unwrap();
            let b = direct.wall_profile(x).unwrap();
            assert!(
                ((a - b) / b).abs() < 1e-9,
                "x={x}: interpolated {a} vs direct {b}"
            );
        }
        // wall endpoint is exact
        let nu = std::f64::consts::PI / 2.4;
        assert!((interp.wall_profile(std::f64::consts::FRAC_PI_2).unwrap() - nu).abs() < 1e-12);
    }

    #[test]
    fn grid_masking_and_consistency() {
        let geom = WedgeGeometry::new(std::f64::consts::PI).unwrap();
        let grid = potential_grid(
            &geom,
            &GridRequest {
                r_max: 10.0,
                radial_count: 4,
                angular_count: 8,
            },
            &spec(),
        )
        .unwrap();
        // theta-parity of values
        for ir in 0..4 {
            for it in 0..8 {
                let th = grid.theta_nodes[it];
                let mirrored = grid
                    .theta_nodes
                    .iter()
                    .position(|&t| (t + th).abs() < 1e-12)
                    .unwrap();
                if grid.inside_at(ir, it) {
                    assert!(grid.inside_at(ir, mirrored));
                    assert!((grid.value_at(ir, it) - grid.value_at(ir, mirrored)).abs() < 1e-12);
                } else {
                    assert!(grid.value_at(ir, it).is_nan());
                }
            }
        }
        // node values equal independent scalar evaluation
        for ir in [0usize, 3] {
            for it in 0..8 {
                if grid.inside_at(ir, it) {
                    let r = grid.r_nodes[ir];
                    let th = grid.theta_nodes[it];
                    let v = image_potential_energy(r, th, &geom, &spec()).unwrap();
                    assert!((grid.value_at(ir, it) - v).abs() <= 1e-12 * v.abs());
                }
            }
        }
        // masked exactly where |theta| >= alpha/2
        for it in 0..8 {
            let outside = grid.theta_nodes[it].abs() >= 0.5 * geom.alpha();
            assert_eq!(!grid.inside_at(0, it), outside);
        }
        assert!(potential_grid(
            &geom,
            &GridRequest {
                r_max: 10.0,
                radial_count: 1,
                angular_count: 8
            },
            &spec()
        )
        .is_err());
    }
}
