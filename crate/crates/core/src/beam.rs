//! Herglotz densities on the sphere of radius `k0`, incident fields and the
//! Gaussian-beam uniqueness check.
//!
//! The incident field is `u(x) = \int_{k0 S} a(s) e^{i <x, s>} dS(s)` and is
//! evaluated with a fixed node set ([`BeamQuadrature`]): the trapezoidal rule
//! on the circle in 2D, and in 3D Gauss-Legendre in `cos` of the polar angle
//! about `omega` (split at the equator) times the trapezoidal rule in azimuth.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{classify_unchecked, householder_reflect, sphere_samples, ScanGeometry, SigmaClass};
use crate::linalg::{axpy, cross, dot, norm, orthonormal_complement, sub};

/// Density profile, independent of the beam direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DensityProfile {
    /// `exp(-A |s - <s, omega> omega|^2)`.
    Gaussian { a: f64 },
    UniformHalf,
    /// Piecewise-linear table over an angle in radians: the polar angle of `s`
    /// in 2D (interpolated periodically), the angle between `s` and `omega` in
    /// 3D (clamped at the ends).
    Tabulated { angles: Vec<f64>, values: Vec<Complex64> },
}

/// Serializable density description used in configs and record headers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityDescriptor {
    pub variant: String,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    /// Rows `[angle_deg, re, im]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<[f64; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taper_deg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HerglotzDensity {
    profile: DensityProfile,
    omega: Vec<f64>,
    k0: f64,
    /// Angular width (radians) of the C^2 taper towards the support rim.
    taper: Option<f64>,
}

impl HerglotzDensity {
    pub fn new(profile: DensityProfile, omega: Vec<f64>, k0: f64) -> Result<Self> {
        if (norm(&omega) - 1.0).abs() > 1e-12 {
            return Err(Error::Contract("omega must be a unit vector".into()));
        }
        if !(k0 > 0.0) {
            return Err(Error::Contract("k0 must be positive".into()));
        }
        match &profile {
            DensityProfile::Gaussian { a } if !(*a > 0.0) => {
                return Err(Error::Contract("Gaussian waist parameter A must be positive".into()))
            }
            DensityProfile::Tabulated { angles, values } => {
                if angles.is_empty() || angles.len() != values.len() {
                    return Err(Error::Contract("density table needs matching, nonempty columns".into()));
                }
                if angles.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::Contract("density table angles must increase".into()));
                }
            }
            _ => {}
        }
        Ok(Self {
            profile,
            omega,
            k0,
            taper: None,
        })
    }

    pub fn gaussian(a: f64, omega: Vec<f64>, k0: f64) -> Result<Self> {
        Self::new(DensityProfile::Gaussian { a }, omega, k0)
    }

    pub fn uniform_half(omega: Vec<f64>, k0: f64) -> Result<Self> {
        Self::new(DensityProfile::UniformHalf, omega, k0)
    }

    pub fn for_geometry(profile: DensityProfile, geometry: &ScanGeometry) -> Result<Self> {
        Self::new(profile, geometry.omega().to_vec(), geometry.k0())
    }

    /// Taper width in degrees; `None` or zero disables it.
    pub fn with_taper_deg(mut self, degrees: Option<f64>) -> Result<Self> {
        self.taper = match degrees {
            Some(t) if t < 0.0 || t >= 90.0 => {
                return Err(Error::Contract("taper width must lie in [0, 90) degrees".into()))
            }
            Some(t) if t > 0.0 => Some(t.to_radians()),
            _ => None,
        };
        Ok(self)
    }

    pub fn from_descriptor(desc: &DensityDescriptor, omega: Vec<f64>, k0: f64) -> Result<Self> {
        let profile = match desc.variant.as_str() {
            "gaussian" => DensityProfile::Gaussian {
                a: desc
                    .a
                    .ok_or_else(|| Error::Contract("gaussian density needs A".into()))?,
            },
            "uniform_half" => DensityProfile::UniformHalf,
            "tabulated" => {
                let table = desc
                    .table
                    .as_ref()
                    .ok_or_else(|| Error::Contract("tabulated density needs a table".into()))?;
                DensityProfile::Tabulated {
                    angles: table.iter().map(|r| r[0].to_radians()).collect(),
                    values: table.iter().map(|r| Complex64::new(r[1], r[2])).collect(),
                }
            }
            other => return Err(Error::Contract(format!("unknown density variant {other:?}"))),
        };
        Self::new(profile, omega, k0)?.with_taper_deg(desc.taper_deg)
    }

    pub fn descriptor(&self) -> DensityDescriptor {
        let taper_deg = self.taper.map(f64::to_degrees);
        match &self.profile {
            DensityProfile::Gaussian { a } => DensityDescriptor {
                variant: "gaussian".into(),
                a: Some(*a),
                table: None,
                taper_deg,
            },
            DensityProfile::UniformHalf => DensityDescriptor {
                variant: "uniform_half".into(),
                a: None,
                table: None,
                taper_deg,
            },
            DensityProfile::Tabulated { angles, values } => DensityDescriptor {
                variant: "tabulated".into(),
                a: None,
                table: Some(
                    angles
                        .iter()
                        .zip(values)
                        .map(|(t, v)| [t.to_degrees(), v.re, v.im])
                        .collect(),
                ),
                taper_deg,
            },
        }
    }

    pub fn profile(&self) -> &DensityProfile {
        &self.profile
    }
    pub fn omega(&self) -> &[f64] {
        &self.omega
    }
    pub fn k0(&self) -> f64 {
        self.k0
    }

    /// Upper bound of `|a|` on the sphere.
    pub fn max_abs(&self) -> f64 {
        match &self.profile {
            DensityProfile::Gaussian { .. } | DensityProfile::UniformHalf => 1.0,
            DensityProfile::Tabulated { values, .. } => {
                values.iter().map(|v| v.norm()).fold(0.0, f64::max)
            }
        }
    }

    /// `a(s)` for `|s| = k0`.
    pub fn eval(&self, s: &[f64]) -> Result<Complex64> {
        if s.len() != self.omega.len() {
            return Err(Error::Contract("direction has the wrong dimension".into()));
        }
        if (norm(s) - self.k0).abs() > 1e-10 * self.k0.max(1.0) {
            return Err(Error::Contract(format!(
                "direction must lie on the sphere of radius k0 (|s| = {})",
                norm(s)
            )));
        }
        Ok(self.eval_unchecked(s))
    }

    pub(crate) fn eval_unchecked(&self, s: &[f64]) -> Complex64 {
        let along = dot(s, &self.omega);
        if along <= 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let base = match &self.profile {
            DensityProfile::Gaussian { a } => {
                let perp2 = (dot(s, s) - along * along).max(0.0);
                Complex64::new((-a * perp2).exp(), 0.0)
            }
            DensityProfile::UniformHalf => Complex64::new(1.0, 0.0),
            DensityProfile::Tabulated { angles, values } => {
                if s.len() == 2 {
                    periodic_interp(angles, values, s[1].atan2(s[0]))
                } else {
                    let polar = (along / norm(s)).clamp(-1.0, 1.0).acos();
                    clamped_interp(angles, values, polar)
                }
            }
        };
        match self.taper {
            Some(width) => {
                let elevation = (along / norm(s)).clamp(0.0, 1.0).asin();
                base * smoothstep(elevation / width)
            }
            None => base,
        }
    }
}

/// C^2 ramp from 0 at `t <= 0` to 1 at `t >= 1`.
fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (t * (6.0 * t - 15.0) + 10.0)
}

fn periodic_interp(angles: &[f64], values: &[Complex64], theta: f64) -> Complex64 {
    let n = angles.len();
    if n == 1 {
        return values[0];
    }
    let lo = angles[0];
    let t = lo + (theta - lo).rem_euclid(TAU);
    // `t` lies in [lo, lo + 2 pi); the last segment wraps to the first node.
    let idx = angles.partition_point(|&a| a <= t);
    let (i0, i1, a0, a1) = if idx == 0 || idx == n {
        (n - 1, 0, angles[n - 1], angles[0] + TAU)
    } else {
        (idx - 1, idx, angles[idx - 1], angles[idx])
    };
    let u = if a1 > a0 { (t - a0) / (a1 - a0) } else { 0.0 };
    values[i0] * (1.0 - u) + values[i1] * u
}

fn clamped_interp(angles: &[f64], values: &[Complex64], theta: f64) -> Complex64 {
    let n = angles.len();
    if theta <= angles[0] {
        return values[0];
    }
    if theta >= angles[n - 1] {
        return values[n - 1];
    }
    let idx = angles.partition_point(|&a| a <= theta);
    let (a0, a1) = (angles[idx - 1], angles[idx]);
    let u = (theta - a0) / (a1 - a0);
    values[idx - 1] * (1.0 - u) + values[idx] * u
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Quadrature nodes and weights on the sphere of radius `k0`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamQuadrature {
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub order: usize,
}

impl BeamQuadrature {
    /// `order` is the number of circle nodes in 2D and the number of azimuth
    /// nodes in 3D (with `order / 4` polar nodes per hemisphere about `omega`).
    pub fn new(dim: usize, k0: f64, omega: &[f64], order: usize) -> Result<Self> {
        if order < 16 {
            return Err(Error::QuadratureOrder(order));
        }
        match dim {
            2 => {
                let w = TAU * k0 / order as f64;
                let nodes = (0..order)
                    .map(|q| {
                        let t = TAU * q as f64 / order as f64;
                        vec![k0 * t.cos(), k0 * t.sin()]
                    })
                    .collect();
                Ok(Self {
                    nodes,
                    weights: vec![w; order],
                    order,
                })
            }
            3 => {
                let perp = orthonormal_complement(omega);
                let (gl, glw) = gauss_legendre(order / 4);
                let mut nodes = Vec::new();
                let mut weights = Vec::new();
                for (lo, hi) in [(-1.0, 0.0), (0.0, 1.0)] {
                    for (x, w) in gl.iter().zip(&glw) {
                        let t: f64 = 0.5 * (hi - lo) * x + 0.5 * (hi + lo);
                        let wt = 0.5 * (hi - lo) * w;
                        let rho = (1.0 - t * t).max(0.0).sqrt();
                        for j in 0..order {
                            let phi = TAU * j as f64 / order as f64;
                            let mut s = axpy(&vec![0.0; 3], k0 * t, omega);
                            s = axpy(&s, k0 * rho * phi.cos(), &perp[0]);
                            s = axpy(&s, k0 * rho * phi.sin(), &perp[1]);
                            nodes.push(s);
                            weights.push(k0 * k0 * wt * TAU / order as f64);
                        }
                    }
                }
                Ok(Self {
                    nodes,
                    weights,
                    order,
                })
            }
            d => Err(Error::UnsupportedDimension(d)),
        }
    }

    pub fn for_density(density: &HerglotzDensity, order: usize) -> Result<Self> {
        Self::new(density.omega.len(), density.k0, &density.omega, order)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `sum_q w_q a(s_q) e^{i <x, s_q>}`.
    pub fn field(&self, density: &HerglotzDensity, x: &[f64]) -> Complex64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(s, w)| {
                let a = density.eval_unchecked(s);
                if a == Complex64::new(0.0, 0.0) {
                    a
                } else {
                    a * *w * Complex64::from_polar(1.0, dot(x, s))
                }
            })
            .sum()
    }
}

/// Incident field of the beam translated by `y_shift` (in `nu^perp`).
pub fn incident_field(
    density: &HerglotzDensity,
    x: &[f64],
    y_shift: &[f64],
    nu: &[f64],
    order: usize,
) -> Result<Complex64> {
    let quad = BeamQuadrature::for_density(density, order)?;
    shifted_field(density, &quad, x, y_shift, nu)
}

/// As [`incident_field`] with a prebuilt node set.
pub fn shifted_field(
    density: &HerglotzDensity,
    quad: &BeamQuadrature,
    x: &[f64],
    y_shift: &[f64],
    nu: &[f64],
) -> Result<Complex64> {
    if dot(y_shift, nu).abs() > 1e-10 * norm(y_shift).max(1.0) {
        return Err(Error::Contract("beam shift must lie in the scan plane".into()));
    }
    Ok(quad.field(density, &sub(x, y_shift)))
}

/// `b(sigma) = a(sigma) / a(H_nu sigma)` on `Sigma_2`.
pub fn density_ratio_b(density: &HerglotzDensity, sigma: &[f64], nu: &[f64]) -> Result<Complex64> {
    let num = density.eval(sigma)?;
    let den = density.eval_unchecked(&householder_reflect(sigma, nu));
    if den.norm() < 1e-300 {
        return Err(Error::RatioUndefined);
    }
    Ok(num / den)
}

/// `|pi_omega x|^2`, the squared length of the component orthogonal to `omega`.
fn perp_norm2(x: &[f64], omega: &[f64]) -> f64 {
    let p = dot(x, omega);
    (dot(x, x) - p * p).max(0.0)
}

/// Closed form of `b` for the Gaussian density.
pub fn gaussian_b(a: f64, omega: &[f64], nu: &[f64], sigma: &[f64]) -> f64 {
    let reflected = householder_reflect(sigma, nu);
    (a * (perp_norm2(&reflected, omega) - perp_norm2(sigma, omega))).exp()
}

/// Closed form of the directional derivative `Db(sigma)(nu x sigma)` for the
/// Gaussian density in 3D.
pub fn gaussian_b_derivative(a: f64, omega: &[f64], nu: &[f64], sigma: &[f64]) -> f64 {
    let b = gaussian_b(a, omega, nu, sigma);
    let t = cross(nu, sigma);
    4.0 * a * b * dot(sigma, nu) * dot(nu, omega) * dot(omega, &t)
}

/// Outcome of [`gaussian_condition_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianConditionReport {
    pub a: f64,
    pub k0: f64,
    pub nu_dot_omega: f64,
    pub samples: usize,
    pub sigma2_samples: usize,
    pub zero_fraction: f64,
    pub max_abs_derivative: f64,
    pub satisfied: bool,
    /// Derivative values at the `Sigma_2` samples.
    #[serde(skip)]
    pub derivatives: Vec<f64>,
}

/// Evaluates `Db(sigma)(nu x sigma)` on `Sigma_2` at `samples` quasi-uniform
/// sphere points. The condition holds when `<nu, omega>` is nonzero and at most
/// 5% of the `Sigma_2` samples have a derivative below `1e-12` times the local
/// scale `4 A k0^2 b(sigma)`.
pub fn gaussian_condition_check(
    a: f64,
    omega: &[f64],
    nu: &[f64],
    k0: f64,
    samples: usize,
) -> Result<GaussianConditionReport> {
    if omega.len() != 3 || nu.len() != 3 {
        return Err(Error::UnsupportedDimension(omega.len()));
    }
    let offset = 2.0;
    let geometry = ScanGeometry::new(3, k0, omega.to_vec(), nu.to_vec(), offset, 1.0)?;
    let c = dot(nu, omega);
    let mut derivatives = Vec::new();
    let mut zeros = 0usize;
    for s in sphere_samples(3, k0, samples) {
        if !classify_unchecked(&s, &geometry).in_sigma2() {
            continue;
        }
        let value = gaussian_b_derivative(a, omega, nu, &s);
        let scale = 4.0 * a * k0 * k0 * gaussian_b(a, omega, nu, &s);
        if value.abs() < 1e-12 * scale {
            zeros += 1;
        }
        derivatives.push(value);
    }
    let count = derivatives.len();
    let zero_fraction = if count == 0 { 0.0 } else { zeros as f64 / count as f64 };
    let max_abs_derivative = derivatives.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let satisfied = c.abs() > geometry.tau() / k0 && zero_fraction <= 0.05;
    Ok(GaussianConditionReport {
        a,
        k0,
        nu_dot_omega: c,
        samples,
        sigma2_samples: count,
        zero_fraction,
        max_abs_derivative,
        satisfied,
        derivatives,
    })
}

/// Whether `sigma` is a `Sigma_2` point of the geometry.
pub fn in_sigma2(sigma: &[f64], geometry: &ScanGeometry) -> bool {
    matches!(
        classify_unchecked(sigma, geometry),
        SigmaClass::Sigma2 | SigmaClass::Sigma2Tilde
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [1, 2, 5, 16, 64] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            for p in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-12, "n {n} p {p}");
            }
        }
    }

    #[test]
    fn density_examples() {
        let g = HerglotzDensity::gaussian(0.7, vec![0.0, 1.0], 3.0).unwrap();
        assert!((g.eval(&[0.0, 3.0]).unwrap() - c(1.0)).norm() < 1e-15);
        let s = [(0.99f64).sqrt() * 3.0, -0.3];
        assert_eq!(g.eval(&s).unwrap(), c(0.0));
        let g1 = HerglotzDensity::gaussian(1.0, vec![0.0, 1.0], 1.0).unwrap();
        let t = PI / 6.0;
        let v = g1.eval(&[t.sin(), t.cos()]).unwrap();
        assert!((v - c((-0.25f64).exp())).norm() < 1e-15);
        assert!(matches!(g1.eval(&[2.0, 0.0]), Err(Error::Contract(_))));
    }

    #[test]
    fn tabulated_interpolates() {
        let table = DensityDescriptor {
            variant: "tabulated".into(),
            a: None,
            table: Some(vec![[0.0, 1.0, 0.0], [90.0, 3.0, 0.0], [180.0, 1.0, 2.0]]),
            taper_deg: None,
        };
        let d = HerglotzDensity::from_descriptor(&table, vec![0.0, 1.0], 1.0).unwrap();
        let t = 45f64.to_radians();
        assert!((d.eval(&[t.cos(), t.sin()]).unwrap() - c(2.0)).norm() < 1e-14);
        let t = 135f64.to_radians();
        assert!((d.eval(&[t.cos(), t.sin()]).unwrap() - Complex64::new(2.0, 1.0)).norm() < 1e-14);
        assert_eq!(d.descriptor(), table);
    }

    #[test]
    fn taper_is_smooth_and_bounded() {
        let d = HerglotzDensity::uniform_half(vec![0.0, 1.0], 1.0)
            .unwrap()
            .with_taper_deg(Some(2.0))
            .unwrap();
        assert_eq!(d.eval(&[0.0, 1.0]).unwrap(), c(1.0));
        let t = 1f64.to_radians();
        let v = d.eval(&[t.cos(), t.sin()]).unwrap().re;
        assert!((v - 0.5).abs() < 1e-12);
        assert!(matches!(
            HerglotzDensity::uniform_half(vec![0.0, 1.0], 1.0).unwrap().with_taper_deg(Some(95.0)),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn uniform_field_at_focus() {
        let d = HerglotzDensity::uniform_half(vec![0.0, 1.0], 2.0).unwrap();
        let y = [0.7, 0.0];
        let u = incident_field(&d, &y, &y, &[0.0, 1.0], 1024).unwrap();
        // Trapezoid nodes on the rim carry the full weight; one of the two
        // rim nodes sits exactly on the excluded boundary.
        assert!((u.re - PI * 2.0).abs() < 2.0 * TAU * 2.0 / 1024.0, "{u}");
        let zero = HerglotzDensity::new(
            DensityProfile::Tabulated { angles: vec![0.0], values: vec![c(0.0)] },
            vec![0.0, 1.0],
            2.0,
        )
        .unwrap();
        assert_eq!(incident_field(&zero, &[0.3, 0.2], &[0.0, 0.0], &[0.0, 1.0], 64).unwrap(), c(0.0));
        assert!(matches!(
            incident_field(&d, &[0.0, 0.0], &[0.0, 0.0], &[0.0, 1.0], 8),
            Err(Error::QuadratureOrder(8))
        ));
    }

    #[test]
    fn gaussian_field_self_converges() {
        let k0 = TAU;
        let d = HerglotzDensity::gaussian(2.0, vec![0.0, -1.0], k0).unwrap();
        let x = [0.0, -1.5];
        let nu = [0.0, -1.0];
        let ns = (4.0 * k0 * (1.5 + 1.0)).ceil() as usize;
        let u1 = incident_field(&d, &x, &[0.0, 0.0], &nu, ns).unwrap();
        let u2 = incident_field(&d, &x, &[0.0, 0.0], &nu, 2 * ns).unwrap();
        assert!((u1 - u2).norm() <= 1e-10 * u2.norm().max(1e-300), "{u1} {u2}");
    }

    #[test]
    fn shift_identity_is_exact() {
        let d = HerglotzDensity::gaussian(0.3, vec![0.6, 0.8], 2.0).unwrap();
        let nu = [0.0, 1.0];
        let x = [1.3, -0.4];
        let y = [0.9, 0.0];
        let a = incident_field(&d, &x, &y, &nu, 256).unwrap();
        let b = incident_field(&d, &[x[0] - y[0], x[1] - y[1]], &[0.0, 0.0], &nu, 256).unwrap();
        assert_eq!(a, b);
        assert!(incident_field(&d, &x, &[0.0, 1.0], &nu, 256).is_err());
    }

    #[test]
    fn helmholtz_residual_2d() {
        let k0 = 2.0;
        let d = HerglotzDensity::uniform_half(vec![0.0, 1.0], k0).unwrap();
        let quad = BeamQuadrature::for_density(&d, 512).unwrap();
        let h = 0.01 / k0;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let x = [rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)];
            let u = quad.field(&d, &x);
            let mut lap = -4.0 * u;
            for (dx, dy) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)] {
                lap += quad.field(&d, &[x[0] + dx, x[1] + dy]);
            }
            lap /= h * h;
            let residual = (lap + k0 * k0 * u).norm();
            assert!(residual <= 1e-4 * k0 * k0 * u.norm(), "{residual} at {x:?}");
        }
    }

    #[test]
    fn sphere_quadrature_3d() {
        let k0 = 1.5;
        let omega = crate::linalg::normalize(&[0.2, -0.3, 1.0]);
        let quad = BeamQuadrature::new(3, k0, &omega, 64).unwrap();
        let area: f64 = quad.weights.iter().sum();
        assert!((area - 4.0 * PI * k0 * k0).abs() < 1e-10);
        let d = HerglotzDensity::uniform_half(omega.clone(), k0).unwrap();
        // Field of the uniform hemisphere at the origin: half the sphere area.
        let u = quad.field(&d, &[0.0; 3]);
        assert!((u.re - 2.0 * PI * k0 * k0).abs() < 1e-9, "{u}");
        // Plane-wave superposition over the full sphere: 4 pi k0^2 sinc(k0 |x|).
        let full: Complex64 = quad
            .nodes
            .iter()
            .zip(&quad.weights)
            .map(|(s, w)| *w * Complex64::from_polar(1.0, dot(s, &[0.4, 0.1, -0.7])))
            .sum();
        let rr = k0 * norm(&[0.4, 0.1, -0.7]);
        assert!((full.re - 4.0 * PI * k0 * k0 * rr.sin() / rr).abs() < 1e-10);
    }

    #[test]
    fn ratio_examples() {
        let omega = vec![0.0, 0.0, 1.0];
        let nu = crate::linalg::normalize(&[0.3, 0.0, 1.0]);
        let g = HerglotzDensity::gaussian(0.8, omega.clone(), 1.0).unwrap();
        let u = HerglotzDensity::uniform_half(omega.clone(), 1.0).unwrap();
        let geometry = ScanGeometry::new(3, 1.0, omega.clone(), nu.clone(), 2.0, 1.0).unwrap();
        let in_plane = crate::linalg::normalize(&[1.0, 0.5, -0.3]);
        let in_plane = crate::linalg::normalize(&axpy(&in_plane, -dot(&in_plane, &nu), &nu));
        let in_plane = if dot(&in_plane, &omega) > 0.0 { in_plane } else { crate::linalg::scale(&in_plane, -1.0) };
        assert!((density_ratio_b(&g, &in_plane, &nu).unwrap() - c(1.0)).norm() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut checked = 0;
        while checked < 200 {
            let s = random_unit3(&mut rng);
            if !in_sigma2(&s, &geometry) {
                continue;
            }
            checked += 1;
            assert!((density_ratio_b(&u, &s, &nu).unwrap() - c(1.0)).norm() < 1e-15);
            let b = density_ratio_b(&g, &s, &nu).unwrap();
            let closed = gaussian_b(0.8, &omega, &nu, &s);
            assert!((b.re - closed).abs() <= 1e-12 * closed, "{b} {closed}");
        }
        let s = [0.0, 0.6, 0.8];
        let outside = ScanGeometry::new(3, 1.0, omega.clone(), vec![0.0, 0.0, 1.0], 2.0, 1.0).unwrap();
        assert!(!in_sigma2(&s, &outside));
        assert!(matches!(
            density_ratio_b(&g, &s, &[0.0, 0.0, 1.0]),
            Err(Error::RatioUndefined)
        ));
    }

    fn random_unit3(rng: &mut ChaCha8Rng) -> Vec<f64> {
        let z: f64 = rng.random_range(-1.0..1.0);
        let phi = rng.random_range(0.0..TAU);
        let rho = (1.0 - z * z).sqrt();
        vec![rho * phi.cos(), rho * phi.sin(), z]
    }

    #[test]
    fn condition_examples() {
        let parallel = gaussian_condition_check(1.0, &[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0], 1.0, 4000).unwrap();
        assert!(!parallel.satisfied);
        assert_eq!(parallel.max_abs_derivative, 0.0);
        let perpendicular = gaussian_condition_check(1.0, &[0.0, 0.0, 1.0], &[0.0, 0.0, 1.0], 1.0, 4000).unwrap();
        assert!(perpendicular.satisfied);
        assert_eq!(perpendicular.sigma2_samples, 0);
        let nu = [0.0, (0.75f64).sqrt(), 0.5];
        let tilted = gaussian_condition_check(1.0, &[0.0, 0.0, 1.0], &nu, 1.0, 4000).unwrap();
        assert!(tilted.satisfied);
        assert!(tilted.sigma2_samples > 0);
        assert!(tilted.zero_fraction <= 0.05);
        // sigma in nu^perp
        let s = crate::linalg::normalize(&[1.0, 0.0, 0.0]);
        assert_eq!(gaussian_b_derivative(1.0, &[0.0, 0.0, 1.0], &nu, &s), 0.0);
        assert!(gaussian_condition_check(1.0, &[0.0, 1.0], &[0.0, 1.0], 1.0, 10).is_err());
    }

    proptest! {
        #[test]
        fn support_rule(theta in 0.0..TAU, a in 0.01f64..5.0, w in 0.0..TAU) {
            let omega = vec![w.cos(), w.sin()];
            let s = [theta.cos() * 2.0, theta.sin() * 2.0];
            for d in [
                HerglotzDensity::gaussian(a, omega.clone(), 2.0).unwrap(),
                HerglotzDensity::uniform_half(omega.clone(), 2.0).unwrap(),
            ] {
                let v = d.eval(&s).unwrap();
                if dot(&s, &omega) <= 0.0 {
                    prop_assert_eq!(v, c(0.0));
                } else {
                    prop_assert!(v.norm() > 0.0);
                }
            }
        }
    }
}
