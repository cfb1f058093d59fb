//! Analytic scattering potentials built from balls and Gaussian blobs.
//!
//! The potential is `f = k0^2 (n^2 - 1)`. Spectra use the unitary convention
//! `F f(y) = (2 pi)^{-d/2} \int f(x) e^{-i <y, x>} dx`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use crate::special::bessel_j1;

/// Effective support radius of a Gaussian blob, in widths.
pub const BLOB_SUPPORT_WIDTHS: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PrimitiveKind {
    Ball,
    GaussianBlob,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    pub kind: PrimitiveKind,
    pub center: Vec<f64>,
    /// Radius for a ball, standard width for a blob.
    pub size: f64,
    pub contrast: Complex64,
}

impl Primitive {
    pub fn ball(center: Vec<f64>, radius: f64, contrast: Complex64) -> Self {
        Self {
            kind: PrimitiveKind::Ball,
            center,
            size: radius,
            contrast,
        }
    }

    pub fn blob(center: Vec<f64>, width: f64, contrast: Complex64) -> Self {
        Self {
            kind: PrimitiveKind::GaussianBlob,
            center,
            size: width,
            contrast,
        }
    }

    /// Radius of the ball used for support accounting.
    pub fn support_radius(&self) -> f64 {
        match self.kind {
            PrimitiveKind::Ball => self.size,
            PrimitiveKind::GaussianBlob => BLOB_SUPPORT_WIDTHS * self.size,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        let rr = squared_distance(x, &self.center);
        match self.kind {
            PrimitiveKind::Ball => {
                if rr < self.size * self.size {
                    self.contrast
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            PrimitiveKind::GaussianBlob => {
                self.contrast * (-rr / (2.0 * self.size * self.size)).exp()
            }
        }
    }

    pub fn fourier(&self, y: &[f64]) -> Complex64 {
        let d = y.len();
        let rho = norm(y);
        let phase = Complex64::from_polar(1.0, -dot(y, &self.center));
        let amplitude = match self.kind {
            PrimitiveKind::Ball => ball_transform(d, self.size, rho),
            PrimitiveKind::GaussianBlob => {
                self.size.powi(d as i32) * (-0.5 * rho * rho * self.size * self.size).exp()
            }
        };
        self.contrast * phase * amplitude
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Radial transform of the unit-contrast ball of radius `radius`.
fn ball_transform(d: usize, radius: f64, rho: f64) -> f64 {
    let t = radius * rho;
    match d {
        2 => {
            if t < 1e-8 {
                0.5 * radius * radius * (1.0 - t * t / 8.0)
            } else {
                radius * bessel_j1(t) / rho
            }
        }
        3 => {
            let pref = (2.0 / PI).sqrt();
            if t < 1e-3 {
                // (sin t - t cos t) / t^3 = 1/3 - t^2/30 + t^4/840 - ...
                pref * radius.powi(3) * (1.0 / 3.0 - t * t / 30.0 + t.powi(4) / 840.0)
            } else {
                pref * (t.sin() - t * t.cos()) / rho.powi(3)
            }
        }
        _ => f64::NAN,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phantom {
    dim: usize,
    radius: f64,
    primitives: Vec<Primitive>,
}

impl Phantom {
    /// Checks that every primitive's support ball lies inside `B_radius`.
    pub fn new(dim: usize, radius: f64, primitives: Vec<Primitive>) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if !(radius > 0.0) {
            return Err(Error::Contract("phantom support radius must be positive".into()));
        }
        for (i, p) in primitives.iter().enumerate() {
            if p.center.len() != dim {
                return Err(Error::Contract(format!(
                    "primitive {i} has a {}-dimensional centre",
                    p.center.len()
                )));
            }
            if !(p.size > 0.0) {
                return Err(Error::Contract(format!("primitive {i} needs a positive size")));
            }
            let reach = norm(&p.center) + p.support_radius();
            if reach > radius * (1.0 + 1e-12) {
                return Err(Error::Contract(format!(
                    "primitive {i} reaches {reach}, outside the support ball of radius {radius}"
                )));
            }
        }
        Ok(Self {
            dim,
            radius,
            primitives,
        })
    }

    pub fn empty(dim: usize, radius: f64) -> Result<Self> {
        Self::new(dim, radius, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }
    pub fn primitives(&self) -> &[Primitive] {
        &self.primitives
    }

    /// True when every contrast is zero.
    pub fn is_zero(&self) -> bool {
        self.primitives.iter().all(|p| p.contrast == Complex64::new(0.0, 0.0))
    }

    /// The potential `f(x)`, zero outside `B_r`.
    pub fn eval_potential(&self, x: &[f64]) -> Complex64 {
        if dot(x, x) >= self.radius * self.radius {
            return Complex64::new(0.0, 0.0);
        }
        self.primitives.iter().map(|p| p.eval(x)).sum()
    }

    /// Closed-form `F f(y)`. Blob tails beyond the support ball are included.
    pub fn eval_potential_fourier(&self, y: &[f64]) -> Complex64 {
        self.primitives.iter().map(|p| p.fourier(y)).sum()
    }

    /// `max |f| r^2`, a rough indicator for the validity of the Born regime.
    pub fn weak_scattering_indicator(&self) -> f64 {
        let peak: f64 = self.primitives.iter().map(|p| p.contrast.norm()).sum();
        peak * self.radius * self.radius
    }

    /// Phantom with every primitive translated by `t`.
    pub fn translated(&self, t: &[f64]) -> Result<Self> {
        let primitives = self
            .primitives
            .iter()
            .map(|p| Primitive {
                center: p.center.iter().zip(t).map(|(c, s)| c + s).collect(),
                ..p.clone()
            })
            .collect();
        Self::new(self.dim, self.radius + norm(t), primitives)
    }

    /// Phantom with every contrast multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for p in &mut out.primitives {
            p.contrast *= factor;
        }
        out
    }
}

/// Refractive index `n = sqrt(1 + f / k0^2)`, principal branch.
pub fn index_from_potential(f: Complex64, k0: f64) -> Result<Complex64> {
    if !(k0 > 0.0) {
        return Err(Error::Contract("k0 must be positive".into()));
    }
    let z = Complex64::new(1.0, 0.0) + f / (k0 * k0);
    if z.im == 0.0 && z.re < 0.0 {
        return Err(Error::NonphysicalContrast(z.re));
    }
    Ok(z.sqrt())
}

/// Potential `f = k0^2 (n^2 - 1)` of a refractive index.
pub fn potential_from_index(n: Complex64, k0: f64) -> Complex64 {
    k0 * k0 * (n * n - 1.0)
}

/// Quadrature of the defining integral, used as an oracle in tests.
#[doc(hidden)]
pub fn fourier_by_quadrature(phantom: &Phantom, y: &[f64], cells: usize) -> Complex64 {
    let d = phantom.dim;
    let r = phantom.radius;
    let h = 2.0 * r / cells as f64;
    let total = cells.pow(d as u32);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut x = vec![0.0; d];
    for flat in 0..total {
        let mut rem = flat;
        for a in (0..d).rev() {
            x[a] = -r + (rem % cells) as f64 * h + 0.5 * h;
            rem /= cells;
        }
        let f = phantom.eval_potential(&x);
        if f != Complex64::new(0.0, 0.0) {
            acc += f * Complex64::from_polar(1.0, -dot(y, &x));
        }
    }
    acc * h.powi(d as i32) / (2.0 * PI).powf(d as f64 / 2.0)
}
