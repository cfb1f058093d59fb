//! Hemisphere geometry on the wavenumber sphere, the `Sigma_1`/`Sigma_2`
//! split of the beam hemisphere, and the Fourier coverage sets
//! `Y_1`, `Y_tilde` and `Y_2`.
//!
//! Half-space tests use the tolerance `tau = 1e-9 * k0`. Points whose
//! deciding inner product falls inside `(-tau, tau)` are classified as
//! [`SigmaClass::Boundary`] and belong to neither `Sigma` set; these are null
//! sets for every integral and almost-everywhere statement downstream.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm, orthonormal_complement, scale, sub, unflatten, unit};

const UNIT_TOL: f64 = 1e-12;

/// Beam, scan and detector configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanGeometry {
    dim: usize,
    k0: f64,
    omega: Vec<f64>,
    nu: Vec<f64>,
    offset: f64,
    radius: f64,
}

impl ScanGeometry {
    /// `omega` is the beam direction, `nu` the scan normal, `offset` the
    /// detector plane position `L` along `e_d` and `radius` the object
    /// support radius `r`.
    pub fn new(
        dim: usize,
        k0: f64,
        omega: Vec<f64>,
        nu: Vec<f64>,
        offset: f64,
        radius: f64,
    ) -> Result<Self> {
        if dim < 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if omega.len() != dim || nu.len() != dim {
            return Err(Error::Geometry(format!(
                "omega and nu must have {dim} components"
            )));
        }
        if (norm(&omega) - 1.0).abs() > UNIT_TOL {
            return Err(Error::Geometry("omega must be a unit vector".into()));
        }
        if (norm(&nu) - 1.0).abs() > UNIT_TOL {
            return Err(Error::Geometry("nu must be a unit vector".into()));
        }
        if !(k0 > 0.0) {
            return Err(Error::Geometry("k0 must be positive".into()));
        }
        if !(radius > 0.0) {
            return Err(Error::Geometry("r must be positive".into()));
        }
        if !(offset > radius) {
            return Err(Error::Geometry(format!(
                "detector offset must satisfy L > r (L = {offset}, r = {radius})"
            )));
        }
        Ok(Self {
            dim,
            k0,
            omega,
            nu,
            offset,
            radius,
        })
    }

    /// Two-dimensional geometry from beam and scan-normal angles in radians.
    pub fn from_angles_2d(k0: f64, omega_angle: f64, nu_angle: f64, offset: f64, radius: f64) -> Result<Self> {
        Self::new(
            2,
            k0,
            vec![omega_angle.cos(), omega_angle.sin()],
            vec![nu_angle.cos(), nu_angle.sin()],
            offset,
            radius,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn k0(&self) -> f64 {
        self.k0
    }
    pub fn omega(&self) -> &[f64] {
        &self.omega
    }
    pub fn nu(&self) -> &[f64] {
        &self.nu
    }
    /// Detector plane offset `L`.
    pub fn offset(&self) -> f64 {
        self.offset
    }
    /// Object support radius `r`.
    pub fn radius(&self) -> f64 {
        self.radius
    }
    /// Half-space tolerance `tau_geo`.
    pub fn tau(&self) -> f64 {
        1e-9 * self.k0
    }
    /// Detector plane normal `e_d`.
    pub fn detector_normal(&self) -> Vec<f64> {
        unit(self.dim, self.dim - 1)
    }
    /// Orthonormal basis of the scan plane `nu^perp`.
    pub fn scan_basis(&self) -> Vec<Vec<f64>> {
        orthonormal_complement(&self.nu)
    }

    /// Approximate equality used to match record metadata against a geometry.
    pub fn approx_eq(&self, other: &Self) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
        self.dim == other.dim
            && close(self.k0, other.k0)
            && close(self.offset, other.offset)
            && close(self.radius, other.radius)
            && self.omega.iter().zip(&other.omega).all(|(a, b)| close(*a, *b))
            && self.nu.iter().zip(&other.nu).all(|(a, b)| close(*a, *b))
    }
}

/// Axial wavenumber `kappa(xi) = sqrt(k0^2 - |xi|^2)`.
pub fn kappa(xi: &[f64], k0: f64) -> Result<f64> {
    let n = norm(xi);
    if n > k0 + 1e-12 {
        return Err(Error::Domain(format!(
            "evanescent frequency: |xi| = {n} > k0 = {k0}"
        )));
    }
    let radicand = k0 * k0 - n * n;
    if radicand < 1e-12 {
        Ok(0.0)
    } else {
        Ok(radicand.sqrt())
    }
}

/// Lift `h_v(xi) = xi + kappa(xi) v` of a frequency in `v^perp` onto the
/// hemisphere `S_v`.
pub fn hemisphere_lift(xi: &[f64], v: &[f64], k0: f64) -> Result<Vec<f64>> {
    let along = dot(xi, v);
    if along.abs() > 1e-10 * k0.max(1.0) {
        return Err(Error::Contract(format!(
            "frequency not orthogonal to lift direction (<xi, v> = {along})"
        )));
    }
    if norm(xi) >= k0 {
        return Err(Error::Domain(format!(
            "lift needs |xi| < k0 (|xi| = {}, k0 = {k0})",
            norm(xi)
        )));
    }
    let k = kappa(xi, k0)?;
    Ok(axpy(xi, k, v))
}

/// Householder reflection `H_v(x) = x - 2 <x, v> v` across `v^perp`.
pub fn householder_reflect(x: &[f64], v: &[f64]) -> Vec<f64> {
    debug_assert!((norm(v) - 1.0).abs() <= 1e-12);
    axpy(x, -2.0 * dot(x, v), v)
}

/// Position of a beam direction `sigma` relative to the `Sigma` split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SigmaClass {
    /// `sigma` in `S_omega`, reflection `H_nu sigma` outside `S_omega`.
    Sigma1,
    /// `sigma` and `H_nu sigma` both in `S_omega`, not in `Sigma_tilde`.
    Sigma2,
    /// `Sigma_2` point that also lies in `Sigma_tilde` (d = 2 only).
    Sigma2Tilde,
    OutsideSupport,
    Boundary,
}

impl SigmaClass {
    pub fn in_sigma1(self) -> bool {
        self == SigmaClass::Sigma1
    }
    /// Membership in `Sigma_2`, including `Sigma_tilde`.
    pub fn in_sigma2(self) -> bool {
        matches!(self, SigmaClass::Sigma2 | SigmaClass::Sigma2Tilde)
    }
}

/// Classify a point of the sphere of radius `k0`.
pub fn classify_sigma(sigma: &[f64], geometry: &ScanGeometry) -> Result<SigmaClass> {
    let k0 = geometry.k0;
    if (norm(sigma) - k0).abs() > 1e-10 * k0.max(1.0) {
        return Err(Error::Contract(format!(
            "sigma must lie on the sphere of radius k0 (|sigma| = {})",
            norm(sigma)
        )));
    }
    Ok(classify_unchecked(sigma, geometry))
}

pub(crate) fn classify_unchecked(sigma: &[f64], geometry: &ScanGeometry) -> SigmaClass {
    let tau = geometry.tau();
    let s_omega = dot(sigma, &geometry.omega);
    if s_omega <= -tau {
        return SigmaClass::OutsideSupport;
    }
    if s_omega < tau {
        return SigmaClass::Boundary;
    }
    let reflected = householder_reflect(sigma, &geometry.nu);
    let r_omega = dot(&reflected, &geometry.omega);
    if r_omega.abs() < tau {
        return SigmaClass::Boundary;
    }
    if r_omega <= -tau {
        return SigmaClass::Sigma1;
    }
    if geometry.dim == 2 {
        let s_e = sigma[1];
        let r_e = reflected[1];
        if s_e.abs() < tau || r_e.abs() < tau {
            return SigmaClass::Boundary;
        }
        if s_e > tau && r_e <= -tau {
            return SigmaClass::Sigma2Tilde;
        }
    }
    SigmaClass::Sigma2
}

/// Angular interval `[start, start + length]` on the circle, `start` in
/// `[0, 2 pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub start: f64,
    pub length: f64,
}

impl Arc {
    fn half_plane(direction: [f64; 2]) -> Self {
        let centre = direction[1].atan2(direction[0]);
        Arc {
            start: (centre - PI / 2.0).rem_euclid(TAU),
            length: PI,
        }
    }

    pub fn end(&self) -> f64 {
        self.start + self.length
    }

    /// Midpoint angle.
    pub fn mid(&self) -> f64 {
        (self.start + 0.5 * self.length).rem_euclid(TAU)
    }

    pub fn contains(&self, angle: f64) -> bool {
        let rel = (angle - self.start).rem_euclid(TAU);
        rel <= self.length
    }

    /// Intersection of two arcs of length at most `pi`; `None` when empty or
    /// degenerate (a single point).
    fn intersect(&self, other: &Arc) -> Option<Arc> {
        let delta = (other.start - self.start).rem_euclid(TAU);
        let mut best: Option<(f64, f64)> = None;
        for shift in [0.0, -TAU] {
            let lo = (delta + shift).max(0.0);
            let hi = (delta + shift + other.length).min(self.length);
            if hi - lo > 1e-12 && best.map_or(true, |(l, h)| hi - lo > h - l) {
                best = Some((lo, hi));
            }
        }
        best.map(|(lo, hi)| Arc {
            start: (self.start + lo).rem_euclid(TAU),
            length: hi - lo,
        })
    }

    /// Negated arc `-A` (rotation by `pi`).
    pub fn negated(&self) -> Arc {
        Arc {
            start: (self.start + PI).rem_euclid(TAU),
            length: self.length,
        }
    }
}

/// Arcs of the beam semicircle in 2D.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaArcs {
    pub support: Arc,
    pub sigma1: Option<Arc>,
    pub sigma2: Option<Arc>,
    pub sigma_tilde: Option<Arc>,
}

/// `Sigma_1 = S^1 n Omega_omega n closure(Omega_{-H omega})`,
/// `Sigma_2 = S^1 n Omega_omega n Omega_{H omega}` and
/// `Sigma_tilde = Sigma_2 n S_{e_2} n closure(Omega_{-H e_2})`.
pub fn sigma_arcs_2d(geometry: &ScanGeometry) -> Result<SigmaArcs> {
    if geometry.dim != 2 {
        return Err(Error::UnsupportedDimension(geometry.dim));
    }
    let as2 = |v: &[f64]| [v[0], v[1]];
    let omega = as2(&geometry.omega);
    let h_omega = as2(&householder_reflect(&geometry.omega, &geometry.nu));
    let e2 = [0.0, 1.0];
    let h_e2 = as2(&householder_reflect(&e2, &geometry.nu));

    let support = Arc::half_plane(omega);
    let sigma1 = support.intersect(&Arc::half_plane([-h_omega[0], -h_omega[1]]));
    let sigma2 = support.intersect(&Arc::half_plane(h_omega));
    let sigma_tilde = sigma2
        .and_then(|a| a.intersect(&Arc::half_plane(e2)))
        .and_then(|a| a.intersect(&Arc::half_plane([-h_e2[0], -h_e2[1]])));
    Ok(SigmaArcs {
        support,
        sigma1,
        sigma2,
        sigma_tilde,
    })
}

/// Backpropagation mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoverageMode {
    Naive,
    Advanced,
}

/// Region of Fourier space a frequency belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionTag {
    /// Directly readable coefficients `Y_1`.
    Y1,
    /// Additionally recoverable coefficients `Y_tilde` (advanced, d = 2).
    YTilde,
    /// Coupled coefficients that are recoverable (advanced, d >= 3).
    Y2,
    /// Part of `Y_2` that is not used by the query's mode.
    Y2Gray,
    Outside,
}

impl RegionTag {
    /// Whether the tag belongs to the coverage used for backpropagation.
    pub fn is_covered(self) -> bool {
        matches!(self, RegionTag::Y1 | RegionTag::YTilde | RegionTag::Y2)
    }

    /// Stable integer code used by the raster emitters.
    pub fn code(self) -> u8 {
        match self {
            RegionTag::Outside => 0,
            RegionTag::Y1 => 1,
            RegionTag::YTilde => 2,
            RegionTag::Y2 => 3,
            RegionTag::Y2Gray => 4,
        }
    }
}

/// Predicate pair for the `eta` and `sigma` factors of `y = eta - sigma`.
type PairTest<'a> = dyn Fn(&[f64], &[f64]) -> bool + Sync + 'a;

const DEGENERATE_SAMPLES: usize = 4096;
const CIRCLE_SAMPLES_3D: usize = 256;

/// Whether `y = eta - sigma` for some `|eta| = |sigma| = k0` accepted by
/// `test`. Exact in 2D (at most two candidate pairs); sampled along the
/// intersection circle in higher dimensions.
fn exists_pair(y: &[f64], k0: f64, test: &PairTest) -> bool {
    let dim = y.len();
    let ny = norm(y);
    if ny > 2.0 * k0 {
        return false;
    }
    if ny < 1e-12 * k0 {
        // y = 0: eta = sigma ranges over the whole sphere.
        return sphere_samples(dim, k0, DEGENERATE_SAMPLES)
            .iter()
            .any(|s| test(s, s));
    }
    let centre = scale(y, 0.5);
    let radius = (k0 * k0 - 0.25 * ny * ny).max(0.0).sqrt();
    let dir = scale(y, 1.0 / ny);
    let perp = orthonormal_complement(&dir);
    if dim == 2 {
        for sign in [1.0, -1.0] {
            let eta = axpy(&centre, sign * radius, &perp[0]);
            let sigma = sub(&eta, y);
            if test(&eta, &sigma) {
                return true;
            }
        }
        false
    } else {
        let (u1, u2) = (&perp[0], &perp[1]);
        (0..CIRCLE_SAMPLES_3D).any(|i| {
            let phi = TAU * (i as f64 + 0.5) / CIRCLE_SAMPLES_3D as f64;
            let mut eta = axpy(&centre, radius * phi.cos(), u1);
            eta = axpy(&eta, radius * phi.sin(), u2);
            let sigma = sub(&eta, y);
            test(&eta, &sigma)
        })
    }
}

/// Quasi-uniform points on the sphere of radius `k0` (circle for d = 2).
pub(crate) fn sphere_samples(dim: usize, k0: f64, count: usize) -> Vec<Vec<f64>> {
    match dim {
        2 => (0..count)
            .map(|i| {
                let t = TAU * (i as f64 + 0.5) / count as f64;
                vec![k0 * t.cos(), k0 * t.sin()]
            })
            .collect(),
        _ => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                    let rho = (1.0 - z * z).sqrt();
                    let phi = golden * i as f64;
                    vec![k0 * rho * phi.cos(), k0 * rho * phi.sin(), k0 * z]
                })
                .collect()
        }
    }
}

fn in_upper(eta: &[f64], tau: f64) -> bool {
    eta[eta.len() - 1] > tau
}

/// Set membership `y in Y_1`, independent of any tag priority.
pub fn in_y1(y: &[f64], geometry: &ScanGeometry) -> bool {
    let tau = geometry.tau();
    exists_pair(y, geometry.k0, &|eta, sigma| {
        in_upper(eta, tau) && classify_unchecked(sigma, geometry).in_sigma1()
    })
}

/// Set membership `y in Y_tilde` (d = 2), independent of any tag priority.
pub fn in_y_tilde(y: &[f64], geometry: &ScanGeometry) -> bool {
    if geometry.dim != 2 {
        return false;
    }
    let tau = geometry.tau();
    exists_pair(y, geometry.k0, &|eta, sigma| {
        in_upper(eta, tau)
            && classify_unchecked(&scale(eta, -1.0), geometry).in_sigma1()
            && classify_unchecked(sigma, geometry) == SigmaClass::Sigma2Tilde
    })
}

/// Whether `Sigma_1` is empty: exact arcs in 2D, 4096 sphere samples in 3D.
pub fn sigma1_is_empty(geometry: &ScanGeometry) -> bool {
    if geometry.dim == 2 {
        return sigma_arcs_2d(geometry).map_or(true, |a| a.sigma1.is_none());
    }
    !sphere_samples(geometry.dim, geometry.k0, DEGENERATE_SAMPLES)
        .iter()
        .any(|s| classify_unchecked(s, geometry).in_sigma1())
}

/// Region tag of the frequency `y` for the given mode.
pub fn coverage_membership(y: &[f64], geometry: &ScanGeometry, mode: CoverageMode) -> RegionTag {
    let k0 = geometry.k0;
    let tau = geometry.tau();
    if in_y1(y, geometry) {
        return RegionTag::Y1;
    }
    if mode == CoverageMode::Advanced && in_y_tilde(y, geometry) {
        return RegionTag::YTilde;
    }
    let in_y2 = exists_pair(y, k0, &|eta, sigma| {
        in_upper(eta, tau) && classify_unchecked(sigma, geometry).in_sigma2()
    });
    if in_y2 {
        if mode == CoverageMode::Advanced && geometry.dim >= 3 {
            RegionTag::Y2
        } else {
            RegionTag::Y2Gray
        }
    } else {
        RegionTag::Outside
    }
}

/// Region raster over `[-2 k0, 2 k0]^d`, evaluated at cell centres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageMask {
    pub dim: usize,
    pub k0: f64,
    pub n: usize,
    pub mode: CoverageMode,
    /// Row-major tags, axis 0 slowest.
    pub tags: Vec<RegionTag>,
}

impl CoverageMask {
    pub fn cell_size(&self) -> f64 {
        cell_size(self.k0, self.n)
    }

    pub fn cell_center(&self, flat: usize) -> Vec<f64> {
        cell_center(self.k0, self.n, self.dim, flat)
    }

    pub fn count(&self, tag: RegionTag) -> usize {
        self.tags.iter().filter(|&&t| t == tag).count()
    }

    pub fn covered_count(&self) -> usize {
        self.tags.iter().filter(|t| t.is_covered()).count()
    }

    /// Fraction of cells carrying `tag`.
    pub fn fraction(&self, tag: RegionTag) -> f64 {
        self.count(tag) as f64 / self.tags.len() as f64
    }

    /// Area (volume) in frequency units of cells carrying `tag`.
    pub fn area(&self, tag: RegionTag) -> f64 {
        self.count(tag) as f64 * self.cell_size().powi(self.dim as i32)
    }

    pub fn covered_area(&self) -> f64 {
        self.covered_count() as f64 * self.cell_size().powi(self.dim as i32)
    }

    /// Tag at a 2D cell `(i0, i1)`.
    pub fn tag_2d(&self, i0: usize, i1: usize) -> RegionTag {
        self.tags[i0 * self.n + i1]
    }
}

pub(crate) fn cell_size(k0: f64, n: usize) -> f64 {
    4.0 * k0 / n as f64
}

pub(crate) fn cell_center(k0: f64, n: usize, dim: usize, flat: usize) -> Vec<f64> {
    let h = cell_size(k0, n);
    unflatten(flat, n, dim)
        .into_iter()
        .map(|i| -2.0 * k0 + (i as f64 + 0.5) * h)
        .collect()
}

/// Rasterise the coverage sets on an `n^d` grid of cell centres.
pub fn coverage_mask(geometry: &ScanGeometry, mode: CoverageMode, n: usize) -> Result<CoverageMask> {
    if n < 16 {
        return Err(Error::Resolution(n, "need N >= 16"));
    }
    if n > 8192 {
        return Err(Error::Resolution(n, "N > 8192 exceeds the memory guard"));
    }
    let dim = geometry.dim;
    let total = n.pow(dim as u32);
    let tags = (0..total)
        .into_par_iter()
        .map(|flat| {
            let y = cell_center(geometry.k0, n, dim, flat);
            coverage_membership(&y, geometry, mode)
        })
        .collect();
    Ok(CoverageMask {
        dim,
        k0: geometry.k0,
        n,
        mode,
        tags,
    })
}
