//! Planar Fourier transforms of scan data, reduced measurements and the
//! diffraction relations the data satisfy.
//!
//! Transforms along a hyperplane use the `(2 pi)^{-(d-1)/2}` convention. A
//! grid axis with `N` points and spacing `h` has coordinates `(n - N/2) h`
//! and dual frequencies `(m - N/2) 2 pi / (N h)` with the same index range.
//! The measurement spectrum is forward in the detector variable and inverse in
//! the scan variable.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::beam::HerglotzDensity;
use crate::error::{Error, Result};
use crate::forward::MeasurementRecord;
use crate::geometry::{hemisphere_lift, householder_reflect, kappa, ScanGeometry};
use crate::linalg::{norm, sub};
use crate::phantom::Phantom;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Inverse,
}

/// Frequency of index `m` on an axis with `count` points and spacing `h`.
pub fn frequency(m: usize, count: usize, spacing: f64) -> f64 {
    (m as f64 - (count / 2) as f64) * 2.0 * PI / (count as f64 * spacing)
}

/// Spacing of uniformly spaced coordinates; errors on irregular input.
pub fn uniform_spacing(coords: &[f64]) -> Result<f64> {
    if coords.len() < 2 {
        return Err(Error::Contract("need at least two coordinates".into()));
    }
    let h = coords[1] - coords[0];
    let tol = 1e-9 * h.abs().max(1e-300);
    if !(h > 0.0) || coords.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > tol) {
        return Err(Error::Contract("grid is not uniform".into()));
    }
    Ok(h)
}

/// Centred, scaled 1D transform applied along `axis` of a row-major tensor.
struct AxisTransform {
    fft: Arc<dyn Fft<f64>>,
    count: usize,
    scale: f64,
    /// Phase aligning the FFT origin with the centred index range.
    phases: Vec<Complex64>,
}

impl AxisTransform {
    fn new(planner: &mut FftPlanner<f64>, count: usize, spacing: f64, direction: Direction) -> Self {
        let fft = match direction {
            Direction::Forward => planner.plan_fft_forward(count),
            Direction::Inverse => planner.plan_fft_inverse(count),
        };
        let sign = match direction {
            Direction::Forward => 1.0,
            Direction::Inverse => -1.0,
        };
        let c = (count / 2) as f64;
        // Output m' = m - c of sum_n f_n e^{-+2 pi i m' (n - c) / N}: the FFT
        // of the input rolled by c, evaluated at m' mod N.
        let phases = (0..count)
            .map(|m| {
                let mp = m as f64 - c;
                Complex64::from_polar(1.0, sign * 2.0 * PI * mp * c / count as f64)
            })
            .collect();
        Self {
            fft,
            count,
            scale: spacing / (2.0 * PI).sqrt(),
            phases,
        }
    }

    fn apply(&self, data: &mut [Complex64], shape: &[usize], axis: usize) {
        let n = self.count;
        let stride: usize = shape[axis + 1..].iter().product();
        let outer: usize = shape[..axis].iter().product();
        let c = n / 2;
        let mut line = vec![ZERO; n];
        let mut scratch = vec![ZERO; self.fft.get_inplace_scratch_len()];
        for o in 0..outer {
            for s in 0..stride {
                let base = o * n * stride + s;
                for (k, z) in line.iter_mut().enumerate() {
                    *z = data[base + k * stride];
                }
                self.fft.process_with_scratch(&mut line, &mut scratch);
                for m in 0..n {
                    let idx = (m + n - c) % n;
                    data[base + m * stride] = line[idx] * self.phases[m] * self.scale;
                }
            }
        }
    }
}

/// Transform over all `axes` axes of a hypercubic grid with `count` points and
/// spacing `spacing` per axis. For the inverse direction `spacing` is the
/// frequency spacing.
pub fn planar_dft(samples: &[Complex64], count: usize, axes: usize, spacing: f64, direction: Direction) -> Vec<Complex64> {
    let shape = vec![count; axes];
    let mut data = samples.to_vec();
    assert_eq!(data.len(), count.pow(axes as u32));
    let mut planner = FftPlanner::new();
    let t = AxisTransform::new(&mut planner, count, spacing, direction);
    for a in 0..axes {
        t.apply(&mut data, &shape, a);
    }
    data
}

/// Window applied to the record before transforming.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Taper {
    None,
    /// Raised-cosine window flat on the central `flat` fraction of each axis.
    Tukey { flat: f64 },
}

impl Default for Taper {
    fn default() -> Self {
        Taper::Tukey { flat: 0.6 }
    }
}

impl Taper {
    pub fn weights(&self, count: usize) -> Vec<f64> {
        match *self {
            Taper::None => vec![1.0; count],
            Taper::Tukey { flat } => {
                let alpha = (1.0 - flat).clamp(0.0, 1.0);
                (0..count)
                    .map(|n| {
                        if count < 2 || alpha == 0.0 {
                            return 1.0;
                        }
                        let u = n as f64 / (count - 1) as f64;
                        let e = u.min(1.0 - u);
                        if e >= alpha / 2.0 {
                            1.0
                        } else {
                            0.5 * (1.0 - (2.0 * PI * e / alpha).cos())
                        }
                    })
                    .collect()
            }
        }
    }
}

/// `F m(k, xi)` on the dual grids, row-major `[scan frequency][detector frequency]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSpectrum {
    pub dim: usize,
    pub detector_count: usize,
    pub detector_spacing: f64,
    pub scan_count: usize,
    pub scan_spacing: f64,
    pub scan_basis: Vec<Vec<f64>>,
    pub values: Vec<Complex64>,
}

impl MeasurementSpectrum {
    pub fn detector_len(&self) -> usize {
        self.detector_count.pow(self.dim as u32 - 1)
    }

    pub fn scan_len(&self) -> usize {
        self.scan_count.pow(self.dim as u32 - 1)
    }

    pub fn get(&self, xi_index: usize, k_index: usize) -> Complex64 {
        self.values[xi_index * self.detector_len() + k_index]
    }

    /// Detector frequency `k` as a vector of `e_d^perp`.
    pub fn k_vector(&self, flat: usize) -> Vec<f64> {
        let mut k: Vec<f64> = crate::linalg::unflatten(flat, self.detector_count, self.dim - 1)
            .into_iter()
            .map(|m| frequency(m, self.detector_count, self.detector_spacing))
            .collect();
        k.push(0.0);
        k
    }

    /// Scan frequency `xi` as a vector of `nu^perp`.
    pub fn xi_vector(&self, flat: usize) -> Vec<f64> {
        let coords: Vec<f64> = crate::linalg::unflatten(flat, self.scan_count, self.dim - 1)
            .into_iter()
            .map(|m| frequency(m, self.scan_count, self.scan_spacing))
            .collect();
        let mut xi = vec![0.0; self.dim];
        for (c, b) in coords.iter().zip(&self.scan_basis) {
            for (x, bb) in xi.iter_mut().zip(b) {
                *x += c * bb;
            }
        }
        xi
    }
}

/// Applies `taper` on every axis, the forward transform over the detector
/// axes and the inverse transform over the scan axes.
pub fn measurement_spectrum(record: &MeasurementRecord, taper: Taper) -> MeasurementSpectrum {
    let dim = record.geometry.dim();
    let axes = dim - 1;
    let nx = record.detector.count;
    let ny = record.scan.count;
    let mut shape = vec![ny; axes];
    shape.extend(std::iter::repeat(nx).take(axes));

    let wx = taper.weights(nx);
    let wy = taper.weights(ny);
    let mut data = record.samples.clone();
    let nd = record.detector.len();
    for (j, row) in data.chunks_mut(nd).enumerate() {
        let jy: f64 = crate::linalg::unflatten(j, ny, axes).iter().map(|&a| wy[a]).product();
        for (i, z) in row.iter_mut().enumerate() {
            let ix: f64 = crate::linalg::unflatten(i, nx, axes).iter().map(|&a| wx[a]).product();
            *z *= jy * ix;
        }
    }

    let mut planner = FftPlanner::new();
    let fx = AxisTransform::new(&mut planner, nx, record.detector.spacing, Direction::Forward);
    let fy = AxisTransform::new(&mut planner, ny, record.scan.spacing, Direction::Inverse);
    for a in 0..axes {
        fy.apply(&mut data, &shape, a);
        fx.apply(&mut data, &shape, axes + a);
    }
    MeasurementSpectrum {
        dim,
        detector_count: nx,
        detector_spacing: record.detector.spacing,
        scan_count: ny,
        scan_spacing: record.scan.spacing,
        scan_basis: record.scan.basis.clone(),
        values: data,
    }
}

/// `C(k, xi) = (2 pi)^{d/2} i k0 e^{i kappa(k) L} / (2 kappa(k) kappa(xi))`.
pub fn reduction_constant(k: &[f64], xi: &[f64], geometry: &ScanGeometry, gamma: f64) -> Result<Complex64> {
    let k0 = geometry.k0();
    let limit = gamma * k0;
    for (which, v) in [("k", k), ("xi", xi)] {
        let n = norm(v);
        if n >= limit {
            return Err(Error::RimClipped { which, norm: n, limit });
        }
    }
    Ok(constant_unchecked(k, xi, geometry))
}

fn constant_unchecked(k: &[f64], xi: &[f64], geometry: &ScanGeometry) -> Complex64 {
    let k0 = geometry.k0();
    let d = geometry.dim() as f64;
    let kk = kappa(k, k0).unwrap_or(0.0);
    let kx = kappa(xi, k0).unwrap_or(0.0);
    let pref = (2.0 * PI).powf(d / 2.0) * k0 / (2.0 * kk * kx);
    Complex64::new(0.0, 1.0) * Complex64::from_polar(pref, kk * geometry.offset())
}

/// One retained spectral bin.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedBin {
    pub k_index: usize,
    pub xi_index: usize,
    /// `eta = h_{e_d}(k)`.
    pub eta: Vec<f64>,
    /// `sigma = h_nu(xi)`; the value also applies at `H_nu sigma = h_{-nu}(xi)`.
    pub sigma: Vec<f64>,
    pub value: Complex64,
}

impl ReducedBin {
    pub fn sigma_reflected(&self, nu: &[f64]) -> Vec<f64> {
        householder_reflect(&self.sigma, nu)
    }
}

/// Reduced measurements `F m / C` on bins with `|k|, |xi| < gamma k0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedMeasurements {
    pub geometry: ScanGeometry,
    pub gamma: f64,
    pub bins: Vec<ReducedBin>,
    /// Bins dropped by the rim clip.
    pub clipped: usize,
}

impl ReducedMeasurements {
    /// Builds reduced measurements from arbitrary `(eta, sigma, value)` data.
    pub fn from_bins(geometry: ScanGeometry, gamma: f64, bins: Vec<ReducedBin>) -> Self {
        Self {
            geometry,
            gamma,
            bins,
            clipped: 0,
        }
    }
}

pub fn reduce_measurements(spectrum: &MeasurementSpectrum, geometry: &ScanGeometry, gamma: f64) -> Result<ReducedMeasurements> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Contract("rim clip gamma must lie in (0, 1)".into()));
    }
    let k0 = geometry.k0();
    let e_d = geometry.detector_normal();
    let nu = geometry.nu();
    let limit = gamma * k0;
    let ks: Vec<Vec<f64>> = (0..spectrum.detector_len()).map(|i| spectrum.k_vector(i)).collect();
    let xis: Vec<Vec<f64>> = (0..spectrum.scan_len()).map(|j| spectrum.xi_vector(j)).collect();
    let mut bins = Vec::new();
    let mut clipped = 0;
    for (j, xi) in xis.iter().enumerate() {
        for (i, k) in ks.iter().enumerate() {
            if norm(k) >= limit || norm(xi) >= limit {
                if norm(k) < k0 && norm(xi) < k0 {
                    clipped += 1;
                }
                continue;
            }
            let c = constant_unchecked(k, xi, geometry);
            bins.push(ReducedBin {
                k_index: i,
                xi_index: j,
                eta: hemisphere_lift(k, &e_d, k0)?,
                sigma: hemisphere_lift(xi, nu, k0)?,
                value: spectrum.get(j, i) / c,
            });
        }
    }
    if clipped > 0 {
        log::info!("rim clip dropped {clipped} propagating bins");
    }
    Ok(ReducedMeasurements {
        geometry: geometry.clone(),
        gamma,
        bins,
        clipped,
    })
}

/// Right-hand side of the scanning relation at `(k, xi)`, including `C`.
pub fn fdt_rhs(phantom: &Phantom, density: &HerglotzDensity, geometry: &ScanGeometry, k: &[f64], xi: &[f64]) -> Result<Complex64> {
    let k0 = geometry.k0();
    let e_d = geometry.detector_normal();
    let nu = geometry.nu();
    let eta = hemisphere_lift(k, &e_d, k0)?;
    let sp = hemisphere_lift(xi, nu, k0)?;
    let sm = householder_reflect(&sp, nu);
    let c = constant_unchecked(k, xi, geometry);
    Ok(c * reduced_rhs(phantom, density, &eta, &sp, &sm))
}

/// `a(sigma) F f(eta - sigma) + a(H sigma) F f(eta - H sigma)`.
pub fn reduced_rhs(phantom: &Phantom, density: &HerglotzDensity, eta: &[f64], sp: &[f64], sm: &[f64]) -> Complex64 {
    let mut acc = ZERO;
    for s in [sp, sm] {
        let a = density.eval_unchecked(s);
        if a != ZERO {
            acc += a * phantom.eval_potential_fourier(&sub(eta, s));
        }
    }
    acc
}

/// Classical relation for a single plane wave `e^{i <x, s>}`:
/// `sqrt(pi/2) i e^{i kappa(k) L} / kappa(k) F f(h_{e_d}(k) - s)` in both
/// two and three dimensions.
pub fn classical_fdt_rhs(phantom: &Phantom, s: &[f64], k: &[f64], k0: f64, offset: f64) -> Result<Complex64> {
    let d = s.len();
    let e_d = crate::linalg::unit(d, d - 1);
    let eta = hemisphere_lift(k, &e_d, k0)?;
    let kk = kappa(k, k0)?;
    let pref = (PI / 2.0).sqrt() / kk;
    Ok(Complex64::new(0.0, 1.0) * Complex64::from_polar(pref, kk * offset) * phantom.eval_potential_fourier(&sub(&eta, s)))
}

/// Settings of [`verify_fdt`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub gamma: f64,
    pub taper: Taper,
    /// Bins with `|k|, |xi| <= interior k0` count as interior.
    pub interior: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            gamma: 0.95,
            taper: Taper::default(),
            interior: 0.8,
        }
    }
}

/// Comparison of the measured spectrum with the analytic relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdtReport {
    /// `max |F m - rhs| / max |rhs|` over interior bins.
    pub interior_max_rel: f64,
    /// Same over the band between the interior and the rim clip, normalised
    /// by the interior maximum.
    pub rim_max_rel: f64,
    /// Largest per-bin relative error on interior bins with
    /// `|rhs| >= 1e-3 max |rhs|`.
    pub interior_binwise_max_rel: f64,
    pub interior_bins: usize,
    pub rim_bins: usize,
    pub clipped_bins: usize,
    pub rhs_max: f64,
    pub grid: GridSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub d: usize,
    pub k0: f64,
    pub detector_count: usize,
    pub detector_spacing: f64,
    pub scan_count: usize,
    pub scan_spacing: f64,
    pub gamma: f64,
    pub interior: f64,
}

/// Compares `measurement_spectrum(record)` with [`fdt_rhs`] bin by bin.
pub fn verify_fdt(
    record: &MeasurementRecord,
    phantom: &Phantom,
    density: &HerglotzDensity,
    geometry: &ScanGeometry,
    options: &VerifyOptions,
) -> Result<FdtReport> {
    if !record.geometry.approx_eq(geometry) {
        return Err(Error::Geometry("record metadata does not match the supplied geometry".into()));
    }
    let spectrum = measurement_spectrum(record, options.taper);
    let k0 = geometry.k0();
    let limit = options.gamma * k0;
    let inner = options.interior * k0;
    let mut interior = Vec::new();
    let mut rim = Vec::new();
    let mut clipped = 0;
    for j in 0..spectrum.scan_len() {
        let xi = spectrum.xi_vector(j);
        let nxi = norm(&xi);
        for i in 0..spectrum.detector_len() {
            let k = spectrum.k_vector(i);
            let nk = norm(&k);
            if nk >= limit || nxi >= limit {
                if nk < k0 && nxi < k0 {
                    clipped += 1;
                }
                continue;
            }
            let rhs = fdt_rhs(phantom, density, geometry, &k, &xi)?;
            let pair = (spectrum.get(j, i), rhs);
            if nk <= inner && nxi <= inner {
                interior.push(pair);
            } else {
                rim.push(pair);
            }
        }
    }
    let rhs_max = interior.iter().map(|(_, r)| r.norm()).fold(0.0, f64::max);
    let denom = if rhs_max > 0.0 { rhs_max } else { 1.0 };
    let max_err = |set: &[(Complex64, Complex64)]| set.iter().map(|(m, r)| (m - r).norm()).fold(0.0, f64::max) / denom;
    let binwise = interior
        .iter()
        .filter(|(_, r)| r.norm() >= 1e-3 * rhs_max && rhs_max > 0.0)
        .map(|(m, r)| (m - r).norm() / r.norm())
        .fold(0.0, f64::max);
    Ok(FdtReport {
        interior_max_rel: max_err(&interior),
        rim_max_rel: max_err(&rim),
        interior_binwise_max_rel: binwise,
        interior_bins: interior.len(),
        rim_bins: rim.len(),
        clipped_bins: clipped,
        rhs_max,
        grid: GridSummary {
            d: geometry.dim(),
            k0,
            detector_count: record.detector.count,
            detector_spacing: record.detector.spacing,
            scan_count: record.scan.count,
            scan_spacing: record.scan.spacing,
            gamma: options.gamma,
            interior: options.interior,
        },
    })
}

/// Largest spectrum magnitude over scan frequencies `|xi| > k0`, relative to
/// the largest magnitude over interior bins.
pub fn evanescent_scan_ratio(spectrum: &MeasurementSpectrum, k0: f64, interior: f64) -> f64 {
    let mut inside: f64 = 0.0;
    let mut outside: f64 = 0.0;
    for j in 0..spectrum.scan_len() {
        let nxi = norm(&spectrum.xi_vector(j));
        for i in 0..spectrum.detector_len() {
            let nk = norm(&spectrum.k_vector(i));
            let v = spectrum.get(j, i).norm();
            if nxi > k0 && nk < k0 {
                outside = outside.max(v);
            } else if nxi <= interior * k0 && nk <= interior * k0 {
                inside = inside.max(v);
            }
        }
    }
    if inside > 0.0 {
        outside / inside
    } else {
        0.0
    }
}
