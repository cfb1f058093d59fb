//! Green's functions, Born fields and raster-scan synthesis.
//!
//! The scattered field of the translated beam is
//! `u_y(x) = \int G(x - x') f(x') u^inc(x' - y) dx'`, evaluated with the
//! midpoint rule on a voxel grid over `[-r, r]^d` and the beam node set.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beam::{BeamQuadrature, DensityDescriptor, HerglotzDensity};
use crate::error::{Error, Result};
use crate::geometry::ScanGeometry;
use crate::linalg::{dot, norm, sub, unflatten};
use crate::phantom::Phantom;
use crate::special::hankel1_0;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Outgoing fundamental solution of `Delta + k0^2` in `R^2` or `R^3`.
pub fn greens(x: &[f64], k0: f64) -> Result<Complex64> {
    let r = norm(x);
    if r == 0.0 {
        return Err(Error::Singular);
    }
    match x.len() {
        2 => Ok(greens_2d(k0 * r)),
        3 => Ok(greens_3d(k0, r)),
        d => Err(Error::UnsupportedDimension(d)),
    }
}

#[inline]
fn greens_2d(kr: f64) -> Complex64 {
    let h = hankel1_0(kr);
    Complex64::new(-0.25 * h.im, 0.25 * h.re)
}

#[inline]
fn greens_3d(k0: f64, r: f64) -> Complex64 {
    Complex64::from_polar(1.0 / (4.0 * PI * r), k0 * r)
}

/// Midpoint grid with `cells` cells per axis on `[-half_width, half_width]^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoxelGrid {
    pub dim: usize,
    pub cells: usize,
    pub half_width: f64,
}

impl VoxelGrid {
    pub fn new(dim: usize, cells: usize, half_width: f64) -> Result<Self> {
        if cells == 0 || !(half_width > 0.0) {
            return Err(Error::Contract("voxel grid needs cells > 0 and a positive extent".into()));
        }
        Ok(Self {
            dim,
            cells,
            half_width,
        })
    }

    /// Grid over the phantom's support box.
    pub fn for_phantom(phantom: &Phantom, cells: usize) -> Result<Self> {
        Self::new(phantom.dim(), cells, phantom.radius())
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.cells as f64
    }

    pub fn axis(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.cells)
            .map(|i| -self.half_width + (i as f64 + 0.5) * h)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.cells.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        let h = self.spacing();
        unflatten(flat, self.cells, self.dim)
            .into_iter()
            .map(|i| -self.half_width + (i as f64 + 0.5) * h)
            .collect()
    }

    /// Length of a cell diagonal.
    pub fn diagonal(&self) -> f64 {
        self.spacing() * (self.dim as f64).sqrt()
    }

    /// Warns when the grid resolves less than 8 cells per wavelength or per
    /// smallest phantom feature.
    pub fn check_resolution(&self, k0: f64, phantom: &Phantom) -> Vec<String> {
        let mut warnings = Vec::new();
        let h = self.spacing();
        let wavelength = 2.0 * PI / k0;
        if h > wavelength / 8.0 {
            warnings.push(format!(
                "voxel spacing {h} resolves fewer than 8 cells per wavelength {wavelength}"
            ));
        }
        if let Some(feature) = phantom
            .primitives()
            .iter()
            .map(|p| p.size)
            .min_by(|a, b| a.total_cmp(b))
        {
            if h > feature / 8.0 {
                warnings.push(format!(
                    "voxel spacing {h} resolves fewer than 8 cells per feature size {feature}"
                ));
            }
        }
        for w in &warnings {
            log::warn!("{w}");
        }
        warnings
    }
}

fn check_outside(phantom: &Phantom, voxels: &VoxelGrid, x: &[f64]) -> Result<()> {
    if norm(x) < phantom.radius() + voxels.diagonal() {
        return Err(Error::InsideScatterer);
    }
    Ok(())
}

/// Potential samples times the cell volume, `f(x'_v) h^d`.
fn weighted_potential(phantom: &Phantom, voxels: &VoxelGrid) -> Vec<Complex64> {
    let vol = voxels.spacing().powi(voxels.dim as i32);
    (0..voxels.len())
        .map(|v| phantom.eval_potential(&voxels.point(v)) * vol)
        .collect()
}

/// Scattered field `w(x, s)` of the plane wave `e^{i <x, s>}`.
pub fn plane_wave_field(phantom: &Phantom, s: &[f64], x: &[f64], voxels: &VoxelGrid, k0: f64) -> Result<Complex64> {
    check_outside(phantom, voxels, x)?;
    let mut acc = ZERO;
    for v in 0..voxels.len() {
        let xp = voxels.point(v);
        let f = phantom.eval_potential(&xp);
        if f == ZERO {
            continue;
        }
        acc += greens(&sub(x, &xp), k0)? * f * Complex64::from_polar(1.0, dot(&xp, s));
    }
    Ok(acc * voxels.spacing().powi(voxels.dim as i32))
}

/// Born field `u_y(x)` of the beam translated by `y_shift`, summed over beam
/// nodes: `sum_q w_q a(s_q) e^{-i <y, s_q>} w(x, s_q)`.
#[allow(clippy::too_many_arguments)]
pub fn born_field(
    phantom: &Phantom,
    density: &HerglotzDensity,
    quad: &BeamQuadrature,
    y_shift: &[f64],
    nu: &[f64],
    x: &[f64],
    voxels: &VoxelGrid,
) -> Result<Complex64> {
    if dot(y_shift, nu).abs() > 1e-10 * norm(y_shift).max(1.0) {
        return Err(Error::Contract("beam shift must lie in the scan plane".into()));
    }
    check_outside(phantom, voxels, x)?;
    let k0 = density.k0();
    let g = greens_row(phantom, voxels, x, k0);
    let mut acc = ZERO;
    for (s, w) in quad.nodes.iter().zip(&quad.weights) {
        let a = density.eval_unchecked(s);
        if a == ZERO {
            continue;
        }
        let mut wxs = ZERO;
        for (v, gv) in g.iter().enumerate() {
            if *gv != ZERO {
                wxs += gv * Complex64::from_polar(1.0, dot(&voxels.point(v), s));
            }
        }
        acc += a * *w * Complex64::from_polar(1.0, -dot(y_shift, s)) * wxs;
    }
    Ok(acc)
}

/// The same field with the opposite order of integration: the incident beam
/// is evaluated at every voxel and then convolved with `G`.
pub fn born_field_direct(
    phantom: &Phantom,
    density: &HerglotzDensity,
    quad: &BeamQuadrature,
    y_shift: &[f64],
    x: &[f64],
    voxels: &VoxelGrid,
) -> Result<Complex64> {
    check_outside(phantom, voxels, x)?;
    let k0 = density.k0();
    let vol = voxels.spacing().powi(voxels.dim as i32);
    let mut acc = ZERO;
    for v in 0..voxels.len() {
        let xp = voxels.point(v);
        let f = phantom.eval_potential(&xp);
        if f == ZERO {
            continue;
        }
        let inc = quad.field(density, &sub(&xp, y_shift));
        acc += greens(&sub(x, &xp), k0)? * f * inc * vol;
    }
    Ok(acc)
}

/// `G(x - x'_v) f(x'_v) h^d` for every voxel.
fn greens_row(phantom: &Phantom, voxels: &VoxelGrid, x: &[f64], k0: f64) -> Vec<Complex64> {
    let fv = weighted_potential(phantom, voxels);
    greens_row_from(&fv, voxels, x, k0)
}

fn greens_row_from(fv: &[Complex64], voxels: &VoxelGrid, x: &[f64], k0: f64) -> Vec<Complex64> {
    let mut xp = vec![0.0; voxels.dim];
    let axis = voxels.axis();
    fv.iter()
        .enumerate()
        .map(|(v, f)| {
            if *f == ZERO {
                return ZERO;
            }
            let mut rem = v;
            for a in (0..voxels.dim).rev() {
                xp[a] = axis[rem % voxels.cells];
                rem /= voxels.cells;
            }
            let r = norm(&sub(x, &xp));
            let g = if voxels.dim == 2 { greens_2d(k0 * r) } else { greens_3d(k0, r) };
            g * f
        })
        .collect()
}

/// Detector points on the plane `x_d = L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorGrid {
    pub dim: usize,
    pub spacing: f64,
    /// Points per tangential axis.
    pub count: usize,
    pub offset: f64,
    /// Accept spacings above the half-wavelength limit.
    #[serde(default)]
    pub allow_undersampling: bool,
}

impl DetectorGrid {
    pub fn new(geometry: &ScanGeometry, spacing: f64, count: usize) -> Result<Self> {
        if !(spacing > 0.0) || count == 0 {
            return Err(Error::Contract("detector grid needs spacing > 0 and count > 0".into()));
        }
        let grid = Self {
            dim: geometry.dim(),
            spacing,
            count,
            offset: geometry.offset(),
            allow_undersampling: false,
        };
        Ok(grid)
    }

    pub fn with_override(mut self, allow: bool) -> Self {
        self.allow_undersampling = allow;
        self
    }

    /// Half-wavelength sampling `spacing <= pi / k0`.
    pub fn check_nyquist(&self, k0: f64) -> Result<()> {
        let limit = PI / k0;
        if self.spacing > limit * (1.0 + 1e-12) {
            if self.allow_undersampling {
                log::warn!("detector spacing {} exceeds pi/k0 = {limit}", self.spacing);
            } else {
                return Err(Error::Nyquist {
                    spacing: self.spacing,
                    limit,
                });
            }
        }
        Ok(())
    }

    /// Aperture half-width `spacing * count / 2`.
    pub fn half_aperture(&self) -> f64 {
        0.5 * self.spacing * self.count as f64
    }

    pub fn len(&self) -> usize {
        self.count.pow(self.dim as u32 - 1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Tangential coordinate of index `i` along one axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        (i as f64 - (self.count / 2) as f64) * self.spacing
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut x: Vec<f64> = unflatten(flat, self.count, self.dim - 1)
            .into_iter()
            .map(|i| self.coordinate(i))
            .collect();
        x.push(self.offset);
        x
    }
}

/// Beam translations `y_j = sum_a c(j_a) b_a` on the scan plane `nu^perp`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub spacing: f64,
    pub count: usize,
    pub basis: Vec<Vec<f64>>,
}

impl ScanGrid {
    pub fn new(geometry: &ScanGeometry, spacing: f64, count: usize) -> Result<Self> {
        if !(spacing > 0.0) || count == 0 {
            return Err(Error::Contract("scan grid needs spacing > 0 and count > 0".into()));
        }
        Ok(Self {
            spacing,
            count,
            basis: geometry.scan_basis(),
        })
    }

    pub fn axes(&self) -> usize {
        self.basis.len()
    }

    pub fn len(&self) -> usize {
        self.count.pow(self.axes() as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        (i as f64 - (self.count / 2) as f64) * self.spacing
    }

    /// In-plane coordinates of scan index `flat`.
    pub fn coordinates(&self, flat: usize) -> Vec<f64> {
        unflatten(flat, self.count, self.axes())
            .into_iter()
            .map(|i| self.coordinate(i))
            .collect()
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        let c = self.coordinates(flat);
        let dim = self.basis[0].len();
        let mut y = vec![0.0; dim];
        for (ca, b) in c.iter().zip(&self.basis) {
            for (yk, bk) in y.iter_mut().zip(b) {
                *yk += ca * bk;
            }
        }
        y
    }

    /// Whether the basis is orthonormal and orthogonal to `nu` within 1e-12.
    pub fn is_valid_for(&self, nu: &[f64]) -> bool {
        self.basis.iter().enumerate().all(|(a, b)| {
            dot(b, nu).abs() <= 1e-12
                && self
                    .basis
                    .iter()
                    .enumerate()
                    .all(|(c, e)| (dot(b, e) - if a == c { 1.0 } else { 0.0 }).abs() <= 1e-12)
        })
    }
}

/// Scan data `m(x_i, y_j)` with the metadata needed to interpret it.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub geometry: ScanGeometry,
    pub detector: DetectorGrid,
    pub scan: ScanGrid,
    pub density: DensityDescriptor,
    /// Row-major `[scan index][detector index]`.
    pub samples: Vec<Complex64>,
}

impl MeasurementRecord {
    pub fn new(
        geometry: ScanGeometry,
        detector: DetectorGrid,
        scan: ScanGrid,
        density: DensityDescriptor,
        samples: Vec<Complex64>,
    ) -> Result<Self> {
        if samples.len() != scan.len() * detector.len() {
            return Err(Error::Contract(format!(
                "record holds {} samples, grids need {} x {}",
                samples.len(),
                scan.len(),
                detector.len()
            )));
        }
        Ok(Self {
            geometry,
            detector,
            scan,
            density,
            samples,
        })
    }

    pub fn shape(&self) -> [usize; 2] {
        [self.scan.len(), self.detector.len()]
    }

    pub fn get(&self, scan_index: usize, detector_index: usize) -> Complex64 {
        self.samples[scan_index * self.detector.len() + detector_index]
    }

    pub fn density(&self) -> Result<HerglotzDensity> {
        HerglotzDensity::from_descriptor(&self.density, self.geometry.omega().to_vec(), self.geometry.k0())
    }
}

/// Accuracy knobs of [`simulate_scan`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationOptions {
    /// Beam quadrature order.
    pub quadrature_order: usize,
    /// Voxels per axis over the support box.
    pub voxels: usize,
    /// Ratio of RMS signal to RMS noise amplitude; `None` for clean data.
    #[serde(default)]
    pub noise_snr: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Warn when the projected number of complex multiply-adds exceeds this.
    #[serde(default)]
    pub budget: Option<f64>,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            quadrature_order: 1024,
            voxels: 128,
            noise_snr: None,
            seed: 0,
            budget: None,
        }
    }
}

/// Projected cost of [`simulate_scan`] in complex multiply-adds.
pub fn projected_cost(detector: &DetectorGrid, scan: &ScanGrid, active_nodes: usize, voxels: usize, dim: usize) -> f64 {
    let nx = detector.len() as f64;
    let nv = (voxels as f64).powi(dim as i32);
    nx * active_nodes as f64 * nv + scan.len() as f64 * nx * active_nodes as f64
}

/// Synthesises the full record `m(x_i, y_j) = u_{y_j}(x_i)`.
pub fn simulate_scan(
    phantom: &Phantom,
    density: &HerglotzDensity,
    geometry: &ScanGeometry,
    detector: &DetectorGrid,
    scan: &ScanGrid,
    options: &SimulationOptions,
) -> Result<MeasurementRecord> {
    let dim = geometry.dim();
    if phantom.dim() != dim || detector.dim != dim || density.omega().len() != dim {
        return Err(Error::Contract("dimension mismatch between inputs".into()));
    }
    if phantom.radius() >= geometry.offset() {
        return Err(Error::Geometry("phantom support must lie below the detector plane (L > r)".into()));
    }
    if !scan.is_valid_for(geometry.nu()) {
        return Err(Error::Contract("scan basis is not an orthonormal basis of nu^perp".into()));
    }
    detector.check_nyquist(geometry.k0())?;
    let k0 = geometry.k0();
    let voxels = VoxelGrid::for_phantom(phantom, options.voxels)?;
    voxels.check_resolution(k0, phantom);
    if geometry.offset() < phantom.radius() + voxels.diagonal() {
        return Err(Error::InsideScatterer);
    }
    let quad = BeamQuadrature::for_density(density, options.quadrature_order)?;

    // Active beam nodes with their weighted amplitudes.
    let active: Vec<(usize, Complex64)> = quad
        .nodes
        .iter()
        .zip(&quad.weights)
        .enumerate()
        .filter_map(|(q, (s, w))| {
            let a = density.eval_unchecked(s);
            (a != ZERO).then(|| (q, a * *w))
        })
        .collect();
    let nq = active.len();
    let nx = detector.len();
    let ny = scan.len();

    let cost = projected_cost(detector, scan, nq, options.voxels, dim);
    if let Some(budget) = options.budget {
        if cost > budget {
            log::warn!("projected simulation cost {cost:.3e} exceeds the budget {budget:.3e}");
        }
    }
    log::info!("simulating {ny} scan positions x {nx} detector points, {nq} beam nodes, {} voxels", voxels.len());

    if phantom.is_zero() || nq == 0 {
        return MeasurementRecord::new(
            geometry.clone(),
            detector.clone(),
            scan.clone(),
            density.descriptor(),
            vec![ZERO; ny * nx],
        );
    }

    // Separable plane-wave factors e^{i x'_a s_{q,a}} per axis, [axis][voxel][node].
    let axis = voxels.axis();
    let nv = voxels.cells;
    let factors: Vec<Vec<Complex64>> = (0..dim)
        .map(|a| {
            let mut e = vec![ZERO; nv * nq];
            for (v, xv) in axis.iter().enumerate() {
                for (k, (q, _)) in active.iter().enumerate() {
                    e[v * nq + k] = Complex64::from_polar(1.0, xv * quad.nodes[*q][a]);
                }
            }
            e
        })
        .collect();
    let fv = weighted_potential(phantom, &voxels);

    // w[i][k] = sum_v G(x_i - x'_v) f_v h^d e^{i <x'_v, s_k>}
    let w: Vec<Vec<Complex64>> = (0..nx)
        .into_par_iter()
        .map(|i| {
            let g = greens_row_from(&fv, &voxels, &detector.point(i), k0);
            contract(&g, &factors, nv, nq, dim)
        })
        .collect();

    // Per-scan phase rows, then samples[j][i] = sum_k P[j][k] w[i][k].
    let samples: Vec<Complex64> = (0..ny)
        .into_par_iter()
        .flat_map_iter(|j| {
            let y = scan.point(j);
            let p: Vec<Complex64> = active
                .iter()
                .map(|(q, aw)| *aw * Complex64::from_polar(1.0, -dot(&y, &quad.nodes[*q])))
                .collect();
            let w = &w;
            (0..nx).map(move |i| {
                let row = &w[i];
                let mut acc = ZERO;
                for k in 0..nq {
                    acc += p[k] * row[k];
                }
                acc
            })
        })
        .collect();

    let mut samples = samples;
    if let Some(snr) = options.noise_snr {
        add_noise(&mut samples, snr, options.seed)?;
    }
    MeasurementRecord::new(geometry.clone(), detector.clone(), scan.clone(), density.descriptor(), samples)
}

/// Contracts a voxel array against the per-axis factors, last axis first.
fn contract(g: &[Complex64], factors: &[Vec<Complex64>], nv: usize, nq: usize, dim: usize) -> Vec<Complex64> {
    // First step: rows of length nv along the last axis.
    let rows = g.len() / nv;
    let last = &factors[dim - 1];
    let mut t = vec![ZERO; rows * nq];
    for m in 0..rows {
        let row = &g[m * nv..(m + 1) * nv];
        if row.iter().all(|z| *z == ZERO) {
            continue;
        }
        let out = &mut t[m * nq..(m + 1) * nq];
        for (v, gv) in row.iter().enumerate() {
            if *gv == ZERO {
                continue;
            }
            let e = &last[v * nq..(v + 1) * nq];
            for k in 0..nq {
                out[k] += gv * e[k];
            }
        }
    }
    // Remaining axes: elementwise in the node index.
    let mut len = rows;
    for a in (0..dim - 1).rev() {
        let fac = &factors[a];
        let next_len = len / nv;
        let mut next = vec![ZERO; next_len * nq];
        for m in 0..next_len {
            let out = &mut next[m * nq..(m + 1) * nq];
            for v in 0..nv {
                let src = &t[(m * nv + v) * nq..(m * nv + v + 1) * nq];
                let e = &fac[v * nq..(v + 1) * nq];
                for k in 0..nq {
                    out[k] += src[k] * e[k];
                }
            }
        }
        t = next;
        len = next_len;
    }
    t
}

/// Adds circular complex Gaussian noise with RMS amplitude `rms(signal) / snr`.
pub fn add_noise(samples: &mut [Complex64], snr: f64, seed: u64) -> Result<()> {
    if !(snr > 0.0) {
        return Err(Error::Contract("noise SNR must be positive".into()));
    }
    let rms = (samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / samples.len().max(1) as f64).sqrt();
    let sigma = rms / snr / 2f64.sqrt();
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::Contract(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for z in samples.iter_mut() {
        *z += Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng));
    }
    Ok(())
}
