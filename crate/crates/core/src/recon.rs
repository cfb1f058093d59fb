//! Recovery of Fourier samples of `f` from reduced measurements, gridding and
//! Fourier backpropagation.
//!
//! A bin `(eta, sigma)` of the reduced measurements satisfies
//! `m(eta, sigma) = a(sigma) F f(eta - sigma) + a(H sigma) F f(eta - H sigma)`.
//! If one of the two sheets lies in `Sigma_1` the other coefficient vanishes
//! and the bin gives a coefficient directly. Otherwise both sheets lie in
//! `Sigma_2` and the bin couples two coefficients; elimination solves such a
//! bin once one of its two coefficients is known.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beam::HerglotzDensity;
use crate::error::{Error, Result};
use crate::forward::MeasurementRecord;
use crate::geometry::{
    cell_center, cell_size, classify_unchecked, coverage_mask, householder_reflect, sigma1_is_empty, CoverageMask,
    CoverageMode, ScanGeometry, SigmaClass,
};
use crate::linalg::{norm, sub, unflatten};
use crate::phantom::Phantom;
use crate::spectral::{measurement_spectrum, reduce_measurements, reduced_rhs, ReducedBin, ReducedMeasurements, Taper};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Provenance {
    Direct,
    Eliminated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleEntry {
    pub y: Vec<f64>,
    pub value: Complex64,
    pub provenance: Provenance,
    /// Index of the reduced bin the value came from.
    pub bin: usize,
    /// `false` for the sheet `sigma = h_nu(xi)`, `true` for `H_nu sigma`.
    pub reflected: bool,
    /// `|a|^2 / max |a|^2` of the density the value was divided by.
    pub precision: f64,
}

/// Linear (tent-kernel) accumulation of samples on the cell centres of
/// `[-2 k0, 2 k0]^d`. Cell values are precision-weighted means; coverage is
/// decided on the unweighted tent mass in `weights`.
#[derive(Debug, Clone, PartialEq)]
pub struct AccumulationGrid {
    pub dim: usize,
    pub k0: f64,
    pub n: usize,
    pub sums: Vec<Complex64>,
    pub precision: Vec<f64>,
    pub weights: Vec<f64>,
}

impl AccumulationGrid {
    pub fn new(dim: usize, k0: f64, n: usize) -> Self {
        let len = n.pow(dim as u32);
        Self {
            dim,
            k0,
            n,
            sums: vec![ZERO; len],
            precision: vec![0.0; len],
            weights: vec![0.0; len],
        }
    }

    pub fn cell_size(&self) -> f64 {
        cell_size(self.k0, self.n)
    }

    /// Lower corner cell index and fractional offsets of the footprint of `y`.
    fn footprint(&self, y: &[f64]) -> Option<(Vec<usize>, Vec<f64>)> {
        let h = self.cell_size();
        let mut base = Vec::with_capacity(self.dim);
        let mut frac = Vec::with_capacity(self.dim);
        for &c in y {
            let t = (c + 2.0 * self.k0) / h - 0.5;
            let i = t.floor();
            if i < 0.0 || i + 1.0 > (self.n - 1) as f64 {
                // Clamp footprints that touch the outer cells onto the edge.
                if t < 0.0 || t > (self.n - 1) as f64 {
                    return None;
                }
                let i = i.clamp(0.0, (self.n - 2) as f64);
                base.push(i as usize);
                frac.push(t - i);
                continue;
            }
            base.push(i as usize);
            frac.push(t - i);
        }
        Some((base, frac))
    }

    fn corners(&self, y: &[f64]) -> Vec<(usize, f64)> {
        let Some((base, frac)) = self.footprint(y) else {
            return Vec::new();
        };
        let mut out = Vec::with_capacity(1 << self.dim);
        for mask in 0..(1usize << self.dim) {
            let mut flat = 0;
            let mut w = 1.0;
            for a in 0..self.dim {
                let bit = (mask >> a) & 1;
                flat = flat * self.n + base[a] + bit;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
            }
            out.push((flat, w));
        }
        out
    }

    pub fn add(&mut self, y: &[f64], value: Complex64, precision: f64) {
        for (flat, w) in self.corners(y) {
            if w > 0.0 {
                self.sums[flat] += value * (w * precision);
                self.precision[flat] += w * precision;
                self.weights[flat] += w;
            }
        }
    }

    pub fn mean(&self, flat: usize) -> Complex64 {
        if self.precision[flat] > 0.0 {
            self.sums[flat] / self.precision[flat]
        } else {
            ZERO
        }
    }

    /// Bilinear interpolation of cell means, `None` unless every footprint
    /// cell holds weight above `w_min`.
    pub fn interpolate(&self, y: &[f64], w_min: f64) -> Option<Complex64> {
        let corners = self.corners(y);
        if corners.is_empty() {
            return None;
        }
        let mut acc = ZERO;
        for (flat, w) in corners {
            if self.weights[flat] <= w_min {
                return None;
            }
            acc += self.mean(flat) * w;
        }
        Some(acc)
    }

    /// Index of the cell containing `y`.
    pub fn cell_of(&self, y: &[f64]) -> Option<usize> {
        let h = self.cell_size();
        let mut flat = 0;
        for &c in y {
            let i = ((c + 2.0 * self.k0) / h).floor();
            if i < 0.0 || i >= self.n as f64 {
                return None;
            }
            flat = flat * self.n + i as usize;
        }
        Some(flat)
    }
}

/// Exact lookup of known frequencies through a quantised hash.
#[derive(Debug, Clone)]
struct PointIndex {
    quantum: f64,
    tol: f64,
    map: HashMap<Vec<i64>, Vec<usize>>,
}

impl PointIndex {
    fn new(k0: f64) -> Self {
        Self {
            quantum: 1e-6 * k0,
            tol: 1e-9 * k0,
            map: HashMap::new(),
        }
    }

    fn key(&self, y: &[f64]) -> Vec<i64> {
        y.iter().map(|c| (c / self.quantum).round() as i64).collect()
    }

    fn insert(&mut self, y: &[f64], id: usize) {
        let key = self.key(y);
        self.map.entry(key).or_default().push(id);
    }

    fn find(&self, y: &[f64], entries: &[SampleEntry]) -> Option<usize> {
        let key = self.key(y);
        let d = key.len();
        for offset in 0..3usize.pow(d as u32) {
            let mut k = key.clone();
            let mut rem = offset;
            for c in k.iter_mut() {
                *c += (rem % 3) as i64 - 1;
                rem /= 3;
            }
            if let Some(ids) = self.map.get(&k) {
                for &id in ids {
                    if norm(&sub(&entries[id].y, y)) <= self.tol {
                        return Some(id);
                    }
                }
            }
        }
        None
    }
}

/// Fourier samples of `f` with provenance.
#[derive(Debug, Clone)]
pub struct SpectralSampleSet {
    pub dim: usize,
    pub k0: f64,
    pub entries: Vec<SampleEntry>,
    index: PointIndex,
}

impl SpectralSampleSet {
    pub fn new(dim: usize, k0: f64) -> Self {
        Self {
            dim,
            k0,
            entries: Vec::new(),
            index: PointIndex::new(k0),
        }
    }

    pub fn push(&mut self, entry: SampleEntry) {
        self.index.insert(&entry.y, self.entries.len());
        self.entries.push(entry);
    }

    /// Known value at exactly `y` (within `1e-9 k0`).
    pub fn lookup(&self, y: &[f64]) -> Option<Complex64> {
        self.index.find(y, &self.entries).map(|id| self.entries[id].value)
    }

    pub fn count(&self, provenance: Provenance) -> usize {
        self.entries.iter().filter(|e| e.provenance == provenance).count()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn accumulate(&self, n: usize) -> AccumulationGrid {
        let mut grid = AccumulationGrid::new(self.dim, self.k0, n);
        for e in &self.entries {
            grid.add(&e.y, e.value, e.precision);
        }
        grid
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectFillStats {
    pub direct: usize,
    /// Bins skipped because `|a(sigma)|` fell below the floor.
    pub skipped_small_density: usize,
    pub coupled: usize,
    pub boundary: usize,
}

/// `F f(eta - sigma) = m(eta, sigma) / a(sigma)` for every bin with a sheet in
/// `Sigma_1`. Densities below `floor * max |a|` are skipped.
pub fn direct_fill(
    reduced: &ReducedMeasurements,
    density: &HerglotzDensity,
    floor: f64,
) -> (SpectralSampleSet, DirectFillStats) {
    let geometry = &reduced.geometry;
    let nu = geometry.nu();
    let amax = density.max_abs();
    let amin = floor * amax;
    let mut set = SpectralSampleSet::new(geometry.dim(), geometry.k0());
    let mut stats = DirectFillStats {
        direct: 0,
        skipped_small_density: 0,
        coupled: 0,
        boundary: 0,
    };
    for (b, bin) in reduced.bins.iter().enumerate() {
        let sm = householder_reflect(&bin.sigma, nu);
        let cp = classify_unchecked(&bin.sigma, geometry);
        let cm = classify_unchecked(&sm, geometry);
        let (sigma, reflected) = if cp == SigmaClass::Sigma1 {
            (&bin.sigma, false)
        } else if cm == SigmaClass::Sigma1 {
            (&sm, true)
        } else {
            if cp.in_sigma2() && cm.in_sigma2() {
                stats.coupled += 1;
            } else if cp == SigmaClass::Boundary || cm == SigmaClass::Boundary {
                stats.boundary += 1;
            }
            continue;
        };
        let a = density.eval_unchecked(sigma);
        if a.norm() < amin || a == ZERO {
            stats.skipped_small_density += 1;
            continue;
        }
        set.push(SampleEntry {
            y: sub(&bin.eta, sigma),
            value: bin.value / a,
            provenance: Provenance::Direct,
            bin: b,
            reflected,
            precision: a.norm_sqr() / (amax * amax),
        });
        stats.direct += 1;
    }
    (set, stats)
}

/// Where elimination looks for the known partner coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartnerLookup {
    /// Only exact frequency matches (within `1e-9 k0`).
    ExactOnly,
    /// Exact matches first, then bilinear interpolation on the accumulation
    /// grid when every footprint cell is covered.
    ExactThenGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EliminationOptions {
    pub lookup: PartnerLookup,
    /// Accumulation grid resolution for the grid lookup.
    pub grid: usize,
    /// Minimum footprint weight for the grid lookup.
    pub w_min: f64,
    pub max_sweeps: usize,
    /// Stop when a sweep grows the known set by less than this fraction.
    pub min_growth: f64,
    /// Relative residual above which a redundant equation counts as a conflict.
    pub conflict_tol: f64,
    /// Density floor relative to `max |a|`.
    pub floor: f64,
}

impl Default for EliminationOptions {
    fn default() -> Self {
        Self {
            lookup: PartnerLookup::ExactThenGrid,
            grid: 256,
            w_min: 0.5,
            max_sweeps: 10,
            min_growth: 1e-3,
            conflict_tol: 0.1,
            floor: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conflict {
    pub bin: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EliminationReport {
    pub sweeps: usize,
    pub added_per_sweep: Vec<usize>,
    pub eliminated: usize,
    pub conflicts: Vec<Conflict>,
}

struct Coupled {
    bin: usize,
    /// `eta - sigma` and `eta - H sigma`.
    y: [Vec<f64>; 2],
    a: [Complex64; 2],
    value: Complex64,
}

/// Iterative elimination over the coupled bins, seeded by [`direct_fill`].
pub fn elimination_solve(
    reduced: &ReducedMeasurements,
    density: &HerglotzDensity,
    seed: &SpectralSampleSet,
    options: &EliminationOptions,
) -> (SpectralSampleSet, EliminationReport) {
    let geometry = &reduced.geometry;
    let nu = geometry.nu();
    let amax = density.max_abs();
    let amin = options.floor * amax;
    let coupled: Vec<Coupled> = reduced
        .bins
        .iter()
        .enumerate()
        .filter_map(|(b, bin)| {
            let sm = householder_reflect(&bin.sigma, nu);
            let both = classify_unchecked(&bin.sigma, geometry).in_sigma2() && classify_unchecked(&sm, geometry).in_sigma2();
            both.then(|| Coupled {
                bin: b,
                y: [sub(&bin.eta, &bin.sigma), sub(&bin.eta, &sm)],
                a: [density.eval_unchecked(&bin.sigma), density.eval_unchecked(&sm)],
                value: bin.value,
            })
        })
        .collect();

    let mut set = seed.clone();
    let mut grid = match options.lookup {
        PartnerLookup::ExactThenGrid => Some(set.accumulate(options.grid)),
        PartnerLookup::ExactOnly => None,
    };
    let mut done = vec![false; coupled.len()];
    let mut report = EliminationReport {
        sweeps: 0,
        added_per_sweep: Vec::new(),
        eliminated: 0,
        conflicts: Vec::new(),
    };
    let known = |set: &SpectralSampleSet, grid: &Option<AccumulationGrid>, y: &[f64]| -> Option<Complex64> {
        set.lookup(y)
            .or_else(|| grid.as_ref().and_then(|g| g.interpolate(y, options.w_min)))
    };

    for _ in 0..options.max_sweeps {
        report.sweeps += 1;
        let before = set.len();
        let mut added = 0;
        for (c, eq) in coupled.iter().enumerate() {
            if done[c] {
                continue;
            }
            let v0 = known(&set, &grid, &eq.y[0]);
            let v1 = known(&set, &grid, &eq.y[1]);
            let solve = match (v0, v1) {
                (Some(a), Some(b)) => {
                    let residual = (eq.a[0] * a + eq.a[1] * b - eq.value).norm() / eq.value.norm().max(1e-300);
                    if residual > options.conflict_tol {
                        report.conflicts.push(Conflict { bin: eq.bin, residual });
                    }
                    done[c] = true;
                    None
                }
                (Some(a), None) => Some((1usize, eq.a[0] * a)),
                (None, Some(b)) => Some((0usize, eq.a[1] * b)),
                (None, None) => None,
            };
            let Some((unknown, contribution)) = solve else {
                continue;
            };
            let coef = eq.a[unknown];
            if coef.norm() < amin || coef == ZERO {
                continue;
            }
            let value = (eq.value - contribution) / coef;
            let y = eq.y[unknown].clone();
            let precision = coef.norm_sqr() / (amax * amax);
            if let Some(g) = grid.as_mut() {
                g.add(&y, value, precision);
            }
            set.push(SampleEntry {
                y,
                value,
                provenance: Provenance::Eliminated,
                bin: eq.bin,
                reflected: unknown == 1,
                precision,
            });
            done[c] = true;
            added += 1;
        }
        report.added_per_sweep.push(added);
        report.eliminated += added;
        if added == 0 || (added as f64) < options.min_growth * before as f64 {
            break;
        }
    }
    (set, report)
}

/// Gridded spectrum with its coverage flags.
#[derive(Debug, Clone, PartialEq)]
pub struct GriddedSpectrum {
    pub dim: usize,
    pub k0: f64,
    pub n: usize,
    pub mode: CoverageMode,
    pub values: Vec<Complex64>,
    pub weights: Vec<f64>,
    pub covered: Vec<bool>,
}

impl GriddedSpectrum {
    pub fn cell_size(&self) -> f64 {
        cell_size(self.k0, self.n)
    }

    pub fn cell_center(&self, flat: usize) -> Vec<f64> {
        cell_center(self.k0, self.n, self.dim, flat)
    }

    pub fn covered_fraction(&self) -> f64 {
        self.covered.iter().filter(|&&c| c).count() as f64 / self.covered.len() as f64
    }

    /// Evaluates `f` at the cell centres covered by `mask`.
    pub fn from_fn(mask: &CoverageMask, f: impl Fn(&[f64]) -> Complex64 + Sync) -> Self {
        let len = mask.tags.len();
        let values: Vec<Complex64> = (0..len)
            .into_par_iter()
            .map(|flat| {
                if mask.tags[flat].is_covered() {
                    f(&mask.cell_center(flat))
                } else {
                    ZERO
                }
            })
            .collect();
        Self {
            dim: mask.dim,
            k0: mask.k0,
            n: mask.n,
            mode: mask.mode,
            covered: mask.tags.iter().map(|t| t.is_covered()).collect(),
            weights: mask.tags.iter().map(|t| if t.is_covered() { 1.0 } else { 0.0 }).collect(),
            values,
        }
    }
}

/// Weighted-mean gridding intersected with the geometric coverage of `mode`.
pub fn grid_samples(samples: &SpectralSampleSet, mask: &CoverageMask, w_min: f64) -> Result<GriddedSpectrum> {
    if mask.n < 32 {
        return Err(Error::Resolution(mask.n, "need N >= 32"));
    }
    if mask.dim != samples.dim || (mask.k0 - samples.k0).abs() > 1e-12 * samples.k0 {
        return Err(Error::Contract("mask and samples describe different grids".into()));
    }
    let acc = samples.accumulate(mask.n);
    let len = acc.weights.len();
    let covered: Vec<bool> = (0..len)
        .map(|i| acc.weights[i] > w_min && mask.tags[i].is_covered())
        .collect();
    let values = (0..len)
        .map(|i| if covered[i] { acc.mean(i) } else { ZERO })
        .collect();
    Ok(GriddedSpectrum {
        dim: samples.dim,
        k0: samples.k0,
        n: mask.n,
        mode: mask.mode,
        values,
        weights: acc.weights,
        covered,
    })
}

/// Spatial output grid `[-half_width, half_width]^d` with `n` nodes per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageGrid {
    pub n: usize,
    pub half_width: f64,
}

impl ImageGrid {
    pub fn coordinate(&self, i: usize) -> f64 {
        if self.n == 1 {
            return 0.0;
        }
        -self.half_width + 2.0 * self.half_width * i as f64 / (self.n - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconImage {
    pub dim: usize,
    pub grid: ImageGrid,
    pub mode: CoverageMode,
    /// Row-major, axis 0 slowest.
    pub values: Vec<Complex64>,
}

impl ReconImage {
    pub fn point(&self, flat: usize) -> Vec<f64> {
        unflatten(flat, self.grid.n, self.dim)
            .into_iter()
            .map(|i| self.grid.coordinate(i))
            .collect()
    }
}

/// `(2 pi)^{-d/2} sum_cells 1_covered F(y_c) e^{i <x, y_c>} h^d` on the output
/// grid, evaluated as separable direct sums.
pub fn backpropagate(spectrum: &GriddedSpectrum, mode: CoverageMode, output: ImageGrid) -> Result<ReconImage> {
    if spectrum.mode != mode {
        return Err(Error::ModeMismatch(format!(
            "spectrum gridded for {:?}, backpropagation requested {:?}",
            spectrum.mode, mode
        )));
    }
    let d = spectrum.dim;
    let n = spectrum.n;
    let m = output.n;
    let h = spectrum.cell_size();
    let freqs: Vec<f64> = (0..n).map(|i| -2.0 * spectrum.k0 + (i as f64 + 0.5) * h).collect();
    let xs: Vec<f64> = (0..m).map(|i| output.coordinate(i)).collect();
    // phase[x][c] = e^{i x y_c}
    let phase: Vec<Complex64> = xs
        .iter()
        .flat_map(|x| freqs.iter().map(move |y| Complex64::from_polar(1.0, x * y)))
        .collect();
    let mut data: Vec<Complex64> = spectrum
        .values
        .iter()
        .zip(&spectrum.covered)
        .map(|(v, c)| if *c { *v } else { ZERO })
        .collect();
    // Contract axis by axis, replacing extent n with m.
    let mut shape = vec![n; d];
    for a in 0..d {
        let outer: usize = shape[..a].iter().product();
        let inner: usize = shape[a + 1..].iter().product();
        let mut next = vec![ZERO; outer * m * inner];
        next.par_chunks_mut(m * inner).enumerate().for_each(|(o, out)| {
            for xi in 0..m {
                let row = &phase[xi * n..(xi + 1) * n];
                let dst = &mut out[xi * inner..(xi + 1) * inner];
                for (c, p) in row.iter().enumerate() {
                    let src = &data[(o * n + c) * inner..(o * n + c + 1) * inner];
                    for (dv, sv) in dst.iter_mut().zip(src) {
                        *dv += p * sv;
                    }
                }
            }
        });
        data = next;
        shape[a] = m;
    }
    let scale = h.powi(d as i32) / (2.0 * PI).powf(d as f64 / 2.0);
    for v in data.iter_mut() {
        *v *= scale;
    }
    Ok(ReconImage {
        dim: d,
        grid: output,
        mode,
        values: data,
    })
}

/// Settings of the full reconstruction pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconOptions {
    /// Frequency grid resolution.
    pub grid: usize,
    pub gamma: f64,
    pub taper: Taper,
    pub floor: f64,
    pub w_min: f64,
    pub elimination: EliminationOptions,
    pub output: ImageGrid,
}

impl ReconOptions {
    pub fn for_radius(radius: f64) -> Self {
        Self {
            grid: 256,
            gamma: 0.95,
            taper: Taper::default(),
            floor: 1e-8,
            w_min: 1e-6,
            elimination: EliminationOptions::default(),
            output: ImageGrid {
                n: 128,
                half_width: radius,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconMetrics {
    pub mode: CoverageMode,
    pub covered_fraction: f64,
    pub direct_entries: usize,
    pub eliminated_entries: usize,
    pub skipped_small_density: usize,
    pub clipped_bins: usize,
    pub conflict_count: usize,
    pub sweeps: usize,
}

/// Spectrum, reduction, direct fill, elimination (advanced), gridding and
/// backpropagation of a measurement record.
pub fn reconstruct(record: &MeasurementRecord, mode: CoverageMode, options: &ReconOptions) -> Result<(ReconImage, ReconMetrics)> {
    let geometry = &record.geometry;
    if mode == CoverageMode::Naive && sigma1_is_empty(geometry) {
        return Err(Error::EmptySigma1);
    }
    if options.output.half_width < geometry.radius() {
        return Err(Error::Contract("image grid must cover the support ball".into()));
    }
    let density = record.density()?;
    let spectrum = measurement_spectrum(record, options.taper);
    let reduced = reduce_measurements(&spectrum, geometry, options.gamma)?;
    let (seed, stats) = direct_fill(&reduced, &density, options.floor);
    let (samples, report) = match mode {
        CoverageMode::Naive => (seed, None),
        CoverageMode::Advanced => {
            let mut elim = options.elimination;
            elim.floor = options.floor;
            let (s, r) = elimination_solve(&reduced, &density, &seed, &elim);
            (s, Some(r))
        }
    };
    let mask = coverage_mask(geometry, mode, options.grid)?;
    let gridded = grid_samples(&samples, &mask, options.w_min)?;
    let image = backpropagate(&gridded, mode, options.output)?;
    let metrics = ReconMetrics {
        mode,
        covered_fraction: gridded.covered_fraction(),
        direct_entries: samples.count(Provenance::Direct),
        eliminated_entries: samples.count(Provenance::Eliminated),
        skipped_small_density: stats.skipped_small_density,
        clipped_bins: reduced.clipped,
        conflict_count: report.as_ref().map_or(0, |r| r.conflicts.len()),
        sweeps: report.as_ref().map_or(0, |r| r.sweeps),
    };
    Ok((image, metrics))
}

/// Reduced measurements synthesised from the analytic spectrum on a square
/// lattice of detector and scan frequencies with spacing `spacing`.
pub fn synthetic_reduced(
    phantom: &Phantom,
    density: &HerglotzDensity,
    geometry: &ScanGeometry,
    spacing: f64,
    gamma: f64,
) -> Result<ReducedMeasurements> {
    let k0 = geometry.k0();
    let d = geometry.dim();
    let e_d = geometry.detector_normal();
    let nu = geometry.nu();
    let basis = geometry.scan_basis();
    let half = (gamma * k0 / spacing).ceil() as i64;
    let side = (2 * half + 1) as usize;
    let lattice = |flat: usize| -> Vec<f64> {
        unflatten(flat, side, d - 1)
            .into_iter()
            .map(|i| (i as i64 - half) as f64 * spacing)
            .collect()
    };
    let total = side.pow(d as u32 - 1);
    let mut bins = Vec::new();
    for j in 0..total {
        let coords = lattice(j);
        let mut xi = vec![0.0; d];
        for (c, b) in coords.iter().zip(&basis) {
            for (x, bb) in xi.iter_mut().zip(b) {
                *x += c * bb;
            }
        }
        if norm(&xi) >= gamma * k0 {
            continue;
        }
        let sigma = crate::geometry::hemisphere_lift(&xi, nu, k0)?;
        let sm = householder_reflect(&sigma, nu);
        for i in 0..total {
            let mut k = lattice(i);
            k.push(0.0);
            if norm(&k) >= gamma * k0 {
                continue;
            }
            let eta = crate::geometry::hemisphere_lift(&k, &e_d, k0)?;
            let value = reduced_rhs(phantom, density, &eta, &sigma, &sm);
            bins.push(ReducedBin {
                k_index: i,
                xi_index: j,
                eta,
                sigma: sigma.clone(),
                value,
            });
        }
    }
    Ok(ReducedMeasurements::from_bins(geometry.clone(), gamma, bins))
}

/// Relative L2 distance `|a - b| / |b|` over image points inside the ball of
/// radius `radius`.
pub fn relative_l2_on_ball(a: &ReconImage, b: &ReconImage, radius: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (flat, (x, y)) in a.values.iter().zip(&b.values).enumerate() {
        if norm(&a.point(flat)) <= radius {
            num += (x - y).norm_sqr();
            den += y.norm_sqr();
        }
    }
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    }
}
