//! Run configuration documents.

use std::path::Path;

use rastertomo::beam::{DensityDescriptor, HerglotzDensity};
use rastertomo::forward::{DetectorGrid, ScanGrid, SimulationOptions};
use rastertomo::spectral::Taper;
use rastertomo::{Complex64, Phantom, Primitive, ScanGeometry};
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub d: usize,
    pub k0: f64,
    pub omega: Vec<f64>,
    pub nu: Vec<f64>,
    #[serde(rename = "L")]
    pub offset: f64,
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrimitiveKindConfig {
    Ball,
    Blob,
}

/// Balls take `radius`, blobs take `width`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrimitiveConfig {
    pub kind: PrimitiveKindConfig,
    pub center: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    pub contrast_re: f64,
    #[serde(default)]
    pub contrast_im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub spacing: f64,
    pub count: usize,
    #[serde(default)]
    pub allow_undersampling: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub spacing: f64,
    pub count: usize,
}

fn default_ns() -> usize {
    1024
}

fn default_nv() -> usize {
    128
}

fn default_gamma() -> f64 {
    0.95
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccuracyConfig {
    /// Beam quadrature order.
    #[serde(rename = "Ns", default = "default_ns")]
    pub ns: usize,
    /// Voxels per axis.
    #[serde(rename = "Nv", default = "default_nv")]
    pub nv: usize,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub taper: Taper,
}

impl Default for AccuracyConfig {
    fn default() -> Self {
        Self {
            ns: default_ns(),
            nv: default_nv(),
            gamma: default_gamma(),
            taper: Taper::default(),
        }
    }
}

fn default_threshold() -> f64 {
    0.05
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub phantom: Vec<PrimitiveConfig>,
    pub density: DensityDescriptor,
    pub detector: DetectorConfig,
    pub scan: ScanConfig,
    #[serde(default)]
    pub accuracy: AccuracyConfig,
    #[serde(default)]
    pub seed: Option<u64>,
    /// RMS signal over RMS noise; clean data when absent.
    #[serde(default)]
    pub noise_snr: Option<f64>,
    /// Pass threshold of `verify-fdt` on the interior error.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

/// Validated objects built from a [`RunConfig`].
pub struct Setup {
    pub geometry: ScanGeometry,
    pub phantom: Phantom,
    pub density: HerglotzDensity,
    pub detector: DetectorGrid,
    pub scan: ScanGrid,
    pub options: SimulationOptions,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
    }

    pub fn setup(&self) -> Result<Setup, Failure> {
        let g = &self.geometry;
        let geometry = ScanGeometry::new(g.d, g.k0, g.omega.clone(), g.nu.clone(), g.offset, g.r).map_err(Failure::config)?;
        let primitives = self
            .phantom
            .iter()
            .map(|p| {
                if p.center.len() != g.d {
                    return Err(Failure::config(format!("phantom centre needs {} components", g.d)));
                }
                let contrast = Complex64::new(p.contrast_re, p.contrast_im);
                let (size, name) = match p.kind {
                    PrimitiveKindConfig::Ball => (p.radius, "radius"),
                    PrimitiveKindConfig::Blob => (p.width, "width"),
                };
                let size = match size {
                    Some(v) if v > 0.0 => v,
                    _ => return Err(Failure::config(format!("phantom {name} must be given and positive"))),
                };
                Ok(match p.kind {
                    PrimitiveKindConfig::Ball => Primitive::ball(p.center.clone(), size, contrast),
                    PrimitiveKindConfig::Blob => Primitive::blob(p.center.clone(), size, contrast),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let phantom = Phantom::new(g.d, g.r, primitives).map_err(Failure::config)?;
        let density = HerglotzDensity::from_descriptor(&self.density, g.omega.clone(), g.k0).map_err(Failure::config)?;
        let detector = DetectorGrid::new(&geometry, self.detector.spacing, self.detector.count)
            .map_err(Failure::config)?
            .with_override(self.detector.allow_undersampling);
        let scan = ScanGrid::new(&geometry, self.scan.spacing, self.scan.count).map_err(Failure::config)?;
        if !(self.accuracy.gamma > 0.0 && self.accuracy.gamma < 1.0) {
            return Err(Failure::config("accuracy.gamma must lie in (0, 1)"));
        }
        if let Some(snr) = self.noise_snr {
            if !(snr > 0.0) {
                return Err(Failure::config("noise_snr must be positive"));
            }
        }
        let options = SimulationOptions {
            quadrature_order: self.accuracy.ns,
            voxels: self.accuracy.nv,
            noise_snr: self.noise_snr,
            seed: self.seed.unwrap_or(0),
            budget: None,
        };
        Ok(Setup {
            geometry,
            phantom,
            density,
            detector,
            scan,
            options,
        })
    }
}
