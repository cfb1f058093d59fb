//! Raster-scan diffraction tomography.
//!
//! A weakly scattering object is probed by a focused beam (a Herglotz wave
//! with density supported on one hemisphere of the wavenumber sphere) whose
//! focal point is translated along a scan hyperplane `nu^perp`. The scattered
//! field, in Born approximation, is recorded on the detector plane `x_d = L`.
//!
//! The crate covers the whole chain:
//!
//! * [`phantom`]: analytic scattering potentials with closed-form spectra,
//! * [`beam`]: Herglotz densities, incident fields and the Gaussian-beam
//!   uniqueness condition,
//! * [`forward`]: Green's functions, Born fields and raster-scan synthesis,
//! * [`spectral`]: planar transforms, reduced measurements and the scanning
//!   Fourier diffraction relation,
//! * [`geometry`]: hemispheres, reflections, the `Sigma_1`/`Sigma_2` split
//!   and Fourier coverage sets,
//! * [`recon`]: direct recovery, elimination on coupled bins, gridding and
//!   backpropagation,
//! * [`io`]: the `RDT1` container, CSV and coverage figures.

pub mod beam;
pub mod error;
pub mod forward;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod phantom;
pub mod recon;
pub mod special;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub use beam::{BeamQuadrature, DensityProfile, HerglotzDensity};
pub use forward::{DetectorGrid, MeasurementRecord, ScanGrid, SimulationOptions, VoxelGrid};
pub use geometry::{CoverageMask, CoverageMode, RegionTag, ScanGeometry, SigmaClass};
pub use phantom::{Phantom, Primitive, PrimitiveKind};
