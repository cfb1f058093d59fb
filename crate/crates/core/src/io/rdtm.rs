//! The `RDT1` container: 4 magic bytes, a little-endian `u32` header length,
//! a compact JSON header with sorted keys and a payload of little-endian
//! interleaved complex doubles.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::beam::DensityDescriptor;
use crate::error::{Error, Result};
use crate::forward::{DetectorGrid, MeasurementRecord, ScanGrid};
use crate::geometry::ScanGeometry;
use crate::recon::ReconImage;

pub const MAGIC: &[u8; 4] = b"RDT1";
pub const VERSION: u32 = 1;
const DTYPE: &str = "complex128le";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorHeader {
    pub spacing: f64,
    pub count: usize,
    #[serde(default)]
    pub allow_undersampling: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanHeader {
    pub spacing: f64,
    pub count: usize,
    pub basis: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayloadHeader {
    /// `"measurement"` for scan records, free otherwise.
    pub kind: String,
    pub shape: Vec<usize>,
    pub dtype: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RdtmHeader {
    pub version: u32,
    pub d: usize,
    pub k0: f64,
    #[serde(rename = "L")]
    pub offset: f64,
    pub omega: Vec<f64>,
    pub nu: Vec<f64>,
    pub r: f64,
    pub density: DensityDescriptor,
    pub detector: DetectorHeader,
    pub scan: ScanHeader,
    pub payload: PayloadHeader,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RdtmContainer {
    pub header: RdtmHeader,
    pub payload: Vec<Complex64>,
}

impl RdtmContainer {
    pub fn from_record(record: &MeasurementRecord) -> Self {
        let g = &record.geometry;
        let header = RdtmHeader {
            version: VERSION,
            d: g.dim(),
            k0: g.k0(),
            offset: g.offset(),
            omega: g.omega().to_vec(),
            nu: g.nu().to_vec(),
            r: g.radius(),
            density: record.density.clone(),
            detector: DetectorHeader {
                spacing: record.detector.spacing,
                count: record.detector.count,
                allow_undersampling: record.detector.allow_undersampling,
            },
            scan: ScanHeader {
                spacing: record.scan.spacing,
                count: record.scan.count,
                basis: record.scan.basis.clone(),
            },
            payload: PayloadHeader {
                kind: "measurement".into(),
                shape: record.shape().to_vec(),
                dtype: DTYPE.into(),
            },
        };
        Self {
            header,
            payload: record.samples.clone(),
        }
    }

    /// Same metadata as `record` with a different payload.
    pub fn array_like(record: &MeasurementRecord, kind: &str, shape: Vec<usize>, payload: Vec<Complex64>) -> Result<Self> {
        if shape.iter().product::<usize>() != payload.len() {
            return Err(Error::Contract("payload length does not match shape".into()));
        }
        let mut c = Self::from_record(record);
        c.header.payload = PayloadHeader {
            kind: kind.into(),
            shape,
            dtype: DTYPE.into(),
        };
        c.payload = payload;
        Ok(c)
    }

    pub fn geometry(&self) -> Result<ScanGeometry> {
        let h = &self.header;
        ScanGeometry::new(h.d, h.k0, h.omega.clone(), h.nu.clone(), h.offset, h.r)
    }

    pub fn to_record(&self) -> Result<MeasurementRecord> {
        let h = &self.header;
        if h.payload.kind != "measurement" {
            return Err(Error::Format(format!("payload kind {:?} is not a measurement record", h.payload.kind)));
        }
        let geometry = self.geometry()?;
        let detector = DetectorGrid::new(&geometry, h.detector.spacing, h.detector.count)?
            .with_override(h.detector.allow_undersampling);
        let mut scan = ScanGrid::new(&geometry, h.scan.spacing, h.scan.count)?;
        scan.basis = h.scan.basis.clone();
        if !scan.is_valid_for(geometry.nu()) {
            return Err(Error::Format("scan basis is not an orthonormal basis of nu^perp".into()));
        }
        if h.payload.shape != [scan.len(), detector.len()] {
            return Err(Error::Format("payload shape does not match the grids".into()));
        }
        MeasurementRecord::new(geometry, detector, scan, h.density.clone(), self.payload.clone())
    }
}

pub fn rdtm_encode(container: &RdtmContainer) -> Result<Vec<u8>> {
    let shape: usize = container.header.payload.shape.iter().product();
    if shape != container.payload.len() {
        return Err(Error::Contract("payload length does not match shape".into()));
    }
    // Going through a Value puts the keys in sorted order.
    let value = serde_json::to_value(&container.header).map_err(|e| Error::Format(e.to_string()))?;
    let header = serde_json::to_vec(&value).map_err(|e| Error::Format(e.to_string()))?;
    let len = u32::try_from(header.len()).map_err(|_| Error::Format("header too large".into()))?;
    let mut out = Vec::with_capacity(8 + header.len() + 16 * container.payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(&header);
    for v in &container.payload {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    Ok(out)
}

pub fn rdtm_decode(bytes: &[u8]) -> Result<RdtmContainer> {
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err(Error::Format("not an RDT1 container".into()));
    }
    let len = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let body = &bytes[8..];
    if body.len() < len {
        return Err(Error::Format("truncated header".into()));
    }
    let header: RdtmHeader = serde_json::from_slice(&body[..len]).map_err(|e| Error::Format(format!("bad header: {e}")))?;
    if header.payload.dtype != DTYPE {
        return Err(Error::Format(format!("unsupported dtype {:?}", header.payload.dtype)));
    }
    let data = &body[len..];
    let count: usize = header.payload.shape.iter().product();
    if data.len() != 16 * count {
        return Err(Error::Format(format!(
            "payload holds {} bytes, shape needs {}",
            data.len(),
            16 * count
        )));
    }
    let payload = data
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    Ok(RdtmContainer { header, payload })
}

/// Writes the container and returns the byte count.
pub fn rdtm_write(container: &RdtmContainer, path: &Path) -> Result<usize> {
    let bytes = rdtm_encode(container)?;
    fs::write(path, &bytes).map_err(|e| Error::io(path, e))?;
    Ok(bytes.len())
}

pub fn rdtm_read(path: &Path) -> Result<RdtmContainer> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    rdtm_decode(&bytes)
}

pub fn rdtm_write_record(record: &MeasurementRecord, path: &Path) -> Result<usize> {
    rdtm_write(&RdtmContainer::from_record(record), path)
}

pub fn rdtm_read_record(path: &Path) -> Result<MeasurementRecord> {
    rdtm_read(path)?.to_record()
}

#[derive(Serialize)]
struct ImageSidecar<'a> {
    d: usize,
    n: usize,
    half_width: f64,
    mode: crate::geometry::CoverageMode,
    dtype: &'a str,
    shape: Vec<usize>,
}

/// Raw little-endian complex block at `path` and a JSON sidecar at
/// `path.json`. Returns the byte count of the block.
pub fn write_image(image: &ReconImage, path: &Path) -> Result<usize> {
    let mut bytes = Vec::with_capacity(16 * image.values.len());
    for v in &image.values {
        bytes.extend_from_slice(&v.re.to_le_bytes());
        bytes.extend_from_slice(&v.im.to_le_bytes());
    }
    fs::write(path, &bytes).map_err(|e| Error::io(path, e))?;
    let sidecar = ImageSidecar {
        d: image.dim,
        n: image.grid.n,
        half_width: image.grid.half_width,
        mode: image.mode,
        dtype: DTYPE,
        shape: vec![image.grid.n; image.dim],
    };
    let value = serde_json::to_value(&sidecar).map_err(|e| Error::Format(e.to_string()))?;
    let mut json_path = path.as_os_str().to_owned();
    json_path.push(".json");
    let json_path = std::path::PathBuf::from(json_path);
    fs::write(&json_path, serde_json::to_vec(&value).unwrap()).map_err(|e| Error::io(&json_path, e))?;
    Ok(bytes.len())
}
