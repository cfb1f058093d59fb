//! Persistence and figure output.

mod csv;
mod figure;
mod rdtm;

pub use self::csv::{emit_csv, emit_csv_real, format_complex, parse_complex, read_csv};
pub use figure::{coverage_pgm, coverage_svg, emit_coverage_figure, FigureFormat};
pub use rdtm::{
    rdtm_decode, rdtm_encode, rdtm_read, rdtm_read_record, rdtm_write, rdtm_write_record, write_image, DetectorHeader,
    PayloadHeader, RdtmContainer, RdtmHeader, ScanHeader, MAGIC, VERSION,
};
