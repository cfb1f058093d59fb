//! `rdt`: simulate, verify, map coverage, reconstruct and check beams.

mod config;

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};
use rastertomo::beam::gaussian_condition_check;
use rastertomo::forward::simulate_scan;
use rastertomo::geometry::coverage_mask;
use rastertomo::io::{emit_coverage_figure, emit_csv, emit_csv_real, rdtm_read_record, rdtm_write_record, write_image, FigureFormat};
use rastertomo::recon::{reconstruct, ImageGrid, ReconOptions};
use rastertomo::spectral::{verify_fdt, VerifyOptions};
use rastertomo::{CoverageMode, Error, RegionTag, ScanGeometry};
use serde_json::json;

use config::RunConfig;

/// Error with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub fn config(message: impl Display) -> Self {
        Self {
            code: 2,
            message: message.to_string(),
        }
    }

    pub fn io(message: impl Display) -> Self {
        Self {
            code: 3,
            message: message.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io { .. } | Error::Format(_) => 3,
            Error::Nyquist { .. } => 4,
            Error::EmptySigma1 => 5,
            _ => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Parser)]
#[command(name = "rdt", version, about = "Raster-scan diffraction tomography with focused beams")]
struct Cli {
    /// Worker threads for the parallel stages.
    #[arg(long, global = true, env = "RDT_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Naive,
    Advanced,
}

impl From<Mode> for CoverageMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Naive => CoverageMode::Naive,
            Mode::Advanced => CoverageMode::Advanced,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CoverageFormat {
    Svg,
    Pgm,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesise a measurement record and write it as RDT1.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render the Fourier coverage of a 2D geometry.
    Coverage {
        #[arg(long)]
        k0: f64,
        #[arg(long, allow_hyphen_values = true)]
        omega_deg: f64,
        #[arg(long, allow_hyphen_values = true)]
        nu_deg: f64,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, default_value_t = 512)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "svg")]
        format: CoverageFormat,
    },
    /// Backpropagate a measurement record.
    Reconstruct {
        #[arg(long)]
        meas: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Frequency grid cells per axis.
        #[arg(long, default_value_t = 256)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
        /// Image pixels per axis.
        #[arg(long, default_value_t = 128)]
        pixels: usize,
        #[arg(long, default_value_t = 0.95)]
        gamma: f64,
    },
    /// Simulate and compare the spectrum with the analytic relation.
    VerifyFdt {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Check the uniqueness condition of a 3D Gaussian beam.
    BeamCheck {
        #[arg(long = "A")]
        a: f64,
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
        omega: [f64; 3],
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
        nu: [f64; 3],
        #[arg(long)]
        k0: f64,
        #[arg(long, default_value_t = 4000)]
        samples: usize,
    },
}

fn parse_vec3(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    let v: [f64; 3] = parts.try_into().map_err(|_| "expected three comma-separated components".to_string())?;
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if !(n > 0.0 && n.is_finite()) {
        return Err("vector must be nonzero".into());
    }
    Ok(v.map(|c| c / n))
}

fn emit(value: serde_json::Value) {
    println!("{value}");
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(Failure::io)?;
    std::fs::write(path, text + "\n").map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

fn simulate(config: &Path, out: &Path) -> Result<(), Failure> {
    let cfg = RunConfig::load(config)?;
    let setup = cfg.setup()?;
    let start = Instant::now();
    info!(
        "simulating {} scan positions x {} detector points",
        setup.scan.len(),
        setup.detector.len()
    );
    let record = simulate_scan(
        &setup.phantom,
        &setup.density,
        &setup.geometry,
        &setup.detector,
        &setup.scan,
        &setup.options,
    )?;
    let bytes = rdtm_write_record(&record, out)?;
    info!("wrote {}", out.display());
    emit(json!({
        "command": "simulate",
        "out": out.display().to_string(),
        "d": setup.geometry.dim(),
        "detector_count": setup.detector.count,
        "detector_spacing": setup.detector.spacing,
        "scan_count": setup.scan.count,
        "scan_spacing": setup.scan.spacing,
        "samples": record.samples.len(),
        "bytes": bytes,
        "seconds": start.elapsed().as_secs_f64(),
    }));
    Ok(())
}

fn region_name(tag: RegionTag) -> &'static str {
    match tag {
        RegionTag::Y1 => "y1",
        RegionTag::YTilde => "ytilde",
        RegionTag::Y2 => "y2",
        RegionTag::Y2Gray => "y2gray",
        RegionTag::Outside => "outside",
    }
}

fn coverage(
    k0: f64,
    omega_deg: f64,
    nu_deg: f64,
    mode: CoverageMode,
    grid: usize,
    out: &Path,
    format: CoverageFormat,
) -> Result<(), Failure> {
    if !(k0 > 0.0 && k0.is_finite()) {
        return Err(Failure::config("--k0 must be positive"));
    }
    if grid < 2 {
        return Err(Failure::config("--grid must be at least 2"));
    }
    // L and r do not enter the coverage sets.
    let geometry = ScanGeometry::from_angles_2d(k0, omega_deg.to_radians(), nu_deg.to_radians(), 2.0, 1.0)?;
    let mask = coverage_mask(&geometry, mode, grid)?;
    match format {
        CoverageFormat::Svg => emit_coverage_figure(&mask, &geometry, out, FigureFormat::Svg)?,
        CoverageFormat::Pgm => emit_coverage_figure(&mask, &geometry, out, FigureFormat::Pgm)?,
        CoverageFormat::Csv => {
            let n = mask.n;
            let codes: Vec<f64> = (0..n * n)
                .map(|p| mask.tag_2d(p % n, n - 1 - p / n).code() as f64)
                .collect();
            emit_csv_real(&codes, n, n, out)?;
        }
    }
    let mut fractions = serde_json::Map::new();
    for tag in [RegionTag::Y1, RegionTag::YTilde, RegionTag::Y2, RegionTag::Y2Gray, RegionTag::Outside] {
        fractions.insert(region_name(tag).into(), json!(mask.fraction(tag)));
    }
    emit(json!({
        "command": "coverage",
        "mode": mode,
        "grid": grid,
        "fractions": fractions,
        "covered_fraction": mask.covered_count() as f64 / mask.tags.len() as f64,
        "out": out.display().to_string(),
    }));
    Ok(())
}

fn reconstruct_cmd(meas: &Path, mode: CoverageMode, grid: usize, out: &Path, pixels: usize, gamma: f64) -> Result<(), Failure> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Failure::config("--gamma must lie in (0, 1)"));
    }
    if pixels == 0 {
        return Err(Failure::config("--pixels must be positive"));
    }
    let record = rdtm_read_record(meas)?;
    let mut options = ReconOptions::for_radius(record.geometry.radius());
    options.grid = grid;
    options.gamma = gamma;
    options.output = ImageGrid {
        n: pixels,
        half_width: record.geometry.radius(),
    };
    let start = Instant::now();
    let (image, metrics) = reconstruct(&record, mode, &options)?;
    if metrics.conflict_count > 0 {
        warn!("{} elimination conflicts kept their first value", metrics.conflict_count);
    }
    write_image(&image, out)?;
    let mut csv = None;
    if image.dim == 2 {
        let path = out.with_extension("csv");
        emit_csv(&image.values, pixels, pixels, &path)?;
        csv = Some(path.display().to_string());
    }
    let report = json!({
        "command": "reconstruct",
        "mode": mode,
        "covered_fraction": metrics.covered_fraction,
        "conflict_count": metrics.conflict_count,
        "sweeps": metrics.sweeps,
        "direct_entries": metrics.direct_entries,
        "eliminated_entries": metrics.eliminated_entries,
        "skipped_small_density": metrics.skipped_small_density,
        "clipped_bins": metrics.clipped_bins,
        "image": out.display().to_string(),
        "csv": csv,
        "seconds": start.elapsed().as_secs_f64(),
    });
    write_json(&out.with_extension("metrics.json"), &report)?;
    emit(report);
    Ok(())
}

fn verify(config: &Path, report_path: &Path) -> Result<(), Failure> {
    let cfg = RunConfig::load(config)?;
    let setup = cfg.setup()?;
    info!("simulating record for the comparison");
    let record = simulate_scan(
        &setup.phantom,
        &setup.density,
        &setup.geometry,
        &setup.detector,
        &setup.scan,
        &setup.options,
    )?;
    let options = VerifyOptions {
        gamma: cfg.accuracy.gamma,
        taper: cfg.accuracy.taper,
        ..VerifyOptions::default()
    };
    let report = verify_fdt(&record, &setup.phantom, &setup.density, &setup.geometry, &options)?;
    let value = serde_json::to_value(&report).map_err(Failure::io)?;
    write_json(report_path, &value)?;
    let pass = report.interior_max_rel <= cfg.threshold;
    emit(json!({
        "command": "verify-fdt",
        "interior_max_rel": report.interior_max_rel,
        "rim_max_rel": report.rim_max_rel,
        "clipped_bins": report.clipped_bins,
        "threshold": cfg.threshold,
        "pass": pass,
    }));
    if pass {
        Ok(())
    } else {
        Err(Failure {
            code: 6,
            message: format!(
                "interior error {:.3e} exceeds threshold {:.3e}",
                report.interior_max_rel, cfg.threshold
            ),
        })
    }
}

fn beam_check(a: f64, omega: [f64; 3], nu: [f64; 3], k0: f64, samples: usize) -> Result<(), Failure> {
    if !(a > 0.0 && a.is_finite()) || !(k0 > 0.0 && k0.is_finite()) {
        return Err(Failure::config("--A and --k0 must be positive"));
    }
    let report = gaussian_condition_check(a, &omega, &nu, k0, samples)?;
    let mut value = serde_json::to_value(&report).map_err(Failure::io)?;
    value["command"] = json!("beam-check");
    emit(value);
    if report.satisfied {
        Ok(())
    } else {
        Err(Failure {
            code: 7,
            message: format!(
                "uniqueness condition fails (<nu, omega> = {:.3e}, zero fraction {:.3})",
                report.nu_dot_omega, report.zero_fraction
            ),
        })
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::config("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(Failure::config)?;
    }
    match cli.command {
        Command::Simulate { config, out } => simulate(&config, &out),
        Command::Coverage {
            k0,
            omega_deg,
            nu_deg,
            mode,
            grid,
            out,
            format,
        } => coverage(k0, omega_deg, nu_deg, mode.into(), grid, &out, format),
        Command::Reconstruct {
            meas,
            mode,
            grid,
            out,
            pixels,
            gamma,
        } => reconstruct_cmd(&meas, mode.into(), grid, &out, pixels, gamma),
        Command::VerifyFdt { config, report } => verify(&config, &report),
        Command::BeamCheck {
            a,
            omega,
            nu,
            k0,
            samples,
        } => beam_check(a, omega, nu, k0, samples),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            log::error!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}
