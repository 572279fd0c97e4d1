//! File formats and unit conversion at the IO boundary.
//!
//! Every external file speaks the interface units: lengths in `lambda_c`,
//! times in `T_c`, angles in radians, momenta and couplings dimensionless.
//! Internal structures are natural units; the conversion lives here and only
//! here.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::experiment::{
    grid_for_apparatus, EnsembleSpec, Outcome, RunConfig, RunResult,
};
use crate::geometry::{ApparatusKind, ApparatusSpec};
use crate::grid::{Field2, Grid2D};
use crate::particle::ParticleState;
use crate::stats::EnsembleAnalysis;
use crate::units::{from_lambda_c, from_tc, to_lambda_c, to_tc, LAMBDA_C, T_C};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

const RESULTS_HEADER: &str = "run_id,b,p0,y,outcome,theta,u_steady";

// ---------------------------------------------------------------------------
// Config files (TOML, interface units)
// ---------------------------------------------------------------------------

fn default_slit_width() -> f64 {
    4.07
}
fn default_separation() -> f64 {
    3.66
}
fn default_wall_thickness() -> f64 {
    0.65
}
fn default_wall_v2() -> f64 {
    5.0
}
fn default_background_v2() -> f64 {
    1.0
}
fn default_smoothing() -> f64 {
    0.5
}
fn default_launch_distance() -> f64 {
    13.8
}
fn default_detect_radius() -> f64 {
    10.0
}
fn default_resolution() -> u32 {
    16
}

/// `[apparatus]` section; lengths in `lambda_c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApparatusSection {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub openings: Option<Vec<(f64, f64)>>,
    #[serde(default = "default_slit_width")]
    pub slit_width: f64,
    #[serde(default = "default_separation")]
    pub slit_separation: f64,
    #[serde(default = "default_wall_thickness")]
    pub wall_thickness: f64,
    #[serde(default = "default_wall_v2")]
    pub wall_v2: f64,
    #[serde(default = "default_background_v2")]
    pub background_v2: f64,
    #[serde(default)]
    pub barrier_x: f64,
    #[serde(default = "default_smoothing")]
    pub smoothing_width: f64,
    #[serde(default = "default_launch_distance")]
    pub launch_distance: f64,
    #[serde(default = "default_detect_radius")]
    pub detect_radius: f64,
}

impl ApparatusSection {
    pub fn to_spec(&self) -> Result<ApparatusSpec> {
        let kind = match self.kind.as_str() {
            "single_slit" => ApparatusKind::SingleSlit,
            "double_slit" => ApparatusKind::DoubleSlit,
            "free_space" => ApparatusKind::FreeSpace,
            "custom_walls" => ApparatusKind::CustomWalls {
                openings: self
                    .openings
                    .clone()
                    .unwrap_or_default()
                    .iter()
                    .map(|&(a, b)| (from_lambda_c(a), from_lambda_c(b)))
                    .collect(),
            },
            other => {
                return Err(Error::config(format!(
                    "unknown apparatus kind {other:?}; expected single_slit, double_slit, free_space or custom_walls"
                )))
            }
        };
        let spec = ApparatusSpec {
            kind,
            slit_width: from_lambda_c(self.slit_width),
            slit_separation: from_lambda_c(self.slit_separation),
            wall_thickness: from_lambda_c(self.wall_thickness),
            wall_v2: self.wall_v2,
            background_v2: self.background_v2,
            barrier_x: from_lambda_c(self.barrier_x),
            smoothing_width: from_lambda_c(self.smoothing_width),
            launch_distance: from_lambda_c(self.launch_distance),
            detect_radius: from_lambda_c(self.detect_radius),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_spec(spec: &ApparatusSpec) -> Self {
        let (kind, openings) = match &spec.kind {
            ApparatusKind::SingleSlit => ("single_slit".to_string(), None),
            ApparatusKind::DoubleSlit => ("double_slit".to_string(), None),
            ApparatusKind::FreeSpace => ("free_space".to_string(), None),
            ApparatusKind::CustomWalls { openings } => (
                "custom_walls".to_string(),
                Some(
                    openings
                        .iter()
                        .map(|&(a, b)| (to_lambda_c(a), to_lambda_c(b)))
                        .collect(),
                ),
            ),
        };
        ApparatusSection {
            kind,
            openings,
            slit_width: to_lambda_c(spec.slit_width),
            slit_separation: to_lambda_c(spec.slit_separation),
            wall_thickness: to_lambda_c(spec.wall_thickness),
            wall_v2: spec.wall_v2,
            background_v2: spec.background_v2,
            barrier_x: to_lambda_c(spec.barrier_x),
            smoothing_width: to_lambda_c(spec.smoothing_width),
            launch_distance: to_lambda_c(spec.launch_distance),
            detect_radius: to_lambda_c(spec.detect_radius),
        }
    }
}

/// `[grid]` section; ranges in `lambda_c`, `dt` in `T_c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSection {
    #[serde(default = "default_resolution")]
    pub resolution: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_range: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_range: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { resolution: default_resolution(), x_range: None, y_range: None, dt: None }
    }
}

/// `[run]` section: base physics parameters. `y` in `lambda_c`, `max_time`
/// in `T_c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSection {
    pub b: f64,
    pub p0: f64,
    #[serde(default)]
    pub y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory_stride: Option<usize>,
    /// Field snapshot interval in steps (omit to disable; `run` only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_stride: Option<u64>,
}

/// `[ensemble]` section; `y` values/ranges in `lambda_c`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_half_range: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p0_values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigFile {
    pub run: RunSection,
    pub apparatus: ApparatusSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleSection>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<ConfigFile> {
        let text = std::fs::read_to_string(path)?;
        Ok(toml::from_str(&text)?)
    }

    fn build_grid(&self, spec: &ApparatusSpec) -> Result<Grid2D> {
        let mut grid = match (self.grid.x_range, self.grid.y_range) {
            (Some(xr), Some(yr)) => Grid2D::covering(
                self.grid.resolution,
                (from_lambda_c(xr.0), from_lambda_c(xr.1)),
                (from_lambda_c(yr.0), from_lambda_c(yr.1)),
            )?,
            _ => grid_for_apparatus(spec, self.grid.resolution)?,
        };
        if let Some(dt_tc) = self.grid.dt {
            grid = Grid2D::new(grid.nx, grid.ny, grid.dx, from_tc(dt_tc), grid.origin)?;
        }
        Ok(grid)
    }

    pub fn run_config(&self) -> Result<RunConfig> {
        let spec = self.apparatus.to_spec()?;
        let grid = self.build_grid(&spec)?;
        let mut cfg = RunConfig::new(
            self.run.b,
            self.run.p0,
            from_lambda_c(self.run.y),
            spec,
            self.grid.resolution,
        )?;
        cfg.grid = grid;
        if let Some(mt) = self.run.max_time {
            cfg.max_time = from_tc(mt);
        }
        if let Some(stride) = self.run.trajectory_stride {
            cfg.trajectory_stride = stride.max(1);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn ensemble_spec(&self) -> Result<EnsembleSpec> {
        let base = self.run_config()?;
        let section = self.ensemble.clone().unwrap_or_default();
        let y_values: Vec<f64> = match (&section.y_values, section.y_count) {
            (Some(vals), _) => vals.iter().map(|&y| from_lambda_c(y)).collect(),
            (None, Some(count)) => {
                let half = section
                    .y_half_range
                    .map(from_lambda_c)
                    .unwrap_or_else(|| default_y_half_range(&base.apparatus));
                crate::experiment::evenly_spaced_y(half, count)
            }
            (None, None) => {
                return Err(Error::config(
                    "[ensemble] needs either y_values or y_count",
                ))
            }
        };
        let spec = EnsembleSpec {
            base,
            y_values,
            b_values: section.b_values.clone(),
            p0_values: section.p0_values.clone(),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Default launch half-range: the slit span for slit apparatuses.
pub fn default_y_half_range(spec: &ApparatusSpec) -> f64 {
    match spec.kind {
        ApparatusKind::DoubleSlit => (spec.slit_width + spec.slit_separation) / 2.0,
        ApparatusKind::SingleSlit => spec.slit_width / 2.0,
        _ => 0.5 * LAMBDA_C,
    }
}

// ---------------------------------------------------------------------------
// Hashing and manifests
// ---------------------------------------------------------------------------

fn sha_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Hash of the canonical JSON serialization of a resolved run config.
pub fn config_hash_run(cfg: &RunConfig) -> String {
    sha_hex(serde_json::to_string(cfg).expect("config serializes").as_bytes())
}

#[derive(Serialize)]
struct CanonicalSweep<'a> {
    base: &'a RunConfig,
    y_values: &'a [f64],
    b_values: &'a Option<Vec<f64>>,
    p0_values: &'a Option<Vec<f64>>,
}

/// Hash of the canonical JSON serialization of a resolved ensemble spec.
pub fn config_hash_sweep(spec: &EnsembleSpec) -> String {
    let canon = CanonicalSweep {
        base: &spec.base,
        y_values: &spec.y_values,
        b_values: &spec.b_values,
        p0_values: &spec.p0_values,
    };
    sha_hex(serde_json::to_string(&canon).expect("spec serializes").as_bytes())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridInfo {
    pub nx: usize,
    pub ny: usize,
    pub dx_lambda_c: f64,
    pub dt_tc: f64,
}

impl GridInfo {
    pub fn of(grid: &Grid2D) -> Self {
        GridInfo {
            nx: grid.nx,
            ny: grid.ny,
            dx_lambda_c: to_lambda_c(grid.dx),
            dt_tc: to_tc(grid.dt),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub total: usize,
    pub exited_downstream: usize,
    pub reflected: usize,
    pub timed_out: usize,
    pub failed: usize,
}

impl OutcomeCounts {
    pub fn tally(results: &[RunResult]) -> Self {
        let mut c = OutcomeCounts { total: results.len(), ..Default::default() };
        for r in results {
            match r.outcome {
                Outcome::ExitedDownstream => c.exited_downstream += 1,
                Outcome::Reflected => c.reflected += 1,
                Outcome::TimedOut => c.timed_out += 1,
                Outcome::Failed => c.failed += 1,
            }
        }
        c
    }
}

/// Reproducibility metadata written next to every output set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub artifact_version: String,
    pub config_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub desk_scale: bool,
    pub grid: GridInfo,
    pub counts: OutcomeCounts,
    pub timing_seconds: f64,
    pub workers: usize,
    /// The resolved configuration, re-materializable into the same run.
    pub config: ConfigFile,
}

impl Manifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        atomic_write(path, json.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Manifest> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Build the file-unit config that reproduces a resolved ensemble spec.
pub fn config_file_for_sweep(spec: &EnsembleSpec) -> ConfigFile {
    ConfigFile {
        run: RunSection {
            b: spec.base.b,
            p0: spec.base.p0,
            y: to_lambda_c(spec.base.y),
            max_time: Some(to_tc(spec.base.max_time)),
            trajectory_stride: Some(spec.base.trajectory_stride),
            snapshot_stride: None,
        },
        apparatus: ApparatusSection::from_spec(&spec.base.apparatus),
        grid: GridSection {
            resolution: (LAMBDA_C / spec.base.grid.dx).round() as u32,
            x_range: None,
            y_range: None,
            dt: None,
        },
        ensemble: Some(EnsembleSection {
            y_count: None,
            y_half_range: None,
            y_values: Some(spec.y_values.iter().map(|&y| to_lambda_c(y)).collect()),
            b_values: spec.b_values.clone(),
            p0_values: spec.p0_values.clone(),
        }),
    }
}

// ---------------------------------------------------------------------------
// Atomic file writes
// ---------------------------------------------------------------------------

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Write-temp-then-rename in the destination directory.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}-{}",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out"),
        std::process::id(),
        TMP_COUNTER.fetch_add(1, Ordering::Relaxed),
    ));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Results CSV
// ---------------------------------------------------------------------------

/// Header metadata for ensemble CSVs.
pub struct SweepMeta<'a> {
    pub config_hash: &'a str,
    pub apparatus: &'a ApparatusSpec,
    pub grid: &'a Grid2D,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn results_csv_string(results: &[RunResult], meta: Option<&SweepMeta>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# pilotwave {ARTIFACT_VERSION}");
    let _ = writeln!(
        out,
        "# units lengths=lambda_c times=Tc angles=rad momenta=dimensionless"
    );
    if let Some(m) = meta {
        let _ = writeln!(out, "# config_hash={}", m.config_hash);
        let app = ApparatusSection::from_spec(m.apparatus);
        let _ = writeln!(
            out,
            "# apparatus={}",
            serde_json::to_string(&app).expect("apparatus serializes")
        );
        let g = GridInfo::of(m.grid);
        let _ = writeln!(
            out,
            "# grid={}",
            serde_json::to_string(&g).expect("grid serializes")
        );
    }
    let _ = writeln!(out, "{RESULTS_HEADER}");
    for r in results {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.run_id,
            r.b,
            r.p0,
            to_lambda_c(r.y),
            r.outcome.as_str(),
            opt(r.theta),
            opt(r.u_steady),
        );
    }
    out
}

pub fn write_results_csv_atomic(
    path: &Path,
    results: &[RunResult],
    meta: Option<&SweepMeta>,
) -> Result<()> {
    atomic_write(path, results_csv_string(results, meta).as_bytes())
}

/// Metadata recovered from a results CSV header.
#[derive(Debug, Default, Clone)]
pub struct ParsedSweepMeta {
    pub config_hash: Option<String>,
    pub apparatus: Option<ApparatusSpec>,
    pub grid: Option<GridInfo>,
}

fn parse_f64(what: &'static str, line: usize, s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::Csv {
        what,
        line,
        msg: format!("bad float {s:?}"),
    })
}

fn parse_opt_f64(what: &'static str, line: usize, s: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_f64(what, line, s).map(Some)
    }
}

pub fn read_sweep_csv(path: &Path) -> Result<(Vec<RunResult>, ParsedSweepMeta)> {
    const WHAT: &'static str = "results CSV";
    let text = std::fs::read_to_string(path)?;
    let mut meta = ParsedSweepMeta::default();
    let mut results = Vec::new();
    let mut saw_header = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim_start();
            if let Some(h) = rest.strip_prefix("config_hash=") {
                meta.config_hash = Some(h.to_string());
            } else if let Some(j) = rest.strip_prefix("apparatus=") {
                let section: ApparatusSection = serde_json::from_str(j)?;
                meta.apparatus = Some(section.to_spec()?);
            } else if let Some(j) = rest.strip_prefix("grid=") {
                meta.grid = Some(serde_json::from_str(j)?);
            }
            continue;
        }
        if !saw_header {
            if line != RESULTS_HEADER {
                return Err(Error::Csv {
                    what: WHAT,
                    line: line_no,
                    msg: format!("expected columns {RESULTS_HEADER:?}, found {line:?}"),
                });
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::Csv {
                what: WHAT,
                line: line_no,
                msg: format!("expected 7 columns, found {}", fields.len()),
            });
        }
        let outcome = Outcome::parse(fields[4]).ok_or_else(|| Error::Csv {
            what: WHAT,
            line: line_no,
            msg: format!("unknown outcome {:?}", fields[4]),
        })?;
        results.push(RunResult {
            run_id: fields[0].parse().map_err(|_| Error::Csv {
                what: WHAT,
                line: line_no,
                msg: format!("bad run_id {:?}", fields[0]),
            })?,
            b: parse_f64(WHAT, line_no, fields[1])?,
            p0: parse_f64(WHAT, line_no, fields[2])?,
            y: from_lambda_c(parse_f64(WHAT, line_no, fields[3])?),
            outcome,
            theta: parse_opt_f64(WHAT, line_no, fields[5])?,
            u_steady: parse_opt_f64(WHAT, line_no, fields[6])?,
            note: None,
            trajectory: None,
        });
    }
    if !saw_header {
        return Err(Error::Csv {
            what: WHAT,
            line: 0,
            msg: "missing header row".into(),
        });
    }
    Ok((results, meta))
}

pub fn read_results_csv(path: &Path) -> Result<Vec<RunResult>> {
    read_sweep_csv(path).map(|(r, _)| r)
}

// ---------------------------------------------------------------------------
// Trajectory and raster output
// ---------------------------------------------------------------------------

pub fn trajectory_csv_string(samples: &[ParticleState], config_hash: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# pilotwave {ARTIFACT_VERSION}");
    let _ = writeln!(
        out,
        "# units lengths=lambda_c times=Tc angles=rad momenta=dimensionless"
    );
    let _ = writeln!(out, "# config_hash={config_hash}");
    let _ = writeln!(out, "t,x,y,px,py,gamma");
    for s in samples {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            s.time / T_C,
            to_lambda_c(s.q.x),
            to_lambda_c(s.q.y),
            s.p.x,
            s.p.y,
            s.gamma(),
        );
    }
    out
}

pub fn write_trajectory_csv(
    path: &Path,
    samples: &[ParticleState],
    config_hash: &str,
) -> Result<()> {
    atomic_write(path, trajectory_csv_string(samples, config_hash).as_bytes())
}

/// Field/apparatus raster: `time,nx,ny,dx` header row, its values, then the
/// grid rows south to north.
pub fn write_raster_csv(path: &Path, field: &Field2, grid: &Grid2D, time: f64) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "time,nx,ny,dx");
    let _ = writeln!(
        out,
        "{},{},{},{}",
        to_tc(time),
        field.nx,
        field.ny,
        to_lambda_c(grid.dx)
    );
    for iy in 0..field.ny {
        let row: Vec<String> = (0..field.nx)
            .map(|ix| field.get(ix, iy).to_string())
            .collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    atomic_write(path, out.as_bytes())
}

// ---------------------------------------------------------------------------
// Analysis output bundle
// ---------------------------------------------------------------------------

pub fn write_histogram_csv(path: &Path, analysis: &EnsembleAnalysis) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "# pilotwave {ARTIFACT_VERSION}");
    let _ = writeln!(out, "# units angles=rad weights=dimensionless");
    let _ = writeln!(out, "theta_lo,theta_hi,weight,expected_fraunhofer,expected_gaussian");
    let f = &analysis.fit_fraunhofer.bins;
    let g = &analysis.fit_gaussian.bins;
    for i in 0..analysis.histogram.n_bins {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            analysis.histogram.bin_edges[i],
            analysis.histogram.bin_edges[i + 1],
            analysis.histogram.weights[i],
            f[i].expected,
            g[i].expected,
        );
    }
    atomic_write(path, out.as_bytes())
}

pub fn write_map_csv(path: &Path, analysis: &EnsembleAnalysis) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "# pilotwave {ARTIFACT_VERSION}");
    let _ = writeln!(
        out,
        "# units y=lambda_c theta=rad dtheta_dy=rad_per_lambda_c lyapunov=dimensionless"
    );
    let _ = writeln!(out, "y,theta,dtheta_dy,lyapunov");
    let map = &analysis.map;
    let lyap: std::collections::BTreeMap<u64, f64> = analysis
        .lyapunov
        .iter()
        .map(|&(y, l)| (y.to_bits(), l))
        .collect();
    for i in 0..map.len() {
        let d = map.dtheta_dy[i].map(|v| v * LAMBDA_C);
        let l = lyap.get(&map.y[i].to_bits()).copied();
        let _ = writeln!(
            out,
            "{},{},{},{}",
            to_lambda_c(map.y[i]),
            map.theta[i],
            opt(d),
            opt(l),
        );
    }
    atomic_write(path, out.as_bytes())
}

pub fn write_peaks_csv(path: &Path, analysis: &EnsembleAnalysis) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "# pilotwave {ARTIFACT_VERSION}");
    let _ = writeln!(out, "# units y_peak=lambda_c theta=rad");
    let _ = writeln!(out, "y_peak,theta");
    for &p in &analysis.peaks {
        // Linear interpolation of the map at the refined peak position.
        let map = &analysis.map;
        let theta = match map.y.binary_search_by(|y| y.partial_cmp(&p).unwrap()) {
            Ok(i) => map.theta[i],
            Err(i) if i > 0 && i < map.len() => {
                let f = (p - map.y[i - 1]) / (map.y[i] - map.y[i - 1]);
                map.theta[i - 1] * (1.0 - f) + map.theta[i] * f
            }
            _ => continue,
        };
        let _ = writeln!(out, "{},{}", to_lambda_c(p), theta);
    }
    atomic_write(path, out.as_bytes())
}

#[derive(Serialize)]
struct FitSummary<'a> {
    chi2_pearson: f64,
    chi2_yates: f64,
    dof: usize,
    chi2_pearson_reduced: f64,
    chi2_yates_reduced: f64,
    params: &'a crate::stats::ModelParams,
}

#[derive(Serialize)]
struct FitReportJson<'a> {
    artifact_version: &'a str,
    config_hash: &'a str,
    b: f64,
    n_good: usize,
    n_bins: usize,
    total_weight: f64,
    u_steady_mean: f64,
    p_steady: f64,
    lambda_eff_lambda_c: f64,
    sigma_smooth_rad: f64,
    fold_spacing_lambda_c: Option<f64>,
    central_node_width_rad: Option<f64>,
    central_node_width_predicted_rad: Option<f64>,
    fraunhofer: FitSummary<'a>,
    gaussian: FitSummary<'a>,
    smoothness: &'a crate::stats::SmoothnessReport,
}

fn to_summary(fit: &crate::stats::FitReport) -> FitSummary<'_> {
    FitSummary {
        chi2_pearson: fit.chi2_pearson,
        chi2_yates: fit.chi2_yates,
        dof: fit.dof,
        chi2_pearson_reduced: fit.reduced_pearson(),
        chi2_yates_reduced: fit.reduced_yates(),
        params: &fit.params,
    }
}

pub fn write_fit_json(
    path: &Path,
    analysis: &EnsembleAnalysis,
    b: f64,
    config_hash: &str,
) -> Result<()> {
    let json = FitReportJson {
        artifact_version: ARTIFACT_VERSION,
        config_hash,
        b,
        n_good: analysis.n_good,
        n_bins: analysis.histogram.n_bins,
        total_weight: analysis.histogram.total_weight,
        u_steady_mean: analysis.u_steady_mean,
        p_steady: analysis.p_steady,
        lambda_eff_lambda_c: to_lambda_c(analysis.lambda_eff),
        sigma_smooth_rad: analysis.sigma_smooth,
        fold_spacing_lambda_c: analysis.fold_spacing.map(to_lambda_c),
        central_node_width_rad: analysis.central_width,
        central_node_width_predicted_rad: analysis.central_width_predicted,
        fraunhofer: to_summary(&analysis.fit_fraunhofer),
        gaussian: to_summary(&analysis.fit_gaussian),
        smoothness: &analysis.smoothness,
    };
    atomic_write(path, serde_json::to_string_pretty(&json)?.as_bytes())
}
