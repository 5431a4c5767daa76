//! Pipeline driver: environment construction, wavenumber sweep, synthesis,
//! transmission loss, artifact files and the run summary.

use super::config::{ConfigError, KGridSpec, RunConfig};
use crate::environment::{insert_source_interface, Environment, SourceGeometry};
use crate::kspace::{
    alias_range_limit, greens_sweep, make_grid, pressure_and_tl, synthesize_line, synthesize_point,
    GreensGrid, KspaceError, TlGrid, WavenumberGrid, TL_CLAMP_DB,
};
use crate::reference::{ideal_field, spectrum_peaks, ReferenceError, Seabed};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Kspace(#[from] KspaceError),
    #[error("numerical failure: {0}")]
    Reference(#[from] ReferenceError),
    #[error("environment failure: {0}")]
    Env(#[from] crate::environment::EnvError),
    #[error("cannot write `{path}`: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl RunError {
    /// Process exit code: 2 for configuration problems, 3 for numerical
    /// failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Env(_) => 2,
            _ => 3,
        }
    }
}

/// Emit an analytic ideal-waveguide reference grid alongside the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleKind {
    IdealFree,
    IdealRigid,
}

/// Peak-listing threshold for run summaries.
pub const SUMMARY_PEAK_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Default)]
pub struct StageTimings {
    pub sweep_s: f64,
    pub synthesis_s: f64,
    pub output_s: f64,
}

#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    /// Refined peak wavenumbers per spectrum probe depth.
    pub peaks: Vec<(f64, Vec<f64>)>,
    pub tl_min: Option<f64>,
    pub tl_max: Option<f64>,
    pub oracle_error_db: Option<f64>,
    pub warnings: Vec<String>,
    pub files: Vec<PathBuf>,
    pub timings: StageTimings,
}

/// Pick the automatic integration interval [0, 2 k0]: k0 is the largest
/// real medium wavenumber over the water column (smallest sound speed,
/// sampled densely per layer).
fn auto_k_interval(env: &Environment, frequency: f64) -> (f64, f64) {
    let mut c_min = f64::INFINITY;
    for layer in env.layers() {
        for i in 0..=256 {
            let z = layer.z_top + (layer.z_bot - layer.z_top) * i as f64 / 256.0;
            if let Ok(c) = layer.c.eval(z) {
                c_min = c_min.min(c);
            }
        }
    }
    let k0 = 2.0 * std::f64::consts::PI * frequency / c_min;
    (0.0, 2.0 * k0)
}

pub fn wavenumber_grid(cfg: &RunConfig, env: &Environment) -> Result<WavenumberGrid, RunError> {
    let grid = match cfg.k_grid {
        KGridSpec::Auto { count } => {
            let (k_min, k_max) = auto_k_interval(env, cfg.frequency);
            make_grid(k_min, k_max, count)?
        }
        KGridSpec::Manual {
            k_min,
            k_max,
            count,
        } => make_grid(k_min, k_max, count)?,
    };
    Ok(grid)
}

/// Receiver depths for the sweep: the output depth grid plus any probe
/// depths not already on it. Returns the combined list and the index of
/// each probe depth.
fn receiver_depths(cfg: &RunConfig) -> (Vec<f64>, Vec<(f64, usize)>) {
    let mut depths = cfg.depths.depths();
    let mut probes = Vec::new();
    for &z in cfg
        .outputs
        .spectrum_depths
        .iter()
        .chain(&cfg.outputs.tl_lines)
    {
        let idx = depths.iter().position(|&d| (d - z).abs() < 1e-9);
        match idx {
            Some(i) => probes.push((z, i)),
            None => {
                depths.push(z);
                probes.push((z, depths.len() - 1));
            }
        }
    }
    (depths, probes)
}

fn write_file(path: &Path, content: &[u8]) -> Result<(), RunError> {
    let mut f = std::fs::File::create(path).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    f.write_all(content).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn clamp_tl(v: f64) -> f64 {
    if v.is_finite() {
        v.min(TL_CLAMP_DB)
    } else {
        TL_CLAMP_DB
    }
}

fn spectrum_csv(gg: &GreensGrid, depth_index: usize) -> String {
    let mut out = String::from("k,abs_psi,re_psi,im_psi\n");
    let ks = gg.grid.real_samples();
    for (j, k) in ks.iter().enumerate() {
        let v = gg.values[[j, depth_index]];
        writeln!(out, "{k:.9e},{:.9e},{:.9e},{:.9e}", v.norm(), v.re, v.im).unwrap();
    }
    out
}

fn tl_grid_csv(tl: &TlGrid, nz_grid: usize) -> String {
    // Header carries the ranges; each row is one receiver depth.
    let mut out = String::from("depth");
    for r in &tl.ranges {
        write!(out, ",{r:.6}").unwrap();
    }
    out.push('\n');
    for j in 0..nz_grid {
        write!(out, "{:.6}", tl.depths[j]).unwrap();
        for i in 0..tl.ranges.len() {
            write!(out, ",{:.4}", clamp_tl(tl.values[[i, j]])).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Flat binary TL layout: 32-byte header (magic `WINTTL01`, then nr and nz
/// as little-endian u64, then 8 reserved zero bytes) followed by nr x nz
/// f64 little-endian values in row-major order (ranges vary slowest).
fn tl_grid_bin(tl: &TlGrid, nz_grid: usize) -> Vec<u8> {
    let nr = tl.ranges.len();
    let mut out = Vec::with_capacity(32 + 8 * nr * nz_grid);
    out.extend_from_slice(b"WINTTL01");
    out.extend_from_slice(&(nr as u64).to_le_bytes());
    out.extend_from_slice(&(nz_grid as u64).to_le_bytes());
    out.extend_from_slice(&[0u8; 8]);
    for i in 0..nr {
        for j in 0..nz_grid {
            out.extend_from_slice(&clamp_tl(tl.values[[i, j]]).to_le_bytes());
        }
    }
    out
}

fn tl_line_csv(tl: &TlGrid, depth_index: usize) -> String {
    let mut out = String::from("r,tl\n");
    for (i, r) in tl.ranges.iter().enumerate() {
        writeln!(out, "{r:.6},{:.4}", clamp_tl(tl.values[[i, depth_index]])).unwrap();
    }
    out
}

fn depth_token(z: f64) -> String {
    format!("{z:.3}").replace('.', "_")
}

/// Execute a full run: sweep, requested products, files under `out_dir`,
/// and the summary. Stage wall times live only in the returned summary
/// (and stdout), never in output files, so identical configs produce
/// bit-identical artifacts.
pub fn run(
    cfg: &RunConfig,
    out_dir: &Path,
    oracle: Option<OracleKind>,
) -> Result<RunSummary, RunError> {
    let env = cfg.environment()?;
    let env = insert_source_interface(&env)?;
    let grid = wavenumber_grid(cfg, &env)?;
    let (depths, probes) = receiver_depths(cfg);
    let ranges = cfg.ranges.ranges();

    let mut summary = RunSummary::default();
    if cfg.ranges.r_max > alias_range_limit(&grid) {
        summary.warnings.push(format!(
            "r_max {} exceeds the alias-free range 2 pi / dk = {:.1} m; distant field wraps",
            cfg.ranges.r_max,
            alias_range_limit(&grid)
        ));
    }

    std::fs::create_dir_all(out_dir).map_err(|source| RunError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;

    let t0 = Instant::now();
    let (gg, report) = greens_sweep(&env, &grid, &depths)?;
    summary.timings.sweep_s = t0.elapsed().as_secs_f64();
    for (j, k) in &report.singular {
        summary.warnings.push(format!(
            "singular depth solve at sample {j} (k = {k}); column interpolated"
        ));
    }

    let io0 = Instant::now();
    for &z in &cfg.outputs.spectrum_depths {
        let idx = probes
            .iter()
            .find(|&&(pz, _)| (pz - z).abs() < 1e-12)
            .unwrap()
            .1;
        let mags = gg.magnitude_spectrum(idx);
        let ks = gg.grid.real_samples();
        // Modal peaks an order of magnitude under the strongest one still
        // matter; list everything above 10% of the spectrum maximum.
        let peaks = spectrum_peaks(&ks, &mags, SUMMARY_PEAK_THRESHOLD)?;
        summary.peaks.push((z, peaks));
        let path = out_dir.join(format!("spectrum_z{}.csv", depth_token(z)));
        write_file(&path, spectrum_csv(&gg, idx).as_bytes())?;
        summary.files.push(path);
    }
    summary.timings.output_s += io0.elapsed().as_secs_f64();

    let wants_tl = cfg.outputs.tl_grid || cfg.outputs.tl_bin || !cfg.outputs.tl_lines.is_empty();
    if wants_tl {
        let t1 = Instant::now();
        let field = match cfg.geometry {
            SourceGeometry::Point => synthesize_point(&gg, &ranges)?,
            SourceGeometry::Line => synthesize_line(&gg, &ranges)?,
        };
        let tl = pressure_and_tl(&field, &env, cfg.normalization)?;
        summary.timings.synthesis_s = t1.elapsed().as_secs_f64();

        let finite: Vec<f64> = tl
            .values
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .collect();
        summary.tl_min = finite.iter().copied().reduce(f64::min);
        summary.tl_max = finite
            .iter()
            .copied()
            .reduce(f64::max)
            .map(|v| v.min(TL_CLAMP_DB));

        let nz_grid = cfg.depths.depths().len();
        let io1 = Instant::now();
        if cfg.outputs.tl_grid {
            let path = out_dir.join("tl_grid.csv");
            write_file(&path, tl_grid_csv(&tl, nz_grid).as_bytes())?;
            summary.files.push(path);
        }
        if cfg.outputs.tl_bin {
            let path = out_dir.join("tl_grid.bin");
            write_file(&path, &tl_grid_bin(&tl, nz_grid))?;
            summary.files.push(path);
        }
        for &z in &cfg.outputs.tl_lines {
            let idx = probes
                .iter()
                .find(|&&(pz, _)| (pz - z).abs() < 1e-12)
                .unwrap()
                .1;
            let path = out_dir.join(format!("tl_line_z{}.csv", depth_token(z)));
            write_file(&path, tl_line_csv(&tl, idx).as_bytes())?;
            summary.files.push(path);
        }

        if let Some(kind) = oracle {
            let seabed = match kind {
                OracleKind::IdealFree => Seabed::Free,
                OracleKind::IdealRigid => Seabed::Rigid,
            };
            let k = env.source_wavenumber()?.re;
            let reference = ideal_field(
                env.total_depth(),
                k,
                env.source().z_s,
                seabed,
                &ranges,
                &tl.depths,
                50,
            )?;
            let err = crate::reference::tl_error(&tl, &reference)?;
            summary.oracle_error_db = Some(err.mean_abs_db);
            let path = out_dir.join("tl_grid_oracle.csv");
            write_file(&path, tl_grid_csv(&reference, nz_grid).as_bytes())?;
            summary.files.push(path);
        }
        summary.timings.output_s += io1.elapsed().as_secs_f64();
    }

    let path = out_dir.join("summary.txt");
    write_file(&path, summary_text(cfg, &grid, &summary).as_bytes())?;
    summary.files.push(path);
    Ok(summary)
}

/// Deterministic part of the summary (no wall times).
fn summary_text(cfg: &RunConfig, grid: &WavenumberGrid, s: &RunSummary) -> String {
    let mut out = String::new();
    writeln!(out, "frequency_hz {}", cfg.frequency).unwrap();
    writeln!(
        out,
        "k_interval {:.9e} {:.9e} samples {} dk {:.9e} epsilon {:.9e}",
        grid.k_min, grid.k_max, grid.count, grid.dk, grid.epsilon
    )
    .unwrap();
    for (z, peaks) in &s.peaks {
        let list: Vec<String> = peaks.iter().map(|p| format!("{p:.6}")).collect();
        writeln!(out, "spectrum_peaks_z{z} {}", list.join(" ")).unwrap();
    }
    if let (Some(lo), Some(hi)) = (s.tl_min, s.tl_max) {
        writeln!(out, "tl_min_db {lo:.4}").unwrap();
        writeln!(out, "tl_max_db {hi:.4}").unwrap();
    }
    if let Some(err) = s.oracle_error_db {
        writeln!(out, "oracle_tl_error_db {err:.4}").unwrap();
    }
    for w in &s.warnings {
        writeln!(out, "warning {w}").unwrap();
    }
    out
}

/// Human-readable report for stdout, including stage wall times.
pub fn print_summary(s: &RunSummary) -> String {
    let mut out = String::new();
    for (z, peaks) in &s.peaks {
        let list: Vec<String> = peaks.iter().map(|p| format!("{p:.6}")).collect();
        writeln!(
            out,
            "spectrum peaks at z = {z} m: [{}] 1/m",
            list.join(", ")
        )
        .unwrap();
    }
    if let (Some(lo), Some(hi)) = (s.tl_min, s.tl_max) {
        writeln!(out, "TL range: {lo:.2} .. {hi:.2} dB").unwrap();
    }
    if let Some(err) = s.oracle_error_db {
        writeln!(out, "oracle TL error: {err:.4} dB").unwrap();
    }
    writeln!(
        out,
        "stage times: sweep {:.2}s, synthesis {:.2}s, output {:.2}s",
        s.timings.sweep_s, s.timings.synthesis_s, s.timings.output_s
    )
    .unwrap();
    for w in &s.warnings {
        writeln!(out, "warning: {w}").unwrap();
    }
    for f in &s.files {
        writeln!(out, "wrote {}", f.display()).unwrap();
    }
    out
}
