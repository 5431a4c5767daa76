//! Python bindings for the wavint propagation solver.
//!
//! The module mirrors the pipeline surface: configs are the same text
//! format the CLI reads, and results come back as plain lists so callers
//! can wrap them in numpy arrays.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use wavint::cli::{self, OracleKind};
use wavint::environment::insert_source_interface;
use wavint::environment::SourceGeometry;
use wavint::kspace::{greens_sweep, pressure_and_tl, synthesize_line, synthesize_point};
use wavint::reference::{self, Seabed};

fn value_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn seabed_of(name: &str) -> PyResult<Seabed> {
    match name {
        "free" => Ok(Seabed::Free),
        "rigid" => Ok(Seabed::Rigid),
        other => Err(PyValueError::new_err(format!(
            "seabed must be 'free' or 'rigid', got '{other}'"
        ))),
    }
}

/// Canonical deep-water sound-speed profile, c(z) in m/s.
#[pyfunction]
fn munk_profile(z: f64) -> f64 {
    reference::munk_profile(z)
}

/// Pseudolinear profile c(z) = 1/sqrt(a z + b).
#[pyfunction]
fn pseudolinear_profile(z: f64, a: f64, b: f64) -> PyResult<f64> {
    reference::pseudolinear_profile(z, a, b).map_err(value_err)
}

/// Propagating-mode horizontal wavenumbers of the ideal waveguide.
#[pyfunction]
fn ideal_modes(h: f64, k: f64, seabed: &str) -> PyResult<Vec<f64>> {
    Ok(reference::ideal_modes(h, k, seabed_of(seabed)?)
        .map_err(value_err)?
        .wavenumbers)
}

/// Analytic ideal-waveguide TL grid (rows = ranges, columns = depths).
#[pyfunction]
#[pyo3(signature = (h, k, z_s, seabed, ranges, depths, n_modes = 50))]
fn ideal_field_tl(
    h: f64,
    k: f64,
    z_s: f64,
    seabed: &str,
    ranges: Vec<f64>,
    depths: Vec<f64>,
    n_modes: usize,
) -> PyResult<Vec<Vec<f64>>> {
    let tl = reference::ideal_field(h, k, z_s, seabed_of(seabed)?, &ranges, &depths, n_modes)
        .map_err(value_err)?;
    Ok(tl.values.rows().into_iter().map(|r| r.to_vec()).collect())
}

/// Interior local maxima of a magnitude spectrum above
/// `threshold_fraction * max`, parabolic refinement on the log magnitude.
#[pyfunction]
#[pyo3(signature = (wavenumbers, magnitudes, threshold_fraction = 0.5))]
fn spectrum_peaks(
    wavenumbers: Vec<f64>,
    magnitudes: Vec<f64>,
    threshold_fraction: f64,
) -> PyResult<Vec<f64>> {
    reference::spectrum_peaks(&wavenumbers, &magnitudes, threshold_fraction).map_err(value_err)
}

/// Green-function magnitude spectrum |Psi(k)| at one receiver depth for the
/// waveguide described by `config_text`. Returns (wavenumbers, magnitudes).
#[pyfunction]
fn sweep_spectrum(config_text: &str, depth: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let cfg = cli::parse(config_text).map_err(value_err)?;
    let env = cfg.environment().map_err(value_err)?;
    let env = insert_source_interface(&env).map_err(value_err)?;
    let grid = cli::runner::wavenumber_grid(&cfg, &env).map_err(runtime_err)?;
    let (gg, _) = greens_sweep(&env, &grid, &[depth]).map_err(runtime_err)?;
    Ok((gg.grid.real_samples(), gg.magnitude_spectrum(0)))
}

/// (ranges, depths, TL values indexed [range][depth]).
type TlTriplet = (Vec<f64>, Vec<f64>, Vec<Vec<f64>>);

/// Full pipeline to a transmission-loss grid.
/// Returns (ranges, depths, values) with values[i][j] at (range i, depth j).
#[pyfunction]
fn transmission_loss(config_text: &str) -> PyResult<TlTriplet> {
    let cfg = cli::parse(config_text).map_err(value_err)?;
    let env = cfg.environment().map_err(value_err)?;
    let env = insert_source_interface(&env).map_err(value_err)?;
    let grid = cli::runner::wavenumber_grid(&cfg, &env).map_err(runtime_err)?;
    let depths = cfg.depths.depths();
    let ranges = cfg.ranges.ranges();
    let (gg, _) = greens_sweep(&env, &grid, &depths).map_err(runtime_err)?;
    let field = match cfg.geometry {
        SourceGeometry::Point => synthesize_point(&gg, &ranges).map_err(runtime_err)?,
        SourceGeometry::Line => synthesize_line(&gg, &ranges).map_err(runtime_err)?,
    };
    let tl = pressure_and_tl(&field, &env, cfg.normalization).map_err(runtime_err)?;
    let values = tl.values.rows().into_iter().map(|r| r.to_vec()).collect();
    Ok((tl.ranges, tl.depths, values))
}

/// Run the full pipeline and write artifact files, like the CLI.
/// Returns a summary dict.
#[pyfunction]
#[pyo3(signature = (config_text, out_dir, oracle = None))]
fn run(
    py: Python<'_>,
    config_text: &str,
    out_dir: &str,
    oracle: Option<&str>,
) -> PyResult<Py<PyDict>> {
    let cfg = cli::parse(config_text).map_err(value_err)?;
    let oracle = match oracle {
        None => None,
        Some("ideal-free") => Some(OracleKind::IdealFree),
        Some("ideal-rigid") => Some(OracleKind::IdealRigid),
        Some(other) => {
            return Err(PyValueError::new_err(format!(
                "oracle must be 'ideal-free' or 'ideal-rigid', got '{other}'"
            )))
        }
    };
    let summary = cli::run(&cfg, std::path::Path::new(out_dir), oracle).map_err(|e| {
        if e.exit_code() == 2 {
            value_err(e)
        } else {
            runtime_err(e)
        }
    })?;
    let d = PyDict::new(py);
    let peaks: Vec<(f64, Vec<f64>)> = summary.peaks.clone();
    d.set_item("peaks", peaks)?;
    d.set_item("tl_min", summary.tl_min)?;
    d.set_item("tl_max", summary.tl_max)?;
    d.set_item("oracle_error_db", summary.oracle_error_db)?;
    d.set_item("warnings", summary.warnings.clone())?;
    let files: Vec<String> = summary
        .files
        .iter()
        .map(|p| p.display().to_string())
        .collect();
    d.set_item("files", files)?;
    Ok(d.into())
}

/// Round-trip a config through the canonical serializer.
#[pyfunction]
fn canonical_config(config_text: &str) -> PyResult<String> {
    let cfg = cli::parse(config_text).map_err(value_err)?;
    Ok(cli::serialize(&cfg))
}

#[pymodule]
fn wavint_py(_py: Python<'_>, m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(munk_profile, m)?)?;
    m.add_function(wrap_pyfunction!(pseudolinear_profile, m)?)?;
    m.add_function(wrap_pyfunction!(ideal_modes, m)?)?;
    m.add_function(wrap_pyfunction!(ideal_field_tl, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum_peaks, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(transmission_loss, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(canonical_config, m)?)?;
    Ok(())
}
