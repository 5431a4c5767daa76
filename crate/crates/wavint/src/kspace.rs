//! Wavenumber-domain machinery: the sampling grid with its contour offset,
//! the embarrassingly parallel Green-function sweep, inverse Hankel/Fourier
//! synthesis by rectangular quadrature, and the pressure / transmission-loss
//! conversion.
//!
//! The integration contour runs at `k - i eps` with
//! `eps = 3 dk / (2 pi log10 e)`, which moves waveguide poles off the
//! sampling path and damps wrap-around aliases of the discrete transform
//! by three decades.

use crate::depth_solver::{DepthContext, SolveError};
use crate::environment::{EnvError, Environment, SourceGeometry};
use crate::specfun::{bessel_j0_complex, SpecfunError};
use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use thiserror::Error;

/// TL values at and beyond this sentinel stand for "no signal" (|p| = 0);
/// file writers clamp here.
pub const TL_CLAMP_DB: f64 = 300.0;

#[derive(Debug, Error)]
pub enum KspaceError {
    #[error(
        "wavenumber grid needs k_max > k_min >= 0 and M >= 2 (got [{k_min}, {k_max}], M = {m})"
    )]
    BadGrid { k_min: f64, k_max: f64, m: usize },
    #[error("contour offset {eps:.4e} is not small against the interval {width:.4e}; increase M")]
    OffsetTooLarge { eps: f64, width: f64 },
    #[error("{count} of {total} wavenumber columns were singular (over 1%)")]
    TooManySingular { count: usize, total: usize },
    #[error("ranges must be strictly increasing and start at >= 1 m")]
    BadRanges,
    #[error("synthesis kernel overflow at k = {k}, r = {r}: {source}")]
    KernelOverflow {
        k: Complex64,
        r: f64,
        source: SpecfunError,
    },
    #[error("grid depths do not match the Green grid")]
    DepthMismatch,
    #[error("line-source normalization needs a lossless source layer (Im k_s = {0:.3e}); use the H0(1) flag instead")]
    LossyLineSource(f64),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
}

/// Uniform wavenumber grid `[k_min, k_max]` sampled at `M` points and
/// shifted to the offset contour `k_j - i eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct WavenumberGrid {
    pub k_min: f64,
    pub k_max: f64,
    pub count: usize,
    pub dk: f64,
    pub epsilon: f64,
}

impl WavenumberGrid {
    pub fn sample(&self, j: usize) -> Complex64 {
        Complex64::new(self.k_min + self.dk * j as f64, -self.epsilon)
    }

    pub fn samples(&self) -> Vec<Complex64> {
        (0..self.count).map(|j| self.sample(j)).collect()
    }

    pub fn real_samples(&self) -> Vec<f64> {
        (0..self.count)
            .map(|j| self.k_min + self.dk * j as f64)
            .collect()
    }
}

pub fn make_grid(k_min: f64, k_max: f64, count: usize) -> Result<WavenumberGrid, KspaceError> {
    if !(k_max > k_min && k_min >= 0.0) || count < 2 || !k_max.is_finite() {
        return Err(KspaceError::BadGrid {
            k_min,
            k_max,
            m: count,
        });
    }
    let dk = (k_max - k_min) / (count - 1) as f64;
    let epsilon = 3.0 * dk / (2.0 * PI * std::f64::consts::LOG10_E);
    let width = k_max - k_min;
    if epsilon >= width / 100.0 {
        return Err(KspaceError::OffsetTooLarge {
            eps: epsilon,
            width,
        });
    }
    Ok(WavenumberGrid {
        k_min,
        k_max,
        count,
        dk,
        epsilon,
    })
}

/// Green function samples over the wavenumber grid (rows) and receiver
/// depths (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct GreensGrid {
    pub values: Array2<Complex64>,
    pub depths: Vec<f64>,
    pub grid: WavenumberGrid,
}

impl GreensGrid {
    /// |Green| along the wavenumber axis at the given depth column.
    pub fn magnitude_spectrum(&self, depth_index: usize) -> Vec<f64> {
        self.values
            .column(depth_index)
            .iter()
            .map(|v| v.norm())
            .collect()
    }
}

/// Per-sweep diagnostics: wavenumbers whose depth solve was singular (their
/// columns are filled by linear interpolation of the neighbors).
#[derive(Debug, Clone, Default)]
pub struct SweepReport {
    pub singular: Vec<(usize, Complex64)>,
}

/// Solve the depth equation at every grid wavenumber.
///
/// Columns are independent; the work runs on the current rayon pool and the
/// output is identical regardless of worker count or schedule.
pub fn greens_sweep(
    env: &Environment,
    grid: &WavenumberGrid,
    receiver_depths: &[f64],
) -> Result<(GreensGrid, SweepReport), KspaceError> {
    let ctx = DepthContext::new(env)?;
    let nz = receiver_depths.len();
    let m = grid.count;

    let mut rows: Vec<Result<Vec<Complex64>, SolveError>> = Vec::with_capacity(m);
    (0..m)
        .into_par_iter()
        .map(|j| {
            let kr = grid.sample(j);
            let solution = ctx.solve(kr)?;
            receiver_depths
                .iter()
                .map(|&z| solution.evaluate(z))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect_into_vec(&mut rows);

    let mut report = SweepReport::default();
    let mut values = Array2::from_elem((m, nz), Complex64::ZERO);
    let mut singular_rows = Vec::new();
    for (j, row) in rows.into_iter().enumerate() {
        match row {
            Ok(vals) => {
                for (i, v) in vals.into_iter().enumerate() {
                    values[[j, i]] = v;
                }
            }
            Err(SolveError::Singular { .. }) => {
                singular_rows.push(j);
                report.singular.push((j, grid.sample(j)));
            }
            Err(e) => return Err(e.into()),
        }
    }

    if singular_rows.len() * 100 > m {
        return Err(KspaceError::TooManySingular {
            count: singular_rows.len(),
            total: m,
        });
    }
    fill_singular_rows(&mut values, &singular_rows);

    Ok((
        GreensGrid {
            values,
            depths: receiver_depths.to_vec(),
            grid: grid.clone(),
        },
        report,
    ))
}

/// Replace singular rows by linear interpolation between the nearest good
/// neighbors (copy at the edges).
fn fill_singular_rows(values: &mut Array2<Complex64>, singular: &[usize]) {
    if singular.is_empty() {
        return;
    }
    let m = values.nrows();
    let bad: std::collections::HashSet<usize> = singular.iter().copied().collect();
    let nz = values.ncols();
    for &j in singular {
        let before = (0..j).rev().find(|i| !bad.contains(i));
        let after = (j + 1..m).find(|i| !bad.contains(i));
        for col in 0..nz {
            let v = match (before, after) {
                (Some(b), Some(a)) => {
                    let w = (j - b) as f64 / (a - b) as f64;
                    values[[b, col]] * (1.0 - w) + values[[a, col]] * w
                }
                (Some(b), None) => values[[b, col]],
                (None, Some(a)) => values[[a, col]],
                (None, None) => Complex64::ZERO,
            };
            values[[j, col]] = v;
        }
    }
}

/// Complex displacement-potential (or pressure) samples over ranges and
/// depths.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub values: Array2<Complex64>,
    pub ranges: Vec<f64>,
    pub depths: Vec<f64>,
    pub geometry: SourceGeometry,
}

/// Transmission loss in dB over the same layout as [`FieldGrid`]
/// (+infinity marks zero pressure; clamped to [`TL_CLAMP_DB`] on output).
#[derive(Debug, Clone, PartialEq)]
pub struct TlGrid {
    pub values: Array2<f64>,
    pub ranges: Vec<f64>,
    pub depths: Vec<f64>,
}

impl TlGrid {
    pub fn column_at_depth(&self, z: f64) -> Option<Vec<f64>> {
        let idx = self.depths.iter().position(|&d| (d - z).abs() < 1e-9)?;
        Some(self.values.column(idx).to_vec())
    }
}

fn check_ranges(ranges: &[f64]) -> Result<(), KspaceError> {
    let increasing = ranges.windows(2).all(|w| w[0] < w[1]);
    if ranges.is_empty() || ranges[0] < 1.0 || !increasing {
        return Err(KspaceError::BadRanges);
    }
    Ok(())
}

/// Inverse Hankel transform by the rectangular rule:
/// `psi(r, z) = dk * sum_j Green(k_j, z) J0(kbar_j r) kbar_j`.
pub fn synthesize_point(gg: &GreensGrid, ranges: &[f64]) -> Result<FieldGrid, KspaceError> {
    synthesize(gg, ranges, SourceGeometry::Point)
}

/// Inverse Fourier transform (line source), cosine kernel and leading 2:
/// `psi(x, z) = 2 dk * sum_j Green(k_j, z) cos(kbar_j x)`.
pub fn synthesize_line(gg: &GreensGrid, ranges: &[f64]) -> Result<FieldGrid, KspaceError> {
    synthesize(gg, ranges, SourceGeometry::Line)
}

fn synthesize(
    gg: &GreensGrid,
    ranges: &[f64],
    geometry: SourceGeometry,
) -> Result<FieldGrid, KspaceError> {
    check_ranges(ranges)?;
    let nz = gg.depths.len();
    let dk = gg.grid.dk;
    let samples = gg.grid.samples();

    let rows: Result<Vec<Vec<Complex64>>, KspaceError> = ranges
        .par_iter()
        .map(|&r| {
            let mut acc = vec![Complex64::ZERO; nz];
            for (j, &kbar) in samples.iter().enumerate() {
                let weight = match geometry {
                    SourceGeometry::Point => {
                        let kernel = bessel_j0_complex(kbar * r)
                            .map_err(|source| KspaceError::KernelOverflow { k: kbar, r, source })?;
                        kernel * kbar * dk
                    }
                    SourceGeometry::Line => {
                        let arg = kbar * r;
                        if arg.im.abs() > crate::specfun::MAX_IMAG_ARG {
                            return Err(KspaceError::KernelOverflow {
                                k: kbar,
                                r,
                                source: SpecfunError::ImagGuard(arg.im.abs()),
                            });
                        }
                        arg.cos() * 2.0 * dk
                    }
                };
                if weight != Complex64::ZERO {
                    let g_row = gg.values.row(j);
                    for (a, g) in acc.iter_mut().zip(g_row.iter()) {
                        *a += weight * g;
                    }
                }
            }
            Ok(acc)
        })
        .collect();
    let rows = rows?;

    let mut values = Array2::from_elem((ranges.len(), nz), Complex64::ZERO);
    for (i, row) in rows.into_iter().enumerate() {
        for (jz, v) in row.into_iter().enumerate() {
            values[[i, jz]] = v;
        }
    }
    Ok(FieldGrid {
        values,
        ranges: ranges.to_vec(),
        depths: gg.depths.clone(),
        geometry,
    })
}

/// Reference-pressure convention for the TL normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// 1 m reference pressure of the matching source geometry.
    #[default]
    Standard,
    /// Line-source variant normalized by `i rho_s w^2 H0(1)(1) / 4`.
    LineHankelAtOne,
}

/// Convert a displacement-potential field to pressure and transmission
/// loss: `p = rho(z) w^2 psi`, `TL = -20 log10 |p / p0|`.
pub fn pressure_and_tl(
    field: &FieldGrid,
    env: &Environment,
    normalization: Normalization,
) -> Result<TlGrid, KspaceError> {
    let omega = 2.0 * PI * env.source().frequency;
    let omega2 = omega * omega;
    let rho_s = env.density_at(env.source().z_s)?;
    let k_s = env.source_wavenumber()?;

    let p0 = match (field.geometry, normalization) {
        (SourceGeometry::Point, _) => {
            // rho_s w^2 / (4 pi) * exp(i k_s), with k_s complex if the
            // source layer attenuates.
            Complex64::new(rho_s * omega2 / (4.0 * PI), 0.0) * (Complex64::I * k_s).exp()
        }
        (SourceGeometry::Line, Normalization::Standard) => {
            if k_s.im.abs() > 1e-12 {
                return Err(KspaceError::LossyLineSource(k_s.im));
            }
            Complex64::I * rho_s * omega2 / 4.0 * crate::specfun::hankel1_0(k_s.re)?
        }
        (SourceGeometry::Line, Normalization::LineHankelAtOne) => {
            Complex64::I * rho_s * omega2 / 4.0 * crate::specfun::hankel1_0(1.0)?
        }
    };
    let p0_mag = p0.norm();

    let nz = field.depths.len();
    let mut rho_col = Vec::with_capacity(nz);
    for &z in &field.depths {
        rho_col.push(env.density_at(z)?);
    }

    let mut values = Array2::from_elem(field.values.dim(), 0.0f64);
    for (i, row) in field.values.rows().into_iter().enumerate() {
        for (j, psi) in row.iter().enumerate() {
            let p = rho_col[j] * omega2 * psi.norm();
            values[[i, j]] = if p == 0.0 {
                f64::INFINITY
            } else {
                -20.0 * (p / p0_mag).log10()
            };
        }
    }
    Ok(TlGrid {
        values,
        ranges: field.ranges.clone(),
        depths: field.depths.clone(),
    })
}

/// Warn threshold for range aliasing: beyond `2 pi / dk` the discrete
/// transform wraps.
pub fn alias_range_limit(grid: &WavenumberGrid) -> f64 {
    2.0 * PI / grid.dk
}
