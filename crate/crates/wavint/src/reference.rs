//! Analytic benchmarks and metrics: the modal solution of the ideal
//! (homogeneous, free-surface) waveguide, the canonical Munk and
//! pseudolinear sound-speed profiles, the mean-absolute TL error metric,
//! and peak extraction from wavenumber spectra.

use crate::kspace::TlGrid;
use crate::specfun::{hankel1_0, SpecfunError};
use ndarray::Array2;
use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReferenceError {
    #[error("waveguide depth and wavenumber must be positive (H = {h}, k = {k})")]
    BadWaveguide { h: f64, k: f64 },
    #[error("pseudolinear profile needs a*z + b > 0 (got {0})")]
    PseudolinearDomain(f64),
    #[error("TL grids have different shapes: {0:?} vs {1:?}")]
    ShapeMismatch((usize, usize), (usize, usize)),
    #[error("spectrum too short for peak extraction (len {0})")]
    SpectrumTooShort(usize),
    #[error("spectrum contains a non-finite magnitude at index {0}")]
    NonFiniteSpectrum(usize),
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Seabed {
    Free,
    Rigid,
}

/// Propagating modes of the ideal waveguide: vertical wavenumbers
/// `m pi / H` (free seabed) or `(m - 1/2) pi / H` (rigid), horizontal
/// wavenumbers `sqrt(k^2 - kz^2)`, listed descending.
#[derive(Debug, Clone)]
pub struct ModalSet {
    pub wavenumbers: Vec<f64>,
    pub vertical: Vec<f64>,
    pub seabed: Seabed,
}

fn vertical_wavenumber(m: usize, h: f64, seabed: Seabed) -> f64 {
    match seabed {
        Seabed::Free => m as f64 * PI / h,
        Seabed::Rigid => (m as f64 - 0.5) * PI / h,
    }
}

/// sin(pi x) with exact zeros at integer x; keeps the modal field exactly
/// zero on pressure-release boundaries instead of sin(m pi) round-off.
fn sin_pi(x: f64) -> f64 {
    let r = x % 2.0;
    let t = if r > 1.5 {
        r - 2.0
    } else if r > 0.5 {
        1.0 - r
    } else if r < -1.5 {
        r + 2.0
    } else if r < -0.5 {
        -1.0 - r
    } else {
        r
    };
    (PI * t).sin()
}

/// Vertical mode shape sin(kz z) expressed through the exact-zero sine.
fn mode_shape(m: usize, h: f64, seabed: Seabed, z: f64) -> f64 {
    let mult = match seabed {
        Seabed::Free => m as f64,
        Seabed::Rigid => m as f64 - 0.5,
    };
    sin_pi(mult * z / h)
}

pub fn ideal_modes(h: f64, k: f64, seabed: Seabed) -> Result<ModalSet, ReferenceError> {
    if h <= 0.0 || k <= 0.0 {
        return Err(ReferenceError::BadWaveguide { h, k });
    }
    let mut wavenumbers = Vec::new();
    let mut vertical = Vec::new();
    let mut m = 1usize;
    loop {
        let kz = vertical_wavenumber(m, h, seabed);
        if kz >= k {
            break;
        }
        wavenumbers.push((k * k - kz * kz).sqrt());
        vertical.push(kz);
        m += 1;
    }
    Ok(ModalSet {
        wavenumbers,
        vertical,
        seabed,
    })
}

/// Modified Bessel K0 for positive real argument; used only through the
/// exponentially decaying form of `H0(1)(i y)` in the evanescent modal
/// terms below.
fn bessel_k0(x: f64) -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    if x <= 10.0 {
        // K0 = -(ln(x/2) + gamma) I0 + sum H_k (x^2/4)^k / (k!)^2
        let q = x * x * 0.25;
        let mut i0 = 1.0;
        let mut term = 1.0;
        let mut sum = 0.0;
        let mut harmonic = 0.0;
        for k in 1..64 {
            term *= q / ((k * k) as f64);
            i0 += term;
            harmonic += 1.0 / k as f64;
            sum += term * harmonic;
            if term < 1e-18 * i0 {
                break;
            }
        }
        -((x / 2.0).ln() + EULER_GAMMA) * i0 + sum
    } else {
        // sqrt(pi/(2x)) e^-x [1 - 1/(8x) + 9/(128 x^2) - ...]
        let mut term = 1.0f64;
        let mut sum = 1.0f64;
        let mut last = f64::INFINITY;
        for k in 1..30 {
            term *= -(((2 * k - 1) * (2 * k - 1)) as f64) / (8.0 * k as f64 * x);
            if term.abs() >= last {
                break;
            }
            last = term.abs();
            sum += term;
        }
        (PI / (2.0 * x)).sqrt() * (-x).exp() * sum
    }
}

/// `H0(1)` continued to the modal wavenumber: real argument for the
/// propagating modes, `H0(1)(i y) = -(2 i / pi) K0(y)` for the evanescent
/// continuation.
fn hankel_modal(kr2: f64, r: f64) -> Result<Complex64, ReferenceError> {
    if kr2 > 0.0 {
        Ok(hankel1_0(kr2.sqrt() * r)?)
    } else {
        let y = (-kr2).sqrt();
        Ok(Complex64::new(0.0, -2.0 / PI) * bessel_k0(y * r))
    }
}

/// Transmission-loss field of the ideal waveguide by the modal sum,
/// including evanescent terms up to `n_modes`, normalized by the 1 m
/// point-source reference pressure.
pub fn ideal_field(
    h: f64,
    k: f64,
    z_s: f64,
    seabed: Seabed,
    ranges: &[f64],
    depths: &[f64],
    n_modes: usize,
) -> Result<TlGrid, ReferenceError> {
    if h <= 0.0 || k <= 0.0 {
        return Err(ReferenceError::BadWaveguide { h, k });
    }
    // Displacement potential psi(r, z) = (i / 2H) sum sin sin H0(1); with
    // p = rho w^2 psi and p0 = rho_s w^2 e^{i k_s} / (4 pi) the material
    // factors cancel and TL = -20 log10 |4 pi psi| = -20 log10 |(2 pi/H) S|.
    let mut values = Array2::from_elem((ranges.len(), depths.len()), 0.0f64);
    for (i, &r) in ranges.iter().enumerate() {
        // Modal Hankel factors are depth-independent; compute once per range.
        let mut hankels = Vec::with_capacity(n_modes);
        for m in 1..=n_modes {
            let kz = vertical_wavenumber(m, h, seabed);
            let kr2 = k * k - kz * kz;
            hankels.push((m, hankel_modal(kr2, r)?));
        }
        for (j, &z) in depths.iter().enumerate() {
            let mut acc = Complex64::ZERO;
            for &(m, h0) in &hankels {
                acc += mode_shape(m, h, seabed, z_s) * mode_shape(m, h, seabed, z) * h0;
            }
            let amp = (2.0 * PI / h) * acc.norm();
            values[[i, j]] = if amp == 0.0 {
                f64::INFINITY
            } else {
                -20.0 * amp.log10()
            };
        }
    }
    Ok(TlGrid {
        values,
        ranges: ranges.to_vec(),
        depths: depths.to_vec(),
    })
}

/// Canonical Munk deep-water sound-speed channel.
pub fn munk_profile(z: f64) -> f64 {
    let zt = (z - 1300.0) / 650.0;
    1500.0 * (1.0 + 0.00737 * (zt - 1.0 + (-zt).exp()))
}

/// `c(z) = 1 / sqrt(a z + b)`.
pub fn pseudolinear_profile(z: f64, a: f64, b: f64) -> Result<f64, ReferenceError> {
    let arg = a * z + b;
    if arg <= 0.0 {
        return Err(ReferenceError::PseudolinearDomain(arg));
    }
    Ok(1.0 / arg.sqrt())
}

/// Mean absolute TL difference; clamped (non-finite) points on either side
/// are excluded and counted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TlErrorReport {
    pub mean_abs_db: f64,
    pub compared: usize,
    pub excluded: usize,
}

pub fn tl_error(tl: &TlGrid, reference: &TlGrid) -> Result<TlErrorReport, ReferenceError> {
    if tl.values.dim() != reference.values.dim() {
        return Err(ReferenceError::ShapeMismatch(
            tl.values.dim(),
            reference.values.dim(),
        ));
    }
    let mut sum = 0.0;
    let mut compared = 0usize;
    let mut excluded = 0usize;
    for (a, b) in tl.values.iter().zip(reference.values.iter()) {
        if a.is_finite() && b.is_finite() {
            sum += (a - b).abs();
            compared += 1;
        } else {
            excluded += 1;
        }
    }
    let mean = if compared > 0 {
        sum / compared as f64
    } else {
        0.0
    };
    Ok(TlErrorReport {
        mean_abs_db: mean,
        compared,
        excluded,
    })
}

/// Interior local maxima of a magnitude spectrum above
/// `threshold_fraction * max`, each refined by a three-point parabola on
/// the log magnitude. Returns the refined wavenumbers, ascending.
pub fn spectrum_peaks(
    wavenumbers: &[f64],
    magnitudes: &[f64],
    threshold_fraction: f64,
) -> Result<Vec<f64>, ReferenceError> {
    if magnitudes.len() < 3 || wavenumbers.len() != magnitudes.len() {
        return Err(ReferenceError::SpectrumTooShort(magnitudes.len()));
    }
    if let Some(i) = magnitudes.iter().position(|m| !m.is_finite()) {
        return Err(ReferenceError::NonFiniteSpectrum(i));
    }
    let max = magnitudes.iter().copied().fold(0.0f64, f64::max);
    let floor = threshold_fraction * max;
    let mut peaks = Vec::new();
    for i in 1..magnitudes.len() - 1 {
        let (lo, mid, hi) = (magnitudes[i - 1], magnitudes[i], magnitudes[i + 1]);
        if mid >= floor && mid > lo && mid >= hi {
            let tiny = 1e-300;
            let l0 = (lo.max(tiny)).ln();
            let l1 = (mid.max(tiny)).ln();
            let l2 = (hi.max(tiny)).ln();
            let denom = l0 - 2.0 * l1 + l2;
            let delta = if denom.abs() > 1e-300 {
                (0.5 * (l0 - l2) / denom).clamp(-0.5, 0.5)
            } else {
                0.0
            };
            let spacing = 0.5 * (wavenumbers[i + 1] - wavenumbers[i - 1]);
            peaks.push(wavenumbers[i] + delta * spacing);
        }
    }
    Ok(peaks)
}

/// Default peak threshold: half the global maximum.
pub const DEFAULT_PEAK_THRESHOLD: f64 = 0.5;
