//! Wavenumber-integration sound propagation in horizontally stratified
//! fluid waveguides.
//!
//! The field of a point (or infinite line) harmonic source in a layered
//! ocean is computed in three stages:
//!
//! 1. the Helmholtz equation is reduced by a Hankel (or Fourier) transform
//!    to a depth-separated wave equation per horizontal wavenumber;
//! 2. that ODE is solved for the depth-dependent Green function with a
//!    Chebyshev-Tau spectral method, one spectral expansion per layer,
//!    layers coupled through interface conditions ([`depth_solver`]);
//! 3. the pressure field is synthesized by numerical inverse Hankel/Fourier
//!    transform over a wavenumber grid offset into the complex plane
//!    ([`kspace`]), and reported as transmission loss.
//!
//! [`reference`] carries analytic benchmark machinery (ideal-waveguide
//! modal field, canonical profiles, error metrics) and [`cli`] the
//! configuration format and pipeline driver behind the `wavint` binary.

pub mod cli;
pub mod depth_solver;
pub mod environment;
pub mod kspace;
pub mod reference;
pub mod specfun;
pub mod spectral;

pub use num_complex::Complex64;
