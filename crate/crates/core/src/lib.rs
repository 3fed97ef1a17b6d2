//! Numerical laboratory for the fractional GJMS operator `P_n^{2s}` on the
//! round sphere `S^n`.
//!
//! * [`special_functions`]: Gamma ratios, spectral multipliers, Riesz constants
//!   and large-argument expansions.
//! * [`sphere_spectral`]: zonal quadrature, orthonormal Gegenbauer basis,
//!   spectral application of `P_n^{2s}`.
//! * [`conformal`]: stereographic transfer, sphere inversion, Kelvin transforms
//!   and the moving-spheres kernel.
//! * [`riesz`]: radial Riesz potentials and the integral equation on `R^n`.
//! * [`sobolev_opt`]: projected descent for the perturbed Sobolev quotient.
//! * [`moving_spheres`]: domination checks, the threshold `lambda_bar(x)` and
//!   the ring integral of the kernel.

pub mod conformal;
pub mod error;
pub mod moving_spheres;
pub mod params;
pub mod quadrature;
pub mod riesz;
pub mod sobolev_opt;
pub mod special_functions;
pub mod sphere_spectral;

pub use error::{Error, Result};
pub use params::ProblemParams;
