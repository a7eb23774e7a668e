//! Fisher-Rao geometry of the Hermite-Gaussian family and of general
//! harmonic-oscillator position densities on the `(mu, sigma)` half-plane.

pub mod cli;
pub mod estimation;
pub mod geometry;
pub mod hermite;
pub mod models;
pub mod quadrature;
