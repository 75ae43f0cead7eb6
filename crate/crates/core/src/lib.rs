//! Numerical toolkit for two-phase incompressible flow with phase transition:
//! equilibria, interface geometry, flat boundary symbols with zero certificates,
//! and per-mode spectral stability of spherical equilibria.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity, clippy::too_many_arguments)]

pub mod acceptance;
pub mod config;
pub mod equilibria;
pub mod error;
pub mod flat_symbols;
pub mod geometry;
pub mod quad;
pub mod spectral;
pub mod thermo;
pub mod zerocert;

pub use error::{Error, Result};
