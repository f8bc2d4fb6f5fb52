//! Simulation, design and fitting toolkit for cascaded difference-frequency
//! conversion in a two-section periodically poled waveguide.
//!
//! Units: wavelengths in nm (µm where noted), temperatures in °C, lengths in mm,
//! poling periods in µm, wavenumbers in rad/mm, powers in W.

// NaN-rejecting guards are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod conversion;
pub mod device;
pub mod dispersion;
pub mod error;
pub mod fitting;
pub mod modesolver;
pub mod noisemodel;
pub mod qpm;
mod roots;
pub mod spectral;
pub mod spectrum;

pub use error::{Error, Result};
