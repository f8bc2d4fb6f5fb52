//! Marcatili's separable closed-form approximation for rectangular cores.

use super::WaveguideGeometry;
use crate::error::{Error, Result};
use crate::spectral::Wavelength;

/// Scalar Marcatili effective index of the (p, q) mode, p counting lobes along the
/// width and q along the height.
///
/// The sides and top see the superstrate, the bottom sees the substrate.
pub fn marcatili_index(
    geometry: &WaveguideGeometry,
    wavelength: Wavelength,
    temperature_c: f64,
    mode_pair: (u32, u32),
) -> Result<f64> {
    let (p, q) = mode_pair;
    if p == 0 || q == 0 {
        return Err(Error::domain("Marcatili mode numbers start at 1"));
    }
    let (n_core, n_sub, n_sup) = geometry.region_indices(wavelength, temperature_c)?;
    if n_core <= n_sub.max(n_sup) {
        return Err(Error::Capability("no index contrast, no bound Marcatili mode".into()));
    }
    let lambda = wavelength.um();
    let penetration = |n_clad: f64| lambda / (2.0 * (n_core * n_core - n_clad * n_clad).sqrt());
    let (a, b) = (geometry.core_width_um, geometry.core_height_um);
    let pi = std::f64::consts::PI;
    let kx = p as f64 * pi / a / (1.0 + 2.0 * penetration(n_sup) / (pi * a));
    let ky = q as f64 * pi / b / (1.0 + (penetration(n_sup) + penetration(n_sub)) / (pi * b));
    let k0 = 2.0 * pi / lambda;
    let beta_sq = k0 * k0 * n_core * n_core - kx * kx - ky * ky;
    let n_clad = n_sub.max(n_sup);
    if beta_sq <= k0 * k0 * n_clad * n_clad {
        return Err(Error::Capability(format!(
            "Marcatili ({p},{q}) mode is not bound at {wavelength}"
        )));
    }
    Ok(beta_sq.sqrt() / k0)
}
