//! Thermally seeded SFG background: line shapes, blackbody weighting and the
//! list of parasitic processes that land in a detection window.
//!
//! Thermal photons are generated uniformly along a section and up-converted by
//! the pump from their birth point `z` to the section exit, so a photon born at
//! `z` sees an effective interaction length `L − z`. Summing incoherently gives
//!
//! `I(Δk) = Σ_z w(z)·sinc²(Δk·(L − z)/2)·Δz`, `w(z) = Σ_i a_i·z^i`,
//!
//! and with `w(z) = (L − z)²/L`, i.e. `a = (L, −2, 1/L)`, the integral is the closed
//! form `(2/Δk²)·(1 − sinc(Δk·L))`.

use serde::Serialize;

use crate::device::Device;
use crate::error::{Error, Result};
use crate::qpm::{phase_mismatch, sinc, ProcessSpec, SectionRole, SectionSpec};
use crate::roots::{first_root, SCAN_SAMPLES};
use crate::spectral::{dfg_target, sfg_output, Wavelength};
use crate::spectrum::Spectrum;

/// Panel count of the positional sum.
pub const DEFAULT_PANELS: usize = 1024;
/// Fewest panels accepted by [`lineshape_weighted`].
pub const MIN_PANELS: usize = 256;
/// Sections whose material is transparent for the mid-IR seed; the first section
/// reabsorbs its thermal photons.
pub const THERMAL_SEED_SECTIONS: [SectionRole; 1] = [SectionRole::Step2];

const SERIES_THRESHOLD: f64 = 1e-2;
/// Second radiation constant h·c/k_B in nm·K.
const C2_NM_K: f64 = 1.438_776_877e7;

/// Distributed-source line shape `(2/Δk²)·(1 − sinc(Δk·L))` in mm².
pub fn lineshape_analytic(delta_k: f64, length_mm: f64) -> f64 {
    let x = delta_k * length_mm;
    let l2 = length_mm * length_mm;
    if x.abs() < SERIES_THRESHOLD {
        let x2 = x * x;
        l2 * (1.0 / 3.0 - x2 * (1.0 / 60.0 - x2 * (1.0 / 2520.0 - x2 / 181_440.0)))
    } else {
        2.0 / (delta_k * delta_k) * (1.0 - sinc(x))
    }
}

/// Compensated (Neumaier) sum.
pub(crate) fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Positional weights `a_i` of `w(z) = Σ a_i z^i` and the discretisation of the z-sum.
#[derive(Debug, Clone, PartialEq)]
pub struct LineShapeParams {
    pub length_mm: f64,
    pub weights: Vec<f64>,
    pub panels: usize,
}

impl LineShapeParams {
    pub fn new(length_mm: f64, weights: Vec<f64>) -> Result<Self> {
        let p = Self {
            length_mm,
            weights,
            panels: DEFAULT_PANELS,
        };
        p.validate()?;
        Ok(p)
    }

    /// Weights reproducing the closed form: `(L − z)²/L = L − 2z + z²/L`.
    pub fn distributed_source(length_mm: f64) -> Result<Self> {
        Self::new(length_mm, vec![length_mm, -2.0, 1.0 / length_mm])
    }

    pub fn order(&self) -> usize {
        self.weights.len().saturating_sub(1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_mm > 0.0 && self.length_mm.is_finite()) {
            return Err(Error::domain(format!("generating length must be positive, got {}", self.length_mm)));
        }
        if self.weights.is_empty() {
            return Err(Error::domain("line shape needs at least one weight"));
        }
        if self.panels < MIN_PANELS {
            return Err(Error::domain(format!(
                "line shape needs at least {MIN_PANELS} panels, got {}",
                self.panels
            )));
        }
        Ok(())
    }
}

/// Midpoint sum of `w(z)·sinc²(Δk·(L − z)/2)` over `panels` cells of `[0, L]`.
pub fn lineshape_weighted_at(weights: &[f64], length_mm: f64, panels: usize, delta_k: f64) -> f64 {
    let dz = length_mm / panels as f64;
    let terms = (0..panels).map(|j| {
        let z = (j as f64 + 0.5) * dz;
        let w = weights.iter().rev().fold(0.0, |acc, a| acc * z + a);
        let s = sinc(0.5 * delta_k * (length_mm - z));
        w * s * s * dz
    });
    neumaier_sum(terms)
}

/// Weighted line shape over a wavelength grid; `delta_k` maps wavelength (nm) to rad/mm.
pub fn lineshape_weighted(
    params: &LineShapeParams,
    mut delta_k: impl FnMut(f64) -> Result<f64>,
    grid_nm: &[f64],
) -> Result<Spectrum> {
    params.validate()?;
    if grid_nm.is_empty() {
        return Err(Error::domain("line shape grid is empty"));
    }
    let mut values = Vec::with_capacity(grid_nm.len());
    for &wl in grid_nm {
        let v = lineshape_weighted_at(&params.weights, params.length_mm, params.panels, delta_k(wl)?);
        // Negative positional weights can push the sum marginally below zero.
        if v < -1e-12 * params.length_mm * params.length_mm {
            return Err(Error::domain(format!(
                "weights give a negative intensity {v} at {wl} nm"
            )));
        }
        values.push(v.max(0.0));
    }
    Spectrum::new(grid_nm.to_vec(), values)
}

/// Closed-form line shape over a wavelength grid.
pub fn lineshape_analytic_spectrum(
    length_mm: f64,
    mut delta_k: impl FnMut(f64) -> Result<f64>,
    grid_nm: &[f64],
) -> Result<Spectrum> {
    if grid_nm.is_empty() {
        return Err(Error::domain("line shape grid is empty"));
    }
    let values = grid_nm
        .iter()
        .map(|&wl| Ok(lineshape_analytic(delta_k(wl)?, length_mm)))
        .collect::<Result<Vec<_>>>()?;
    Spectrum::new(grid_nm.to_vec(), values)
}

/// Blackbody spectral radiance per unit wavelength, up to a constant factor.
pub fn planck_radiance(wavelength: Wavelength, temperature_k: f64) -> Result<f64> {
    if !(temperature_k > 0.0 && temperature_k.is_finite()) {
        return Err(Error::domain(format!("temperature must be positive, got {temperature_k} K")));
    }
    let l = wavelength.um();
    Ok(1.0 / (l.powi(5) * (C2_NM_K / (wavelength.nm() * temperature_k)).exp_m1()))
}

/// Planck radiance normalised to 1 at `center`.
pub fn planck_weight(wavelength: Wavelength, temperature_k: f64, center: Wavelength) -> Result<f64> {
    Ok(planck_radiance(wavelength, temperature_k)? / planck_radiance(center, temperature_k)?)
}

/// Spectral weighting of the thermal seed; flat unless Planck weighting is requested.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ThermalWeighting {
    #[default]
    Flat,
    Planck { temperature_k: f64, center: Wavelength },
}

impl ThermalWeighting {
    pub fn weight(&self, wavelength: Wavelength) -> Result<f64> {
        match *self {
            ThermalWeighting::Flat => Ok(1.0),
            ThermalWeighting::Planck { temperature_k, center } => planck_weight(wavelength, temperature_k, center),
        }
    }
}

/// Mid-IR driver wavelength that sums with `pump` to `output`.
pub fn thermal_driver(output: Wavelength, pump: Wavelength) -> Result<Wavelength> {
    dfg_target(output, pump)
}

/// Δk of pump + thermal photon → `output_nm` in `section` at `temperature_c`.
pub fn thermal_sfg_mismatch(
    section: &SectionSpec,
    pump: Wavelength,
    temperature_c: f64,
    output_nm: f64,
) -> Result<f64> {
    let driver = thermal_driver(Wavelength::from_nm(output_nm)?, pump)?;
    phase_mismatch(section, &ProcessSpec::sfg(driver, pump)?, temperature_c)
}

/// Phase-matched thermal-SFG output inside `window_nm` (lowest root), if any.
pub fn thermal_sfg_peak(
    section: &SectionSpec,
    pump: Wavelength,
    temperature_c: f64,
    window_nm: (f64, f64),
) -> Result<Option<Wavelength>> {
    let root = first_root(
        |wl| thermal_sfg_mismatch(section, pump, temperature_c, wl),
        window_nm.0,
        window_nm.1,
        SCAN_SAMPLES,
        crate::qpm::MISMATCH_TOLERANCE,
        true,
    )?;
    root.map(Wavelength::from_nm).transpose()
}

/// Slope dΔk/dλ_out of the thermal line at `output`, rad/mm per nm.
pub fn thermal_detuning_slope(section: &SectionSpec, pump: Wavelength, temperature_c: f64, output: Wavelength) -> Result<f64> {
    let h = 1e-6 * output.nm();
    let f = |wl| thermal_sfg_mismatch(section, pump, temperature_c, wl);
    Ok((f(output.nm() + h)? - f(output.nm() - h)?) / (2.0 * h))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ParasiticKind {
    #[serde(rename = "SHG_pump")]
    ShgPump,
    #[serde(rename = "thermal_SFG")]
    ThermalSfg,
    #[serde(rename = "other")]
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParasiticProcess {
    pub kind: ParasiticKind,
    pub output_nm: f64,
    pub drivers_nm: Vec<f64>,
    /// Exponent of the pump-power dependence.
    pub power_law: f64,
}

/// Processes that put light into `window_nm` for the given pump: pump SHG and
/// thermally seeded SFG in the mid-IR-transparent sections, each phase-matched on
/// that section's grating at its own temperature.
pub fn enumerate_parasitics(device: &Device, pump: Wavelength, window_nm: (f64, f64)) -> Result<Vec<ParasiticProcess>> {
    let (lo, hi) = window_nm;
    if !(lo < hi) {
        return Err(Error::domain(format!("detection window [{lo}, {hi}] nm is empty")));
    }
    let mut out = Vec::new();
    let shg = sfg_output(pump, pump);
    if (lo..=hi).contains(&shg.nm()) {
        out.push(ParasiticProcess {
            kind: ParasiticKind::ShgPump,
            output_nm: shg.nm(),
            drivers_nm: vec![pump.nm(), pump.nm()],
            power_law: 2.0,
        });
    }
    // Outputs at or beyond the pump would need a negative-frequency driver.
    let sfg_hi = hi.min(pump.nm() * (1.0 - 1e-9));
    if lo < sfg_hi {
        for role in THERMAL_SEED_SECTIONS {
            let section = device.section(role);
            if let Some(peak) = thermal_sfg_peak(section, pump, section.temperature_c, (lo, sfg_hi))? {
                out.push(ParasiticProcess {
                    kind: ParasiticKind::ThermalSfg,
                    output_nm: peak.nm(),
                    drivers_nm: vec![pump.nm(), thermal_driver(peak, pump)?.nm()],
                    power_law: 1.0,
                });
            }
        }
    }
    Ok(out)
}
