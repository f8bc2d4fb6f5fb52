//! Undepleted-pump conversion efficiency, loss budgets, noise accounting and
//! broadband spectrum conversion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

/// Saturating single-step efficiency `η_max·κ²/Ω²·sin²(Ω·L)`, `κ² = η_nor·P`, `Ω² = κ² + (Δk/2)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepEfficiencyModel {
    /// Normalised efficiency per (W·mm²).
    pub eta_nor: f64,
    pub length_mm: f64,
    pub eta_max: f64,
}

impl StepEfficiencyModel {
    pub fn new(eta_nor: f64, length_mm: f64, eta_max: f64) -> Result<Self> {
        if !(eta_nor >= 0.0 && eta_nor.is_finite()) {
            return Err(Error::domain(format!("eta_nor must be non-negative, got {eta_nor}")));
        }
        if !(length_mm > 0.0 && length_mm.is_finite()) {
            return Err(Error::domain(format!("length must be positive, got {length_mm}")));
        }
        if !(eta_max > 0.0 && eta_max <= 1.0) {
            return Err(Error::domain(format!("eta_max must lie in (0, 1], got {eta_max}")));
        }
        Ok(Self {
            eta_nor,
            length_mm,
            eta_max,
        })
    }
}

/// Unchecked kernel shared with the fitting models.
pub(crate) fn step_efficiency_raw(eta_nor: f64, length_mm: f64, eta_max: f64, power_w: f64, delta_k: f64) -> f64 {
    let kappa_sq = eta_nor * power_w;
    let half = 0.5 * delta_k;
    let omega_sq = kappa_sq + half * half;
    if omega_sq == 0.0 {
        return 0.0;
    }
    let s = (omega_sq.sqrt() * length_mm).sin();
    eta_max * kappa_sq / omega_sq * s * s
}

pub fn step_efficiency(model: &StepEfficiencyModel, pump_power_w: f64, delta_k: f64) -> Result<f64> {
    if !(pump_power_w >= 0.0) {
        return Err(Error::domain(format!("pump power must be non-negative, got {pump_power_w} W")));
    }
    Ok(step_efficiency_raw(
        model.eta_nor,
        model.length_mm,
        model.eta_max,
        pump_power_w,
        delta_k,
    ))
}

/// Product of the two step efficiencies at a shared pump power.
pub fn cascade_efficiency(
    step1: &StepEfficiencyModel,
    step2: &StepEfficiencyModel,
    pump_power_w: f64,
    delta_k1: f64,
    delta_k2: f64,
) -> Result<f64> {
    Ok(step_efficiency(step1, pump_power_w, delta_k1)? * step_efficiency(step2, pump_power_w, delta_k2)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossEntry {
    pub label: String,
    pub transmission: f64,
}

/// Ordered list of wavelength-independent transmissions at one target wavelength.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LossBudget {
    pub entries: Vec<LossEntry>,
}

impl LossBudget {
    pub fn new(entries: impl IntoIterator<Item = (impl Into<String>, f64)>) -> Self {
        Self {
            entries: entries
                .into_iter()
                .map(|(label, transmission)| LossEntry {
                    label: label.into(),
                    transmission,
                })
                .collect(),
        }
    }

    /// The out-coupling, free-space, fiber and tunable-filter figures of the reference setup.
    pub fn reference() -> Self {
        Self::new([
            ("out-coupling", 0.922),
            ("free-space", 0.947),
            ("fiber", 0.826),
            ("tunable filter", 0.202),
        ])
    }

    pub fn validate(&self) -> Result<()> {
        for e in &self.entries {
            if !(e.transmission > 0.0 && e.transmission <= 1.0) {
                return Err(Error::domain(format!(
                    "loss entry '{}' has transmission {} outside (0, 1]",
                    e.label, e.transmission
                )));
            }
        }
        Ok(())
    }
}

pub fn budget_transmission(budget: &LossBudget) -> Result<f64> {
    budget.validate()?;
    Ok(budget.entries.iter().map(|e| e.transmission).product())
}

pub fn budget_loss(budget: &LossBudget) -> Result<f64> {
    Ok(1.0 - budget_transmission(budget)?)
}

fn check_efficiency(eta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&eta) {
        Ok(())
    } else {
        Err(Error::domain(format!("efficiency must lie in [0, 1], got {eta}")))
    }
}

pub fn external_from_internal(eta_internal: f64, budget: &LossBudget) -> Result<f64> {
    check_efficiency(eta_internal)?;
    Ok(eta_internal * budget_transmission(budget)?)
}

pub fn internal_from_external(eta_external: f64, budget: &LossBudget) -> Result<f64> {
    check_efficiency(eta_external)?;
    let internal = eta_external / budget_transmission(budget)?;
    if internal > 1.0 {
        return Err(Error::domain(format!(
            "external efficiency {eta_external} implies internal efficiency {internal} > 1"
        )));
    }
    Ok(internal)
}

/// Detector-side count rates for a noise measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseCounts {
    pub total_rate_cps: f64,
    pub dark_rate_cps: f64,
    pub detector_efficiency: f64,
    pub bandwidth_ghz: f64,
    pub external_transmission: f64,
}

impl NoiseCounts {
    pub fn validate(&self) -> Result<()> {
        if !(self.dark_rate_cps >= 0.0 && self.total_rate_cps >= self.dark_rate_cps && self.total_rate_cps.is_finite()) {
            return Err(Error::domain(format!(
                "count rates must satisfy total >= dark >= 0, got total {} dark {}",
                self.total_rate_cps, self.dark_rate_cps
            )));
        }
        if !(self.detector_efficiency > 0.0 && self.detector_efficiency <= 1.0) {
            return Err(Error::domain(format!(
                "detector efficiency must lie in (0, 1], got {}",
                self.detector_efficiency
            )));
        }
        if !(self.bandwidth_ghz > 0.0 && self.bandwidth_ghz.is_finite()) {
            return Err(Error::domain(format!("bandwidth must be positive, got {} GHz", self.bandwidth_ghz)));
        }
        if !(self.external_transmission > 0.0 && self.external_transmission <= 1.0) {
            return Err(Error::domain(format!(
                "external transmission must lie in (0, 1], got {}",
                self.external_transmission
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseReport {
    pub pump_induced_rate_cps: f64,
    /// cps/GHz after all losses.
    pub external_nsd: f64,
    /// cps/GHz referred to the waveguide output.
    pub internal_nsd: f64,
    pub input: NoiseCounts,
}

pub fn noise_report(counts: &NoiseCounts) -> Result<NoiseReport> {
    counts.validate()?;
    let pump_induced = (counts.total_rate_cps - counts.dark_rate_cps) / counts.detector_efficiency;
    let external_nsd = pump_induced / counts.bandwidth_ghz;
    Ok(NoiseReport {
        pump_induced_rate_cps: pump_induced,
        external_nsd,
        internal_nsd: external_nsd / counts.external_transmission,
        input: *counts,
    })
}

/// Result of pushing a spectrum through the converter.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvertedSpectrum {
    pub spectrum: Spectrum,
    /// Input samples where the wavelength map or transfer was undefined.
    pub dropped: usize,
}

/// Maps every input sample through `map_wavelength` and scales it by `transfer`.
///
/// Samples for which either callable fails are dropped and counted. The output
/// abscissa is sorted ascending; a map that reverses the order (DFG does not) is
/// handled by reversing.
pub fn convert_spectrum(
    input: &Spectrum,
    mut map_wavelength: impl FnMut(f64) -> Result<f64>,
    mut transfer: impl FnMut(f64) -> Result<f64>,
) -> Result<ConvertedSpectrum> {
    let mut samples = Vec::with_capacity(input.len());
    let mut dropped = 0;
    for (&wl, &intensity) in input.wavelengths_nm().iter().zip(input.intensities()) {
        match (map_wavelength(wl), transfer(wl)) {
            (Ok(out), Ok(eta)) if out.is_finite() && eta.is_finite() && eta >= 0.0 => {
                samples.push((out, intensity * eta))
            }
            _ => dropped += 1,
        }
    }
    if samples.len() >= 2 && samples[0].0 > samples[samples.len() - 1].0 {
        samples.reverse();
    }
    Ok(ConvertedSpectrum {
        spectrum: Spectrum::from_pairs(samples)?,
        dropped,
    })
}
