//! Wavelength/frequency arithmetic and energy conservation for three-wave mixing.
//!
//! All wavelengths are vacuum wavelengths in nanometres and all frequencies are
//! in terahertz. With those units the speed of light is exactly
//! [`SPEED_OF_LIGHT_NM_THZ`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vacuum speed of light in nm·THz.
pub const SPEED_OF_LIGHT_NM_THZ: f64 = 299_792.458;

/// Vacuum wavelength in nanometres.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Wavelength(f64);

impl Wavelength {
    pub fn from_nm(nm: f64) -> Result<Self> {
        if nm.is_finite() && nm > 0.0 {
            Ok(Self(nm))
        } else {
            Err(Error::domain(format!(
                "wavelength must be positive and finite, got {nm} nm"
            )))
        }
    }

    pub fn from_um(um: f64) -> Result<Self> {
        Self::from_nm(um * 1e3)
    }

    #[inline]
    pub const fn nm(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn um(self) -> f64 {
        self.0 * 1e-3
    }

    /// Vacuum wavenumber 2π/λ in rad/mm.
    #[inline]
    pub fn vacuum_wavenumber_per_mm(self) -> f64 {
        2.0 * std::f64::consts::PI * 1e6 / self.0
    }

    pub fn to_frequency(self) -> Frequency {
        wavelength_to_frequency(self)
    }
}

impl TryFrom<f64> for Wavelength {
    type Error = Error;

    fn try_from(nm: f64) -> Result<Self> {
        Self::from_nm(nm)
    }
}

impl From<Wavelength> for f64 {
    fn from(w: Wavelength) -> f64 {
        w.0
    }
}

impl fmt::Display for Wavelength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} nm", self.0)
    }
}

/// Optical frequency in terahertz.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Frequency(f64);

impl Frequency {
    pub fn from_thz(thz: f64) -> Result<Self> {
        if thz.is_finite() && thz > 0.0 {
            Ok(Self(thz))
        } else {
            Err(Error::domain(format!(
                "frequency must be positive and finite, got {thz} THz"
            )))
        }
    }

    #[inline]
    pub const fn thz(self) -> f64 {
        self.0
    }

    pub fn to_wavelength(self) -> Wavelength {
        frequency_to_wavelength(self)
    }
}

impl TryFrom<f64> for Frequency {
    type Error = Error;

    fn try_from(thz: f64) -> Result<Self> {
        Self::from_thz(thz)
    }
}

impl From<Frequency> for f64 {
    fn from(f: Frequency) -> f64 {
        f.0
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} THz", self.0)
    }
}

/// Kind of three-wave process. SHG is the degenerate SFG with both inputs equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ProcessKind {
    Dfg,
    Sfg,
    Shg,
}

impl fmt::Display for ProcessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProcessKind::Dfg => "DFG",
            ProcessKind::Sfg => "SFG",
            ProcessKind::Shg => "SHG",
        })
    }
}

pub fn wavelength_to_frequency(wavelength: Wavelength) -> Frequency {
    Frequency(SPEED_OF_LIGHT_NM_THZ / wavelength.0)
}

pub fn frequency_to_wavelength(frequency: Frequency) -> Wavelength {
    Wavelength(SPEED_OF_LIGHT_NM_THZ / frequency.0)
}

/// Target wavelength of difference-frequency generation, `1/λt = 1/λs − 1/λp`.
///
/// The pump photon must carry less energy than the signal photon.
pub fn dfg_target(signal: Wavelength, pump: Wavelength) -> Result<Wavelength> {
    if pump.0 <= signal.0 {
        return Err(Error::domain(format!(
            "DFG needs pump wavelength above signal wavelength (signal {}, pump {})",
            signal, pump
        )));
    }
    let inv = 1.0 / signal.0 - 1.0 / pump.0;
    Wavelength::from_nm(1.0 / inv)
}

/// Output wavelength of sum-frequency generation, `1/λout = 1/λa + 1/λb`.
pub fn sfg_output(a: Wavelength, b: Wavelength) -> Wavelength {
    Wavelength(1.0 / (1.0 / a.0 + 1.0 / b.0))
}
