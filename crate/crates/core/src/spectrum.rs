//! Sampled spectra: intensity against vacuum wavelength.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Samples with strictly increasing wavelengths (nm) and finite, non-negative intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    wavelengths: Vec<f64>,
    intensities: Vec<f64>,
}

impl Spectrum {
    pub fn new(wavelengths_nm: Vec<f64>, intensities: Vec<f64>) -> Result<Self> {
        if wavelengths_nm.len() != intensities.len() {
            return Err(Error::domain("spectrum axes differ in length"));
        }
        for w in wavelengths_nm.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::domain(format!(
                    "spectrum wavelengths must be strictly increasing ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        if let Some(&w) = wavelengths_nm.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::domain(format!("invalid spectrum wavelength {w}")));
        }
        if let Some(&v) = intensities.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::domain(format!("spectrum intensity must be finite and non-negative, got {v}")));
        }
        Ok(Self {
            wavelengths: wavelengths_nm,
            intensities,
        })
    }

    pub fn from_pairs(pairs: Vec<(f64, f64)>) -> Result<Self> {
        let (w, i) = pairs.into_iter().unzip();
        Self::new(w, i)
    }

    pub fn len(&self) -> usize {
        self.wavelengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wavelengths.is_empty()
    }

    pub fn wavelengths_nm(&self) -> &[f64] {
        &self.wavelengths
    }

    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    /// Linear interpolation; `None` outside the sampled span.
    pub fn interpolate(&self, wavelength_nm: f64) -> Option<f64> {
        let w = &self.wavelengths;
        if w.is_empty() || wavelength_nm < w[0] || wavelength_nm > w[w.len() - 1] {
            return None;
        }
        let hi = w.partition_point(|&x| x < wavelength_nm);
        if w[hi] == wavelength_nm {
            return Some(self.intensities[hi]);
        }
        let lo = hi - 1;
        let t = (wavelength_nm - w[lo]) / (w[hi] - w[lo]);
        Some(self.intensities[lo] + t * (self.intensities[hi] - self.intensities[lo]))
    }

    /// Full width at half maximum with linear interpolation of the half-level crossings
    /// around the global maximum.
    pub fn fwhm(&self) -> Option<f64> {
        fwhm(&self.wavelengths, &self.intensities)
    }

    pub fn peak_wavelength(&self) -> Option<f64> {
        argmax(&self.intensities).map(|i| self.wavelengths[i])
    }

    /// Parses `wavelength_nm,intensity` CSV; blank lines and lines starting with `#` are skipped.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        match lines.next() {
            Some((_, header)) if header.trim() == "wavelength_nm,intensity" => {}
            Some((n, header)) => {
                return Err(Error::parse(
                    format!("spectrum line {}", n + 1),
                    format!("expected header 'wavelength_nm,intensity', found '{}'", header.trim()),
                ))
            }
            None => return Err(Error::parse("spectrum", "missing header")),
        }
        let mut pairs = Vec::new();
        for (n, line) in lines {
            let context = || format!("spectrum line {}", n + 1);
            let mut fields = line.split(',');
            let mut next = |name: &str| -> Result<f64> {
                let f = fields
                    .next()
                    .ok_or_else(|| Error::parse(context(), format!("missing {name}")))?;
                f.trim()
                    .parse()
                    .map_err(|e| Error::parse(context(), format!("{name} '{}': {e}", f.trim())))
            };
            let w = next("wavelength_nm")?;
            let i = next("intensity")?;
            if fields.next().is_some() {
                return Err(Error::parse(context(), "expected 2 columns"));
            }
            pairs.push((w, i));
        }
        Self::from_pairs(pairs)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("wavelength_nm,intensity\n");
        for (w, i) in self.wavelengths.iter().zip(&self.intensities) {
            let _ = writeln!(out, "{w},{i}");
        }
        out
    }
}

fn argmax(values: &[f64]) -> Option<usize> {
    values
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, &v)| match best {
            Some((_, b)) if b >= v => best,
            _ => Some((i, v)),
        })
        .map(|(i, _)| i)
}

/// FWHM of a sampled single-peaked curve. `None` if either half-level crossing is
/// missing or the peak is not positive.
pub fn fwhm(x: &[f64], y: &[f64]) -> Option<f64> {
    let peak = argmax(y)?;
    let half = 0.5 * y[peak];
    if !(half > 0.0) {
        return None;
    }
    let cross = |i: usize, j: usize| x[i] + (half - y[i]) * (x[j] - x[i]) / (y[j] - y[i]);
    let left = (1..=peak).rev().find(|&i| y[i - 1] < half).map(|i| cross(i - 1, i))?;
    let right = (peak..y.len() - 1).find(|&i| y[i + 1] < half).map(|i| cross(i, i + 1))?;
    Some(right - left)
}
