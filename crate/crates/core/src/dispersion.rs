//! Temperature-dependent refractive indices.
//!
//! Materials are loaded from JSON data files and evaluated with the extended
//! Sellmeier form
//!
//! ```text
//! n² = a1 + b1·F + (a2 + b2·F)/(λ² − (a3 + b3·F)²) + (a4 + b4·F)/(λ² − a5²) − a6·λ²
//! ```
//!
//! with λ in µm and the temperature parameter `F = (T − 24.5)(T + 570.82)`, T in °C.
//! Both supported temperature forms (`jundt1997`, `barboza2009`) share this F.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modesolver::{solve_modes, WaveguideGeometry};
use crate::spectral::Wavelength;

const COEFFICIENT_KEYS: [&str; 10] = ["a1", "a2", "a3", "a4", "a5", "a6", "b1", "b2", "b3", "b4"];

/// Relative central-difference step used for index derivatives.
pub const DERIVATIVE_REL_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarization {
    Extraordinary,
    Ordinary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TemperatureForm {
    #[serde(rename = "jundt1997")]
    Jundt1997,
    #[serde(rename = "barboza2009")]
    Barboza2009,
}

impl TemperatureForm {
    fn parameter(self, temperature_c: f64) -> f64 {
        match self {
            TemperatureForm::Jundt1997 | TemperatureForm::Barboza2009 => {
                (temperature_c - 24.5) * (temperature_c + 570.82)
            }
        }
    }
}

/// On-disk representation of a material file. Field order is the canonical order.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaterialFile {
    name: String,
    polarization: Polarization,
    temperature_form: TemperatureForm,
    coefficients: BTreeMap<String, f64>,
    wavelength_range_um: [f64; 2],
    #[serde(rename = "temperature_range_C")]
    temperature_range_c: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Terms {
    a: [f64; 6],
    b: [f64; 4],
}

/// An immutable temperature-dependent Sellmeier model.
#[derive(Debug, Clone, PartialEq)]
pub struct SellmeierModel {
    name: String,
    polarization: Polarization,
    temperature_form: TemperatureForm,
    coefficients: BTreeMap<String, f64>,
    wavelength_range_um: [f64; 2],
    temperature_range_c: [f64; 2],
    terms: Terms,
}

impl SellmeierModel {
    pub fn new(
        name: impl Into<String>,
        polarization: Polarization,
        temperature_form: TemperatureForm,
        coefficients: BTreeMap<String, f64>,
        wavelength_range_um: [f64; 2],
        temperature_range_c: [f64; 2],
    ) -> Result<Self> {
        let name = name.into();
        let ctx = || format!("material '{name}'");
        for key in coefficients.keys() {
            if !COEFFICIENT_KEYS.contains(&key.as_str()) {
                return Err(Error::parse(ctx(), format!("unknown coefficient '{key}'")));
            }
        }
        let mut values = [0.0; 10];
        for (slot, key) in values.iter_mut().zip(COEFFICIENT_KEYS) {
            *slot = *coefficients
                .get(key)
                .ok_or_else(|| Error::parse(ctx(), format!("missing coefficient '{key}'")))?;
            if !slot.is_finite() {
                return Err(Error::parse(ctx(), format!("coefficient '{key}' is not finite")));
            }
        }
        for (label, [lo, hi]) in [
            ("wavelength_range_um", wavelength_range_um),
            ("temperature_range_C", temperature_range_c),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::parse(ctx(), format!("{label} must be an increasing pair")));
            }
        }
        if wavelength_range_um[0] <= 0.0 {
            return Err(Error::parse(ctx(), "wavelength range must be positive"));
        }
        let terms = Terms {
            a: values[..6].try_into().expect("six a-terms"),
            b: values[6..].try_into().expect("four b-terms"),
        };
        Ok(Self {
            name,
            polarization,
            temperature_form,
            coefficients,
            wavelength_range_um,
            temperature_range_c,
            terms,
        })
    }

    /// A dispersionless, temperature-independent model with index `n`.
    pub fn constant(name: impl Into<String>, n: f64) -> Result<Self> {
        let mut coefficients: BTreeMap<String, f64> =
            COEFFICIENT_KEYS.iter().map(|k| (k.to_string(), 0.0)).collect();
        coefficients.insert("a1".into(), n * n);
        Self::new(
            name,
            Polarization::Extraordinary,
            TemperatureForm::Jundt1997,
            coefficients,
            [0.1, 20.0],
            [-273.0, 1000.0],
        )
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: MaterialFile =
            serde_json::from_str(text).map_err(|e| Error::parse("material file", e.to_string()))?;
        Self::new(
            file.name,
            file.polarization,
            file.temperature_form,
            file.coefficients,
            file.wavelength_range_um,
            file.temperature_range_c,
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::parse(path.display().to_string(), message),
            other => other,
        })
    }

    /// Canonical JSON: pretty-printed, keys in schema order, coefficients sorted, trailing newline.
    pub fn to_canonical_json(&self) -> String {
        let file = MaterialFile {
            name: self.name.clone(),
            polarization: self.polarization,
            temperature_form: self.temperature_form,
            coefficients: self.coefficients.clone(),
            wavelength_range_um: self.wavelength_range_um,
            temperature_range_c: self.temperature_range_c,
        };
        let mut out = serde_json::to_string_pretty(&file).expect("material serializes");
        out.push('\n');
        out
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn polarization(&self) -> Polarization {
        self.polarization
    }

    pub fn temperature_form(&self) -> TemperatureForm {
        self.temperature_form
    }

    pub fn coefficients(&self) -> &BTreeMap<String, f64> {
        &self.coefficients
    }

    pub fn wavelength_range_um(&self) -> [f64; 2] {
        self.wavelength_range_um
    }

    pub fn temperature_range_c(&self) -> [f64; 2] {
        self.temperature_range_c
    }

    /// Copy of the model with one coefficient replaced.
    pub fn with_coefficient(&self, key: &str, value: f64) -> Result<Self> {
        if !self.coefficients.contains_key(key) {
            return Err(Error::parse(
                format!("material '{}'", self.name),
                format!("unknown coefficient '{key}'"),
            ));
        }
        let mut coefficients = self.coefficients.clone();
        coefficients.insert(key.to_string(), value);
        Self::new(
            self.name.clone(),
            self.polarization,
            self.temperature_form,
            coefficients,
            self.wavelength_range_um,
            self.temperature_range_c,
        )
    }

    pub(crate) fn check_range(&self, wavelength: Wavelength, temperature_c: f64) -> Result<()> {
        let um = wavelength.um();
        let [wl_lo, wl_hi] = self.wavelength_range_um;
        if !(wl_lo..=wl_hi).contains(&um) {
            return Err(Error::Range {
                quantity: "wavelength_um",
                value: um,
                min: wl_lo,
                max: wl_hi,
            });
        }
        let [t_lo, t_hi] = self.temperature_range_c;
        if !(t_lo..=t_hi).contains(&temperature_c) {
            return Err(Error::Range {
                quantity: "temperature_C",
                value: temperature_c,
                min: t_lo,
                max: t_hi,
            });
        }
        Ok(())
    }

    fn index_squared_unchecked(&self, um: f64, temperature_c: f64) -> f64 {
        let Terms { a, b } = self.terms;
        let f = self.temperature_form.parameter(temperature_c);
        let l2 = um * um;
        let uv_pole = a[2] + b[2] * f;
        a[0] + b[0] * f + (a[1] + b[1] * f) / (l2 - uv_pole * uv_pole)
            + (a[3] + b[3] * f) / (l2 - a[4] * a[4])
            - a[5] * l2
    }

    fn index_unchecked(&self, um: f64, temperature_c: f64) -> f64 {
        self.index_squared_unchecked(um, temperature_c).sqrt()
    }
}

impl fmt::Display for SellmeierModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Refractive index of `model` at (λ, T).
pub fn sellmeier_index(model: &SellmeierModel, wavelength: Wavelength, temperature_c: f64) -> Result<f64> {
    model.check_range(wavelength, temperature_c)?;
    let n = model.index_unchecked(wavelength.um(), temperature_c);
    if !(n.is_finite() && n > 1.0 && n < 4.0) {
        return Err(Error::Numeric(format!(
            "material '{}' gives unphysical index {n} at {wavelength}, {temperature_c} C",
            model.name
        )));
    }
    Ok(n)
}

/// Index with its wavelength (per µm) and temperature (per K) derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexTerms {
    pub n: f64,
    pub dn_dlambda_per_um: f64,
    pub dn_dt_per_k: f64,
}

pub fn group_and_phase_terms(
    model: &SellmeierModel,
    wavelength: Wavelength,
    temperature_c: f64,
) -> Result<IndexTerms> {
    group_and_phase_terms_with_step(model, wavelength, temperature_c, DERIVATIVE_REL_STEP)
}

/// As [`group_and_phase_terms`] with an explicit relative difference step.
///
/// The stencil may straddle the validity bounds; only the centre point is range-checked.
pub fn group_and_phase_terms_with_step(
    model: &SellmeierModel,
    wavelength: Wavelength,
    temperature_c: f64,
    rel_step: f64,
) -> Result<IndexTerms> {
    let n = sellmeier_index(model, wavelength, temperature_c)?;
    let um = wavelength.um();
    let hl = rel_step * um;
    let dn_dlambda = (model.index_unchecked(um + hl, temperature_c)
        - model.index_unchecked(um - hl, temperature_c))
        / (2.0 * hl);
    let ht = rel_step * temperature_c.abs().max(1.0);
    let dn_dt = (model.index_unchecked(um, temperature_c + ht)
        - model.index_unchecked(um, temperature_c - ht))
        / (2.0 * ht);
    Ok(IndexTerms {
        n,
        dn_dlambda_per_um: dn_dlambda,
        dn_dt_per_k: dn_dt,
    })
}

/// Source of effective refractive indices for guided fields.
#[derive(Debug, Clone)]
pub enum IndexProvider {
    /// Bulk material index; fundamental mode only.
    BulkSellmeier(Arc<SellmeierModel>),
    /// Bulk index plus a constant additive correction; fundamental mode only.
    OffsetCorrected {
        model: Arc<SellmeierModel>,
        delta_n: f64,
    },
    /// Effective index from the scalar finite-difference mode solver.
    ModeSolverBacked(Arc<WaveguideGeometry>),
}

impl IndexProvider {
    pub fn kind_name(&self) -> &'static str {
        match self {
            IndexProvider::BulkSellmeier(_) => "bulk",
            IndexProvider::OffsetCorrected { .. } => "offset",
            IndexProvider::ModeSolverBacked(_) => "mode_solver",
        }
    }

    /// Material that bounds the usable wavelength/temperature range.
    pub fn core_material(&self) -> &SellmeierModel {
        match self {
            IndexProvider::BulkSellmeier(m) => m,
            IndexProvider::OffsetCorrected { model, .. } => model,
            IndexProvider::ModeSolverBacked(g) => g.core_material(),
        }
    }

    pub fn effective_index(&self, wavelength: Wavelength, temperature_c: f64, mode: u32) -> Result<f64> {
        effective_index(self, wavelength, temperature_c, mode)
    }
}

pub fn effective_index(
    provider: &IndexProvider,
    wavelength: Wavelength,
    temperature_c: f64,
    mode: u32,
) -> Result<f64> {
    if mode == 0 {
        return Err(Error::Capability("mode numbers start at 1".into()));
    }
    match provider {
        IndexProvider::BulkSellmeier(model) => {
            require_fundamental(provider, mode)?;
            sellmeier_index(model, wavelength, temperature_c)
        }
        IndexProvider::OffsetCorrected { model, delta_n } => {
            require_fundamental(provider, mode)?;
            Ok(sellmeier_index(model, wavelength, temperature_c)? + delta_n)
        }
        IndexProvider::ModeSolverBacked(geometry) => {
            let set = solve_modes(geometry, wavelength, temperature_c, mode as usize)?;
            set.modes
                .get(mode as usize - 1)
                .map(|m| m.n_eff)
                .ok_or_else(|| {
                    Error::Capability(format!(
                        "waveguide guides only {} mode(s) at {wavelength}, mode {mode} requested",
                        set.modes.len()
                    ))
                })
        }
    }
}

fn require_fundamental(provider: &IndexProvider, mode: u32) -> Result<()> {
    if mode == 1 {
        Ok(())
    } else {
        Err(Error::Capability(format!(
            "{} index provider supports mode 1 only, mode {mode} requested",
            provider.kind_name()
        )))
    }
}
