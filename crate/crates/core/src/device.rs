//! Two-section device description and its JSON file format.
//!
//! Material paths are resolved relative to the device file. A section gives either
//! an explicit `poling_period_um` or a `solve_at` operating point from which the
//! period is solved for first-order DFG.

use std::collections::BTreeMap;
use std::path::{Component, Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::conversion::LossBudget;
use crate::dispersion::{IndexProvider, SellmeierModel};
use crate::error::{Error, Result};
use crate::modesolver::WaveguideGeometry;
use crate::qpm::{solve_poling_period, ProcessSpec, SectionRole, SectionSpec, ThermalExpansion};
use crate::spectral::Wavelength;

const REFERENCE_DEVICE: &str = include_str!("../data/devices/paper.json");
const EMBEDDED_MATERIALS: [(&str, &str); 2] = [
    (
        "lithium_niobate_e.json",
        include_str!("../data/materials/lithium_niobate_e.json"),
    ),
    (
        "lithium_tantalate_e.json",
        include_str!("../data/materials/lithium_tantalate_e.json"),
    ),
];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceFile {
    pub materials: Vec<String>,
    pub sections: Vec<SectionFile>,
    pub coupling: Coupling,
    #[serde(default)]
    pub loss_budget: LossBudget,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometryFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operating_point: Option<OperatingPointFile>,
    /// Free-form origin notes; carried through, never interpreted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<serde_json::Value>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectionFile {
    pub role: SectionRole,
    pub length_mm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poling_period_um: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve_at: Option<SolveAt>,
    #[serde(default = "first_order")]
    pub qpm_order: u32,
    #[serde(rename = "temperature_C")]
    pub temperature_c: f64,
    pub index_provider: ProviderFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thermal_expansion: Option<ThermalExpansion>,
}

fn first_order() -> u32 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveAt {
    pub pump_nm: f64,
    #[serde(rename = "T_C")]
    pub t_c: f64,
    pub signal_nm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProviderFile {
    Bulk { material: String },
    Offset { material: String, delta_n: f64 },
    ModeSolver {},
}

/// Fiber/free-space coupling efficiencies into the waveguide.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coupling {
    pub pump: f64,
    pub signal: f64,
    pub aux: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryFile {
    pub core_width_um: f64,
    pub core_height_um: f64,
    pub core_material: String,
    pub substrate_material: String,
    #[serde(default = "air")]
    pub superstrate_index: f64,
    pub grid_nx: usize,
    pub grid_ny: usize,
    pub window_width_um: f64,
    pub window_height_um: f64,
}

fn air() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatingPointFile {
    pub pump_nm: f64,
    pub signal_nm: f64,
    #[serde(rename = "T_C")]
    pub t_c: f64,
}

/// Pump and signal at which the cascade is operated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub pump: Wavelength,
    pub signal: Wavelength,
    pub temperature_c: f64,
}

#[derive(Debug, Clone)]
pub struct Device {
    pub step1: SectionSpec,
    pub step2: SectionSpec,
    pub operating_point: OperatingPoint,
    pub coupling: Coupling,
    pub loss_budget: LossBudget,
    pub geometry: Option<Arc<WaveguideGeometry>>,
    document: DeviceFile,
}

impl Device {
    /// The reference device shipped with the crate.
    pub fn reference() -> Self {
        Self::from_json_str(REFERENCE_DEVICE, |path| {
            let name = Path::new(path).file_name().and_then(|n| n.to_str()).unwrap_or("");
            EMBEDDED_MATERIALS
                .iter()
                .find(|(file, _)| *file == name)
                .map(|(_, text)| SellmeierModel::from_json_str(text))
                .unwrap_or_else(|| Err(Error::parse("device", format!("no embedded material '{path}'"))))
        })
        .expect("embedded reference device is valid")
    }

    pub fn reference_json() -> &'static str {
        REFERENCE_DEVICE
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json_str(&text, |p| SellmeierModel::load(base.join(p)))
    }

    /// Parses a device document; `load_material` resolves each entry of `materials`.
    pub fn from_json_str(text: &str, mut load_material: impl FnMut(&str) -> Result<SellmeierModel>) -> Result<Self> {
        let document: DeviceFile =
            serde_json::from_str(text).map_err(|e| Error::parse("device file", e.to_string()))?;
        let mut materials = BTreeMap::new();
        for path in &document.materials {
            let model = load_material(path)?;
            materials.insert(model.name().to_owned(), Arc::new(model));
        }
        Self::from_document(document, &materials)
    }

    fn from_document(document: DeviceFile, materials: &BTreeMap<String, Arc<SellmeierModel>>) -> Result<Self> {
        let material = |name: &str| {
            materials.get(name).cloned().ok_or_else(|| {
                Error::parse(
                    "device file",
                    format!("unknown material '{name}'; loaded: {:?}", materials.keys().collect::<Vec<_>>()),
                )
            })
        };
        for (label, v) in [
            ("pump", document.coupling.pump),
            ("signal", document.coupling.signal),
            ("aux", document.coupling.aux),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::domain(format!("coupling '{label}' = {v} outside (0, 1]")));
            }
        }
        document.loss_budget.validate()?;

        let geometry = document
            .geometry
            .as_ref()
            .map(|g| -> Result<Arc<WaveguideGeometry>> {
                let geometry = WaveguideGeometry {
                    core_width_um: g.core_width_um,
                    core_height_um: g.core_height_um,
                    core_material: material(&g.core_material)?,
                    substrate_material: material(&g.substrate_material)?,
                    superstrate_index: g.superstrate_index,
                    grid_nx: g.grid_nx,
                    grid_ny: g.grid_ny,
                    window_width_um: g.window_width_um,
                    window_height_um: g.window_height_um,
                };
                geometry.validate()?;
                Ok(Arc::new(geometry))
            })
            .transpose()?;

        let mut step1 = None;
        let mut step2 = None;
        for s in &document.sections {
            let provider = match &s.index_provider {
                ProviderFile::Bulk { material: m } => IndexProvider::BulkSellmeier(material(m)?),
                ProviderFile::Offset { material: m, delta_n } => IndexProvider::OffsetCorrected {
                    model: material(m)?,
                    delta_n: *delta_n,
                },
                ProviderFile::ModeSolver {} => IndexProvider::ModeSolverBacked(geometry.clone().ok_or_else(|| {
                    Error::parse("device file", "mode_solver index provider requires a geometry block")
                })?),
            };
            let period = match (s.poling_period_um, s.solve_at) {
                (Some(p), None) => p,
                (None, Some(_)) => f64::INFINITY,
                _ => {
                    return Err(Error::parse(
                        "device file",
                        format!("section {:?} needs exactly one of poling_period_um and solve_at", s.role),
                    ))
                }
            };
            let mut section = SectionSpec::new(s.role, s.length_mm, period, s.qpm_order, s.temperature_c, provider)?;
            section.expansion = s.thermal_expansion;
            if let Some(at) = s.solve_at {
                let process = ProcessSpec::dfg(Wavelength::from_nm(at.signal_nm)?, Wavelength::from_nm(at.pump_nm)?)?;
                section.poling_period_um = solve_poling_period(&section, &process, at.t_c)?;
            }
            let slot = match s.role {
                SectionRole::Step1 => &mut step1,
                SectionRole::Step2 => &mut step2,
            };
            if slot.replace(section).is_some() {
                return Err(Error::parse("device file", format!("duplicate section role {:?}", s.role)));
            }
        }
        let step1 = step1.ok_or_else(|| Error::parse("device file", "missing step1 section"))?;
        let step2 = step2.ok_or_else(|| Error::parse("device file", "missing step2 section"))?;

        let first_solve = document
            .sections
            .iter()
            .find(|s| s.role == SectionRole::Step1)
            .and_then(|s| s.solve_at);
        let op = match (document.operating_point, first_solve) {
            (Some(op), _) => op,
            (None, Some(at)) => OperatingPointFile {
                pump_nm: at.pump_nm,
                signal_nm: at.signal_nm,
                t_c: at.t_c,
            },
            (None, None) => {
                return Err(Error::parse(
                    "device file",
                    "operating_point is required when step1 has no solve_at",
                ))
            }
        };
        let operating_point = OperatingPoint {
            pump: Wavelength::from_nm(op.pump_nm)?,
            signal: Wavelength::from_nm(op.signal_nm)?,
            temperature_c: op.t_c,
        };

        Ok(Self {
            step1,
            step2,
            operating_point,
            coupling: document.coupling,
            loss_budget: document.loss_budget.clone(),
            geometry,
            document,
        })
    }

    pub fn section(&self, role: SectionRole) -> &SectionSpec {
        match role {
            SectionRole::Step1 => &self.step1,
            SectionRole::Step2 => &self.step2,
        }
    }

    pub fn document(&self) -> &DeviceFile {
        &self.document
    }

    /// The device document with every `solve_at` replaced by the solved period and the
    /// operating point made explicit.
    pub fn solved_document(&self) -> DeviceFile {
        let mut doc = self.document.clone();
        for s in &mut doc.sections {
            s.poling_period_um = Some(self.section(s.role).poling_period_um);
            s.solve_at = None;
        }
        doc.operating_point = Some(OperatingPointFile {
            pump_nm: self.operating_point.pump.nm(),
            signal_nm: self.operating_point.signal.nm(),
            t_c: self.operating_point.temperature_c,
        });
        doc
    }

    /// Pretty JSON of [`Self::solved_document`] with material paths rebased from
    /// `device_dir` onto `output_dir`.
    pub fn solved_json(&self, device_dir: &Path, output_dir: &Path) -> Result<String> {
        let mut doc = self.solved_document();
        for m in &mut doc.materials {
            let target = absolute(&device_dir.join(&*m))?;
            *m = relative_path(&absolute(output_dir)?, &target)
                .to_string_lossy()
                .replace('\\', "/");
        }
        let mut text = serde_json::to_string_pretty(&doc).map_err(|e| Error::parse("device file", e.to_string()))?;
        text.push('\n');
        Ok(text)
    }
}

fn absolute(path: &Path) -> Result<PathBuf> {
    let joined = if path.is_absolute() {
        path.to_path_buf()
    } else {
        std::env::current_dir().map_err(|e| Error::io(".", e))?.join(path)
    };
    let mut out = PathBuf::new();
    for c in joined.components() {
        match c {
            Component::CurDir => {}
            Component::ParentDir => {
                out.pop();
            }
            other => out.push(other),
        }
    }
    Ok(out)
}

fn relative_path(from_dir: &Path, to: &Path) -> PathBuf {
    let a: Vec<_> = from_dir.components().collect();
    let b: Vec<_> = to.components().collect();
    let common = a.iter().zip(&b).take_while(|(x, y)| x == y).count();
    let mut out = PathBuf::new();
    for _ in common..a.len() {
        out.push("..");
    }
    for c in &b[common..] {
        out.push(c);
    }
    out
}
