//! Named model families for phase-matching scans, power saturation and thermal line shapes.

use super::FitModel;
use crate::conversion::step_efficiency_raw;
use crate::device::Device;
use crate::error::{Error, Result};
use crate::noisemodel::{lineshape_analytic, lineshape_weighted_at, thermal_detuning_slope, thermal_sfg_peak, DEFAULT_PANELS};
use crate::qpm::{phase_mismatch, sinc, ProcessSpec, TARGET_WINDOW_NM};
use crate::spectral::Wavelength;

/// Linear detuning slopes used to map the abscissa onto Δk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegistryConfig {
    /// dΔk/dx for the pump-scan models, rad/mm per nm.
    pub scan_slope: f64,
    /// dΔk/dλ for the line-shape models, rad/mm per nm.
    pub lineshape_slope: f64,
    pub panels: usize,
}

impl RegistryConfig {
    /// Slopes taken from `device`: step-1 mismatch against pump wavelength at the
    /// operating point, thermal-SFG mismatch against output wavelength at its peak.
    pub fn for_device(device: &Device) -> Result<Self> {
        let op = device.operating_point;
        let h = 1e-6 * op.pump.nm();
        let dk = |p: f64| -> Result<f64> {
            phase_mismatch(&device.step1, &ProcessSpec::dfg(op.signal, Wavelength::from_nm(p)?)?, op.temperature_c)
        };
        let scan_slope = (dk(op.pump.nm() + h)? - dk(op.pump.nm() - h)?) / (2.0 * h);
        let section = &device.step2;
        let peak = thermal_sfg_peak(section, op.pump, section.temperature_c, TARGET_WINDOW_NM)?
            .ok_or_else(|| Error::Design("no thermal-SFG peak in the detection window".into()))?;
        let lineshape_slope = thermal_detuning_slope(section, op.pump, section.temperature_c, peak)?;
        Ok(Self {
            scan_slope,
            lineshape_slope,
            panels: DEFAULT_PANELS,
        })
    }
}

const WIDE: f64 = 1e12;

fn sinc2(x: f64) -> f64 {
    let s = sinc(x);
    s * s
}

/// All registry models with wide default bounds.
pub fn model_registry(config: &RegistryConfig) -> Vec<FitModel> {
    [
        "sinc2_scan",
        "two_mode_sinc2",
        "saturation",
        "cascade_saturation",
        "lineshape_eq1",
        "lineshape_eq2",
    ]
    .iter()
    .map(|name| build(name, config).expect("registry names are known"))
    .collect()
}

fn build(name: &str, config: &RegistryConfig) -> Result<FitModel> {
    let scan = config.scan_slope;
    let line = config.lineshape_slope;
    let panels = config.panels;
    let model = match name {
        "sinc2_scan" => FitModel::new(
            name,
            &["amplitude", "center", "length_mm", "offset"],
            vec![(0.0, WIDE), (0.0, 1e5), (1e-3, 1e3), (-WIDE, WIDE)],
            move |p, x| p[0] * sinc2(0.5 * scan * (x - p[1]) * p[2]) + p[3],
        )?
        .with_seed_parameters(&[1, 2, 0]),
        "two_mode_sinc2" => FitModel::new(
            name,
            &["amplitude1", "center1", "amplitude2", "center2", "length_mm", "offset"],
            vec![(0.0, WIDE), (0.0, 1e5), (0.0, WIDE), (0.0, 1e5), (1e-3, 1e3), (-WIDE, WIDE)],
            move |p, x| {
                p[0] * sinc2(0.5 * scan * (x - p[1]) * p[4]) + p[2] * sinc2(0.5 * scan * (x - p[3]) * p[4]) + p[5]
            },
        )?
        .with_seed_parameters(&[1, 3, 2]),
        "saturation" => FitModel::new(
            name,
            &["eta_max", "eta_nor", "length_mm"],
            vec![(1e-6, 1.0), (0.0, 10.0), (1e-3, 1e3)],
            |p, x| step_efficiency_raw(p[1], p[2], p[0], x, 0.0),
        )?
        .with_seed_parameters(&[1, 0])
        .with_default_fixed("length_mm", 20.0),
        "cascade_saturation" => FitModel::new(
            name,
            &["eta_nor1", "eta_nor2", "length_mm"],
            vec![(0.0, 10.0), (0.0, 10.0), (1e-3, 1e3)],
            |p, x| step_efficiency_raw(p[0], p[2], 1.0, x, 0.0) * step_efficiency_raw(p[1], p[2], 1.0, x, 0.0),
        )?
        .with_seed_parameters(&[0, 1])
        .with_default_fixed("length_mm", 20.0),
        "lineshape_eq1" => FitModel::new(
            name,
            &["amplitude", "center", "length_mm", "offset"],
            vec![(0.0, WIDE), (0.0, 1e5), (1e-3, 1e3), (-WIDE, WIDE)],
            move |p, x| {
                let l = p[2];
                p[0] * 3.0 / (l * l) * lineshape_analytic(line * (x - p[1]), l) + p[3]
            },
        )?
        .with_seed_parameters(&[1, 2, 0]),
        "lineshape_eq2" => FitModel::new(
            name,
            &["a0", "a1", "a2", "center", "length_mm", "offset"],
            vec![(-WIDE, WIDE), (-WIDE, WIDE), (-WIDE, WIDE), (0.0, 1e5), (1e-3, 1e3), (-WIDE, WIDE)],
            move |p, x| {
                let l = p[4];
                3.0 / (l * l) * lineshape_weighted_at(&p[..3], l, panels, line * (x - p[3])) + p[5]
            },
        )?
        .with_seed_parameters(&[3, 4]),
        other => return Err(Error::domain(format!("unknown model '{other}'"))),
    };
    Ok(model)
}

/// A registry model with bounds narrowed to the data range, plus a heuristic
/// starting point inside those bounds.
pub fn registry_model(name: &str, config: &RegistryConfig, data: &[(f64, f64)]) -> Result<(FitModel, Vec<f64>)> {
    let mut model = build(name, config)?;
    if data.is_empty() {
        return Err(Error::domain("model selection needs data"));
    }
    let (xmin, xmax) = data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (x, _)| (a.min(*x), b.max(*x)));
    let (ymin, ymax) = data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (_, y)| (a.min(*y), b.max(*y)));
    let span = (ymax - ymin).max(f64::MIN_POSITIVE);
    let peak_x = data
        .iter()
        .fold((xmin, f64::NEG_INFINITY), |best, &(x, y)| if y > best.1 { (x, y) } else { best })
        .0;
    let initial = match name {
        "sinc2_scan" | "lineshape_eq1" => {
            model = model
                .with_bounds("amplitude", 0.0, 2.0 * span)?
                .with_bounds("center", xmin, xmax)?
                .with_bounds("length_mm", 0.1, 200.0)?
                .with_bounds("offset", ymin - span, ymax)?;
            vec![span, peak_x, 20.0, ymin]
        }
        "two_mode_sinc2" => {
            model = model
                .with_bounds("amplitude1", 0.0, 2.0 * span)?
                .with_bounds("amplitude2", 0.0, 2.0 * span)?
                .with_bounds("center1", xmin, xmax)?
                .with_bounds("center2", xmin, xmax)?
                .with_bounds("length_mm", 0.1, 200.0)?
                .with_bounds("offset", ymin - span, ymax)?;
            vec![span, peak_x, 0.5 * span, 0.5 * (xmin + xmax), 20.0, ymin]
        }
        "saturation" => vec![ymax.clamp(1e-6, 1.0), 1e-2, 20.0],
        "cascade_saturation" => vec![1e-2, 2e-2, 20.0],
        "lineshape_eq2" => {
            let amp = span;
            model = model
                .with_bounds("center", xmin, xmax)?
                .with_bounds("length_mm", 0.1, 200.0)?
                .with_bounds("offset", ymin - span, ymax)?;
            vec![amp * 20.0, -2.0 * amp, amp / 20.0, peak_x, 20.0, ymin]
        }
        _ => unreachable!("build rejected unknown names"),
    };
    let mut initial = initial;
    for (p, (lo, hi)) in initial.iter_mut().zip(model.bounds()) {
        *p = p.clamp(*lo, *hi);
    }
    Ok((model, initial))
}
