use std::sync::Arc;

use cascade_core::device::Device;
use cascade_core::dispersion::SellmeierModel;
use cascade_core::fitting::{fit, registry_model, FitOptions, RegistryConfig};
use cascade_core::modesolver::{marcatili_index, solve_modes, solve_modes_batch, WaveguideGeometry};
use cascade_core::noisemodel::{thermal_sfg_peak, THERMAL_SEED_SECTIONS};
use cascade_core::qpm::{phase_mismatch, phasematch_map, qpm_transfer, ProcessSpec, SectionRole, TARGET_WINDOW_NM};
use cascade_core::spectral::{dfg_target, Wavelength};
use proptest::prelude::*;

fn nm(v: f64) -> Wavelength {
    Wavelength::from_nm(v).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn map_cells_are_pointwise_transfers(t in 30.0f64..120.0, p in 2000.0f64..2400.0) {
        let device = Device::reference();
        let map = phasematch_map(&device, &[t], &[p]).unwrap();
        let (s1, s2) = map.cell(0, 0);
        let signal = device.operating_point.signal;
        let pump = nm(p);
        let dk1 = phase_mismatch(&device.step1, &ProcessSpec::dfg(signal, pump).unwrap(), t).unwrap();
        let mid = dfg_target(signal, pump).unwrap();
        let dk2 = phase_mismatch(&device.step2, &ProcessSpec::dfg(mid, pump).unwrap(), t).unwrap();
        prop_assert_eq!(s1, Some(qpm_transfer(dk1, device.step1.length_mm)));
        prop_assert_eq!(s2, Some(qpm_transfer(dk2, device.step2.length_mm)));
    }
}

#[test]
fn thermal_peak_moves_blue_with_temperature() {
    let device = Device::reference();
    let section = &device.step2;
    let pump = device.operating_point.pump;
    let peaks: Vec<f64> = (0..=10)
        .map(|dt| {
            thermal_sfg_peak(section, pump, section.temperature_c + dt as f64, TARGET_WINDOW_NM)
                .unwrap()
                .expect("peak inside the filter range")
                .nm()
        })
        .collect();
    assert!(peaks.windows(2).all(|w| w[1] < w[0]), "{peaks:?}");
}

#[test]
fn only_the_second_section_seeds_thermal_noise() {
    assert_eq!(THERMAL_SEED_SECTIONS, [SectionRole::Step2]);
}

#[test]
fn fits_are_bitwise_reproducible() {
    let config = RegistryConfig::for_device(&Device::reference()).unwrap();
    let data: Vec<(f64, f64)> = (0..120)
        .map(|i| {
            let x = 2148.0 + 0.08 * i as f64;
            let arg = 0.5 * config.scan_slope * (x - 2152.9) * 20.0;
            let s = if arg == 0.0 { 1.0 } else { arg.sin() / arg };
            (x, s * s + 0.003 * ((i * 31) % 7) as f64)
        })
        .collect();
    let (model, initial) = registry_model("sinc2_scan", &config, &data).unwrap();
    let a = fit(&model, &data, &initial, &FitOptions::default()).unwrap();
    let b = fit(&model, &data, &initial, &FitOptions::default()).unwrap();
    assert_eq!(a.parameters, b.parameters);
    assert_eq!(a.standard_errors, b.standard_errors);
    assert_eq!(a.residual_norm.to_bits(), b.residual_norm.to_bits());
    assert_eq!(a.iterations, b.iterations);
}

fn weak_guide() -> WaveguideGeometry {
    let core = Arc::new(SellmeierModel::constant("core", 2.20).unwrap());
    let clad = Arc::new(SellmeierModel::constant("clad", 2.19).unwrap());
    WaveguideGeometry {
        core_width_um: 12.0,
        core_height_um: 10.0,
        core_material: core,
        substrate_material: clad,
        superstrate_index: 2.19,
        grid_nx: 64,
        grid_ny: 64,
        window_width_um: 36.0,
        window_height_um: 30.0,
    }
}

#[test]
fn finite_differences_agree_with_marcatili_for_a_weak_guide() {
    let geometry = weak_guide();
    let wl = nm(1550.0);
    let solved = solve_modes(&geometry, wl, 25.0, 1).unwrap().modes[0].n_eff;
    let closed = marcatili_index(&geometry, wl, 25.0, (1, 1)).unwrap();
    assert!((solved - closed).abs() < 5e-3, "{solved} vs {closed}");
    assert!(solved > 2.19 && solved < 2.20);
}

#[test]
fn batch_solves_match_single_solves() {
    let geometry = Device::reference().geometry.unwrap();
    let points = [(nm(905.08), 59.26), (nm(1561.6), 59.26), (nm(1561.6), 70.0)];
    let batch = solve_modes_batch(&geometry, &points, 1);
    for ((w, t), got) in points.iter().zip(batch) {
        let single = solve_modes(&geometry, *w, *t, 1).unwrap();
        assert_eq!(got.unwrap().modes[0].n_eff.to_bits(), single.modes[0].n_eff.to_bits());
    }
}
