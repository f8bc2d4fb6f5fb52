//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary so the report is printed on every `cargo test`. The process
//! fails if any criterion fails that is not listed in `KNOWN_RED`; those are reported
//! with their measured values and analysed in the project notes.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use cascade_core::cli::convert_device_spectrum;
use cascade_core::conversion::{budget_loss, external_from_internal, noise_report, LossBudget, NoiseCounts};
use cascade_core::device::Device;
use cascade_core::dispersion::SellmeierModel;
use cascade_core::fitting::{fit, grid_seed, registry_model, FitOptions, RegistryConfig};
use cascade_core::modesolver::{solve_modes, WaveguideGeometry};
use cascade_core::noisemodel::{enumerate_parasitics, lineshape_analytic, lineshape_weighted_at, thermal_driver, thermal_sfg_peak, ParasiticKind};
use cascade_core::qpm::{
    find_degenerate_point, phase_mismatch, qpm_transfer, solve_phasematched_pump, solve_poling_period,
    tuning_curve, ProcessSpec, PumpWindow, SectionRole, SectionSpec, DEFAULT_PUMP_WINDOW, TARGET_WINDOW_NM,
};
use cascade_core::spectral::{dfg_target, sfg_output, ProcessKind, Wavelength, SPEED_OF_LIGHT_NM_THZ};
use cascade_core::spectrum::Spectrum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Criteria whose failure is expected and explained; they still print FAIL.
const KNOWN_RED: &[u32] = &[9];

type Check = std::result::Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Check);

fn nm(v: f64) -> Wavelength {
    Wavelength::from_nm(v).unwrap()
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

fn require(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol
}

fn budget_time(elapsed: Duration, limit: Duration, detail: String) -> Check {
    require(
        elapsed < limit,
        format!("{detail}; runtime {:.3} s (limit {:.3} s)", elapsed.as_secs_f64(), limit.as_secs_f64()),
    )
}

fn energy_chain() -> Check {
    let start = Instant::now();
    let mid = dfg_target(nm(637.2), nm(2152.9)).map_err(|e| e.to_string())?.nm();
    let target = dfg_target(nm(905.1), nm(2152.9)).map_err(|e| e.to_string())?.nm();
    let elapsed = start.elapsed();
    let detail = format!("637.2 -> {mid:.4} nm, 905.1 -> {target:.4} nm");
    require(within(mid, 905.08, 0.01) && within(target, 1561.62, 0.01), detail.clone())?;
    budget_time(elapsed, Duration::from_millis(1), detail)
}

fn loss_budget() -> Check {
    let budget = LossBudget::new([("out-coupling", 0.922), ("free-space", 0.947), ("fiber", 0.826), ("tunable filter", 0.202)]);
    let loss = budget_loss(&budget).map_err(|e| e.to_string())?;
    let external = external_from_internal(0.205, &budget).map_err(|e| e.to_string())?;
    let shipped = budget_loss(&Device::reference().loss_budget).map_err(|e| e.to_string())?;
    require(
        within(loss, 0.854, 0.001) && within(external, 0.030, 0.001) && shipped == loss,
        format!("total loss {:.2} %, external {:.2} % from 20.5 % internal", 100.0 * loss, 100.0 * external),
    )
}

fn noise_accounting() -> Check {
    let r = noise_report(&NoiseCounts {
        total_rate_cps: 142.0,
        dark_rate_cps: 135.0,
        detector_efficiency: 0.72,
        bandwidth_ghz: 4.0,
        external_transmission: 0.1457,
    })
    .map_err(|e| e.to_string())?;
    require(
        within(r.external_nsd, 2.4, 0.1) && within(r.internal_nsd, 16.7, 0.5),
        format!("external {:.3} cps/GHz, internal {:.3} cps/GHz", r.external_nsd, r.internal_nsd),
    )
}

fn parasitics() -> Check {
    let device = Device::reference();
    let pump = nm(2152.9);
    let found = enumerate_parasitics(&device, pump, (1000.0, 1700.0)).map_err(|e| e.to_string())?;
    let shg = found
        .iter()
        .find(|p| p.kind == ParasiticKind::ShgPump)
        .map(|p| p.output_nm)
        .ok_or("no pump SHG listed")?;
    let driver = thermal_driver(nm(1532.8), pump).map_err(|e| e.to_string())?.um();
    let separation = SPEED_OF_LIGHT_NM_THZ / 1532.8 - SPEED_OF_LIGHT_NM_THZ / 2152.9;

    // Model-side constancy: the thermal peak tracks the pump at a fixed frequency offset.
    let section = &device.step2;
    let mut offsets = Vec::new();
    for p in [2140.0, 2152.9, 2165.0] {
        if let Ok(Some(peak)) = thermal_sfg_peak(section, nm(p), section.temperature_c, TARGET_WINDOW_NM) {
            offsets.push(SPEED_OF_LIGHT_NM_THZ / peak.nm() - SPEED_OF_LIGHT_NM_THZ / p);
        }
    }
    let spread = offsets.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - offsets.iter().cloned().fold(f64::INFINITY, f64::min);
    require(
        within(shg, 1076.45, 0.1) && within(driver, 5.32, 0.05) && within(separation, 56.33, 0.1),
        format!(
            "SHG {shg:.3} nm, driver {driver:.4} um, separation {separation:.3} THz; model peak offset {:.2} THz, spread {spread:.2e} THz over pump 2140-2165 nm",
            offsets.get(1).copied().unwrap_or(f64::NAN)
        ),
    )
}

fn delta_k_grid(length: f64, half_span: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| -half_span / length + i as f64 * 2.0 * half_span / length / (points - 1) as f64)
        .collect()
}

fn eq1_oracle() -> Check {
    let start = Instant::now();
    let l = 20.0;
    let panels = 100_000;
    let trapezoid = |dk: f64| {
        let f = |z: f64| {
            let s = sinc(0.5 * dk * (l - z));
            (l - z) * (l - z) / l * s * s
        };
        let h = l / panels as f64;
        let inner: f64 = (1..panels).map(|i| f(i as f64 * h)).sum();
        h * (0.5 * f(0.0) + inner + 0.5 * f(l))
    };
    let worst = delta_k_grid(l, 10.0, 201)
        .iter()
        .map(|&dk| {
            let q = trapezoid(dk);
            (lineshape_analytic(dk, l) - q).abs() / q
        })
        .fold(0.0, f64::max);
    let limit = l * l / 3.0;
    let at_zero = [0.0, 1e-9, -1e-7]
        .iter()
        .map(|&dk| (lineshape_analytic(dk, l) - limit).abs() / limit)
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    let detail = format!("max rel. deviation {worst:.2e} over 201 points, zero-mismatch rel. error {at_zero:.1e}");
    require(worst < 1e-6 && at_zero < 1e-9, detail.clone())?;
    budget_time(elapsed, Duration::from_secs(1), detail)
}

fn eq2_identity() -> Check {
    let l = 20.0;
    let weights = [l, -2.0, 1.0 / l];
    let worst = delta_k_grid(l, 40.0, 401)
        .iter()
        .map(|&dk| {
            let a = lineshape_analytic(dk, l);
            (lineshape_weighted_at(&weights, l, 1024, dk) - a).abs() / a
        })
        .fold(0.0, f64::max);
    require(worst < 1e-3, format!("max rel. deviation {worst:.2e} over |dk| <= 40/L at 1024 panels"))
}

struct FitTrial {
    name: &'static str,
    truth: f64,
    estimate: f64,
}

fn fit_round_trips() -> Check {
    let start = Instant::now();
    let device = Device::reference();
    let config = RegistryConfig::for_device(&device).map_err(|e| e.to_string())?;
    let seeds = 30u64;
    let mut trials = Vec::new();
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        // sin²(√(η_nor·P)·L) saturation, 226 powers up to 225 mW.
        let (eta_max, eta_nor, l) = (0.9, 0.0274, 20.0);
        let clean: Vec<(f64, f64)> = (0..226)
            .map(|i| {
                let p = i as f64 * 1e-3;
                (p, eta_max * ((eta_nor * p).sqrt() * l).sin().powi(2))
            })
            .collect();
        let data = add_noise(&clean, &mut rng);
        let estimate = run_fit("saturation", &config, &data, &[("length_mm", 20.0)])?["eta_nor"];
        trials.push(FitTrial { name: "saturation", truth: eta_nor, estimate });

        // Pump scan through a sinc² phase-matching peak.
        let (amp, center, offset) = (1.0, 2152.9 + rng.random_range(-0.5..0.5), 0.0);
        let clean: Vec<(f64, f64)> = (0..=400)
            .map(|i| {
                let x = center - 10.0 + 0.05 * i as f64;
                (x, amp * sinc(0.5 * config.scan_slope * (x - center) * l).powi(2) + offset)
            })
            .collect();
        let data = add_noise(&clean, &mut rng);
        let estimate = run_fit("sinc2_scan", &config, &data, &[])?["center"];
        trials.push(FitTrial { name: "sinc2_scan", truth: center, estimate });
    }
    let elapsed = start.elapsed();
    let score = |name: &str, ok: &dyn Fn(&FitTrial) -> bool| trials.iter().filter(|t| t.name == name && ok(t)).count();
    let sat = score("saturation", &|t| ((t.estimate - t.truth) / t.truth).abs() < 0.01);
    let scan = score("sinc2_scan", &|t| (t.estimate - t.truth).abs() < 0.01);
    let worst_scan = trials
        .iter()
        .filter(|t| t.name == "sinc2_scan")
        .map(|t| (t.estimate - t.truth).abs())
        .fold(0.0, f64::max);
    let needed = (0.95 * seeds as f64).ceil() as usize;
    let detail = format!(
        "saturation {sat}/{seeds} within 1 %, sinc2 scan {scan}/{seeds} within 0.01 nm (worst {worst_scan:.4} nm)"
    );
    require(sat >= needed && scan >= needed, detail.clone())?;
    budget_time(elapsed, Duration::from_secs(30), detail)
}

fn add_noise(clean: &[(f64, f64)], rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    let peak = clean.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let noise = Normal::new(0.0, 0.01 * peak).unwrap();
    clean.iter().map(|&(x, y)| (x, y + noise.sample(rng))).collect()
}

fn run_fit(
    name: &str,
    config: &RegistryConfig,
    data: &[(f64, f64)],
    fixed: &[(&str, f64)],
) -> std::result::Result<BTreeMap<String, f64>, String> {
    let (model, initial) = registry_model(name, config, data).map_err(|e| e.to_string())?;
    let mut fixed_map = model.default_fixed();
    fixed_map.extend(fixed.iter().map(|(k, v)| (k.to_string(), *v)));
    let start = grid_seed(&model, data, &initial, &fixed_map);
    let options = FitOptions {
        fixed: fixed_map,
        ..FitOptions::default()
    };
    let result = fit(&model, data, &start, &options).map_err(|e| format!("{name}: {e}"))?;
    Ok(model.parameter_names().iter().cloned().zip(result.parameters).collect())
}

fn qpm_round_trips() -> Check {
    let device = Device::reference();
    let provider = device.step1.provider.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_period = 0.0f64;
    let mut worst_pump = 0.0f64;
    for i in 0..100 {
        let t = rng.random_range(20.0..200.0);
        let pump = rng.random_range(1900.0..2500.0);
        let order = [1u32, 3, 5][rng.random_range(0..3)];
        let (kind, input) = if i % 2 == 0 {
            (ProcessKind::Dfg, rng.random_range(600.0..1000.0))
        } else {
            (ProcessKind::Sfg, rng.random_range(3000.0..5500.0))
        };
        let process = ProcessSpec::new(kind, nm(input), nm(pump)).map_err(|e| e.to_string())?;
        let mut section = SectionSpec::new(SectionRole::Step1, 20.0, 10.0, order, t, provider.clone()).map_err(|e| e.to_string())?;
        section.poling_period_um = solve_poling_period(&section, &process, t).map_err(|e| e.to_string())?;
        worst_period = worst_period.max(phase_mismatch(&section, &process, t).map_err(|e| e.to_string())?.abs());

        let window = PumpWindow {
            lo_nm: pump - 20.0,
            hi_nm: pump + 20.0,
        };
        let solved = solve_phasematched_pump(&section, kind, nm(input), t, window).map_err(|e| e.to_string())?;
        let dk = phase_mismatch(&section, &process.with_pump(solved).map_err(|e| e.to_string())?, t).map_err(|e| e.to_string())?;
        worst_pump = worst_pump.max(dk.abs());
    }
    let degenerate = find_degenerate_point(&device, 20.0, 150.0, DEFAULT_PUMP_WINDOW).map_err(|e| e.to_string())?;
    require(
        worst_period < 1e-9 && worst_pump < 1e-9 && degenerate.transfer_step1 > 0.99 && degenerate.transfer_step2 > 0.99,
        format!(
            "max |dk| {worst_period:.1e} (period) / {worst_pump:.1e} (pump) rad/mm over 100 configs; degenerate point {:.3} C at {:.3} nm, transfers {:.4} / {:.4}",
            degenerate.temperature_c, degenerate.pump_nm, degenerate.transfer_step1, degenerate.transfer_step2
        ),
    )
}

fn linear_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

fn tuning_signs() -> Check {
    let device = Device::reference();
    let offsets: Vec<f64> = (0..=22).map(|i| -6.0 + 0.5 * i as f64).collect();
    let curve = tuning_curve(&device, &offsets).map_err(|e| e.to_string())?;
    let targets: Vec<(f64, f64)> = curve.iter().filter_map(|p| p.target_nm.map(|t| (p.dt_c, t))).collect();
    let complete = targets.len() == offsets.len();
    let decreasing = complete && targets.windows(2).all(|w| w[1].1 < w[0].1);
    let tuning_slope = linear_slope(&targets);

    let section = &device.step2;
    let pump = device.operating_point.pump;
    let mut peaks = Vec::new();
    for &dt in &offsets {
        let t = section.temperature_c + dt;
        if let Some(peak) = thermal_sfg_peak(section, pump, t, TARGET_WINDOW_NM).map_err(|e| e.to_string())? {
            peaks.push((t, peak.nm()));
        }
    }
    let peak_complete = peaks.len() == offsets.len();
    let peak_decreasing = peak_complete && peaks.windows(2).all(|w| w[1].1 < w[0].1);
    let peak_slope = linear_slope(&peaks);
    require(
        decreasing && peak_decreasing,
        format!(
            "target slope {tuning_slope:+.4} nm/C ({}), thermal-SFG peak slope {peak_slope:+.4} nm/C ({})",
            if decreasing { "negative" } else { "not negative" },
            if peak_decreasing { "negative" } else { "not negative" },
        ),
    )
}

/// Even TE mode of a symmetric slab: u·tan(u) = √(V² − u²), u = κ·a/2.
fn slab_beta_sq(n_core: f64, n_clad: f64, width_um: f64, wavelength_um: f64) -> f64 {
    let k0 = 2.0 * PI / wavelength_um;
    let v = 0.5 * k0 * width_um * (n_core * n_core - n_clad * n_clad).sqrt();
    let g = |u: f64| u * u.tan() - (v * v - u * u).sqrt();
    let (mut lo, mut hi) = (0.0, v.min(0.5 * PI) * (1.0 - 1e-15));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let kappa = 2.0 * lo / width_um;
    k0 * k0 * n_core * n_core - kappa * kappa
}

fn mode_solver() -> Check {
    let start = Instant::now();
    let (n_core, n_clad, lambda) = (2.2, 2.15, 1.55);
    let core = Arc::new(SellmeierModel::constant("slab core", n_core).map_err(|e| e.to_string())?);
    let clad = Arc::new(SellmeierModel::constant("slab cladding", n_clad).map_err(|e| e.to_string())?);
    // A full-height core strip between identical claddings: separable into the slab
    // profile across x and the lowest wall mode sin(πy/H) along y.
    let height = 20.0;
    let slab = WaveguideGeometry {
        core_width_um: 4.8,
        core_height_um: height - 1e-9,
        core_material: core,
        substrate_material: clad,
        superstrate_index: n_clad,
        grid_nx: 128,
        grid_ny: 32,
        window_width_um: 25.6,
        window_height_um: height,
    };
    let solved = solve_modes(&slab, nm(1e3 * lambda), 25.0, 1).map_err(|e| e.to_string())?.modes[0].n_eff;
    let k0 = 2.0 * PI / lambda;
    let oracle = (slab_beta_sq(n_core, n_clad, 4.8, lambda) - (PI / height).powi(2)).sqrt() / k0;
    let slab_err = (solved - oracle).abs();

    let device = Device::reference();
    let geometry = device.geometry.clone().ok_or("reference device has no geometry")?;
    let (wl, t) = (nm(1561.6), device.step2.temperature_c);
    let coarse = solve_modes(&geometry, wl, t, 1).map_err(|e| e.to_string())?.modes[0].n_eff;
    let default_time = start.elapsed();
    let fine_geometry = geometry.with_grid(2 * geometry.grid_nx, 2 * geometry.grid_ny);
    let fine = solve_modes(&fine_geometry, wl, t, 1).map_err(|e| e.to_string())?.modes[0].n_eff;
    let refinement = (fine - coarse).abs();
    let detail = format!(
        "slab n_eff {solved:.6} vs analytic {oracle:.6} (|diff| {slab_err:.1e}); refinement change {refinement:.1e} ({}x{} -> {}x{})",
        geometry.grid_nx,
        geometry.grid_ny,
        fine_geometry.grid_nx,
        fine_geometry.grid_ny
    );
    require(slab_err < 5e-4 && refinement < 1e-4, detail.clone())?;
    budget_time(default_time, Duration::from_secs(10), detail)
}

fn fwhm(x: &[f64], y: &[f64]) -> Option<f64> {
    let (peak, &top) = y.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
    let half = 0.5 * top;
    let cross = |i: usize, j: usize| x[i] + (half - y[i]) * (x[j] - x[i]) / (y[j] - y[i]);
    let left = (1..=peak).rev().find(|&i| y[i - 1] < half).map(|i| cross(i - 1, i))?;
    let right = (peak..y.len() - 1).find(|&i| y[i + 1] < half).map(|i| cross(i, i + 1))?;
    Some(right - left)
}

fn spectrum_conversion() -> Check {
    let device = Device::reference();
    let pump = device.operating_point.pump;
    // Broadband input: Gaussian of 10 nm FWHM around the zero-phonon line.
    let sigma = 10.0 / (2.0 * (2.0 * 2f64.ln()).sqrt());
    let input_x: Vec<f64> = (0..=6000).map(|i| 634.2 + 0.001 * i as f64).collect();
    let input_y: Vec<f64> = input_x.iter().map(|x| (-(x - 637.2f64).powi(2) / (2.0 * sigma * sigma)).exp()).collect();
    let input = Spectrum::new(input_x, input_y).map_err(|e| e.to_string())?;
    let converted = convert_device_spectrum(&device, &input).map_err(|e| e.to_string())?;
    let out_fwhm = fwhm(converted.spectrum.wavelengths_nm(), converted.spectrum.intensities()).ok_or("output has no half-maximum crossings")?;

    // Device transfer against output wavelength, back-propagated through both steps.
    let grid: Vec<f64> = (0..=20000).map(|i| 1555.0 + 0.0006 * i as f64).collect();
    let transfer: Vec<f64> = grid
        .iter()
        .map(|&out| {
            let mid = sfg_output(nm(out), pump);
            let signal = sfg_output(mid, pump);
            let dk1 = phase_mismatch(&device.step1, &ProcessSpec::dfg(signal, pump).unwrap(), device.step1.temperature_c).unwrap();
            let dk2 = phase_mismatch(&device.step2, &ProcessSpec::dfg(mid, pump).unwrap(), device.step2.temperature_c).unwrap();
            qpm_transfer(dk1, device.step1.length_mm) * qpm_transfer(dk2, device.step2.length_mm)
        })
        .collect();
    let device_fwhm = fwhm(&grid, &transfer).ok_or("transfer curve has no half-maximum crossings")?;
    let rel = (out_fwhm - device_fwhm).abs() / device_fwhm;
    require(
        rel < 0.05,
        format!(
            "output FWHM {out_fwhm:.4} nm vs transfer FWHM {device_fwhm:.4} nm ({:.2} % apart, {} samples dropped)",
            100.0 * rel,
            converted.dropped
        ),
    )
}

fn strip_timestamp(text: &str) -> String {
    text.lines().filter(|l| !l.contains("timestamp_unix")).collect::<Vec<_>>().join("\n")
}

fn determinism() -> Check {
    let bin = env!("CARGO_BIN_EXE_cascade");
    let device = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/devices/paper.json");
    let device = device.to_str().unwrap();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let mut spectrum = String::from("wavelength_nm,intensity\n");
    for i in 0..=400 {
        let x = 636.2 + 0.005 * i as f64;
        spectrum.push_str(&format!("{x},{}\n", (-(x - 637.2f64).powi(2)).exp()));
    }
    std::fs::write(d.join("in.csv"), spectrum).map_err(|e| e.to_string())?;
    let mut power = String::from("power_W,eta\n");
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for i in 0..226 {
        let p = i as f64 * 1e-3;
        let y = 0.9 * ((0.0274 * p).sqrt() * 20.0).sin().powi(2) + rng.random_range(-0.005..0.005);
        power.push_str(&format!("{p},{y}\n"));
    }
    std::fs::write(d.join("eff.csv"), power).map_err(|e| e.to_string())?;

    let commands: Vec<Vec<&str>> = vec![
        vec!["map", "--device", device, "--t", "50:70:11", "--pump", "2140:2165:26"],
        vec!["tune", "--device", device, "--dt=-6:5:12"],
        vec!["efficiency", "--eta-nor1", "0.0274", "--eta-nor2", "0.03", "--power", "0:0.225:46", "--device", device],
        vec!["noise", "--total", "142", "--dark", "135", "--det-eff", "0.72", "--bw-ghz", "4", "--transmission", "0.1457"],
        vec!["lineshape", "--device", device, "--grid", "1550:1565:61"],
        vec!["lineshape", "--device", device, "--grid", "1550:1565:61", "--model", "eq2", "--planck-k", "332.41"],
        vec!["convert-spectrum", "--device", device, "--input", "in.csv"],
        vec!["fit", "--model", "saturation", "--data", "eff.csv", "--fixed", "L=20"],
        vec!["solve-device", "--device", device],
        vec!["modes", "--device", device, "--wavelength", "1561.6", "--temperature", "59.26", "--count", "2"],
        vec!["parasitics", "--device", device],
    ];
    let mut mismatched = Vec::new();
    for (i, args) in commands.iter().enumerate() {
        let mut outputs = Vec::new();
        for (run, threads) in ["1", "4", "4"].iter().enumerate() {
            let out = d.join(format!("out{i}_{run}"));
            let status = Command::new(bin)
                .current_dir(d)
                .env("CASCADE_THREADS", threads)
                .env_remove("SOURCE_DATE_EPOCH")
                .args(args)
                .arg("-o")
                .arg(&out)
                .output()
                .map_err(|e| e.to_string())?;
            if !status.status.success() {
                return Err(format!("{} failed: {}", args[0], String::from_utf8_lossy(&status.stderr).trim()));
            }
            outputs.push(strip_timestamp(&std::fs::read_to_string(&out).map_err(|e| e.to_string())?));
        }
        if outputs.windows(2).any(|w| w[0] != w[1]) {
            mismatched.push(args[0]);
        }
    }
    require(
        mismatched.is_empty(),
        format!(
            "{} invocations x 3 runs (1 and 4 threads) identical after dropping the timestamp line{}",
            commands.len(),
            if mismatched.is_empty() { String::new() } else { format!("; differing: {mismatched:?}") }
        ),
    )
}

fn main() {
    let criteria: [Criterion; 12] = [
        (1, "energy-conservation chain", energy_chain),
        (2, "loss-budget arithmetic", loss_budget),
        (3, "noise accounting", noise_accounting),
        (4, "parasitic enumeration", parasitics),
        (5, "closed-form line shape vs quadrature", eq1_oracle),
        (6, "weighted line shape identity", eq2_identity),
        (7, "fit round trips", fit_round_trips),
        (8, "QPM solver round trips", qpm_round_trips),
        (9, "sign-level tuning properties", tuning_signs),
        (10, "mode solver", mode_solver),
        (11, "spectrum conversion", spectrum_conversion),
        (12, "CLI determinism", determinism),
    ];
    let mut unexpected = Vec::new();
    let mut turned_green = Vec::new();
    for (id, title, check) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed().as_secs_f64();
        let known = KNOWN_RED.contains(&id);
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d.as_str()),
            Err(d) => ("FAIL", d.as_str()),
        };
        let note = if known && outcome.is_err() { " [known red]" } else { "" };
        println!("criterion {id:>2} {tag} {title}: {detail} [{elapsed:.2} s]{note}");
        match (outcome.is_ok(), known) {
            (false, false) => unexpected.push(id),
            (true, true) => turned_green.push(id),
            _ => {}
        }
    }
    if !turned_green.is_empty() {
        println!("known-red criteria now passing: {turned_green:?}");
    }
    if !unexpected.is_empty() {
        println!("failing criteria: {unexpected:?}");
        std::process::exit(1);
    }
}
