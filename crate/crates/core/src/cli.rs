//! `cascade` command-line front end.
//!
//! Exit codes: 0 success, 2 usage error, 3 any domain, range, file or solver error.
//! Errors are reported on stderr as a single `code=<code>, msg=<message>` line.
//! Artifacts are written to a temporary file beside the target and renamed into place.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::conversion::{
    budget_transmission, convert_spectrum, noise_report, step_efficiency, LossBudget, NoiseCounts,
    StepEfficiencyModel,
};
use crate::device::Device;
use crate::error::{Error, Result};
use crate::fitting::{fit, grid_seed, registry_model, FitOptions, FitReport, RegistryConfig};
use crate::modesolver::{check_window_convergence, solve_modes};
use crate::noisemodel::{
    enumerate_parasitics, lineshape_analytic, lineshape_weighted_at, thermal_driver, thermal_sfg_mismatch,
    LineShapeParams, ThermalWeighting, DEFAULT_PANELS,
};
use crate::qpm::{
    phase_mismatch, phasematch_map, qpm_transfer, tuning_csv, tuning_curve, ProcessSpec, TARGET_WINDOW_NM,
};
use crate::spectral::{dfg_target, Wavelength};
use crate::spectrum::Spectrum;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_FAILURE: i32 = 3;
/// Worker-count override when `--threads` is absent.
pub const THREADS_ENV: &str = "CASCADE_THREADS";

/// Inclusive grid `lo:hi:count`.
#[derive(Debug, Clone, PartialEq)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| if i + 1 == self.count { self.hi } else { self.lo + step * i as f64 })
            .collect()
    }
}

impl FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, count] = parts[..] else {
            return Err(format!("expected lo:hi:count, got '{s}'"));
        };
        let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("'{v}': {e}"));
        let (lo, hi) = (num(lo)?, num(hi)?);
        let count: usize = count.trim().parse().map_err(|e| format!("count '{count}': {e}"))?;
        if !(lo.is_finite() && hi.is_finite()) {
            return Err("range bounds must be finite".into());
        }
        match count {
            0 => Err("range count must be at least 1".into()),
            1 if lo != hi => Err("a single-point range needs lo == hi".into()),
            _ if count > 1 && !(hi > lo) => Err("range needs hi > lo".into()),
            _ => Ok(Range { lo, hi, count }),
        }
    }
}

/// Closed interval `lo:hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window(pub f64, pub f64);

impl FromStr for Window {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got '{s}'"))?;
        let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("'{v}': {e}"));
        let w = Window(num(lo)?, num(hi)?);
        if w.1 > w.0 {
            Ok(w)
        } else {
            Err("window needs hi > lo".into())
        }
    }
}

fn parse_assignment(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, got '{s}'"))?;
    let v = v.trim().parse::<f64>().map_err(|e| format!("'{v}': {e}"))?;
    Ok((k.trim().to_string(), v))
}

#[derive(Debug, Parser)]
#[command(name = "cascade", version, about = "Cascaded DFG waveguide design, simulation and fitting")]
struct Cli {
    /// Worker threads for grid evaluations (default: CASCADE_THREADS or all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    threads: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct DeviceArg {
    /// Device description (JSON).
    #[arg(long)]
    device: PathBuf,
}

#[derive(Debug, Args)]
struct OutputArg {
    /// Artifact path.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LineModel {
    Eq1,
    Eq2,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Conversion heatmaps of both steps over temperature and pump wavelength.
    Map {
        #[command(flatten)]
        device: DeviceArg,
        /// Temperature grid, °C.
        #[arg(long = "t")]
        temperature: Range,
        /// Pump grid, nm.
        #[arg(long)]
        pump: Range,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Target wavelength versus section-2 temperature offset.
    Tune {
        #[command(flatten)]
        device: DeviceArg,
        /// Temperature offsets of section 2, °C.
        #[arg(long, allow_hyphen_values = true)]
        dt: Range,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Single-step and cascaded efficiency against pump power.
    Efficiency {
        /// Normalised efficiency of step 1, 1/(W·mm²).
        #[arg(long, allow_negative_numbers = true)]
        eta_nor1: f64,
        /// Normalised efficiency of step 2, 1/(W·mm²).
        #[arg(long, allow_negative_numbers = true)]
        eta_nor2: f64,
        /// Section length, mm.
        #[arg(long, allow_negative_numbers = true, default_value_t = 20.0)]
        length: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
        eta_max: f64,
        /// Pump power grid, W.
        #[arg(long)]
        power: Range,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        dk1: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        dk2: f64,
        /// Device whose loss budget gives the external efficiency column.
        #[arg(long)]
        device: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Noise spectral density from detector count rates.
    Noise {
        #[arg(long, allow_negative_numbers = true)]
        total: f64,
        #[arg(long, allow_negative_numbers = true)]
        dark: f64,
        #[arg(long, allow_negative_numbers = true)]
        det_eff: f64,
        #[arg(long, allow_negative_numbers = true)]
        bw_ghz: f64,
        /// External transmission; defaults to the device loss budget or 1.
        #[arg(long, allow_negative_numbers = true)]
        transmission: Option<f64>,
        #[arg(long)]
        device: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Thermal-SFG line shape on the section-2 grating.
    Lineshape {
        #[command(flatten)]
        device: DeviceArg,
        /// Output wavelength grid, nm.
        #[arg(long)]
        grid: Range,
        #[arg(long, value_enum, default_value = "eq1")]
        model: LineModel,
        /// Positional weights a0,a1,... (eq2; default reproduces eq1).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        weights: Option<Vec<f64>>,
        /// Pump wavelength, nm (default: operating point).
        #[arg(long, allow_negative_numbers = true)]
        pump: Option<f64>,
        /// Section-2 temperature, °C (default: device value).
        #[arg(long, allow_negative_numbers = true)]
        temperature: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_PANELS)]
        panels: usize,
        /// Weight by the blackbody spectrum of the driver at this temperature (K).
        #[arg(long, allow_negative_numbers = true)]
        planck_k: Option<f64>,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Push an input spectrum through both conversion steps.
    ConvertSpectrum {
        #[command(flatten)]
        device: DeviceArg,
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Least-squares fit of a registry model to two-column CSV data.
    Fit {
        #[arg(long)]
        model: String,
        #[arg(long)]
        data: PathBuf,
        /// Hold a parameter fixed, e.g. `L=20` or `length_mm=20`.
        #[arg(long, value_parser = parse_assignment)]
        fixed: Vec<(String, f64)>,
        /// Device supplying detuning slopes (default: built-in reference device).
        #[arg(long)]
        device: Option<PathBuf>,
        /// Skip the lattice search and start from the heuristic guess.
        #[arg(long)]
        no_grid: bool,
        #[arg(long, default_value_t = 500)]
        max_iterations: usize,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Replace `solve_at` entries by solved poling periods.
    SolveDevice {
        #[command(flatten)]
        device: DeviceArg,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Guided modes of the device cross-section.
    Modes {
        #[command(flatten)]
        device: DeviceArg,
        #[arg(long, allow_negative_numbers = true)]
        wavelength: f64,
        #[arg(long, allow_negative_numbers = true)]
        temperature: f64,
        #[arg(long, default_value_t = 2)]
        count: usize,
        /// Also write the fundamental field as CSV.
        #[arg(long)]
        field: Option<PathBuf>,
        /// Re-solve on a 1.5× larger window and report the index change.
        #[arg(long)]
        check_window: bool,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Parasitic processes that reach a detection window.
    Parasitics {
        #[command(flatten)]
        device: DeviceArg,
        #[arg(long, allow_negative_numbers = true)]
        pump: Option<f64>,
        /// Detection window lo:hi, nm.
        #[arg(long, default_value = "1480:1620")]
        window: Window,
        #[command(flatten)]
        out: OutputArg,
    },
}

/// Runs the CLI with `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let threads = cli
        .threads
        .map(|n| n as usize)
        .or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok()))
        .filter(|&n| n > 0);
    match execute(cli.command, threads, &args) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("code={}, msg={}", e.code(), e.to_string().replace(['\n', '\r'], " "));
            EXIT_FAILURE
        }
    }
}

fn execute(command: Command, threads: Option<usize>, argv: &[OsString]) -> Result<()> {
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Numeric(format!("thread pool: {e}")))?
            .install(|| dispatch(command, argv)),
        None => dispatch(command, argv),
    }
}

struct Provenance {
    command: String,
    device_sha256: String,
    timestamp: String,
}

impl Provenance {
    fn new(argv: &[OsString], device: Option<&Path>) -> Result<Self> {
        // The output path is left out so artifacts do not depend on where they are written.
        let mut words = Vec::new();
        let mut skip = false;
        for a in argv.iter().skip(1) {
            let a = a.to_string_lossy();
            if skip {
                skip = false;
                continue;
            }
            if a == "-o" || a == "--output" {
                skip = true;
                continue;
            }
            if a.starts_with("--output=") || (a.starts_with("-o") && a.len() > 2) {
                continue;
            }
            words.push(a.into_owned());
        }
        let device_sha256 = match device {
            Some(p) => {
                let bytes = std::fs::read(p).map_err(|e| Error::io(p, e))?;
                format!("{:x}", Sha256::digest(&bytes))
            }
            None => "none".to_string(),
        };
        let seconds = std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|v| v.parse::<u64>().ok())
            .unwrap_or_else(|| {
                std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0)
            });
        Ok(Self {
            command: format!("cascade {}", words.join(" ")),
            device_sha256,
            timestamp: seconds.to_string(),
        })
    }

    fn csv_header(&self) -> String {
        format!(
            "# tool: cascade {}\n# device_sha256: {}\n# command: {}\n# timestamp_unix: {}\n",
            env!("CARGO_PKG_VERSION"),
            self.device_sha256,
            self.command,
            self.timestamp
        )
    }

    fn json(&self) -> Value {
        json!({
            "tool": "cascade",
            "version": env!("CARGO_PKG_VERSION"),
            "device_sha256": self.device_sha256,
            "command": self.command,
            "timestamp_unix": self.timestamp,
        })
    }
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(contents.as_bytes()).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn write_csv(path: &Path, provenance: &Provenance, body: &str) -> Result<()> {
    write_atomic(path, &format!("{}{}", provenance.csv_header(), body))
}

fn write_json(path: &Path, provenance: &Provenance, value: impl Serialize) -> Result<()> {
    let mut value = serde_json::to_value(value).map_err(|e| Error::Numeric(e.to_string()))?;
    match &mut value {
        Value::Object(map) => {
            map.insert("provenance".into(), provenance.json());
        }
        other => {
            value = json!({ "data": other.take(), "provenance": provenance.json() });
        }
    }
    let mut text = serde_json::to_string_pretty(&value).map_err(|e| Error::Numeric(e.to_string()))?;
    text.push('\n');
    write_atomic(path, &text)
}

fn read_xy(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let context = |n: usize| format!("{} line {}", path.display(), n + 1);
    let mut rows = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let (n, header) = rows.next().ok_or_else(|| Error::parse(path.display().to_string(), "empty data file"))?;
    if header.split(',').count() != 2 {
        return Err(Error::parse(context(n), "expected a two-column header"));
    }
    rows.map(|(n, line)| {
        let mut f = line.split(',').map(|v| v.trim().parse::<f64>());
        match (f.next(), f.next(), f.next()) {
            (Some(Ok(x)), Some(Ok(y)), None) => Ok((x, y)),
            _ => Err(Error::parse(context(n), format!("expected two numbers, got '{line}'"))),
        }
    })
    .collect()
}

fn nm(v: f64) -> Result<Wavelength> {
    Wavelength::from_nm(v)
}

fn dispatch(command: Command, argv: &[OsString]) -> Result<()> {
    match command {
        Command::Map {
            device,
            temperature,
            pump,
            out,
        } => {
            let prov = Provenance::new(argv, Some(&device.device))?;
            let d = Device::load(&device.device)?;
            let map = phasematch_map(&d, &temperature.values(), &pump.values())?;
            write_csv(&out.output, &prov, &map.to_csv())
        }
        Command::Tune { device, dt, out } => {
            let prov = Provenance::new(argv, Some(&device.device))?;
            let d = Device::load(&device.device)?;
            let curve = tuning_curve(&d, &dt.values())?;
            write_csv(&out.output, &prov, &tuning_csv(&curve))
        }
        Command::Efficiency {
            eta_nor1,
            eta_nor2,
            length,
            eta_max,
            power,
            dk1,
            dk2,
            device,
            out,
        } => {
            let prov = Provenance::new(argv, device.as_deref())?;
            let budget = match &device {
                Some(p) => Device::load(p)?.loss_budget,
                None => LossBudget::default(),
            };
            let transmission = budget_transmission(&budget)?;
            let m1 = StepEfficiencyModel::new(eta_nor1, length, eta_max)?;
            let m2 = StepEfficiencyModel::new(eta_nor2, length, eta_max)?;
            let mut body = String::from("power_W,eta_step1,eta_step2,eta_internal,eta_external\n");
            for p in power.values() {
                let e1 = step_efficiency(&m1, p, dk1)?;
                let e2 = step_efficiency(&m2, p, dk2)?;
                let _ = writeln!(body, "{},{},{},{},{}", p, e1, e2, e1 * e2, e1 * e2 * transmission);
            }
            write_csv(&out.output, &prov, &body)
        }
        Command::Noise {
            total,
            dark,
            det_eff,
            bw_ghz,
            transmission,
            device,
            out,
        } => {
            let prov = Provenance::new(argv, device.as_deref())?;
            let external_transmission = match (transmission, &device) {
                (Some(t), _) => t,
                (None, Some(p)) => budget_transmission(&Device::load(p)?.loss_budget)?,
                (None, None) => 1.0,
            };
            let report = noise_report(&NoiseCounts {
                total_rate_cps: total,
                dark_rate_cps: dark,
                detector_efficiency: det_eff,
                bandwidth_ghz: bw_ghz,
                external_transmission,
            })?;
            write_json(&out.output, &prov, report)
        }
        Command::Lineshape {
            device,
            grid,
            model,
            weights,
            pump,
            temperature,
            panels,
            planck_k,
            out,
        } => {
            let prov = Provenance::new(argv, Some(&device.device))?;
            let d = Device::load(&device.device)?;
            let pump = pump.map(nm).transpose()?.unwrap_or(d.operating_point.pump);
            let section = &d.step2;
            let t = temperature.unwrap_or(section.temperature_c);
            let l = section.length_mm;
            let params = match (model, weights) {
                (LineModel::Eq1, Some(_)) => return Err(Error::domain("--weights applies to the eq2 model only")),
                (LineModel::Eq1, None) => None,
                (LineModel::Eq2, w) => {
                    let mut p = match w {
                        Some(w) => LineShapeParams::new(l, w)?,
                        None => LineShapeParams::distributed_source(l)?,
                    };
                    p.panels = panels;
                    p.validate()?;
                    Some(p)
                }
            };
            let weighting = match planck_k {
                None => ThermalWeighting::Flat,
                Some(k) => {
                    let center = nm(0.5 * (grid.lo + grid.hi))?;
                    ThermalWeighting::Planck {
                        temperature_k: k,
                        center: thermal_driver(center, pump)?,
                    }
                }
            };
            let mut body = String::from("wavelength_nm,intensity\n");
            for wl in grid.values() {
                let dk = thermal_sfg_mismatch(section, pump, t, wl)?;
                let base = match &params {
                    None => lineshape_analytic(dk, l),
                    Some(p) => lineshape_weighted_at(&p.weights, p.length_mm, p.panels, dk),
                };
                let w = weighting.weight(thermal_driver(nm(wl)?, pump)?)?;
                let _ = writeln!(body, "{},{}", wl, base * w);
            }
            write_csv(&out.output, &prov, &body)
        }
        Command::ConvertSpectrum { device, input, out } => {
            let prov = Provenance::new(argv, Some(&device.device))?;
            let d = Device::load(&device.device)?;
            let spectrum = Spectrum::load(&input)?;
            let converted = convert_device_spectrum(&d, &spectrum)?;
            let body = format!("# dropped_samples: {}\n{}", converted.dropped, converted.spectrum.to_csv());
            write_csv(&out.output, &prov, &body)
        }
        Command::Fit {
            model,
            data,
            fixed,
            device,
            no_grid,
            max_iterations,
            out,
        } => {
            let prov = Provenance::new(argv, device.as_deref())?;
            let d = match &device {
                Some(p) => Device::load(p)?,
                None => Device::reference(),
            };
            let points = read_xy(&data)?;
            let config = RegistryConfig::for_device(&d)?;
            let (fit_model, initial) = registry_model(&model, &config, &points)?;
            let mut fixed_map: BTreeMap<String, f64> = fit_model.default_fixed();
            for (k, v) in fixed {
                let name = if k == "L" { "length_mm".to_string() } else { k };
                fixed_map.insert(name, v);
            }
            let start = if no_grid {
                initial
            } else {
                grid_seed(&fit_model, &points, &initial, &fixed_map)
            };
            let options = FitOptions {
                max_iterations,
                fixed: fixed_map,
            };
            let result = fit(&fit_model, &points, &start, &options)?;
            write_json(&out.output, &prov, FitReport::new(&fit_model, &result, &points)?)
        }
        Command::SolveDevice { device, out } => {
            let prov = Provenance::new(argv, Some(&device.device))?;
            let d = Device::load(&device.device)?;
            let device_dir = device.device.parent().unwrap_or(Path::new("."));
            let out_dir = match out.output.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            let text = d.solved_json(device_dir, out_dir)?;
            let mut value: Value = serde_json::from_str(&text).map_err(|e| Error::Numeric(e.to_string()))?;
            value["provenance"] = prov.json();
            let mut text = serde_json::to_string_pretty(&value).map_err(|e| Error::Numeric(e.to_string()))?;
            text.push('\n');
            write_atomic(&out.output, &text)
        }
        Command::Modes {
            device,
            wavelength,
            temperature,
            count,
            field,
            check_window,
            out,
        } => {
            let prov = Provenance::new(argv, Some(&device.device))?;
            let d = Device::load(&device.device)?;
            let geometry = d
                .geometry
                .clone()
                .ok_or_else(|| Error::Capability("device has no geometry block".into()))?;
            if count == 0 {
                return Err(Error::domain("--count must be at least 1"));
            }
            let wl = nm(wavelength)?;
            let set = solve_modes(&geometry, wl, temperature, count)?;
            let window = if check_window {
                Some(check_window_convergence(&geometry, wl, temperature, 1.5, 1e-4)?)
            } else {
                None
            };
            if let Some(path) = &field {
                let mode = set
                    .modes
                    .first()
                    .ok_or_else(|| Error::Capability("no guided mode to dump".into()))?;
                write_csv(path, &prov, &mode.field_csv())?;
            }
            let value = json!({
                "wavelength_nm": wavelength,
                "temperature_C": temperature,
                "requested": count,
                "truncated": set.truncated,
                "iterations": set.iterations,
                "modes": set.modes,
                "window_check": window,
            });
            write_json(&out.output, &prov, value)
        }
        Command::Parasitics {
            device,
            pump,
            window,
            out,
        } => {
            let prov = Provenance::new(argv, Some(&device.device))?;
            let d = Device::load(&device.device)?;
            let pump = pump.map(nm).transpose()?.unwrap_or(d.operating_point.pump);
            let processes = enumerate_parasitics(&d, pump, (window.0, window.1))?;
            write_json(
                &out.output,
                &prov,
                json!({ "pump_nm": pump.nm(), "window_nm": [window.0, window.1], "processes": processes }),
            )
        }
    }
}

/// Maps signal wavelengths through both DFG steps at the operating pump and scales
/// each sample by the cascaded sinc² transfer at the section temperatures.
pub fn convert_device_spectrum(device: &Device, input: &Spectrum) -> Result<crate::conversion::ConvertedSpectrum> {
    let pump = device.operating_point.pump;
    let chain = |signal_nm: f64| -> Result<(Wavelength, Wavelength, Wavelength)> {
        let signal = nm(signal_nm)?;
        let mid = dfg_target(signal, pump)?;
        Ok((signal, mid, dfg_target(mid, pump)?))
    };
    convert_spectrum(
        input,
        |wl| Ok(chain(wl)?.2.nm()),
        |wl| {
            let (signal, mid, _) = chain(wl)?;
            let dk1 = phase_mismatch(&device.step1, &ProcessSpec::dfg(signal, pump)?, device.step1.temperature_c)?;
            let dk2 = phase_mismatch(&device.step2, &ProcessSpec::dfg(mid, pump)?, device.step2.temperature_c)?;
            Ok(qpm_transfer(dk1, device.step1.length_mm) * qpm_transfer(dk2, device.step2.length_mm))
        },
    )
}

/// Default C-band detection window of the tunable filter, nm.
pub fn detection_window() -> (f64, f64) {
    TARGET_WINDOW_NM
}
