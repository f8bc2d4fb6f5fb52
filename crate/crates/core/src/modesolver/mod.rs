//! Scalar finite-difference eigenmode solver for a ridge waveguide cross-section.
//!
//! The transverse scalar Helmholtz equation
//! `∇²E + k0²·n²(x, y)·E = β²·E` is discretised with the 5-point stencil on a
//! cell-centred grid with zero-field window walls. Cell permittivities are the
//! area-weighted average of the regions overlapping each cell. The largest
//! eigenvalues β² are found by subspace inverse iteration on the shifted
//! operator `σ − A` (`σ = k0²·max n²`), which is positive definite and band
//! structured, so one band Cholesky factorisation serves every iteration.
//!
//! Layout: a rectangular core centred in the window, sitting on a substrate that
//! fills the window below the core. Everything else is superstrate.

mod banded;
mod marcatili;

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::dispersion::{sellmeier_index, SellmeierModel};
use crate::error::{Error, Result};
use crate::spectral::Wavelength;

use banded::BandCholesky;

pub use marcatili::marcatili_index;

const MIN_GRID: usize = 32;
const RESIDUAL_TARGET: f64 = 1e-11;
const MAX_ITERATIONS: usize = 2000;
const GUARD_VECTORS: usize = 4;

/// Cross-section of a ridge waveguide plus its discretisation.
#[derive(Debug, Clone)]
pub struct WaveguideGeometry {
    pub core_width_um: f64,
    pub core_height_um: f64,
    pub core_material: Arc<SellmeierModel>,
    pub substrate_material: Arc<SellmeierModel>,
    pub superstrate_index: f64,
    pub grid_nx: usize,
    pub grid_ny: usize,
    pub window_width_um: f64,
    pub window_height_um: f64,
}

impl WaveguideGeometry {
    /// Placeholder cross-section: 10 µm × 8 µm core, 30 µm × 24 µm window, 64×64 grid, air cover.
    pub fn placeholder(core: Arc<SellmeierModel>, substrate: Arc<SellmeierModel>) -> Self {
        Self {
            core_width_um: 10.0,
            core_height_um: 8.0,
            core_material: core,
            substrate_material: substrate,
            superstrate_index: 1.0,
            grid_nx: 64,
            grid_ny: 64,
            window_width_um: 30.0,
            window_height_um: 24.0,
        }
    }

    pub fn core_material(&self) -> &SellmeierModel {
        &self.core_material
    }

    pub fn with_grid(&self, nx: usize, ny: usize) -> Self {
        Self {
            grid_nx: nx,
            grid_ny: ny,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("core_width_um", self.core_width_um),
            ("core_height_um", self.core_height_um),
            ("window_width_um", self.window_width_um),
            ("window_height_um", self.window_height_um),
            ("superstrate_index", self.superstrate_index),
        ];
        for (label, v) in dims {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!("{label} must be positive, got {v}")));
            }
        }
        if self.core_width_um >= self.window_width_um || self.core_height_um >= self.window_height_um {
            return Err(Error::domain("window must strictly contain the core"));
        }
        if self.grid_nx < MIN_GRID || self.grid_ny < MIN_GRID {
            return Err(Error::domain(format!(
                "grid must be at least {MIN_GRID}x{MIN_GRID}, got {}x{}",
                self.grid_nx, self.grid_ny
            )));
        }
        Ok(())
    }

    fn core_bottom_um(&self) -> f64 {
        0.5 * (self.window_height_um - self.core_height_um)
    }

    fn core_left_um(&self) -> f64 {
        0.5 * (self.window_width_um - self.core_width_um)
    }

    /// Bulk indices (core, substrate, superstrate) at (λ, T).
    pub fn region_indices(&self, wavelength: Wavelength, temperature_c: f64) -> Result<(f64, f64, f64)> {
        Ok((
            sellmeier_index(&self.core_material, wavelength, temperature_c)?,
            sellmeier_index(&self.substrate_material, wavelength, temperature_c)?,
            self.superstrate_index,
        ))
    }

    /// Cell-averaged relative permittivity, row-major with x fastest.
    fn permittivity(&self, n_core: f64, n_sub: f64, n_sup: f64) -> Vec<f64> {
        let (nx, ny) = (self.grid_nx, self.grid_ny);
        let dx = self.window_width_um / nx as f64;
        let dy = self.window_height_um / ny as f64;
        let (x0, x1) = (self.core_left_um(), self.core_left_um() + self.core_width_um);
        let (y0, y1) = (self.core_bottom_um(), self.core_bottom_um() + self.core_height_um);
        let overlap = |a: f64, b: f64, lo: f64, hi: f64| (b.min(hi) - a.max(lo)).max(0.0);
        let (e_core, e_sub, e_sup) = (n_core * n_core, n_sub * n_sub, n_sup * n_sup);
        let mut eps = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            let (ya, yb) = (j as f64 * dy, (j + 1) as f64 * dy);
            let f_sub_y = overlap(ya, yb, 0.0, y0) / dy;
            let f_core_y = overlap(ya, yb, y0, y1) / dy;
            for i in 0..nx {
                let (xa, xb) = (i as f64 * dx, (i + 1) as f64 * dx);
                let f_core = f_core_y * overlap(xa, xb, x0, x1) / dx;
                let f_sub = f_sub_y;
                eps.push(e_sup * (1.0 - f_core - f_sub) + e_sub * f_sub + e_core * f_core);
            }
        }
        eps
    }
}

/// One guided eigenmode.
#[derive(Debug, Clone, Serialize)]
pub struct ModeSolution {
    pub n_eff: f64,
    /// 1 for the fundamental mode.
    pub mode_index: usize,
    /// Unit-norm scalar field, row-major with x fastest.
    #[serde(skip)]
    pub field: Vec<f64>,
    /// `‖A·E − β²·E‖ / β²` of the discrete eigenproblem.
    pub residual: f64,
    #[serde(skip)]
    pub nx: usize,
    #[serde(skip)]
    pub ny: usize,
    #[serde(skip)]
    pub dx_um: f64,
    #[serde(skip)]
    pub dy_um: f64,
}

impl ModeSolution {
    /// Field dump with header `x_um,y_um,amplitude` at cell centres.
    pub fn field_csv(&self) -> String {
        let mut out = String::from("x_um,y_um,amplitude\n");
        for j in 0..self.ny {
            let y = (j as f64 + 0.5) * self.dy_um;
            for i in 0..self.nx {
                let x = (i as f64 + 0.5) * self.dx_um;
                out.push_str(&format!("{},{},{}\n", x, y, self.field[j * self.nx + i]));
            }
        }
        out
    }
}

/// Guided modes in descending effective index.
#[derive(Debug, Clone, Serialize)]
pub struct ModeSet {
    pub modes: Vec<ModeSolution>,
    /// Set when fewer guided modes exist than were requested.
    pub truncated: bool,
    pub iterations: usize,
}

struct Operator {
    nx: usize,
    ny: usize,
    cx: f64,
    cy: f64,
    diag: Vec<f64>,
}

impl Operator {
    fn len(&self) -> usize {
        self.nx * self.ny
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else if i - j == 1 && i % self.nx != 0 {
            -self.cx
        } else if i - j == self.nx {
            -self.cy
        } else {
            0.0
        }
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let nx = self.nx;
        for idx in 0..self.len() {
            let i = idx % nx;
            let mut s = self.diag[idx] * v[idx];
            if i > 0 {
                s -= self.cx * v[idx - 1];
            }
            if i + 1 < nx {
                s -= self.cx * v[idx + 1];
            }
            if idx >= nx {
                s -= self.cy * v[idx - nx];
            }
            if idx + nx < self.len() {
                s -= self.cy * v[idx + nx];
            }
            out[idx] = s;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

/// Modified Gram–Schmidt, applied twice.
fn orthonormalize(vectors: &mut [Vec<f64>]) -> Result<()> {
    for _ in 0..2 {
        for k in 0..vectors.len() {
            let (done, rest) = vectors.split_at_mut(k);
            let v = &mut rest[0];
            for u in done.iter() {
                let c = dot(u, v);
                v.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
            }
            if normalize(v) == 0.0 {
                return Err(Error::Numeric("mode subspace collapsed".into()));
            }
        }
    }
    Ok(())
}

/// Smooth start vectors: the lowest sine modes of the empty window.
fn start_vectors(nx: usize, ny: usize, width: f64, height: f64, count: usize) -> Vec<Vec<f64>> {
    let mut pairs: Vec<(usize, usize)> = (1..=count + 1)
        .flat_map(|p| (1..=count + 1).map(move |q| (p, q)))
        .collect();
    let key = |&(p, q): &(usize, usize)| (p as f64 / width).powi(2) + (q as f64 / height).powi(2);
    pairs.sort_by(|a, b| key(a).total_cmp(&key(b)).then(a.cmp(b)));
    pairs
        .into_iter()
        .take(count)
        .map(|(p, q)| {
            let mut v = Vec::with_capacity(nx * ny);
            for j in 0..ny {
                let sy = (q as f64 * std::f64::consts::PI * (j as f64 + 0.5) / ny as f64).sin();
                for i in 0..nx {
                    let sx = (p as f64 * std::f64::consts::PI * (i as f64 + 0.5) / nx as f64).sin();
                    v.push(sx * sy);
                }
            }
            v
        })
        .collect()
}

/// Guided modes of `geometry` at (λ, T), at most `count`, in descending `n_eff`.
pub fn solve_modes(
    geometry: &WaveguideGeometry,
    wavelength: Wavelength,
    temperature_c: f64,
    count: usize,
) -> Result<ModeSet> {
    geometry.validate()?;
    if count == 0 {
        return Err(Error::domain("mode count must be at least 1"));
    }
    let (n_core, n_sub, n_sup) = geometry.region_indices(wavelength, temperature_c)?;
    let n_clad = n_sub.max(n_sup);
    let (nx, ny) = (geometry.grid_nx, geometry.grid_ny);
    let n = nx * ny;
    let dx = geometry.window_width_um / nx as f64;
    let dy = geometry.window_height_um / ny as f64;
    let k0 = 2.0 * std::f64::consts::PI / wavelength.um();
    let k0sq = k0 * k0;

    let eps = geometry.permittivity(n_core, n_sub, n_sup);
    let eps_max = eps.iter().copied().fold(f64::MIN, f64::max);
    let sigma = k0sq * eps_max;
    let (cx, cy) = (1.0 / (dx * dx), 1.0 / (dy * dy));
    let op = Operator {
        nx,
        ny,
        cx,
        cy,
        diag: eps.iter().map(|e| 2.0 * cx + 2.0 * cy + k0sq * (eps_max - e)).collect(),
    };
    let chol = BandCholesky::factor(n, nx, |i, j| op.entry(i, j))?;

    let block = (count + GUARD_VECTORS).min(n);
    let mut x = start_vectors(nx, ny, geometry.window_width_um, geometry.window_height_um, block);
    orthonormalize(&mut x)?;
    let mut mx = vec![vec![0.0; n]; block];
    let mut mu = vec![0.0; block];
    let mut residuals = vec![f64::INFINITY; block];
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        x.iter_mut().for_each(|v| chol.solve_in_place(v));
        orthonormalize(&mut x)?;
        for (v, out) in x.iter().zip(mx.iter_mut()) {
            op.apply(v, out);
        }
        let h = DMatrix::from_fn(block, block, |a, b| dot(&x[a], &mx[b]));
        let h = (&h + h.transpose()) * 0.5;
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..block).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

        let mut new_x = vec![vec![0.0; n]; block];
        let mut new_mx = vec![vec![0.0; n]; block];
        for (slot, &col) in order.iter().enumerate() {
            for k in 0..block {
                let c = eig.eigenvectors[(k, col)];
                if c == 0.0 {
                    continue;
                }
                new_x[slot].iter_mut().zip(&x[k]).for_each(|(d, s)| *d += c * s);
                new_mx[slot].iter_mut().zip(&mx[k]).for_each(|(d, s)| *d += c * s);
            }
            mu[slot] = eig.eigenvalues[col];
        }
        x = new_x;
        mx = new_mx;

        for k in 0..count.min(block) {
            let beta_sq = sigma - mu[k];
            let r: f64 = x[k]
                .iter()
                .zip(&mx[k])
                .map(|(v, m)| (m - mu[k] * v).powi(2))
                .sum::<f64>()
                .sqrt();
            residuals[k] = r / beta_sq.abs();
        }
        if residuals[..count.min(block)].iter().all(|&r| r < RESIDUAL_TARGET) {
            break;
        }
    }
    if residuals[..count.min(block)].iter().any(|&r| !(r < RESIDUAL_TARGET)) {
        return Err(Error::Numeric(format!(
            "mode solver did not converge in {MAX_ITERATIONS} iterations"
        )));
    }

    let mut modes = Vec::new();
    for k in 0..count.min(block) {
        let beta_sq = sigma - mu[k];
        let n_eff = (beta_sq / k0sq).sqrt();
        if !(n_eff > n_clad && n_eff < n_core) {
            break;
        }
        let mut field = std::mem::take(&mut x[k]);
        normalize(&mut field);
        let peak = field
            .iter()
            .copied()
            .max_by(|a, b| a.abs().total_cmp(&b.abs()))
            .unwrap_or(0.0);
        if peak < 0.0 {
            field.iter_mut().for_each(|v| *v = -*v);
        }
        modes.push(ModeSolution {
            n_eff,
            mode_index: modes.len() + 1,
            field,
            residual: residuals[k],
            nx,
            ny,
            dx_um: dx,
            dy_um: dy,
        });
    }
    Ok(ModeSet {
        truncated: modes.len() < count,
        modes,
        iterations,
    })
}

/// Solves several (λ, T) points concurrently.
pub fn solve_modes_batch(
    geometry: &WaveguideGeometry,
    points: &[(Wavelength, f64)],
    count: usize,
) -> Vec<Result<ModeSet>> {
    points
        .par_iter()
        .map(|&(w, t)| solve_modes(geometry, w, t, count))
        .collect()
}

/// Fundamental-mode change when the window is enlarged at fixed cell size.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WindowCheck {
    pub n_eff: f64,
    pub n_eff_enlarged: f64,
    pub converged: bool,
}

/// Re-solves with a window enlarged by `scale` (same cell size) and flags whether
/// the fundamental index moved by less than `tolerance`.
pub fn check_window_convergence(
    geometry: &WaveguideGeometry,
    wavelength: Wavelength,
    temperature_c: f64,
    scale: f64,
    tolerance: f64,
) -> Result<WindowCheck> {
    if !(scale > 1.0) {
        return Err(Error::domain("window scale must exceed 1"));
    }
    let base = solve_modes(geometry, wavelength, temperature_c, 1)?;
    let nx = (geometry.grid_nx as f64 * scale).round() as usize;
    let ny = (geometry.grid_ny as f64 * scale).round() as usize;
    let enlarged = WaveguideGeometry {
        window_width_um: geometry.window_width_um * nx as f64 / geometry.grid_nx as f64,
        window_height_um: geometry.window_height_um * ny as f64 / geometry.grid_ny as f64,
        grid_nx: nx,
        grid_ny: ny,
        ..geometry.clone()
    };
    let big = solve_modes(&enlarged, wavelength, temperature_c, 1)?;
    let pick = |s: &ModeSet| s.modes.first().map(|m| m.n_eff).ok_or_else(|| Error::Capability("no guided mode".into()));
    let (a, b) = (pick(&base)?, pick(&big)?);
    Ok(WindowCheck {
        n_eff: a,
        n_eff_enlarged: b,
        converged: (a - b).abs() < tolerance,
    })
}
