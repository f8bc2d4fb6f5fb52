//! Bounded Levenberg–Marquardt least squares and the model registry.

mod models;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

pub use models::{model_registry, registry_model, RegistryConfig};

const INITIAL_DAMPING: f64 = 1e-3;
const MAX_DAMPING: f64 = 1e16;
const JACOBIAN_REL_STEP: f64 = 1e-6;
const STALL_TOLERANCE: f64 = 1e-10;
const STALL_COUNT: usize = 3;
const STEP_TOLERANCE: f64 = 1e-12;
/// Reciprocal condition number below which the normal matrix counts as singular.
const RCOND_LIMIT: f64 = 1e-14;
pub const GRID_POINTS_PER_AXIS: usize = 16;

type Evaluator = dyn Fn(&[f64], f64) -> f64 + Send + Sync;

/// A parametric curve `y = f(p, x)` with box bounds on `p`.
#[derive(Clone)]
pub struct FitModel {
    name: String,
    parameter_names: Vec<String>,
    bounds: Vec<(f64, f64)>,
    evaluate: Arc<Evaluator>,
    /// Parameters spanned by grid seeding (at most three).
    seed_parameters: Vec<usize>,
    default_fixed: Vec<(usize, f64)>,
}

impl fmt::Debug for FitModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FitModel")
            .field("name", &self.name)
            .field("parameter_names", &self.parameter_names)
            .field("bounds", &self.bounds)
            .finish_non_exhaustive()
    }
}

impl FitModel {
    pub fn new(
        name: impl Into<String>,
        parameter_names: &[&str],
        bounds: Vec<(f64, f64)>,
        evaluate: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if parameter_names.len() != bounds.len() {
            return Err(Error::domain("one bound pair per parameter is required"));
        }
        if let Some((i, _)) = bounds.iter().enumerate().find(|(_, (lo, hi))| !(lo <= hi)) {
            return Err(Error::domain(format!("invalid bounds for '{}'", parameter_names[i])));
        }
        Ok(Self {
            name: name.into(),
            parameter_names: parameter_names.iter().map(|s| s.to_string()).collect(),
            bounds,
            evaluate: Arc::new(evaluate),
            seed_parameters: Vec::new(),
            default_fixed: Vec::new(),
        })
    }

    pub(crate) fn with_seed_parameters(mut self, indices: &[usize]) -> Self {
        self.seed_parameters = indices.iter().copied().filter(|&i| i < self.bounds.len()).take(3).collect();
        self
    }

    pub(crate) fn with_default_fixed(mut self, name: &str, value: f64) -> Self {
        if let Some(i) = self.index_of(name) {
            self.default_fixed.push((i, value));
        }
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn parameter_names(&self) -> &[String] {
        &self.parameter_names
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    /// Parameters held fixed unless the caller overrides them.
    pub fn default_fixed(&self) -> BTreeMap<String, f64> {
        self.default_fixed
            .iter()
            .map(|&(i, v)| (self.parameter_names[i].clone(), v))
            .collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.parameter_names.iter().position(|n| n == name)
    }

    pub fn with_bounds(mut self, name: &str, lo: f64, hi: f64) -> Result<Self> {
        let i = self
            .index_of(name)
            .ok_or_else(|| Error::domain(format!("model '{}' has no parameter '{name}'", self.name)))?;
        if !(lo <= hi) {
            return Err(Error::domain(format!("invalid bounds for '{name}'")));
        }
        self.bounds[i] = (lo, hi);
        Ok(self)
    }

    pub fn evaluate(&self, params: &[f64], x: f64) -> f64 {
        (self.evaluate)(params, x)
    }

    pub fn in_bounds(&self, params: &[f64]) -> bool {
        params.len() == self.bounds.len() && params.iter().zip(&self.bounds).all(|(p, (lo, hi))| *lo <= *p && *p <= *hi)
    }

    fn project(&self, params: &mut [f64]) {
        for (p, &(lo, hi)) in params.iter_mut().zip(&self.bounds) {
            *p = p.clamp(lo, hi);
        }
    }

    /// Central-difference derivative of the model with respect to every parameter at `x`.
    pub fn gradient(&self, params: &[f64], x: f64, rel_step: f64) -> Vec<f64> {
        let mut p = params.to_vec();
        (0..params.len())
            .map(|j| {
                let h = derivative_step(params[j], rel_step);
                p[j] = params[j] + h;
                let up = self.evaluate(&p, x);
                p[j] = params[j] - h;
                let down = self.evaluate(&p, x);
                p[j] = params[j];
                (up - down) / (2.0 * h)
            })
            .collect()
    }
}

fn derivative_step(value: f64, rel_step: f64) -> f64 {
    if value == 0.0 {
        rel_step
    } else {
        rel_step * value.abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Parameters held at the given values.
    pub fixed: BTreeMap<String, f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            fixed: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub parameters: Vec<f64>,
    /// Linearised one-sigma errors; zero for fixed parameters.
    pub standard_errors: Vec<f64>,
    /// Sum of squared residuals.
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Cost after every accepted step, starting with the initial cost.
    #[serde(skip)]
    pub cost_history: Vec<f64>,
}

fn cost(model: &FitModel, params: &[f64], data: &[(f64, f64)]) -> f64 {
    data.iter()
        .map(|&(x, y)| {
            let r = y - model.evaluate(params, x);
            r * r
        })
        .sum()
}

struct Problem<'a> {
    model: &'a FitModel,
    data: &'a [(f64, f64)],
    free: Vec<usize>,
}

impl Problem<'_> {
    fn residuals(&self, params: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.data.len(),
            self.data.iter().map(|&(x, y)| y - self.model.evaluate(params, x)),
        )
    }

    fn jacobian(&self, params: &[f64]) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(self.data.len(), self.free.len());
        let mut p = params.to_vec();
        for (col, &k) in self.free.iter().enumerate() {
            let h = derivative_step(params[k], JACOBIAN_REL_STEP);
            p[k] = params[k] + h;
            let up: Vec<f64> = self.data.iter().map(|&(x, _)| self.model.evaluate(&p, x)).collect();
            p[k] = params[k] - h;
            for (row, &(x, _)) in self.data.iter().enumerate() {
                j[(row, col)] = (up[row] - self.model.evaluate(&p, x)) / (2.0 * h);
            }
            p[k] = params[k];
        }
        j
    }
}

/// Inverse of a symmetric positive semi-definite matrix, rejecting numerically singular ones.
fn checked_inverse(normal: &DMatrix<f64>, names: impl Fn(usize) -> String) -> Result<DMatrix<f64>> {
    let n = normal.nrows();
    let diag: Vec<f64> = (0..n).map(|i| normal[(i, i)]).collect();
    if let Some(i) = diag.iter().position(|d| !(*d > 0.0) || !d.is_finite()) {
        return Err(Error::RankDeficient(format!("parameter '{}' has no influence on the model", names(i))));
    }
    let scale: Vec<f64> = diag.iter().map(|d| 1.0 / d.sqrt()).collect();
    let scaled = DMatrix::from_fn(n, n, |i, j| normal[(i, j)] * scale[i] * scale[j]);
    let eig = SymmetricEigen::new(scaled);
    let max = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b));
    let min = eig.eigenvalues.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if !(min > RCOND_LIMIT * max) {
        return Err(Error::RankDeficient(format!(
            "reciprocal condition number {:.3e} of the scaled normal matrix",
            (min / max).max(0.0)
        )));
    }
    let inv_vals = eig.eigenvalues.map(|v| 1.0 / v);
    let inv = &eig.eigenvectors * DMatrix::from_diagonal(&inv_vals) * eig.eigenvectors.transpose();
    Ok(DMatrix::from_fn(n, n, |i, j| inv[(i, j)] * scale[i] * scale[j]))
}

/// Bounded Levenberg–Marquardt fit of `model` to `data` starting from `initial`.
///
/// Damping starts at 1e-3 and is scaled by 10 down on accepted and up on rejected
/// steps, with Marquardt diagonal scaling. Trial points are projected onto the
/// bounds. Convergence: relative cost decrease below 1e-10 on three consecutive
/// accepted steps, a step norm below 1e-12 (relative to the parameter norm), or a
/// cost at rounding level. Hitting the iteration cap returns `converged = false`.
pub fn fit(model: &FitModel, data: &[(f64, f64)], initial: &[f64], options: &FitOptions) -> Result<FitResult> {
    let n_params = model.parameter_names.len();
    if initial.len() != n_params {
        return Err(Error::domain(format!(
            "model '{}' takes {n_params} parameters, {} given",
            model.name,
            initial.len()
        )));
    }
    let mut params = initial.to_vec();
    for (name, value) in &options.fixed {
        let i = model
            .index_of(name)
            .ok_or_else(|| Error::domain(format!("model '{}' has no parameter '{name}'", model.name)))?;
        params[i] = *value;
    }
    if !model.in_bounds(&params) {
        return Err(Error::domain(format!("initial parameters {params:?} outside the bounds of '{}'", model.name)));
    }
    let free: Vec<usize> = (0..n_params)
        .filter(|&i| !options.fixed.contains_key(&model.parameter_names[i]))
        .collect();
    let needed = 3.max(free.len() + 1);
    if data.len() < needed {
        return Err(Error::domain(format!("need at least {needed} data points, got {}", data.len())));
    }
    if data.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::domain("data contain non-finite values"));
    }
    let problem = Problem {
        model,
        data,
        free: free.clone(),
    };
    let signal: f64 = data.iter().map(|(_, y)| y * y).sum();
    let floor = f64::EPSILON * f64::EPSILON * signal.max(f64::MIN_POSITIVE);
    let name_of = |k: usize| model.parameter_names[free[k]].clone();

    let mut current = cost(model, &params, data);
    if !current.is_finite() {
        return Err(Error::Numeric(format!("model '{}' is not finite at the initial point", model.name)));
    }
    let mut history = vec![current];
    let mut damping = INITIAL_DAMPING;
    let mut stalls = 0;
    let mut converged = current <= floor;
    let mut iterations = 0;
    let mut jac = problem.jacobian(&params);
    let mut res = problem.residuals(&params);
    if free.is_empty() {
        converged = true;
    }

    while !converged && iterations < options.max_iterations {
        iterations += 1;
        let normal = jac.transpose() * &jac;
        let gradient = jac.transpose() * &res;
        if iterations == 1 {
            checked_inverse(&normal, name_of)?;
        }
        let mut augmented = normal.clone();
        for i in 0..free.len() {
            augmented[(i, i)] += damping * normal[(i, i)];
        }
        let step = match augmented.cholesky() {
            Some(c) => c.solve(&gradient),
            None => {
                damping *= 10.0;
                if damping > MAX_DAMPING {
                    converged = true;
                }
                continue;
            }
        };
        let mut trial = params.clone();
        for (k, &i) in free.iter().enumerate() {
            trial[i] += step[k];
        }
        model.project(&mut trial);
        let step_norm = free.iter().map(|&i| (trial[i] - params[i]).powi(2)).sum::<f64>().sqrt();
        let param_norm = free.iter().map(|&i| params[i] * params[i]).sum::<f64>().sqrt();
        let trial_cost = cost(model, &trial, data);

        if trial_cost.is_finite() && trial_cost < current {
            let relative = (current - trial_cost) / current;
            params = trial;
            current = trial_cost;
            history.push(current);
            damping = (damping / 10.0).max(1e-12);
            stalls = if relative < STALL_TOLERANCE { stalls + 1 } else { 0 };
            if stalls >= STALL_COUNT || step_norm < STEP_TOLERANCE * param_norm.max(1.0) || current <= floor {
                converged = true;
            } else {
                jac = problem.jacobian(&params);
                res = problem.residuals(&params);
            }
        } else {
            damping *= 10.0;
            if step_norm < STEP_TOLERANCE * param_norm.max(1.0) || damping > MAX_DAMPING {
                converged = true;
            }
        }
    }

    let jac = problem.jacobian(&params);
    let mut standard_errors = vec![0.0; n_params];
    if !free.is_empty() {
        let covariance = checked_inverse(&(jac.transpose() * &jac), name_of)?;
        let dof = data.len().saturating_sub(free.len()).max(1);
        let variance = current / dof as f64;
        for (k, &i) in free.iter().enumerate() {
            standard_errors[i] = (variance * covariance[(k, k)]).max(0.0).sqrt();
        }
    }
    Ok(FitResult {
        parameters: params,
        standard_errors,
        residual_norm: current,
        converged,
        iterations,
        cost_history: history,
    })
}

/// Lattice search over up to three seed parameters (others taken from `initial`);
/// returns the lattice point with the lowest cost. Lattice points are cell centres
/// of `GRID_POINTS_PER_AXIS` equal divisions of each bound interval.
pub fn grid_seed(model: &FitModel, data: &[(f64, f64)], initial: &[f64], fixed: &BTreeMap<String, f64>) -> Vec<f64> {
    let axes: Vec<usize> = model
        .seed_parameters
        .iter()
        .copied()
        .filter(|&i| !fixed.contains_key(&model.parameter_names[i]))
        .collect();
    let mut base = initial.to_vec();
    for (name, v) in fixed {
        if let Some(i) = model.index_of(name) {
            base[i] = *v;
        }
    }
    if axes.is_empty() {
        return base;
    }
    let n = GRID_POINTS_PER_AXIS;
    let total = n.pow(axes.len() as u32);
    let point = |index: usize| {
        let mut p = base.clone();
        let mut rest = index;
        for &axis in &axes {
            let (lo, hi) = model.bounds[axis];
            let k = rest % n;
            rest /= n;
            p[axis] = lo + (hi - lo) * (k as f64 + 0.5) / n as f64;
        }
        p
    };
    let best = (0..total)
        .into_par_iter()
        .map(|i| {
            let c = cost(model, &point(i), data);
            (if c.is_finite() { c } else { f64::INFINITY }, i)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, i)| i)
        .unwrap_or(0);
    let candidate = point(best);
    if cost(model, &candidate, data) < cost(model, &base, data) || !model.in_bounds(&base) {
        candidate
    } else {
        base
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Goodness {
    pub rms: f64,
    pub residuals: Vec<f64>,
}

pub fn goodness(model: &FitModel, result: &FitResult, data: &[(f64, f64)]) -> Result<Goodness> {
    if data.is_empty() {
        return Err(Error::domain("goodness of fit needs data"));
    }
    if result.parameters.iter().any(|p| !p.is_finite()) {
        return Err(Error::domain("fit parameters are not finite"));
    }
    let residuals: Vec<f64> = data
        .iter()
        .map(|&(x, y)| y - model.evaluate(&result.parameters, x))
        .collect();
    let ss: f64 = residuals.iter().map(|r| r * r).sum();
    Ok(Goodness {
        rms: (ss / data.len() as f64).sqrt(),
        residuals,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub model: String,
    pub parameters: BTreeMap<String, f64>,
    pub standard_errors: BTreeMap<String, f64>,
    pub rms: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl FitReport {
    pub fn new(model: &FitModel, result: &FitResult, data: &[(f64, f64)]) -> Result<Self> {
        let named = |v: &[f64]| {
            model
                .parameter_names
                .iter()
                .cloned()
                .zip(v.iter().copied())
                .collect::<BTreeMap<_, _>>()
        };
        Ok(Self {
            model: model.name.clone(),
            parameters: named(&result.parameters),
            standard_errors: named(&result.standard_errors),
            rms: goodness(model, result, data)?.rms,
            converged: result.converged,
            iterations: result.iterations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> FitModel {
        FitModel::new("line", &["a", "b"], vec![(-10.0, 10.0), (-10.0, 10.0)], |p, x| p[0] + p[1] * x).unwrap()
    }

    fn exp_decay() -> FitModel {
        FitModel::new("decay", &["amp", "rate"], vec![(0.0, 10.0), (0.0, 5.0)], |p, x| p[0] * (-p[1] * x).exp()).unwrap()
    }

    #[test]
    fn linear_fit_matches_normal_equations() {
        let data: Vec<(f64, f64)> = (0..20).map(|i| (i as f64, 1.0 + 0.5 * i as f64 + 0.01 * ((i * 7) % 5) as f64)).collect();
        let r = fit(&line(), &data, &[0.0, 0.0], &FitOptions::default()).unwrap();
        // Closed-form least squares.
        let n = data.len() as f64;
        let sx: f64 = data.iter().map(|d| d.0).sum();
        let sy: f64 = data.iter().map(|d| d.1).sum();
        let sxx: f64 = data.iter().map(|d| d.0 * d.0).sum();
        let sxy: f64 = data.iter().map(|d| d.0 * d.1).sum();
        let b = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let a = (sy - b * sx) / n;
        assert!(r.converged);
        assert!((r.parameters[0] - a).abs() < 1e-8 && (r.parameters[1] - b).abs() < 1e-9);
        assert!(r.standard_errors.iter().all(|e| *e > 0.0));
    }

    #[test]
    fn exact_data_at_truth_converges_immediately() {
        let m = exp_decay();
        let truth = [2.0, 0.7];
        let data: Vec<(f64, f64)> = (0..30).map(|i| (i as f64 * 0.1, m.evaluate(&truth, i as f64 * 0.1))).collect();
        let r = fit(&m, &data, &truth, &FitOptions::default()).unwrap();
        assert!(r.converged && r.iterations <= 2 && r.residual_norm < 1e-20, "{r:?}");
    }

    #[test]
    fn cost_never_increases() {
        let m = exp_decay();
        let data: Vec<(f64, f64)> = (0..40)
            .map(|i| {
                let x = i as f64 * 0.1;
                (x, 3.0 * (-1.3 * x).exp() + 0.01 * (i as f64).sin())
            })
            .collect();
        let r = fit(&m, &data, &[0.5, 4.0], &FitOptions::default()).unwrap();
        assert!(r.converged);
        assert!(r.cost_history.windows(2).all(|w| w[1] <= w[0]));
        assert!((r.parameters[0] - 3.0).abs() < 0.05);
    }

    #[test]
    fn bounds_are_respected() {
        let m = line().with_bounds("b", 0.0, 0.2).unwrap();
        let data: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, i as f64)).collect();
        let r = fit(&m, &data, &[0.0, 0.1], &FitOptions::default()).unwrap();
        assert!(m.in_bounds(&r.parameters));
        assert!((r.parameters[1] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn fixed_parameters_stay_put() {
        let data: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 2.0 + 3.0 * i as f64)).collect();
        let options = FitOptions {
            fixed: [("a".to_string(), 2.0)].into(),
            ..Default::default()
        };
        let r = fit(&line(), &data, &[0.0, 1.0], &options).unwrap();
        assert_eq!(r.parameters[0], 2.0);
        assert_eq!(r.standard_errors[0], 0.0);
        assert!((r.parameters[1] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_parameters_are_rank_deficient() {
        let m = FitModel::new("product", &["a", "b"], vec![(0.1, 10.0), (0.1, 10.0)], |p, x| p[0] * p[1] * x).unwrap();
        let data: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 2.0 * i as f64)).collect();
        assert!(matches!(
            fit(&m, &data, &[1.0, 1.0], &FitOptions::default()),
            Err(Error::RankDeficient(_))
        ));
        let unused = FitModel::new("unused", &["a", "b"], vec![(0.0, 1.0), (0.0, 1.0)], |p, x| p[0] * x).unwrap();
        assert!(matches!(
            fit(&unused, &data, &[0.5, 0.5], &FitOptions::default()),
            Err(Error::RankDeficient(_))
        ));
    }

    #[test]
    fn iteration_cap_is_not_an_error() {
        let m = exp_decay();
        let data: Vec<(f64, f64)> = (0..40).map(|i| (i as f64 * 0.1, 3.0 * (-1.3 * i as f64 * 0.1).exp())).collect();
        let r = fit(
            &m,
            &data,
            &[0.5, 4.0],
            &FitOptions {
                max_iterations: 1,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 1);
    }

    #[test]
    fn input_validation() {
        let data = [(0.0, 1.0), (1.0, 2.0)];
        assert!(fit(&line(), &data, &[0.0, 0.0], &FitOptions::default()).is_err());
        let data: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, 1.0)).collect();
        assert!(fit(&line(), &data, &[20.0, 0.0], &FitOptions::default()).is_err());
        assert!(fit(&line(), &data, &[0.0], &FitOptions::default()).is_err());
    }

    #[test]
    fn goodness_values() {
        let m = FitModel::new("const", &["c"], vec![(-5.0, 5.0)], |p, _| p[0]).unwrap();
        let result = FitResult {
            parameters: vec![1.0],
            standard_errors: vec![0.0],
            residual_norm: 0.0,
            converged: true,
            iterations: 0,
            cost_history: vec![],
        };
        let data = [(0.0, 2.0), (1.0, 0.0), (2.0, 2.0)];
        assert_eq!(goodness(&m, &result, &data).unwrap().rms, 1.0);
        let perfect = [(0.0, 1.0), (1.0, 1.0)];
        assert_eq!(goodness(&m, &result, &perfect).unwrap().rms, 0.0);
        assert!(goodness(&m, &result, &[]).is_err());
        let shuffled = [(2.0, 2.0), (0.0, 2.0), (1.0, 0.0)];
        assert_eq!(goodness(&m, &result, &shuffled).unwrap().rms, 1.0);
    }

    #[test]
    fn grid_seed_finds_the_right_basin() {
        let m = FitModel::new("bump", &["c"], vec![(0.0, 100.0)], |p, x| (-(x - p[0]).powi(2)).exp())
            .unwrap()
            .with_seed_parameters(&[0]);
        let data: Vec<(f64, f64)> = (0..200).map(|i| (i as f64 * 0.5, (-(i as f64 * 0.5 - 71.3).powi(2)).exp())).collect();
        let seed = grid_seed(&m, &data, &[10.0], &BTreeMap::new());
        let r = fit(&m, &data, &seed, &FitOptions::default()).unwrap();
        assert!((r.parameters[0] - 71.3).abs() < 1e-6, "{seed:?} {r:?}");
    }
}
