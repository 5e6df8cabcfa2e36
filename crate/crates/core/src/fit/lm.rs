//! Levenberg–Marquardt minimization of weighted squared residuals.
//!
//! Marquardt diagonal scaling with Nielsen's damping update. Covariance is
//! `(JᵀJ)⁻¹` at the optimum, scaled by the reduced χ² when the data carry no σ.

use indexmap::IndexMap;
use nalgebra::{DMatrix, DVector};

use super::{DataSeries, FitResult};
use crate::error::{Error, Result};

/// Parametric model `y = f(x; p)`.
pub trait Model {
    fn param_names(&self) -> &[&'static str];

    fn value(&self, x: f64, params: &[f64]) -> f64;

    /// `∂f/∂p` at `x`. Defaults to central differences.
    fn gradient(&self, x: f64, params: &[f64], out: &mut [f64]) {
        finite_difference_gradient(self, x, params, out);
    }
}

/// Central-difference gradient with a step relative to each parameter.
pub fn finite_difference_gradient<M: Model + ?Sized>(
    model: &M,
    x: f64,
    params: &[f64],
    out: &mut [f64],
) {
    let mut p = params.to_vec();
    for j in 0..params.len() {
        let h = 1e-6 * params[j].abs().max(1e-6);
        p[j] = params[j] + h;
        let up = model.value(x, &p);
        p[j] = params[j] - h;
        let down = model.value(x, &p);
        p[j] = params[j];
        out[j] = (up - down) / (2.0 * h);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Convergence threshold on the largest residual/Jacobian-column cosine.
    pub gradient_tolerance: f64,
    /// Convergence threshold on the relative step length.
    pub step_tolerance: f64,
    /// Parameters held at their initial value. Empty means all free.
    pub fixed: Vec<bool>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            gradient_tolerance: 1e-10,
            step_tolerance: 1e-12,
            fixed: Vec::new(),
        }
    }
}

impl FitOptions {
    pub fn with_fixed(mut self, fixed: Vec<bool>) -> Self {
        self.fixed = fixed;
        self
    }
}

struct Problem<'a, M: ?Sized> {
    model: &'a M,
    xs: Vec<f64>,
    ys: Vec<f64>,
    weights: Vec<f64>,
    free: Vec<usize>,
}

impl<M: Model + ?Sized> Problem<'_, M> {
    fn residuals(&self, params: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.xs.len(),
            self.xs
                .iter()
                .zip(&self.ys)
                .zip(&self.weights)
                .map(|((&x, &y), &w)| w * (self.model.value(x, params) - y)),
        )
    }

    fn jacobian(&self, params: &[f64]) -> DMatrix<f64> {
        let mut grad = vec![0.0; params.len()];
        let mut jac = DMatrix::zeros(self.xs.len(), self.free.len());
        for (i, (&x, &w)) in self.xs.iter().zip(&self.weights).enumerate() {
            self.model.gradient(x, params, &mut grad);
            for (col, &j) in self.free.iter().enumerate() {
                jac[(i, col)] = w * grad[j];
            }
        }
        jac
    }
}

fn max_cosine(jtj: &DMatrix<f64>, grad: &DVector<f64>, rnorm: f64) -> f64 {
    (0..grad.len())
        .map(|j| {
            let col = jtj[(j, j)].sqrt();
            if col == 0.0 || rnorm == 0.0 {
                0.0
            } else {
                grad[j].abs() / (col * rnorm)
            }
        })
        .fold(0.0, f64::max)
}

/// Fits `model` to `data` starting from `initial`.
///
/// Returns a result with `converged = false` when the iteration cap is hit,
/// and [`Error::SingularJacobian`] when the free parameters are not
/// identifiable at the final point.
pub fn least_squares<M: Model + ?Sized>(
    model: &M,
    data: &DataSeries,
    initial: &[f64],
    options: &FitOptions,
) -> Result<FitResult> {
    let names = model.param_names();
    let n = names.len();
    if initial.len() != n {
        return Err(Error::invalid(
            "initial_guess",
            format!("model has {n} parameters, got {}", initial.len()),
        ));
    }
    if initial.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("initial_guess", "must be finite"));
    }
    let fixed = if options.fixed.is_empty() {
        vec![false; n]
    } else if options.fixed.len() == n {
        options.fixed.clone()
    } else {
        return Err(Error::invalid(
            "fixed",
            format!("mask must have {n} entries"),
        ));
    };
    let free: Vec<usize> = (0..n).filter(|&j| !fixed[j]).collect();
    data.validate(free.len().max(1))?;
    let weights = data.weights()?;
    let weighted = weights.is_some();
    let problem = Problem {
        model,
        xs: data.xs(),
        ys: data.ys(),
        weights: weights.unwrap_or_else(|| vec![1.0; data.len()]),
        free,
    };
    let k = problem.free.len();
    let m = problem.xs.len();
    let y_scale = problem
        .ys
        .iter()
        .zip(&problem.weights)
        .map(|(y, w)| (y * w).powi(2))
        .sum::<f64>()
        .sqrt();
    let zero_residual = 1e-10 * y_scale.max(f64::MIN_POSITIVE);

    let mut params = initial.to_vec();
    let mut r = problem.residuals(&params);
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(
            "initial_guess",
            "model is not finite at the initial guess",
        ));
    }
    let mut cost = 0.5 * r.norm_squared();
    let mut jac = problem.jacobian(&params);
    let mut jtj = jac.transpose() * &jac;
    let mut grad = jac.transpose() * &r;
    let mut diag_scale: Vec<f64> = (0..k).map(|j| jtj[(j, j)]).collect();
    let mut lambda = 1e-3 * diag_scale.iter().copied().fold(0.0, f64::max).max(1e-12);
    let mut nu = 2.0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < options.max_iterations && k > 0 {
        let rnorm = r.norm();
        if rnorm <= zero_residual || max_cosine(&jtj, &grad, rnorm) <= options.gradient_tolerance {
            converged = true;
            break;
        }
        iterations += 1;
        let mut accepted = false;
        let mut step_small = false;
        while lambda < 1e30 {
            let mut lhs = jtj.clone();
            for (j, d) in diag_scale.iter_mut().enumerate() {
                *d = d.max(jtj[(j, j)]);
                lhs[(j, j)] += lambda * d.max(1e-300);
            }
            let Some(chol) = lhs.cholesky() else {
                lambda *= nu;
                nu *= 2.0;
                continue;
            };
            let step = chol.solve(&(-&grad));
            let mut trial = params.clone();
            for (col, &j) in problem.free.iter().enumerate() {
                trial[j] += step[col];
            }
            let r_trial = problem.residuals(&trial);
            let cost_trial = 0.5 * r_trial.norm_squared();
            let predicted = -step.dot(&grad) - 0.5 * step.dot(&(&jtj * &step));
            let rho = (cost - cost_trial) / predicted;
            if cost_trial.is_finite() && predicted > 0.0 && rho > 0.0 {
                let pnorm = problem
                    .free
                    .iter()
                    .map(|&j| params[j].powi(2))
                    .sum::<f64>()
                    .sqrt();
                step_small =
                    step.norm() <= options.step_tolerance * (pnorm + options.step_tolerance);
                params = trial;
                r = r_trial;
                cost = cost_trial;
                lambda *= (1.0 - (2.0 * rho - 1.0).powi(3)).max(1.0 / 3.0);
                nu = 2.0;
                accepted = true;
                break;
            }
            lambda *= nu;
            nu *= 2.0;
        }
        if accepted {
            jac = problem.jacobian(&params);
            jtj = jac.transpose() * &jac;
            grad = jac.transpose() * &r;
        }
        if !accepted || step_small {
            // No representable step lowers the cost any further.
            converged = true;
            break;
        }
    }
    if k == 0 {
        converged = true;
    }

    let rnorm = r.norm();
    let cosine = max_cosine(&jtj, &grad, rnorm);
    let std_free = covariance_std(&jtj, cost, m, k, weighted)?;
    let mut std_errors = IndexMap::new();
    let mut fitted = IndexMap::new();
    let mut free_iter = std_free.iter();
    for (j, name) in names.iter().enumerate() {
        fitted.insert(name.to_string(), params[j]);
        let se = if fixed[j] {
            0.0
        } else {
            *free_iter.next().unwrap_or(&0.0)
        };
        std_errors.insert(name.to_string(), se);
    }
    let residuals = problem
        .xs
        .iter()
        .zip(&problem.ys)
        .map(|(&x, &y)| y - model.value(x, &params))
        .collect();
    Ok(FitResult {
        params: fitted,
        std_errors,
        derived: IndexMap::new(),
        residual_norm: rnorm,
        gradient_norm: cosine,
        converged,
        iterations,
        warnings: Vec::new(),
        residuals,
    })
}

fn covariance_std(
    jtj: &DMatrix<f64>,
    cost: f64,
    m: usize,
    k: usize,
    weighted: bool,
) -> Result<Vec<f64>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    let diag: Vec<f64> = (0..k).map(|j| jtj[(j, j)]).collect();
    if diag.iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
        return Err(Error::SingularJacobian);
    }
    let scaled = DMatrix::from_fn(k, k, |i, j| jtj[(i, j)] / (diag[i] * diag[j]).sqrt());
    let eig = scaled.clone().symmetric_eigenvalues();
    let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    if !(lo > 1e-14 * hi) {
        return Err(Error::SingularJacobian);
    }
    let inv = scaled.try_inverse().ok_or(Error::SingularJacobian)?;
    let variance_scale = if weighted {
        1.0
    } else if m > k {
        2.0 * cost / (m - k) as f64
    } else {
        0.0
    };
    Ok((0..k)
        .map(|j| (inv[(j, j)] / diag[j] * variance_scale).max(0.0).sqrt())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    struct Line;

    impl Model for Line {
        fn param_names(&self) -> &[&'static str] {
            &["slope", "intercept"]
        }
        fn value(&self, x: f64, p: &[f64]) -> f64 {
            p[0] * x + p[1]
        }
    }

    struct Gaussian;

    impl Model for Gaussian {
        fn param_names(&self) -> &[&'static str] {
            &["amp", "centre", "width"]
        }
        fn value(&self, x: f64, p: &[f64]) -> f64 {
            p[0] * (-(x - p[1]).powi(2) / (2.0 * p[2] * p[2])).exp()
        }
    }

    fn gaussian_data() -> DataSeries {
        let xs: Vec<f64> = (0..60).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|&x| Gaussian.value(x, &[2.5, 3.1, 0.7]))
            .collect();
        DataSeries::from_xy(&xs, &ys)
    }

    #[test]
    fn straight_line() {
        let xs: Vec<f64> = (0..10).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let fit = least_squares(
            &Line,
            &DataSeries::from_xy(&xs, &ys),
            &[0.0, 0.0],
            &FitOptions::default(),
        )
        .unwrap();
        assert!(fit.converged);
        assert_abs_diff_eq!(fit.params["slope"], 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(fit.params["intercept"], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn noise_free_recovery() {
        let fit = least_squares(
            &Gaussian,
            &gaussian_data(),
            &[1.0, 2.5, 1.2],
            &FitOptions::default(),
        )
        .unwrap();
        assert!(fit.converged);
        for (name, truth) in [("amp", 2.5), ("centre", 3.1), ("width", 0.7)] {
            assert!((fit.params[name] / truth - 1.0).abs() < 1e-6, "{name}");
        }
    }

    #[test]
    fn fixing_a_parameter_at_truth_gives_same_optimum() {
        let data = gaussian_data();
        let free =
            least_squares(&Gaussian, &data, &[1.0, 2.5, 1.2], &FitOptions::default()).unwrap();
        let opts = FitOptions::default().with_fixed(vec![false, true, false]);
        let held = least_squares(&Gaussian, &data, &[1.0, 3.1, 1.2], &opts).unwrap();
        assert_eq!(held.params["centre"], 3.1);
        assert_eq!(held.std_errors["centre"], 0.0);
        assert_abs_diff_eq!(held.params["amp"], free.params["amp"], epsilon = 1e-8);
        assert_abs_diff_eq!(held.params["width"], free.params["width"], epsilon = 1e-8);
    }

    #[test]
    fn weighted_line_standard_errors() {
        // Weighted linear regression has closed-form covariance (XᵀWX)⁻¹.
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.1, 2.9, 5.2, 6.8];
        let sig = [0.1, 0.2, 0.1, 0.2];
        let data = DataSeries::from_xy_sigma(&xs, &ys, &sig);
        let fit = least_squares(&Line, &data, &[1.0, 0.0], &FitOptions::default()).unwrap();
        let w: Vec<f64> = sig.iter().map(|s| 1.0 / (s * s)).collect();
        let (s, sx, sxx) = (0..4).fold((0.0, 0.0, 0.0), |(a, b, c), i| {
            (a + w[i], b + w[i] * xs[i], c + w[i] * xs[i] * xs[i])
        });
        let det = s * sxx - sx * sx;
        assert_abs_diff_eq!(fit.std_errors["slope"], (s / det).sqrt(), epsilon = 1e-9);
        assert_abs_diff_eq!(
            fit.std_errors["intercept"],
            (sxx / det).sqrt(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let opts = FitOptions {
            max_iterations: 1,
            ..FitOptions::default()
        };
        let fit = least_squares(&Gaussian, &gaussian_data(), &[1.0, 2.0, 1.5], &opts).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.iterations, 1);
    }

    #[test]
    fn unidentifiable_parameters_are_an_error() {
        struct Redundant;
        impl Model for Redundant {
            fn param_names(&self) -> &[&'static str] {
                &["a", "b"]
            }
            fn value(&self, x: f64, p: &[f64]) -> f64 {
                (p[0] + p[1]) * x
            }
        }
        let data = DataSeries::from_xy(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]);
        assert_eq!(
            least_squares(&Redundant, &data, &[0.5, 0.5], &FitOptions::default()),
            Err(Error::SingularJacobian)
        );
    }

    #[test]
    fn arity_and_data_checks() {
        let data = gaussian_data();
        assert!(least_squares(&Gaussian, &data, &[1.0, 2.0], &FitOptions::default()).is_err());
        let short = DataSeries::from_xy(&[1.0, 2.0], &[1.0, 2.0]);
        assert!(
            least_squares(&Gaussian, &short, &[1.0, 2.0, 1.0], &FitOptions::default()).is_err()
        );
    }

    #[test]
    fn deterministic() {
        let a = least_squares(
            &Gaussian,
            &gaussian_data(),
            &[1.0, 2.5, 1.2],
            &FitOptions::default(),
        )
        .unwrap();
        let b = least_squares(
            &Gaussian,
            &gaussian_data(),
            &[1.0, 2.5, 1.2],
            &FitOptions::default(),
        )
        .unwrap();
        assert_eq!(a, b);
    }
}
