use std::f64::consts::{PI, TAU};

use indexmap::IndexMap;
use nalgebra::{DMatrix, DVector};

use super::lm::{least_squares, FitOptions, Model};
use super::{DataSeries, FitResult};
use crate::error::{Error, Result};
use crate::modulation::{HarmonicSeries, DEFAULT_ORDER};
use crate::special::bessel_j01;
use crate::transmon::{charge_basis_transitions, TransmonParams, DEFAULT_BASIS_SIZE};

/// `y = A exp(−t/T1) + B`, time in µs.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExpDecay;

impl Model for ExpDecay {
    fn param_names(&self) -> &[&'static str] {
        &["T1", "A", "B"]
    }

    fn value(&self, t: f64, p: &[f64]) -> f64 {
        p[1] * (-t / p[0]).exp() + p[2]
    }

    fn gradient(&self, t: f64, p: &[f64], out: &mut [f64]) {
        let e = (-t / p[0]).exp();
        out[0] = p[1] * e * t / (p[0] * p[0]);
        out[1] = e;
        out[2] = 1.0;
    }
}

/// `y = A exp(−t/T2*) cos(2πΔt + φ) + B`, time in µs, Δ in MHz.
#[derive(Debug, Clone, Copy, Default)]
pub struct RamseyFringe;

impl Model for RamseyFringe {
    fn param_names(&self) -> &[&'static str] {
        &["T2_star", "delta_f", "A", "B", "phase"]
    }

    fn value(&self, t: f64, p: &[f64]) -> f64 {
        p[2] * (-t / p[0]).exp() * (TAU * p[1] * t + p[4]).cos() + p[3]
    }

    fn gradient(&self, t: f64, p: &[f64], out: &mut [f64]) {
        let e = (-t / p[0]).exp();
        let (s, c) = (TAU * p[1] * t + p[4]).sin_cos();
        out[0] = p[2] * e * c * t / (p[0] * p[0]);
        out[1] = -p[2] * e * s * TAU * t;
        out[2] = e * c;
        out[3] = 1.0;
        out[4] = -p[2] * e * s;
    }
}

/// `y = A pⁿ + B` over sequence length `n`.
#[derive(Debug, Clone, Copy, Default)]
pub struct RbDecay;

impl Model for RbDecay {
    fn param_names(&self) -> &[&'static str] {
        &["A", "B", "p"]
    }

    fn value(&self, n: f64, p: &[f64]) -> f64 {
        p[0] * p[2].powf(n) + p[1]
    }

    fn gradient(&self, n: f64, p: &[f64], out: &mut [f64]) {
        out[0] = p[2].powf(n);
        out[1] = 1.0;
        out[2] = if n == 0.0 {
            0.0
        } else {
            p[0] * n * p[2].powf(n - 1.0)
        };
    }
}

/// Average single-qubit Clifford fidelity from the depolarizing parameter.
pub fn rb_fidelity(p: f64) -> f64 {
    1.0 - (1.0 - p) / 2.0
}

const TUNING_NAMES: [&str; 5] = ["e_j1", "e_j2", "e_c", "amps_per_phi0", "phi_offset"];

fn squid_ej(e_j1: f64, e_j2: f64, phi: f64) -> f64 {
    (e_j1 * e_j1 + e_j2 * e_j2 + 2.0 * e_j1 * e_j2 * (TAU * phi).cos())
        .max(0.0)
        .sqrt()
}

/// Closed-form transmon frequency against bias current,
/// `φ = I / amps_per_phi0 + phi_offset`. Frequencies and energies in MHz,
/// `amps_per_phi0` in the current unit of the data.
#[derive(Debug, Clone, Copy, Default)]
pub struct TuningCurve;

impl Model for TuningCurve {
    fn param_names(&self) -> &[&'static str] {
        &TUNING_NAMES
    }

    fn value(&self, current: f64, p: &[f64]) -> f64 {
        let phi = current / p[3] + p[4];
        (8.0 * squid_ej(p[0], p[1], phi) * p[2]).sqrt() - p[2]
    }

    fn gradient(&self, current: f64, p: &[f64], out: &mut [f64]) {
        let (e1, e2, ec, amps) = (p[0], p[1], p[2], p[3]);
        let phi = current / amps + p[4];
        let (s, c) = (TAU * phi).sin_cos();
        let ej = squid_ej(e1, e2, phi);
        let root = (8.0 * ej * ec).sqrt();
        let df_dej = 4.0 * ec / root;
        let df_dphi = df_dej * (-TAU * e1 * e2 * s / ej);
        out[0] = df_dej * (e1 + e2 * c) / ej;
        out[1] = df_dej * (e2 + e1 * c) / ej;
        out[2] = 4.0 * ej / root - 1.0;
        out[3] = -df_dphi * current / (amps * amps);
        out[4] = df_dphi;
    }
}

/// Same parametrization as [`TuningCurve`], evaluated by charge-basis
/// diagonalization.
#[derive(Debug, Clone, Copy)]
pub struct TuningCurveExact {
    pub basis_size: usize,
}

impl Default for TuningCurveExact {
    fn default() -> Self {
        Self {
            basis_size: DEFAULT_BASIS_SIZE,
        }
    }
}

impl Model for TuningCurveExact {
    fn param_names(&self) -> &[&'static str] {
        &TUNING_NAMES
    }

    fn value(&self, current: f64, p: &[f64]) -> f64 {
        let ej = squid_ej(p[0], p[1], current / p[3] + p[4]);
        if !(p[2] > 0.0) || !ej.is_finite() {
            return f64::NAN;
        }
        charge_basis_transitions(p[2], ej, 0.0, self.basis_size)[0]
    }
}

/// Time-averaged frequency against pulse amplitude `A_p` (V) for a flux
/// amplitude `β A_p` (Φ0). The single parameter is `beta` in Φ0/V.
#[derive(Debug, Clone)]
pub struct BetaModel {
    series: HarmonicSeries,
    phi_dc: f64,
}

impl BetaModel {
    pub fn new(params: &TransmonParams, phi_dc: f64) -> Result<Self> {
        if !phi_dc.is_finite() {
            return Err(Error::invalid("phi_dc", "must be finite"));
        }
        Ok(Self {
            series: HarmonicSeries::new(params, DEFAULT_ORDER)?,
            phi_dc,
        })
    }

    fn static_weights(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.series
            .s
            .iter()
            .enumerate()
            .skip(1)
            .map(|(n, s)| (n as f64, s * (TAU * n as f64 * self.phi_dc).cos()))
    }
}

impl Model for BetaModel {
    fn param_names(&self) -> &[&'static str] {
        &["beta"]
    }

    fn value(&self, amplitude: f64, p: &[f64]) -> f64 {
        let phi_ac = (p[0] * amplitude).abs();
        self.series.s[0]
            + self
                .static_weights()
                .map(|(n, w)| w * bessel_j01(TAU * n * phi_ac).0)
                .sum::<f64>()
    }

    fn gradient(&self, amplitude: f64, p: &[f64], out: &mut [f64]) {
        let x = p[0] * amplitude;
        out[0] = self
            .static_weights()
            .map(|(n, w)| -w * bessel_j01(TAU * n * x).1 * TAU * n * amplitude)
            .sum();
    }
}

/// Linear least squares over the given basis columns.
/// Returns the coefficients and the residual sum of squares.
fn linear_fit(columns: &[Vec<f64>], y: &[f64]) -> Option<(Vec<f64>, f64)> {
    let m = y.len();
    let a = DMatrix::from_fn(m, columns.len(), |i, j| columns[j][i]);
    let b = DVector::from_column_slice(y);
    let coef = a.clone().svd(true, true).solve(&b, 1e-12).ok()?;
    let sse = (a * &coef - b).norm_squared();
    sse.is_finite()
        .then(|| (coef.iter().copied().collect(), sse))
}

fn log_space(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(move |i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
}

fn span(v: &[f64]) -> f64 {
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    hi - lo
}

/// Frequency of the largest peak of the discrete spectrum of `y − mean(y)`,
/// searched between one cycle per record and the mean-spacing Nyquist limit.
fn dominant_frequency(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len();
    let duration = span(xs);
    let mean = ys.iter().sum::<f64>() / n as f64;
    let nyquist = 0.5 * (n - 1) as f64 / duration;
    let step = 0.125 / duration;
    let mut best = (0.0, 1.0 / duration);
    let mut f = step;
    while f <= nyquist {
        let (re, im) = xs.iter().zip(ys).fold((0.0, 0.0), |(re, im), (&x, &y)| {
            let (s, c) = (TAU * f * x).sin_cos();
            (re + (y - mean) * c, im + (y - mean) * s)
        });
        let power = re * re + im * im;
        if power > best.0 {
            best = (power, f);
        }
        f += step;
    }
    best.1
}

fn run(
    model: &dyn Model,
    data: &DataSeries,
    initial: &[f64],
    options: &FitOptions,
) -> Result<FitResult> {
    match least_squares(model, data, initial, options) {
        Err(Error::SingularJacobian) => Ok(degenerate(
            model,
            initial,
            "parameters are not identifiable from the data (singular Jacobian)",
        )),
        other => other,
    }
}

/// Unconverged result carrying the starting point and unbounded errors.
fn degenerate(model: &dyn Model, params: &[f64], warning: &str) -> FitResult {
    let names = model.param_names();
    FitResult {
        params: names
            .iter()
            .map(|n| n.to_string())
            .zip(params.iter().copied())
            .collect(),
        std_errors: names
            .iter()
            .map(|n| (n.to_string(), f64::INFINITY))
            .collect(),
        derived: IndexMap::new(),
        residual_norm: f64::NAN,
        gradient_norm: f64::NAN,
        converged: false,
        iterations: 0,
        warnings: vec![warning.to_string()],
        residuals: Vec::new(),
    }
}

fn check_flat(model: &dyn Model, data: &DataSeries, initial: &[f64]) -> Option<FitResult> {
    (span(&data.ys()) == 0.0).then(|| degenerate(model, initial, "signal is constant"))
}

/// Exponential relaxation fit. The starting point is the best of a
/// logarithmic scan over T1 with A and B solved linearly at each step.
pub fn fit_t1(data: &DataSeries) -> Result<FitResult> {
    data.validate(3)?;
    let (xs, ys) = (data.xs(), data.ys());
    let duration = span(&xs).max(f64::MIN_POSITIVE);
    let mut best = (f64::INFINITY, [duration, span(&ys), 0.0]);
    for t1 in log_space(duration / 100.0, duration * 100.0, 201) {
        let decay: Vec<f64> = xs.iter().map(|&t| (-t / t1).exp()).collect();
        if let Some((c, sse)) = linear_fit(&[decay, vec![1.0; xs.len()]], &ys) {
            if sse < best.0 {
                best = (sse, [t1, c[0], c[1]]);
            }
        }
    }
    if let Some(flat) = check_flat(&ExpDecay, data, &best.1) {
        return Ok(flat);
    }
    run(&ExpDecay, data, &best.1, &FitOptions::default())
}

/// Ramsey fringe fit. Δ is seeded from the dominant spectral peak, then
/// refined together with T2* by a scan with A, φ and B solved linearly.
pub fn fit_ramsey(data: &DataSeries) -> Result<FitResult> {
    data.validate(5)?;
    let (xs, ys) = (data.xs(), data.ys());
    let duration = span(&xs).max(f64::MIN_POSITIVE);
    let peak = dominant_frequency(&xs, &ys);
    let bin = 0.125 / duration;
    let mut best = (f64::INFINITY, [duration, peak, span(&ys) / 2.0, 0.0, 0.0]);
    for k in -8..=8 {
        let df = peak + k as f64 * bin / 8.0;
        if df <= 0.0 {
            continue;
        }
        for t2 in log_space(duration / 50.0, duration * 20.0, 61) {
            let (mut cos_col, mut sin_col) =
                (Vec::with_capacity(xs.len()), Vec::with_capacity(xs.len()));
            for &t in &xs {
                let e = (-t / t2).exp();
                let (s, c) = (TAU * df * t).sin_cos();
                cos_col.push(e * c);
                sin_col.push(e * s);
            }
            if let Some((c, sse)) = linear_fit(&[cos_col, sin_col, vec![1.0; xs.len()]], &ys) {
                if sse < best.0 {
                    best = (sse, [t2, df, c[0].hypot(c[1]), c[2], (-c[1]).atan2(c[0])]);
                }
            }
        }
    }
    if let Some(flat) = check_flat(&RamseyFringe, data, &best.1) {
        return Ok(flat);
    }
    let mut fit = run(&RamseyFringe, data, &best.1, &FitOptions::default())?;
    if fit.converged {
        if fit.params["A"] < 0.0 {
            fit.params["A"] = -fit.params["A"];
            fit.params["phase"] += PI;
        }
        if fit.params["delta_f"] < 0.0 {
            fit.params["delta_f"] = -fit.params["delta_f"];
            fit.params["phase"] = -fit.params["phase"];
        }
        let phase = fit.params["phase"];
        fit.params["phase"] = phase - TAU * ((phase + PI) / TAU).floor();
    }
    Ok(fit)
}

/// Randomized-benchmarking decay fit with derived `fidelity` and its
/// standard error. The starting `p` comes from a scan of `1 − p` over six
/// decades with A and B solved linearly.
pub fn fit_rb(data: &DataSeries) -> Result<FitResult> {
    data.validate(3)?;
    let (xs, ys) = (data.xs(), data.ys());
    if let Some(i) = xs.iter().position(|&n| n < 0.0) {
        return Err(Error::invalid(
            format!("points[{i}].x"),
            "sequence length must be >= 0",
        ));
    }
    let mut best = (
        f64::INFINITY,
        [
            span(&ys),
            ys.iter().copied().fold(f64::INFINITY, f64::min),
            0.99,
        ],
    );
    for u in (0..=300).map(|i| -6.0 + 6.0 * i as f64 / 300.0) {
        let p = 1.0 - 10f64.powf(u);
        if p <= 0.0 {
            continue;
        }
        let decay: Vec<f64> = xs.iter().map(|&n| p.powf(n)).collect();
        if let Some((c, sse)) = linear_fit(&[decay, vec![1.0; xs.len()]], &ys) {
            if sse < best.0 {
                best = (sse, [c[0], c[1], p]);
            }
        }
    }
    if let Some(flat) = check_flat(&RbDecay, data, &best.1) {
        return Ok(flat);
    }
    let mut fit = run(&RbDecay, data, &best.1, &FitOptions::default())?;
    let (p, sp) = (fit.params["p"], fit.std_errors["p"]);
    fit.derived.insert("fidelity".into(), rb_fidelity(p));
    fit.derived.insert("fidelity_std_error".into(), sp / 2.0);
    if !(p > 0.0 && p <= 1.0) {
        fit.warnings
            .push(format!("depolarizing parameter p = {p} is outside (0, 1]"));
    }
    if ys.iter().any(|&y| !(0.0..=1.05).contains(&y)) {
        fit.warnings
            .push("survival probabilities outside [0, 1.05]".into());
    }
    Ok(fit)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TuningOptions {
    /// Hold E_C at this value (MHz) instead of fitting it.
    pub fixed_e_c: Option<f64>,
    /// Re-fit with diagonalization starting from the closed-form optimum.
    pub refine_exact: bool,
}

/// For a trial flux map and E_C, `((f + E_C)² / 8E_C)²` is affine in
/// `cos 2πφ` with intercept `E_J1² + E_J2²` and slope `2 E_J1 E_J2`.
fn tuning_seed(
    xs: &[f64],
    ys: &[f64],
    amps: f64,
    offset: f64,
    e_c: f64,
) -> Option<(f64, [f64; 3])> {
    let cos: Vec<f64> = xs
        .iter()
        .map(|&i| (TAU * (i / amps + offset)).cos())
        .collect();
    let u: Vec<f64> = ys
        .iter()
        .map(|&f| ((f + e_c).powi(2) / (8.0 * e_c)).powi(2))
        .collect();
    let (c, _) = linear_fit(&[vec![1.0; xs.len()], cos], &u)?;
    let (a, b) = (c[0], c[1].abs());
    if !(a > b) {
        return None;
    }
    let e_sum = (a + b).sqrt();
    let e_diff = (a - b).sqrt();
    let (e1, e2) = (0.5 * (e_sum - e_diff), 0.5 * (e_sum + e_diff));
    // A negative slope means the trial offset sits half a period away.
    let offset = if c[1] < 0.0 { offset + 0.5 } else { offset };
    let sse = xs
        .iter()
        .zip(ys)
        .map(|(&i, &f)| (TuningCurve.value(i, &[e1, e2, e_c, amps, offset]) - f).powi(2))
        .sum::<f64>();
    sse.is_finite().then_some((sse, [e1, e2, offset]))
}

fn normalize_tuning(fit: &mut FitResult) {
    if fit.params["e_j1"] < 0.0 {
        fit.params["e_j1"] = -fit.params["e_j1"];
        fit.params["phi_offset"] += 0.5;
    }
    if fit.params["e_j2"] < 0.0 {
        fit.params["e_j2"] = -fit.params["e_j2"];
        fit.params["phi_offset"] += 0.5;
    }
    if fit.params["e_j1"] > fit.params["e_j2"] {
        fit.swap_params("e_j1", "e_j2");
    }
    if fit.params["amps_per_phi0"] < 0.0 {
        fit.params["amps_per_phi0"] = -fit.params["amps_per_phi0"];
        fit.params["phi_offset"] = -fit.params["phi_offset"];
    }
    let off = fit.params["phi_offset"];
    fit.params["phi_offset"] = off - (off + 0.5).floor();
}

/// Tuning-curve fit of qubit frequency (MHz) against bias current.
///
/// The current period is seeded from the dominant spectral peak of the data
/// and refined with the flux offset and E_C on a grid, where E_J1 and E_J2
/// follow linearly. The closed form is fitted first; `refine_exact`
/// repeats the fit with diagonalization from that optimum.
pub fn fit_tuning_curve(data: &DataSeries, options: TuningOptions) -> Result<FitResult> {
    data.validate(6)?;
    if let Some(e_c) = options.fixed_e_c {
        if !(e_c > 0.0) || !e_c.is_finite() {
            return Err(Error::invalid(
                "fixed_e_c",
                format!("must be > 0, got {e_c}"),
            ));
        }
    }
    let (xs, ys) = (data.xs(), data.ys());
    let f_top = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(f_top > 0.0) {
        return Err(Error::invalid("data", "qubit frequencies must be positive"));
    }
    let period0 = 1.0 / dominant_frequency(&xs, &ys);
    let e_c_grid: Vec<f64> = match options.fixed_e_c {
        Some(e_c) => vec![e_c],
        None => log_space(f_top / 60.0, f_top / 6.0, 25).collect(),
    };
    let mut best: Option<(f64, [f64; 5])> = None;
    for amps in log_space(period0 / 4.0, period0 * 4.0, 81) {
        for k in 0..40 {
            let offset = -0.5 + k as f64 / 40.0;
            for &e_c in &e_c_grid {
                if let Some((sse, [e1, e2, offset])) = tuning_seed(&xs, &ys, amps, offset, e_c) {
                    if best.is_none_or(|(b, _)| sse < b) {
                        best = Some((sse, [e1, e2, e_c, amps, offset]));
                    }
                }
            }
        }
    }
    let initial = best
        .map(|(_, p)| p)
        .unwrap_or([f_top, f_top, f_top / 20.0, period0, 0.0]);
    if let Some(flat) = check_flat(&TuningCurve, data, &initial) {
        return Ok(flat);
    }
    let fit_options = FitOptions::default().with_fixed(vec![
        false,
        false,
        options.fixed_e_c.is_some(),
        false,
        false,
    ]);
    let mut fit = run(&TuningCurve, data, &initial, &fit_options)?;
    if options.refine_exact && fit.converged {
        let start: Vec<f64> = fit.params.values().copied().collect();
        let mut exact = run(&TuningCurveExact::default(), data, &start, &fit_options)?;
        exact.warnings.extend(fit.warnings);
        fit = exact;
    }
    if fit.converged {
        normalize_tuning(&mut fit);
        let flux_span = span(&xs) / fit.params["amps_per_phi0"];
        if flux_span < 0.3 {
            fit.warnings.push(format!(
                "data span {flux_span:.3} flux quanta (< 0.3): parameters are ill-conditioned"
            ));
        }
    }
    Ok(fit)
}

/// β calibration: fits the time-averaged frequency (MHz) against pulse
/// amplitude (V). Reports `beta` (Φ0/V) and the derived flux amplitude
/// `beta_times_max_amplitude`, which is what the data constrain.
pub fn fit_beta(data: &DataSeries, params: &TransmonParams, phi_dc: f64) -> Result<FitResult> {
    data.validate(2)?;
    let model = BetaModel::new(params, phi_dc)?;
    let xs = data.xs();
    let ys = data.ys();
    let a_max = xs.iter().fold(0.0f64, |m, &a| m.max(a.abs()));
    if a_max == 0.0 {
        return Ok(degenerate(&model, &[0.0], "all pulse amplitudes are zero"));
    }
    let mut best = (f64::INFINITY, 0.0);
    for flux in log_space(1e-4, 0.5, 400) {
        let beta = flux / a_max;
        let sse: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(&a, &y)| (model.value(a, &[beta]) - y).powi(2))
            .sum();
        if sse < best.0 {
            best = (sse, beta);
        }
    }
    if let Some(flat) = check_flat(&model, data, &[best.1]) {
        return Ok(flat);
    }
    let mut fit = run(&model, data, &[best.1], &FitOptions::default())?;
    let (beta, sb) = (fit.params["beta"], fit.std_errors["beta"]);
    if beta < 0.0 {
        fit.params["beta"] = -beta;
    }
    fit.derived
        .insert("beta_times_max_amplitude".into(), beta.abs() * a_max);
    fit.derived
        .insert("beta_times_max_amplitude_std_error".into(), sb * a_max);
    Ok(fit)
}
