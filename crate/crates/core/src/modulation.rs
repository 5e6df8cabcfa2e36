//! Time-averaged qubit frequency under sinusoidal flux modulation.
//!
//! For a drive `Φ(t) = Φ_dc + Φ_ac cos(ω_d t)` the averaged frequency is the
//! harmonic series
//!
//! ```text
//! f̄ = Σ_{n=0}^{p} s_n cos(2πnΦ_dc) J₀(2πnΦ_ac)
//! ```
//!
//! where the `s_n` are the Fourier coefficients of the perturbative transmon
//! frequency `E_C Σ_k c_k ξ_φ^(k−1)` with `ξ_φ = sqrt(2E_C/E_J(φ))`. Expanding
//! `E_J(φ)^(−e/2)` with `E_J(φ)² = (E_J1² + E_J2²)(1 + Ẽ_J cos 2πφ)` yields
//! the Gauss hypergeometric factors below.
//!
//! [`time_average_oracle`] averages the diagonalized f01 over one drive period
//! and serves as an independent check of the series.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::special::{bessel_j0, hyp2f1, rising_factorial};
use crate::transmon::{f01_exact, TransmonParams};

/// Truncation order used when none is specified.
pub const DEFAULT_ORDER: usize = 8;
/// Largest supported truncation order.
pub const MAX_ORDER: usize = 12;
/// Smallest number of time samples accepted by the oracle.
pub const MIN_ORACLE_STEPS: usize = 256;

const C_NUMERATORS: [i64; 9] = [4, -1, -1, -21, -19, -5319, -6649, -1_180_581, -446_287];
const C_DENOMINATOR_LOG2: [i32; 9] = [0, 0, 2, 7, 7, 15, 15, 22, 20];

/// Perturbative expansion coefficients of the transmon frequency, slots 0..=8.
///
/// All entries are dyadic rationals and therefore exact in `f64`.
pub fn c_vector() -> [f64; 9] {
    std::array::from_fn(|k| C_NUMERATORS[k] as f64 / 2f64.powi(C_DENOMINATOR_LOG2[k]))
}

/// Sinusoidal flux drive: DC bias, AC amplitude (both Φ0) and drive frequency (MHz).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluxDrive {
    phi_dc: f64,
    phi_ac: f64,
    f_d: f64,
}

impl FluxDrive {
    pub fn new(phi_dc: f64, phi_ac: f64, f_d: f64) -> Result<Self> {
        if !phi_dc.is_finite() {
            return Err(Error::invalid("phi_dc", "must be finite"));
        }
        if !(phi_ac >= 0.0) || !phi_ac.is_finite() {
            return Err(Error::invalid(
                "phi_ac",
                format!("must be >= 0, got {phi_ac}"),
            ));
        }
        if !(f_d > 0.0) || !f_d.is_finite() {
            return Err(Error::invalid("f_d", format!("must be > 0, got {f_d}")));
        }
        Ok(Self {
            phi_dc,
            phi_ac,
            f_d,
        })
    }

    /// Drive at 100 MHz. The averaged frequency does not depend on `f_d`.
    pub fn with_amplitude(phi_dc: f64, phi_ac: f64) -> Result<Self> {
        Self::new(phi_dc, phi_ac, 100.0)
    }

    pub fn phi_dc(&self) -> f64 {
        self.phi_dc
    }

    pub fn phi_ac(&self) -> f64 {
        self.phi_ac
    }

    pub fn f_d(&self) -> f64 {
        self.f_d
    }

    /// Instantaneous flux at time `t` in µs.
    pub fn flux_at(&self, t_us: f64) -> f64 {
        self.phi_dc + self.phi_ac * (2.0 * PI * self.f_d * t_us).cos()
    }
}

/// `ξ = sqrt(2E_C / sqrt(E_J1² + E_J2²))` and `Ẽ_J = 2E_J1E_J2 / (E_J1² + E_J2²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModulationConstants {
    pub xi: f64,
    pub ej_tilde: f64,
}

impl ModulationConstants {
    pub fn from_params(params: &TransmonParams) -> Self {
        let (e1, e2) = (params.e_j1(), params.e_j2());
        let quad = e1 * e1 + e2 * e2;
        Self {
            xi: (2.0 * params.e_c() / quad.sqrt()).sqrt(),
            ej_tilde: 2.0 * e1 * e2 / quad,
        }
    }
}

/// Harmonic coefficients `s_0..=s_p` in MHz.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmonicSeries {
    pub s: Vec<f64>,
}

impl HarmonicSeries {
    pub fn new(params: &TransmonParams, order: usize) -> Result<Self> {
        let s = (0..=order)
            .map(|n| s_coeff(params, n))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { s })
    }

    pub fn order(&self) -> usize {
        self.s.len() - 1
    }

    /// Time-averaged frequency in MHz.
    pub fn evaluate(&self, drive: &FluxDrive) -> f64 {
        self.s
            .iter()
            .enumerate()
            .map(|(n, s)| {
                let n = n as f64;
                s * (2.0 * PI * n * drive.phi_dc).cos() * bessel_j0(2.0 * PI * n * drive.phi_ac)
            })
            .sum()
    }

    /// `f̄(drive) − f̄(drive without AC)` in MHz, summed as `Σ s_n cos(..)(J₀ − 1)`
    /// so small shifts do not suffer cancellation against the static frequency.
    pub fn shift(&self, drive: &FluxDrive) -> f64 {
        self.s
            .iter()
            .enumerate()
            .skip(1)
            .map(|(n, s)| {
                let n = n as f64;
                let x = 2.0 * PI * n * drive.phi_ac;
                s * (2.0 * PI * n * drive.phi_dc).cos() * j0_minus_one(x)
            })
            .sum()
    }
}

fn j0_minus_one(x: f64) -> f64 {
    if x.abs() < 0.1 {
        // −x²/4 + x⁴/64 − x⁶/2304 + x⁸/147456
        let q = x * x / 4.0;
        -q * (1.0 - q / 4.0 * (1.0 - q / 9.0 * (1.0 - q / 16.0)))
    } else {
        bessel_j0(x) - 1.0
    }
}

/// Harmonic coefficient `s_n` in MHz.
///
/// The c-vector slot `k` carries the power `ξ^(k−1)`. For `n ≥ 1` the Γ
/// quotient `Γ(n + e/4)/Γ(e/4)` is evaluated as the Pochhammer symbol
/// `(e/4)_n`, which is its analytic continuation and vanishes for the
/// `e = 0` (constant `−E_C`) slot.
pub fn s_coeff(params: &TransmonParams, n: usize) -> Result<f64> {
    let ModulationConstants { xi, ej_tilde } = ModulationConstants::from_params(params);
    let z = ej_tilde * ej_tilde;
    if z >= 1.0 {
        return Err(Error::SeriesBoundary);
    }
    let c = c_vector();
    let nf = n as f64;
    let mut sum = 0.0;
    for (k, &ck) in c.iter().enumerate() {
        let e = k as f64 - 1.0;
        let term = if n == 0 {
            hyp2f1(e / 8.0, e / 8.0 + 0.5, 1.0, z)?
        } else {
            let ratio = rising_factorial(e / 4.0, n as u32);
            if ratio == 0.0 {
                continue;
            }
            ratio * hyp2f1(nf / 2.0 + e / 8.0, (nf + 1.0) / 2.0 + e / 8.0, nf + 1.0, z)?
        };
        sum += ck * xi.powf(e) * term;
    }
    if n == 0 {
        return Ok(params.e_c() * sum);
    }
    let factorial: f64 = (1..=n).map(|i| i as f64).product();
    Ok(2.0 / factorial * params.e_c() * (-ej_tilde / 2.0).powi(n as i32) * sum)
}

/// Series estimate of the time-averaged qubit frequency, MHz. `order` ∈ [1, 12].
pub fn avg_frequency(params: &TransmonParams, drive: &FluxDrive, order: usize) -> Result<f64> {
    check_order(order)?;
    Ok(HarmonicSeries::new(params, order)?.evaluate(drive))
}

pub(crate) fn check_order(order: usize) -> Result<()> {
    if (1..=MAX_ORDER).contains(&order) {
        Ok(())
    } else {
        Err(Error::invalid(
            "p",
            format!("truncation order must be in [1, {MAX_ORDER}], got {order}"),
        ))
    }
}

/// Second-order small-amplitude shift around the upper sweet spot, in Hz (≤ 0).
pub fn second_order_shift(params: &TransmonParams, phi_ac: f64) -> f64 {
    let r = params.e_j1() / params.e_j2();
    let scale = (8.0 * params.e_j_sum() * params.e_c()).sqrt();
    let shift_mhz = -(PI * PI * r) / (2.0 * (1.0 + r).powi(2)) * scale * phi_ac * phi_ac;
    shift_mhz * 1e6
}

/// Brute-force time average of the diagonalized f01 over one drive period, MHz.
///
/// Uses `n_steps` equally spaced samples, i.e. the trapezoidal rule for a
/// periodic integrand. Samples are summed in time order.
pub fn time_average_oracle(
    params: &TransmonParams,
    drive: &FluxDrive,
    n_steps: usize,
) -> Result<f64> {
    if n_steps < MIN_ORACLE_STEPS {
        return Err(Error::invalid(
            "n_steps",
            format!("must be >= {MIN_ORACLE_STEPS}, got {n_steps}"),
        ));
    }
    let period_us = 1.0 / drive.f_d;
    let total: f64 = (0..n_steps)
        .map(|i| f01_exact(params, drive.flux_at(i as f64 * period_us / n_steps as f64)))
        .sum();
    Ok(total / n_steps as f64)
}
