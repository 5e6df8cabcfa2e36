//! Special functions needed by the flux-modulation series.
//!
//! Γ uses a Lanczos approximation (g = 7, 9 terms). J₀ and J₁ use the power
//! series for small arguments, Miller's backward recurrence normalized by
//! `1 = J₀ + 2ΣJ₂ₖ` in the mid range and the Hankel asymptotic form beyond.
//! ₂F₁ is summed directly as a power series.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Maximum number of terms summed by [`hyp2f1`].
pub const HYP2F1_MAX_TERMS: usize = 200_000;

/// Euler gamma function for `z > 0`.
pub fn gamma_fn(z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Domain {
            function: "gamma_fn",
            arg: z,
        });
    }
    Ok(gamma_positive(z))
}

fn gamma_positive(z: f64) -> f64 {
    if z < 0.5 {
        // Γ(z) = Γ(z+1)/z keeps the Lanczos sum in its accurate range.
        return gamma_positive(z + 1.0) / z;
    }
    let x = z - 1.0;
    let mut sum = LANCZOS_COEFFS[0];
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        sum += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * sum
}

/// Pochhammer symbol `(a)_n = a(a+1)…(a+n−1) = Γ(a+n)/Γ(a)`.
///
/// Valid for any real `a`, including non-positive values where the Γ
/// quotient has to be read as a limit; `(0)_n = 0` for `n ≥ 1`.
pub fn rising_factorial(a: f64, n: u32) -> f64 {
    (0..n).fold(1.0, |acc, k| acc * (a + k as f64))
}

/// Bessel function of the first kind, order 0.
pub fn bessel_j0(x: f64) -> f64 {
    bessel_j01(x).0
}

/// Bessel function of the first kind, order 1.
pub fn bessel_j1(x: f64) -> f64 {
    bessel_j01(x).1
}

/// `(J₀(x), J₁(x))`.
pub fn bessel_j01(x: f64) -> (f64, f64) {
    let ax = x.abs();
    let (j0, j1) = if ax < 8.0 {
        bessel_series(ax)
    } else if ax < 2000.0 {
        bessel_miller(ax)
    } else {
        bessel_hankel(ax)
    };
    (j0, if x < 0.0 { -j1 } else { j1 })
}

fn bessel_series(x: f64) -> (f64, f64) {
    let q = -0.25 * x * x;
    let (mut t0, mut t1) = (1.0, 0.5 * x);
    let (mut j0, mut j1) = (t0, t1);
    for k in 1..200 {
        let k = k as f64;
        t0 *= q / (k * k);
        t1 *= q / (k * (k + 1.0));
        j0 += t0;
        j1 += t1;
        if t0.abs() < 1e-18 * j0.abs().max(1e-300) && t1.abs() < 1e-18 * j1.abs().max(1e-300) {
            break;
        }
    }
    (j0, j1)
}

fn bessel_miller(x: f64) -> (f64, f64) {
    const RESCALE: f64 = 1e250;
    let start = (x + 40.0 + (60.0 * x).sqrt()) as usize;
    let start = start + start % 2;
    let two_over_x = 2.0 / x;
    let (mut next, mut cur) = (0.0_f64, 1e-300_f64);
    let mut norm = 0.0;
    let mut j1 = 0.0;
    for k in (1..=start).rev() {
        let prev = k as f64 * two_over_x * cur - next;
        next = cur;
        cur = prev;
        // `cur` now holds the unnormalized J_{k-1}.
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            next /= RESCALE;
            norm /= RESCALE;
            j1 /= RESCALE;
        }
        let order = k - 1;
        if order > 0 && order % 2 == 0 {
            norm += 2.0 * cur;
        }
        if order == 1 {
            j1 = cur;
        }
    }
    norm += cur;
    (cur / norm, j1 / norm)
}

fn bessel_hankel(x: f64) -> (f64, f64) {
    // Leading terms of the Hankel expansion; at x ≥ 2000 the neglected terms are < 1e-17.
    let y = 1.0 / (8.0 * x);
    let y2 = y * y;
    let p0 = 1.0 - 4.5 * y2;
    let q0 = -y * (1.0 - 37.5 * y2);
    let p1 = 1.0 + 7.5 * y2;
    let q1 = 3.0 * y * (1.0 - 17.5 * y2);
    let amp = (2.0 / (PI * x)).sqrt();
    let (s0, c0) = (x - 0.25 * PI).sin_cos();
    let (s1, c1) = (x - 0.75 * PI).sin_cos();
    (amp * (p0 * c0 - q0 * s0), amp * (p1 * c1 - q1 * s1))
}

/// Gauss hypergeometric function ₂F₁(a, b; c; z) for `0 ≤ z < 1`.
///
/// Direct power series. For `z > 0.75` the Euler transformation
/// `₂F₁(a,b;c;z) = (1−z)^(c−a−b) ₂F₁(c−a, c−b; c; z)` is applied first.
pub fn hyp2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if c <= 0.0 && c.fract() == 0.0 {
        return Err(Error::Domain {
            function: "hyp2f1 (c)",
            arg: c,
        });
    }
    if !(0.0..1.0).contains(&z) {
        return Err(Error::Domain {
            function: "hyp2f1 (z)",
            arg: z,
        });
    }
    if z > 0.75 {
        let prefactor = (1.0 - z).powf(c - a - b);
        return Ok(prefactor * hyp2f1_series(c - a, c - b, c, z)?);
    }
    hyp2f1_series(a, b, c, z)
}

fn hyp2f1_series(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut small_run = 0;
    for k in 0..HYP2F1_MAX_TERMS {
        let k = k as f64;
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z;
        sum += term;
        if term == 0.0 {
            return Ok(sum);
        }
        // Two consecutive negligible terms: early terms may shrink before the
        // ratio settles towards z.
        if term.abs() <= 1e-17 * sum.abs() {
            small_run += 1;
            if small_run == 2 {
                return Ok(sum);
            }
        } else {
            small_run = 0;
        }
    }
    Err(Error::NonConvergence {
        function: "hyp2f1",
        terms: HYP2F1_MAX_TERMS,
    })
}
