//! Asymmetric-SQUID transmon spectrum.
//!
//! Energies are frequency equivalents E/h in MHz and fluxes are in units of
//! the flux quantum. The SQUID is described by its two junction energies; the
//! flux-dependent Josephson energy is
//!
//! ```text
//! E_J(φ) = E_JΣ · sqrt(cos²(πφ) + d² sin²(πφ)),   d = (E_J2 − E_J1) / E_JΣ
//! ```

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default charge-basis truncation, number of charge states.
pub const DEFAULT_BASIS_SIZE: usize = 41;

/// Threshold on |f01(N) − f01(N−4)| for a diagonalization to count as converged, MHz.
pub const CONVERGENCE_MHZ: f64 = 1e-3;

/// Below this `e_j_sum / e_c` the closed-form spectrum stops being reliable.
pub const TRANSMON_REGIME_RATIO: f64 = 20.0;

/// Charging energy and junction energies of an asymmetric-SQUID transmon.
///
/// Junctions are stored with `e_j1 <= e_j2`; `swapped` records whether the
/// caller supplied them in the opposite order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct TransmonParams {
    e_c: f64,
    e_j1: f64,
    e_j2: f64,
    #[serde(skip_serializing)]
    swapped: bool,
}

#[derive(Deserialize)]
struct RawParams {
    e_c: f64,
    e_j1: f64,
    e_j2: f64,
}

impl TryFrom<RawParams> for TransmonParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        TransmonParams::new(raw.e_c, raw.e_j1, raw.e_j2)
    }
}

fn positive(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            field,
            format!("must be a finite value > 0, got {value}"),
        ))
    }
}

impl TransmonParams {
    /// All three energies in MHz. Junction order is normalized.
    pub fn new(e_c: f64, e_j1: f64, e_j2: f64) -> Result<Self> {
        positive("e_c", e_c)?;
        positive("e_j1", e_j1)?;
        positive("e_j2", e_j2)?;
        let swapped = e_j1 > e_j2;
        let (e_j1, e_j2) = if swapped { (e_j2, e_j1) } else { (e_j1, e_j2) };
        let params = Self {
            e_c,
            e_j1,
            e_j2,
            swapped,
        };
        if !params.is_transmon_regime() {
            log::warn!(
                "E_JΣ/E_C = {:.2} is below {TRANSMON_REGIME_RATIO}; closed-form spectra are unreliable",
                params.e_j_sum() / e_c
            );
        }
        Ok(params)
    }

    pub fn e_c(&self) -> f64 {
        self.e_c
    }

    pub fn e_j1(&self) -> f64 {
        self.e_j1
    }

    pub fn e_j2(&self) -> f64 {
        self.e_j2
    }

    /// True when the constructor had to exchange the junction energies.
    pub fn swapped(&self) -> bool {
        self.swapped
    }

    pub fn e_j_sum(&self) -> f64 {
        self.e_j1 + self.e_j2
    }

    /// SQUID asymmetry, in `[0, 1)`.
    pub fn asymmetry(&self) -> f64 {
        (self.e_j2 - self.e_j1) / self.e_j_sum()
    }

    pub fn is_transmon_regime(&self) -> bool {
        self.e_j_sum() / self.e_c >= TRANSMON_REGIME_RATIO
    }
}

/// Operating point: external flux (Φ0) and offset charge.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FluxPoint {
    pub phi: f64,
    #[serde(default)]
    pub n_g: f64,
}

impl FluxPoint {
    pub fn new(phi: f64) -> Self {
        Self { phi, n_g: 0.0 }
    }

    pub fn with_offset_charge(phi: f64, n_g: f64) -> Self {
        Self { phi, n_g }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumResult {
    /// 0→1 transition, MHz.
    pub f01: f64,
    /// 1→2 transition, MHz.
    pub f12: f64,
    /// `f12 − f01`, MHz.
    pub anharmonicity: f64,
    pub basis_size: usize,
    pub converged: bool,
}

/// Flux-dependent Josephson energy in MHz. Even and 1-periodic in `phi`.
pub fn effective_ej(params: &TransmonParams, phi: f64) -> f64 {
    let d = params.asymmetry();
    let (s, c) = (PI * phi).sin_cos();
    params.e_j_sum() * (c * c + d * d * s * s).sqrt()
}

/// Closed-form transmon frequency `sqrt(8 E_J(φ) E_C) − E_C`, MHz.
pub fn f01_asymptotic(params: &TransmonParams, phi: f64) -> Result<f64> {
    let e_j = effective_ej(params, phi);
    // A symmetric SQUID at half flux returns round-off rather than exactly 0.
    if e_j <= 1e-9 * params.e_j_sum() {
        return Err(Error::OutsideTransmonRegime { e_j });
    }
    Ok((8.0 * e_j * params.e_c()).sqrt() - params.e_c())
}

/// Lowest two transitions `[f01, f12]` of the charge-basis Hamiltonian
/// `4 E_C (n − n_g)² − (E_J/2)(|n⟩⟨n+1| + h.c.)` truncated to `basis_size`
/// charge states centred on `n = 0`.
pub(crate) fn charge_basis_transitions(
    e_c: f64,
    e_j: f64,
    n_g: f64,
    basis_size: usize,
) -> [f64; 2] {
    let half = (basis_size / 2) as f64;
    let hamiltonian = DMatrix::from_fn(basis_size, basis_size, |i, j| {
        if i == j {
            let n = i as f64 - half;
            4.0 * e_c * (n - n_g).powi(2)
        } else if i.abs_diff(j) == 1 {
            -0.5 * e_j
        } else {
            0.0
        }
    });
    let mut levels: Vec<f64> = hamiltonian
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    levels.sort_by(f64::total_cmp);
    [levels[1] - levels[0], levels[2] - levels[1]]
}

/// Exact spectrum from charge-basis diagonalization.
///
/// `basis_size` must be odd and at least 11. The result is flagged as
/// converged when repeating at `basis_size − 4` moves f01 by under 1 kHz;
/// an unconverged result is returned rather than treated as an error.
pub fn diagonalize(
    params: &TransmonParams,
    point: FluxPoint,
    basis_size: usize,
) -> Result<SpectrumResult> {
    if basis_size < 11 || basis_size % 2 == 0 {
        return Err(Error::invalid(
            "basis_size",
            format!("must be odd and >= 11, got {basis_size}"),
        ));
    }
    let e_j = effective_ej(params, point.phi);
    let [f01, f12] = charge_basis_transitions(params.e_c(), e_j, point.n_g, basis_size);
    let [f01_coarse, _] = charge_basis_transitions(params.e_c(), e_j, point.n_g, basis_size - 4);
    Ok(SpectrumResult {
        f01,
        f12,
        anharmonicity: f12 - f01,
        basis_size,
        converged: (f01 - f01_coarse).abs() < CONVERGENCE_MHZ,
    })
}

/// f01 by diagonalization at the default basis size, without the convergence re-run.
pub fn f01_exact(params: &TransmonParams, phi: f64) -> f64 {
    charge_basis_transitions(
        params.e_c(),
        effective_ej(params, phi),
        0.0,
        DEFAULT_BASIS_SIZE,
    )[0]
}
