//! Three-port diplexer built from a low-pass and a band-pass ladder joined
//! at a common node.
//!
//! Port 1 feeds the band-pass branch, port 2 the low-pass branch, port 3 is
//! the common output. Each ladder is oriented from its own input port
//! (first element) towards the junction (last element). An optional
//! frequency-proportional series resistance between the junction and port 3
//! stands in for an absorptive (eccosorb) section.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::network::{check_frequency, db, log_grid, LadderNetwork};
use super::synth::{synth_bandpass_form, synth_lowpass_form, LadderForm};
use crate::error::{Error, Result};

pub const HALF_POWER_DB: f64 = -3.010_299_956_639_812;

/// Band requirements. Frequencies in MHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiplexerSpec {
    pub lp_cutoff: f64,
    pub bp_low: f64,
    pub bp_high: f64,
    /// Port 1 ↔ port 2 leakage must stay below this level, dB.
    pub isolation_db: f64,
    pub isolation_max_freq: f64,
    /// Allowed relative error of each −3 dB edge.
    pub edge_tolerance: f64,
}

impl Default for DiplexerSpec {
    fn default() -> Self {
        Self {
            lp_cutoff: 1500.0,
            bp_low: 3000.0,
            bp_high: 7000.0,
            isolation_db: -20.0,
            isolation_max_freq: 15000.0,
            edge_tolerance: 0.1,
        }
    }
}

impl DiplexerSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.lp_cutoff > 0.0) {
            return Err(Error::invalid("lp_cutoff", "must be > 0"));
        }
        if !(self.bp_low > self.lp_cutoff) {
            return Err(Error::invalid("bp_low", "must exceed lp_cutoff"));
        }
        if !(self.bp_high > self.bp_low) {
            return Err(Error::invalid("bp_high", "must exceed bp_low"));
        }
        if !(self.isolation_max_freq > 0.0) {
            return Err(Error::invalid("isolation_max_freq", "must be > 0"));
        }
        if !(self.edge_tolerance > 0.0) {
            return Err(Error::invalid("edge_tolerance", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diplexer {
    pub lowpass: LadderNetwork,
    pub bandpass: LadderNetwork,
    pub z0: f64,
    /// Series loss at the common port, ohms per GHz.
    pub absorber_ohm_per_ghz: f64,
}

impl Diplexer {
    /// Butterworth branches for `spec`, both series-first so that each
    /// presents a high impedance to the junction outside its band.
    pub fn synthesize(
        lp_order: usize,
        bp_order: usize,
        z0: f64,
        spec: &DiplexerSpec,
    ) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            lowpass: synth_lowpass_form(lp_order, spec.lp_cutoff, z0, LadderForm::SeriesFirst)?,
            bandpass: synth_bandpass_form(
                bp_order,
                spec.bp_low,
                spec.bp_high,
                z0,
                LadderForm::SeriesFirst,
            )?,
            z0,
            absorber_ohm_per_ghz: 0.0,
        })
    }

    pub fn with_absorber(mut self, ohm_per_ghz: f64) -> Self {
        self.absorber_ohm_per_ghz = ohm_per_ghz;
        self
    }

    pub fn evaluate(&self, frequencies_mhz: &[f64]) -> Result<Vec<DiplexerPoint>> {
        if !(self.absorber_ohm_per_ghz >= 0.0) {
            return Err(Error::invalid("absorber_ohm_per_ghz", "must be >= 0"));
        }
        evaluate(
            &self.lowpass,
            &self.bandpass,
            self.z0,
            self.absorber_ohm_per_ghz,
            frequencies_mhz,
        )
    }
}

/// Subset of the three-port S-matrix at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiplexerPoint {
    pub frequency_mhz: f64,
    /// Band-pass input → common.
    pub s31: Complex64,
    /// Low-pass input → common.
    pub s32: Complex64,
    /// Low-pass input → band-pass input (leakage).
    pub s12: Complex64,
    /// Reflection at the common port.
    pub s33: Complex64,
}

impl DiplexerPoint {
    pub fn s31_db(&self) -> f64 {
        db(self.s31)
    }
    pub fn s32_db(&self) -> f64 {
        db(self.s32)
    }
    pub fn s12_db(&self) -> f64 {
        db(self.s12)
    }
    pub fn s33_db(&self) -> f64 {
        db(self.s33)
    }
}

/// Lossless ideal junction (no absorber).
pub fn diplexer_eval(
    lp: &LadderNetwork,
    bp: &LadderNetwork,
    z0: f64,
    frequencies_mhz: &[f64],
) -> Result<Vec<DiplexerPoint>> {
    evaluate(lp, bp, z0, 0.0, frequencies_mhz)
}

fn evaluate(
    lp: &LadderNetwork,
    bp: &LadderNetwork,
    z0: f64,
    absorber_ohm_per_ghz: f64,
    frequencies_mhz: &[f64],
) -> Result<Vec<DiplexerPoint>> {
    if lp.z0() != z0 || bp.z0() != z0 {
        return Err(Error::invalid(
            "z0",
            format!(
                "branches ({}, {}) must match the diplexer z0 {z0}",
                lp.z0(),
                bp.z0()
            ),
        ));
    }
    frequencies_mhz
        .iter()
        .map(|&f| {
            check_frequency(f)?;
            let lp_abcd = lp.abcd(f)?;
            let bp_abcd = bp.abcd(f)?;
            let y_lp = lp_abcd.reverse_input_admittance(z0);
            let y_bp = bp_abcd.reverse_input_admittance(z0);
            let r_abs = absorber_ohm_per_ghz * f * 1e-3;
            let y_port3 = Complex64::new(1.0 / (z0 + r_abs), 0.0);
            // Fraction of the junction voltage reaching the port-3 load.
            let divider = z0 / (z0 + r_abs);

            let v_j_from_bp = bp_abcd.voltage_gain(z0, y_port3 + y_lp)?;
            let v_j_from_lp = lp_abcd.voltage_gain(z0, y_port3 + y_bp)?;
            let s31 = 2.0 * v_j_from_bp * divider;
            let s32 = 2.0 * v_j_from_lp * divider;
            // Junction → port 1 through the band-pass ladder run backwards.
            let back = bp_abcd.d + bp_abcd.b / z0;
            let s12 = 2.0 * v_j_from_lp / back;

            let z_in3 = Complex64::new(r_abs, 0.0) + Complex64::new(1.0, 0.0) / (y_lp + y_bp);
            let s33 = (z_in3 - z0) / (z_in3 + z0);
            let point = DiplexerPoint {
                frequency_mhz: f,
                s31,
                s32,
                s12,
                s33,
            };
            if [s31, s32, s12, s33].iter().any(|s| !s.is_finite()) {
                return Err(Error::NonPhysicalNetwork(format!(
                    "non-finite S-parameters at {f} MHz"
                )));
            }
            Ok(point)
        })
        .collect()
}

/// Log grid 10 MHz – 15 GHz, 2000 points.
pub fn default_grid() -> Vec<f64> {
    log_grid(10.0, 15000.0, 2000)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpecItem {
    pub name: String,
    pub pass: bool,
    /// Measured quantity: edge frequency (MHz) or worst leakage (dB).
    pub measured: Option<f64>,
    pub target: f64,
    /// Positive when passing. Relative for edges, dB for isolation.
    pub margin: f64,
    /// Frequency at which the margin is evaluated, MHz.
    pub worst_frequency_mhz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpecReport {
    pub pass: bool,
    pub items: Vec<SpecItem>,
}

/// Interpolated (in log f) crossing of `level` between two grid points.
fn interpolate_crossing(f0: f64, y0: f64, f1: f64, y1: f64, level: f64) -> f64 {
    let t = (level - y0) / (y1 - y0);
    (f0.ln() + t * (f1.ln() - f0.ln())).exp()
}

/// First grid crossing where `trace` falls below `level`.
fn first_fall(freqs: &[f64], trace: &[f64], level: f64) -> Option<f64> {
    (1..trace.len())
        .find(|&i| trace[i - 1] >= level && trace[i] < level)
        .map(|i| interpolate_crossing(freqs[i - 1], trace[i - 1], freqs[i], trace[i], level))
}

fn edge_item(name: &str, measured: Option<f64>, target: f64, tol: f64) -> SpecItem {
    let margin = measured.map_or(f64::NEG_INFINITY, |m| tol - (m / target - 1.0).abs());
    SpecItem {
        name: name.to_string(),
        pass: margin >= 0.0,
        measured,
        target,
        margin,
        worst_frequency_mhz: measured,
    }
}

/// Checks the −3 dB edges of both paths and the port 1 ↔ 2 isolation.
pub fn check_spec(response: &[DiplexerPoint], spec: &DiplexerSpec) -> Result<SpecReport> {
    if response.is_empty() {
        return Err(Error::Empty(
            "diplexer response has no frequency points".into(),
        ));
    }
    spec.validate()?;
    let freqs: Vec<f64> = response.iter().map(|p| p.frequency_mhz).collect();
    let s32: Vec<f64> = response.iter().map(DiplexerPoint::s32_db).collect();
    let s31: Vec<f64> = response.iter().map(DiplexerPoint::s31_db).collect();

    let lp_edge = first_fall(&freqs, &s32, HALF_POWER_DB);

    let passband: Vec<usize> = (0..s31.len())
        .filter(|&i| s31[i] >= HALF_POWER_DB)
        .collect();
    let bp_low = passband.first().map(|&i| {
        if i == 0 {
            freqs[0]
        } else {
            interpolate_crossing(freqs[i - 1], s31[i - 1], freqs[i], s31[i], HALF_POWER_DB)
        }
    });
    let bp_high = passband.last().map(|&i| {
        if i + 1 == s31.len() {
            freqs[i]
        } else {
            interpolate_crossing(freqs[i], s31[i], freqs[i + 1], s31[i + 1], HALF_POWER_DB)
        }
    });

    let tol = spec.edge_tolerance;
    let mut items = vec![
        edge_item("lp_cutoff", lp_edge, spec.lp_cutoff, tol),
        edge_item("bp_low_edge", bp_low, spec.bp_low, tol),
        edge_item("bp_high_edge", bp_high, spec.bp_high, tol),
    ];

    let worst = response
        .iter()
        .filter(|p| p.frequency_mhz <= spec.isolation_max_freq)
        .map(|p| (p.frequency_mhz, p.s12_db()))
        .max_by(|a, b| a.1.total_cmp(&b.1));
    items.push(match worst {
        Some((f, level)) => SpecItem {
            name: "isolation".into(),
            pass: level < spec.isolation_db,
            measured: Some(level),
            target: spec.isolation_db,
            margin: spec.isolation_db - level,
            worst_frequency_mhz: Some(f),
        },
        None => SpecItem {
            name: "isolation".into(),
            pass: false,
            measured: None,
            target: spec.isolation_db,
            margin: f64::NEG_INFINITY,
            worst_frequency_mhz: None,
        },
    });

    Ok(SpecReport {
        pass: items.iter().all(|i| i.pass),
        items,
    })
}
