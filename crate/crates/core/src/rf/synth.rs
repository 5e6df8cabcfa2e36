//! Butterworth ladder synthesis by prototype scaling.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::network::{angular, ComponentKind, Element, LadderNetwork};
use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 11;

/// Which element type sits at the input port of the ladder.
///
/// A series-first ladder presents a high impedance out of band, which is
/// what a branch feeding a shared junction needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LadderForm {
    #[default]
    ShuntFirst,
    SeriesFirst,
}

impl LadderForm {
    fn is_series(self, k: usize) -> bool {
        (k % 2 == 0) == (self == LadderForm::SeriesFirst)
    }
}

/// Maximally flat low-pass prototype values `g_k = 2 sin((2k−1)π / 2n)`, k = 1..=n.
pub fn butterworth_g(order: usize) -> Vec<f64> {
    (1..=order)
        .map(|k| 2.0 * ((2 * k - 1) as f64 * PI / (2 * order) as f64).sin())
        .collect()
}

fn check_order(order: usize) -> Result<()> {
    if (1..=MAX_ORDER).contains(&order) {
        Ok(())
    } else {
        Err(Error::invalid(
            "order",
            format!("must be in [1, {MAX_ORDER}], got {order}"),
        ))
    }
}

fn check_positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be > 0, got {v}")))
    }
}

/// Shunt-C / series-L Butterworth low-pass with −3 dB at `f_cutoff_mhz`.
pub fn synth_lowpass(order: usize, f_cutoff_mhz: f64, z0: f64) -> Result<LadderNetwork> {
    synth_lowpass_form(order, f_cutoff_mhz, z0, LadderForm::ShuntFirst)
}

pub fn synth_lowpass_form(
    order: usize,
    f_cutoff_mhz: f64,
    z0: f64,
    form: LadderForm,
) -> Result<LadderNetwork> {
    check_order(order)?;
    check_positive("f_cutoff", f_cutoff_mhz)?;
    check_positive("z0", z0)?;
    let wc = angular(f_cutoff_mhz);
    let elements = butterworth_g(order)
        .into_iter()
        .enumerate()
        .map(|(k, g)| {
            if form.is_series(k) {
                Element::series(ComponentKind::Inductor, g * z0 / wc)
            } else {
                Element::shunt(ComponentKind::Capacitor, g / (wc * z0))
            }
        })
        .collect();
    LadderNetwork::new(elements, z0)
}

/// Butterworth band-pass with −3 dB edges at `f_low_mhz` and `f_high_mhz`.
///
/// Centre `f0 = sqrt(f_low f_high)`, fractional bandwidth `(f_high − f_low)/f0`.
/// Series prototype inductors become series LC resonators, shunt capacitors
/// become parallel LC tanks.
pub fn synth_bandpass(
    order: usize,
    f_low_mhz: f64,
    f_high_mhz: f64,
    z0: f64,
) -> Result<LadderNetwork> {
    synth_bandpass_form(order, f_low_mhz, f_high_mhz, z0, LadderForm::ShuntFirst)
}

pub fn synth_bandpass_form(
    order: usize,
    f_low_mhz: f64,
    f_high_mhz: f64,
    z0: f64,
    form: LadderForm,
) -> Result<LadderNetwork> {
    check_order(order)?;
    check_positive("f_low", f_low_mhz)?;
    check_positive("z0", z0)?;
    if !(f_high_mhz > f_low_mhz) {
        return Err(Error::invalid(
            "f_high",
            format!("must exceed f_low ({f_low_mhz}), got {f_high_mhz}"),
        ));
    }
    let f0 = (f_low_mhz * f_high_mhz).sqrt();
    let w0 = angular(f0);
    let fbw = (f_high_mhz - f_low_mhz) / f0;
    let mut elements = Vec::with_capacity(2 * order);
    for (k, g) in butterworth_g(order).into_iter().enumerate() {
        if form.is_series(k) {
            elements.push(Element::series(
                ComponentKind::Inductor,
                g * z0 / (w0 * fbw),
            ));
            elements.push(Element::series(
                ComponentKind::Capacitor,
                fbw / (w0 * g * z0),
            ));
        } else {
            elements.push(Element::shunt(
                ComponentKind::Capacitor,
                g / (w0 * fbw * z0),
            ));
            elements.push(Element::shunt(ComponentKind::Inductor, fbw * z0 / (w0 * g)));
        }
    }
    LadderNetwork::new(elements, z0)
}

/// Matched resistive pi attenuator.
pub fn attenuator(db: f64, z0: f64) -> Result<LadderNetwork> {
    check_positive("db", db)?;
    check_positive("z0", z0)?;
    let k = 10f64.powf(db / 20.0);
    let shunt = z0 * (k + 1.0) / (k - 1.0);
    let series = z0 * (k * k - 1.0) / (2.0 * k);
    LadderNetwork::new(
        vec![
            Element::shunt(ComponentKind::Resistor, shunt),
            Element::series(ComponentKind::Resistor, series),
            Element::shunt(ComponentKind::Resistor, shunt),
        ],
        z0,
    )
}
