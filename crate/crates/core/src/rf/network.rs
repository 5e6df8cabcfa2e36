//! Lumped ladder networks and two-port ABCD/S-parameter evaluation.

use std::f64::consts::PI;
use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    Series,
    Shunt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentKind {
    /// Value in henries.
    Inductor,
    /// Value in farads.
    Capacitor,
    /// Value in ohms.
    Resistor,
}

/// One ladder rung. `value` is in SI units of the component kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub kind: Placement,
    pub component: ComponentKind,
    pub value: f64,
}

impl Element {
    pub fn series(component: ComponentKind, value: f64) -> Self {
        Self {
            kind: Placement::Series,
            component,
            value,
        }
    }

    pub fn shunt(component: ComponentKind, value: f64) -> Self {
        Self {
            kind: Placement::Shunt,
            component,
            value,
        }
    }

    /// Impedance at `frequency_mhz`.
    pub fn impedance(&self, frequency_mhz: f64) -> Complex64 {
        let omega = angular(frequency_mhz);
        match self.component {
            ComponentKind::Inductor => Complex64::new(0.0, omega * self.value),
            ComponentKind::Capacitor => Complex64::new(0.0, -1.0 / (omega * self.value)),
            ComponentKind::Resistor => Complex64::new(self.value, 0.0),
        }
    }

    /// Admittance at `frequency_mhz`, computed directly so that open circuits stay finite.
    pub fn admittance(&self, frequency_mhz: f64) -> Complex64 {
        let omega = angular(frequency_mhz);
        match self.component {
            ComponentKind::Inductor => Complex64::new(0.0, -1.0 / (omega * self.value)),
            ComponentKind::Capacitor => Complex64::new(0.0, omega * self.value),
            ComponentKind::Resistor => Complex64::new(1.0 / self.value, 0.0),
        }
    }

    pub fn is_reactive(&self) -> bool {
        self.component != ComponentKind::Resistor
    }
}

pub(crate) fn angular(frequency_mhz: f64) -> f64 {
    2.0 * PI * frequency_mhz * 1e6
}

/// ABCD (transmission) matrix of a two-port.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Abcd {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl Abcd {
    pub fn identity() -> Self {
        Self {
            a: Complex64::new(1.0, 0.0),
            b: Complex64::new(0.0, 0.0),
            c: Complex64::new(0.0, 0.0),
            d: Complex64::new(1.0, 0.0),
        }
    }

    pub fn series(z: Complex64) -> Self {
        Self {
            b: z,
            ..Self::identity()
        }
    }

    pub fn shunt(y: Complex64) -> Self {
        Self {
            c: y,
            ..Self::identity()
        }
    }

    pub fn determinant(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    /// `(s11, s21, s12, s22)` for equal real port impedances `z0`.
    pub fn to_s_params(&self, z0: f64) -> Result<[Complex64; 4]> {
        let Abcd { a, b, c, d } = *self;
        let denom = a + b / z0 + c * z0 + d;
        if !(denom.norm() > 1e-300) || !denom.is_finite() {
            return Err(Error::NonPhysicalNetwork(format!(
                "ABCD→S denominator is {denom}"
            )));
        }
        let s11 = (a + b / z0 - c * z0 - d) / denom;
        let s21 = Complex64::new(2.0, 0.0) / denom;
        let s12 = 2.0 * self.determinant() / denom;
        let s22 = (-a + b / z0 - c * z0 + d) / denom;
        Ok([s11, s21, s12, s22])
    }

    /// Admittance looking into port 2 with port 1 terminated in `z0`.
    pub(crate) fn reverse_input_admittance(&self, z0: f64) -> Complex64 {
        (self.a + self.c * z0) / (self.b + self.d * z0)
    }

    /// `V2 / V_source` when port 1 is driven from a `z0` source and port 2
    /// sees load admittance `y_load`.
    pub(crate) fn voltage_gain(&self, z0: f64, y_load: Complex64) -> Result<Complex64> {
        let denom = self.a + self.b * y_load + z0 * self.c + z0 * self.d * y_load;
        if !(denom.norm() > 1e-300) || !denom.is_finite() {
            return Err(Error::NonPhysicalNetwork(format!(
                "terminated gain denominator is {denom}"
            )));
        }
        Ok(Complex64::new(1.0, 0.0) / denom)
    }
}

impl Mul for Abcd {
    type Output = Abcd;

    /// Cascade in port order: `self` then `rhs`.
    fn mul(self, rhs: Abcd) -> Abcd {
        Abcd {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
        }
    }
}

pub fn element_abcd(element: &Element, frequency_mhz: f64) -> Abcd {
    match element.kind {
        Placement::Series => Abcd::series(element.impedance(frequency_mhz)),
        Placement::Shunt => Abcd::shunt(element.admittance(frequency_mhz)),
    }
}

/// Two-port response at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoPortResponse {
    pub frequency_mhz: f64,
    pub abcd: Abcd,
    pub s11: Complex64,
    pub s21: Complex64,
}

impl TwoPortResponse {
    pub fn s21_db(&self) -> f64 {
        db(self.s21)
    }

    pub fn s11_db(&self) -> f64 {
        db(self.s11)
    }
}

pub fn db(s: Complex64) -> f64 {
    20.0 * s.norm().log10()
}

/// Ordered ladder of series/shunt elements with a common port impedance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLadder")]
pub struct LadderNetwork {
    elements: Vec<Element>,
    z0: f64,
}

#[derive(Deserialize)]
struct RawLadder {
    elements: Vec<Element>,
    z0: f64,
}

impl TryFrom<RawLadder> for LadderNetwork {
    type Error = Error;

    fn try_from(raw: RawLadder) -> Result<Self> {
        LadderNetwork::new(raw.elements, raw.z0)
    }
}

impl LadderNetwork {
    pub fn new(elements: Vec<Element>, z0: f64) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::Empty("ladder network has no elements".into()));
        }
        if !(z0 > 0.0) || !z0.is_finite() {
            return Err(Error::invalid("z0", format!("must be > 0, got {z0}")));
        }
        for (i, e) in elements.iter().enumerate() {
            if !(e.value > 0.0) || !e.value.is_finite() {
                return Err(Error::invalid(
                    format!("elements[{i}].value"),
                    format!("must be > 0, got {}", e.value),
                ));
            }
        }
        Ok(Self { elements, z0 })
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn z0(&self) -> f64 {
        self.z0
    }

    pub fn is_lossless(&self) -> bool {
        self.elements.iter().all(Element::is_reactive)
    }

    pub fn abcd(&self, frequency_mhz: f64) -> Result<Abcd> {
        check_frequency(frequency_mhz)?;
        Ok(self.elements.iter().fold(Abcd::identity(), |acc, e| {
            acc * element_abcd(e, frequency_mhz)
        }))
    }

    pub fn response(&self, frequency_mhz: f64) -> Result<TwoPortResponse> {
        let abcd = self.abcd(frequency_mhz)?;
        let [s11, s21, _, _] = abcd.to_s_params(self.z0)?;
        Ok(TwoPortResponse {
            frequency_mhz,
            abcd,
            s11,
            s21,
        })
    }

    pub fn sweep(&self, frequencies_mhz: &[f64]) -> Result<Vec<TwoPortResponse>> {
        frequencies_mhz.iter().map(|&f| self.response(f)).collect()
    }
}

pub(crate) fn check_frequency(frequency_mhz: f64) -> Result<()> {
    if frequency_mhz > 0.0 && frequency_mhz.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(
            "frequency",
            format!("must be > 0, got {frequency_mhz}"),
        ))
    }
}

/// Concatenates networks in port order. All must share one `z0`.
pub fn cascade(networks: &[&LadderNetwork]) -> Result<LadderNetwork> {
    let first = networks
        .first()
        .ok_or_else(|| Error::Empty("cascade of zero networks".into()))?;
    let z0 = first.z0;
    if let Some(bad) = networks.iter().find(|n| n.z0 != z0) {
        return Err(Error::invalid(
            "z0",
            format!("cascade requires matched ports, got {} and {}", z0, bad.z0),
        ));
    }
    let elements = networks
        .iter()
        .flat_map(|n| n.elements.iter().copied())
        .collect();
    LadderNetwork::new(elements, z0)
}

/// `n` log-spaced frequencies from `start_mhz` to `stop_mhz` inclusive.
pub fn log_grid(start_mhz: f64, stop_mhz: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![start_mhz],
        _ => {
            let (l0, l1) = (start_mhz.log10(), stop_mhz.log10());
            (0..n)
                .map(|i| {
                    if i == n - 1 {
                        stop_mhz
                    } else {
                        10f64.powf(l0 + (l1 - l0) * i as f64 / (n - 1) as f64)
                    }
                })
                .collect()
        }
    }
}
