//! JSON device configuration: qubit parameters, fridge-line attenuation
//! chains and the diplexer design.
//!
//! ```json
//! {
//!   "qubits": [{"name": "q0", "e_c_mhz": 182, "e_j1_mhz": 2140, "e_j2_mhz": 9040, "m_fH": 500}],
//!   "chains": {"z": {"segments": [{"label": "4K", "db": 20}], "reference_frequency_mhz": 0}},
//!   "diplexer": {"lp_order": 5, "bp_order": 5, "z0": 50}
//! }
//! ```

use std::collections::HashSet;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rf::{Diplexer, DiplexerSpec};
use crate::signal_chain::AttenuationChain;
use crate::transmon::TransmonParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitConfig {
    pub name: String,
    pub e_c_mhz: f64,
    pub e_j1_mhz: f64,
    pub e_j2_mhz: f64,
    /// Line-to-SQUID mutual inductance, fH.
    #[serde(rename = "m_fH")]
    pub m_fh: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_r_mhz: Option<f64>,
    /// Measured characterization values carried alongside the model inputs.
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub measured: IndexMap<String, f64>,
}

impl QubitConfig {
    pub fn params(&self) -> Result<TransmonParams> {
        TransmonParams::new(self.e_c_mhz, self.e_j1_mhz, self.e_j2_mhz)
    }

    pub fn measured(&self, key: &str) -> Option<f64> {
        self.measured.get(key).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiplexerConfig {
    pub lp_order: usize,
    pub bp_order: usize,
    #[serde(default = "default_z0")]
    pub z0: f64,
    #[serde(default)]
    pub spec: DiplexerSpec,
    #[serde(default)]
    pub absorber_ohm_per_ghz: f64,
}

fn default_z0() -> f64 {
    50.0
}

impl Default for DiplexerConfig {
    fn default() -> Self {
        Self {
            lp_order: 5,
            bp_order: 5,
            z0: default_z0(),
            spec: DiplexerSpec::default(),
            absorber_ohm_per_ghz: 0.0,
        }
    }
}

impl DiplexerConfig {
    pub fn build(&self) -> Result<Diplexer> {
        Ok(
            Diplexer::synthesize(self.lp_order, self.bp_order, self.z0, &self.spec)?
                .with_absorber(self.absorber_ohm_per_ghz),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    #[serde(default)]
    pub qubits: Vec<QubitConfig>,
    #[serde(default)]
    pub chains: IndexMap<String, AttenuationChain>,
    #[serde(default)]
    pub diplexer: DiplexerConfig,
}

fn prefix(path: String, err: Error) -> Error {
    match err {
        Error::Invalid { field, reason } => Error::Invalid {
            field: format!("{path}.{field}"),
            reason,
        },
        other => Error::Invalid {
            field: path,
            reason: other.to_string(),
        },
    }
}

impl DeviceConfig {
    /// Parses and validates. Syntax errors carry the JSON line and column;
    /// invariant violations name the offending field path.
    pub fn from_json(text: &str) -> Result<Self> {
        let config: DeviceConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let mut names = HashSet::new();
        for (i, q) in self.qubits.iter().enumerate() {
            if q.name.trim().is_empty() {
                return Err(Error::invalid(
                    format!("qubits[{i}].name"),
                    "must not be empty",
                ));
            }
            if !names.insert(q.name.as_str()) {
                return Err(Error::invalid(
                    format!("qubits[{i}].name"),
                    format!("duplicate qubit name {:?}", q.name),
                ));
            }
            for (field, v) in [
                ("e_c_mhz", q.e_c_mhz),
                ("e_j1_mhz", q.e_j1_mhz),
                ("e_j2_mhz", q.e_j2_mhz),
                ("m_fH", q.m_fh),
            ] {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::invalid(
                        format!("qubits[{i}].{field}"),
                        format!("must be > 0, got {v}"),
                    ));
                }
            }
            if let Some(f) = q.f_r_mhz {
                if !(f > 0.0) || !f.is_finite() {
                    return Err(Error::invalid(
                        format!("qubits[{i}].f_r_mhz"),
                        format!("must be > 0, got {f}"),
                    ));
                }
            }
            q.params().map_err(|e| prefix(format!("qubits[{i}]"), e))?;
        }
        for (name, chain) in &self.chains {
            chain
                .validate()
                .map_err(|e| prefix(format!("chains.{name}"), e))?;
        }
        self.diplexer
            .build()
            .map_err(|e| prefix("diplexer".into(), e))?;
        Ok(())
    }

    pub fn qubit(&self, name: &str) -> Result<&QubitConfig> {
        self.qubits.iter().find(|q| q.name == name).ok_or_else(|| {
            let known: Vec<&str> = self.qubits.iter().map(|q| q.name.as_str()).collect();
            Error::invalid(
                "qubit",
                format!("unknown qubit {name:?} (known: {})", known.join(", ")),
            )
        })
    }

    pub fn chain(&self, name: &str) -> Result<&AttenuationChain> {
        self.chains
            .get(name)
            .ok_or_else(|| Error::invalid("chain", format!("unknown chain {name:?}")))
    }
}
