//! Numerical models for flux-tunable transmons driven through a combined
//! microwave and flux ("XYZ") line.
//!
//! * [`transmon`]: asymmetric-SQUID spectrum, closed form and charge-basis
//!   diagonalization.
//! * [`modulation`]: time-averaged qubit frequency under sinusoidal flux
//!   modulation, as a Bessel/hypergeometric harmonic series and as a
//!   brute-force time average.
//! * [`special`]: Γ, J₀, J₁ and the Gauss hypergeometric function.
//! * [`signal_chain`]: attenuation → current → flux crosstalk budget.
//! * [`rf`]: lumped ladder networks, Butterworth synthesis and the diplexer.
//! * [`fit`]: Levenberg–Marquardt engine and characterization models.
//! * [`config`]: JSON device configuration shared with the CLI.

pub mod config;
pub mod error;
pub mod fit;
pub mod modulation;
pub mod rf;
pub mod signal_chain;
pub mod special;
pub mod transmon;

pub use error::{Error, Result};
pub use modulation::{FluxDrive, HarmonicSeries, ModulationConstants};
pub use transmon::{FluxPoint, SpectrumResult, TransmonParams};
