//! Lumped-element RF networks and the cryogenic diplexer model.

pub mod diplexer;
pub mod network;
pub mod synth;

pub use diplexer::{
    check_spec, diplexer_eval, Diplexer, DiplexerPoint, DiplexerSpec, SpecItem, SpecReport,
};
pub use network::{
    cascade, element_abcd, log_grid, Abcd, ComponentKind, Element, LadderNetwork, Placement,
    TwoPortResponse,
};
pub use synth::{
    attenuator, butterworth_g, synth_bandpass, synth_bandpass_form, synth_lowpass,
    synth_lowpass_form, LadderForm,
};
