//! Simulation and analysis of equivalent-time waveform sampling with a
//! spin-echo two-level sensor.

pub mod acquisition;
pub mod analysis;
pub mod cli;
pub mod plot;
pub mod sensor;
pub mod sequence;
pub mod sim;
pub mod waveform;
