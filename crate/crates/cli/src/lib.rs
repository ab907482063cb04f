//! Command-line front end: experiment configuration, JSON envelopes and the
//! acceptance battery.

pub mod config;
pub mod envelope;
pub mod error;
pub mod experiments;
pub mod suite;
