//! Core library of a seeded simulator for cache-enabled UAV small cells
//! that share licensed spectrum with a cellular uplink and unlicensed
//! spectrum with WiFi.
//!
//! The crate is organized bottom-up:
//!
//! * [`channel`], [`wifi`]: link physics and coexistence constraints.
//! * [`traffic`]: request generation and queue dynamics.
//! * [`reservoir`]: spiking liquid, echo-state baseline, linear readouts.
//! * [`predictor`]: per-user content-request prediction.
//! * [`cache`], [`allocation`]: cache planning and spectrum allocation,
//!   each paired with an exhaustive oracle.
//! * [`topology`], [`config`]: scenario assembly.
//! * [`marl`], [`metrics`], [`sweep`]: the multi-agent learning loop and
//!   campaign drivers.
//!
//! All randomness flows through [`rng`]: the same seed and config replay
//! byte-identical results, sequentially or with the `parallel` feature.

pub mod allocation;
pub mod cache;
pub mod channel;
pub mod config;
pub mod error;
pub mod exec;
pub mod marl;
pub mod metrics;
pub mod predictor;
pub mod reservoir;
pub mod rng;
pub mod sweep;
pub mod topology;
pub mod traffic;
pub mod wifi;

pub use error::{Result, SimError};
