//! Experiment orchestration: configuration, forcing, spin-up, twin runs,
//! persistence and sweeps.

pub mod checkpoint;
pub mod config;
pub mod forcing;
pub mod output;
pub mod sweep;
pub mod twin;

pub use checkpoint::Checkpoint;
pub use config::SimConfig;
pub use twin::{ErrorRecord, RecordPhase, Simulation, SpinupFailure, TwinOutcome};
