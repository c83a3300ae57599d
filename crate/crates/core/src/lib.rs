//! Spiking-circuit simulator for delay-line motion detectors.
//!
//! The crate builds bi-directional and prototype detector circuits, tunes
//! their delays for a design velocity, simulates them with an exact
//! event-driven leaky integrate-and-fire engine, and analyzes the results.
//! Two independent references (a closed-form timeline and a fixed-step
//! simulator) live in [`oracle`].
//!
//! ```
//! use bimotion::circuit::{build_bidirectional, neuron_count, CircuitParams, DelayPlan};
//!
//! let circuit = build_bidirectional(5, DelayPlan::default(), CircuitParams::default()).unwrap();
//! assert_eq!(neuron_count(&circuit).detector_neurons, 14);
//! ```

pub mod analysis;
pub mod circuit;
pub mod engine;
pub mod oracle;
pub mod stimulus;
pub mod sweep;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Circuit(#[from] circuit::CircuitError),
    #[error(transparent)]
    Engine(#[from] engine::EngineError),
    #[error(transparent)]
    Stimulus(#[from] stimulus::StimulusError),
    #[error(transparent)]
    Analysis(#[from] analysis::AnalysisError),
    #[error(transparent)]
    Oracle(#[from] oracle::OracleError),
}
