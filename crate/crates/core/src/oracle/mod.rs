//! Independent references for the event engine: a closed-form timeline
//! and a fixed-step simulator.

mod analytic;
mod dense;

pub use analytic::{coincides, predict_timeline, ActivationTimeline};
pub use dense::{dense_simulate, dense_simulate_events};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::circuit::{CircuitSpec, NeuronId, NeuronKind};
use crate::engine::{self, SimConfig, SimResult};
use crate::stimulus::{scenario_events, sensor_drive, Scenario};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

fn fires_by_neuron(result: &SimResult, only_combined: bool) -> BTreeMap<NeuronId, Vec<f64>> {
    let mut out: BTreeMap<NeuronId, Vec<f64>> = BTreeMap::new();
    for f in &result.fire_log {
        if !only_combined || f.kind == NeuronKind::Combined {
            out.entry(f.neuron).or_default().push(f.time);
        }
    }
    out
}

/// Same neurons fire the same number of times, pairwise within `tol` seconds.
/// Returns the first mismatch found.
pub fn fire_sets_agree(a: &SimResult, b: &SimResult, tol: f64) -> Result<(), String> {
    let fa = fires_by_neuron(a, false);
    let fb = fires_by_neuron(b, false);
    let ids: Vec<NeuronId> = fa.keys().chain(fb.keys()).copied().collect();
    for id in ids {
        let (ta, tb) = (fa.get(&id).map_or(&[][..], Vec::as_slice), fb.get(&id).map_or(&[][..], Vec::as_slice));
        if ta.len() != tb.len() {
            return Err(format!("neuron {id}: {} fires vs {}", ta.len(), tb.len()));
        }
        for (x, y) in ta.iter().zip(tb) {
            if (x - y).abs() > tol {
                return Err(format!("neuron {id}: fire at {x} vs {y} (tolerance {tol})"));
            }
        }
    }
    Ok(())
}

/// Combined-neuron fires of `result` against the analytic prediction.
pub fn matches_timeline(
    result: &SimResult,
    timeline: &[ActivationTimeline],
    tol: impl Fn(f64) -> f64,
) -> Result<(), String> {
    let observed = fires_by_neuron(result, true);
    let mut predicted: BTreeMap<NeuronId, f64> = BTreeMap::new();
    for t in timeline {
        if let Some(at) = t.fire_time() {
            predicted.insert(t.neuron, at);
        }
    }
    for (id, times) in &observed {
        match predicted.get(id) {
            None => return Err(format!("combined neuron {id} fired at {times:?}, predicted silent")),
            Some(_) if times.len() != 1 => return Err(format!("combined neuron {id} fired {} times", times.len())),
            Some(&p) if (times[0] - p).abs() > tol(p) => {
                return Err(format!("combined neuron {id} fired at {}, predicted {p}", times[0]))
            }
            _ => {}
        }
    }
    if let Some(id) = predicted.keys().find(|id| !observed.contains_key(id)) {
        return Err(format!("combined neuron {id} predicted at {} but silent", predicted[id]));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub engine: SimResult,
    pub dense: SimResult,
    pub timeline: Vec<ActivationTimeline>,
    pub engine_vs_dense: Result<(), String>,
    pub engine_vs_analytic: Result<(), String>,
    pub dense_vs_analytic: Result<(), String>,
}

impl VerifyReport {
    pub fn agrees(&self) -> bool {
        self.engine_vs_dense.is_ok() && self.engine_vs_analytic.is_ok() && self.dense_vs_analytic.is_ok()
    }
}

/// Relative tolerance between the event engine and the closed-form timeline.
pub const ANALYTIC_REL_TOL: f64 = 1e-9;

/// Runs all three references on one single-object scenario.
pub fn verify(
    circuit: &CircuitSpec,
    scenario: &Scenario,
    config: &SimConfig,
    dt: f64,
) -> Result<VerifyReport, OracleError> {
    let timeline = predict_timeline(circuit, scenario)?;
    let events = scenario_events(scenario, sensor_drive(circuit));
    let engine = engine::run(circuit, &events, config).map_err(|e| OracleError::InvalidParameter(e.to_string()))?;
    let dense = dense_simulate_events(circuit, &events, config, dt)?;
    // slack for f64 noise on an on-grid quantization
    let dense_tol = dt * (1.0 + 1e-9);
    Ok(VerifyReport {
        engine_vs_dense: fire_sets_agree(&engine, &dense, dense_tol),
        engine_vs_analytic: matches_timeline(&engine, &timeline, |t| ANALYTIC_REL_TOL * t.abs().max(1.0)),
        dense_vs_analytic: matches_timeline(&dense, &timeline, |_| dense_tol),
        engine,
        dense,
        timeline,
    })
}
