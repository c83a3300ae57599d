//! Fixed-step reference simulator.
//!
//! Time advances in whole steps of `dt`. Each step first applies the
//! per-step leak factor to every neuron, then delivers the spikes scheduled
//! for that step in `(dst, arrival order)` order, checking threshold after
//! each one. Stimulus times round up to the next step boundary; connection
//! delays and refractory periods are converted to whole steps once.

use std::collections::BTreeMap;

use crate::circuit::{CircuitSpec, NeuronKind};
use crate::engine::{FireRecord, SimConfig, SimResult, SpikeEvent, TraceSample};
use crate::stimulus::{scenario_events, sensor_drive, Scenario};

use super::OracleError;

// slack for step conversions of values that sit on the grid up to rounding
const GRID_SLACK: f64 = 1e-6;

#[derive(Clone, Copy)]
struct Arrival {
    dst: usize,
    weight: f64,
    origin: f64,
}

pub fn dense_simulate(
    circuit: &CircuitSpec,
    scenario: &Scenario,
    config: &SimConfig,
    dt: f64,
) -> Result<SimResult, OracleError> {
    let events = scenario_events(scenario, sensor_drive(circuit));
    dense_simulate_events(circuit, &events, config, dt)
}

pub fn dense_simulate_events(
    circuit: &CircuitSpec,
    stimulus: &[SpikeEvent],
    config: &SimConfig,
    dt: f64,
) -> Result<SimResult, OracleError> {
    config.check().map_err(|e| OracleError::InvalidParameter(e.to_string()))?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(OracleError::InvalidParameter(format!("dt must be > 0, got {dt}")));
    }
    if let Some(min_delay) = circuit.min_delay() {
        if dt >= min_delay {
            return Err(OracleError::InvalidParameter(format!(
                "dt {dt} must be below the shortest connection delay {min_delay}"
            )));
        }
    }
    let problems = circuit.structural_problems();
    if !problems.is_empty() {
        return Err(OracleError::InvalidParameter(problems.join("; ")));
    }

    let n = circuit.neurons.len();
    let slot_of = |id| circuit.neurons.iter().position(|x| x.id == id);
    let mut fanout: Vec<Vec<(usize, f64, u64)>> = vec![Vec::new(); n];
    for c in &circuit.connections {
        let (s, d) = (slot_of(c.src).expect("checked"), slot_of(c.dst).expect("checked"));
        let steps = (c.delay / dt + GRID_SLACK).floor() as u64;
        fanout[s].push((d, c.weight, steps));
    }
    let leak: Vec<f64> = circuit.neurons.iter().map(|x| (-dt / x.params.tau).exp()).collect();
    let refractory_steps: Vec<u64> =
        circuit.neurons.iter().map(|x| (x.params.t_ref / dt - GRID_SLACK).ceil().max(0.0) as u64).collect();

    let last_step = (config.t_end / dt + GRID_SLACK).floor() as u64;
    let sample_every = ((config.dt_sample / dt).round() as u64).max(1);

    let mut schedule: BTreeMap<u64, Vec<Arrival>> = BTreeMap::new();
    for ev in stimulus {
        let d = slot_of(ev.dst)
            .filter(|&d| circuit.neurons[d].kind == NeuronKind::Sensor)
            .ok_or_else(|| OracleError::InvalidParameter(format!("stimulus targets non-sensor {}", ev.dst)))?;
        let step = (ev.time / dt - GRID_SLACK).ceil().max(0.0) as u64;
        schedule.entry(step).or_default().push(Arrival { dst: d, weight: ev.weight, origin: ev.time });
    }

    let mut u = vec![0.0f64; n];
    let mut blocked_until = vec![0u64; n];
    let mut origin = vec![f64::NEG_INFINITY; n];
    let mut fire_log = Vec::new();
    let mut trace = Vec::new();
    let detectors = circuit.neurons.iter().filter(|x| x.kind != NeuronKind::Sensor).count();

    for step in 0..=last_step {
        if step > 0 {
            for (x, f) in u.iter_mut().zip(&leak) {
                *x *= f;
            }
        }
        if let Some(mut arrivals) = schedule.remove(&step) {
            arrivals.sort_by_key(|a| circuit.neurons[a.dst].id);
            for a in arrivals {
                let i = a.dst;
                if step < blocked_until[i] {
                    continue;
                }
                u[i] += a.weight;
                if a.weight > 0.0 {
                    origin[i] = origin[i].max(a.origin);
                }
                if u[i] >= circuit.neurons[i].params.theta {
                    u[i] = 0.0;
                    blocked_until[i] = step + refractory_steps[i];
                    let spec = &circuit.neurons[i];
                    let fired_origin = std::mem::replace(&mut origin[i], f64::NEG_INFINITY);
                    fire_log.push(FireRecord {
                        time: step as f64 * dt,
                        neuron: spec.id,
                        kind: spec.kind,
                        subcircuit: spec.subcircuit,
                        index: spec.index,
                        origin: fired_origin,
                    });
                    for &(d, w, delay) in &fanout[i] {
                        schedule.entry(step + delay).or_default().push(Arrival {
                            dst: d,
                            weight: w,
                            origin: fired_origin,
                        });
                    }
                }
            }
        }
        if step % sample_every == 0 {
            let mut total = 0.0;
            let mut active = 0;
            for (i, spec) in circuit.neurons.iter().enumerate() {
                if spec.kind == NeuronKind::Sensor {
                    continue;
                }
                total += u[i].max(0.0);
                if step < blocked_until[i] || u[i] >= config.theta_active {
                    active += 1;
                }
            }
            trace.push(TraceSample { time: step as f64 * dt, total_potential: total, active_count: active });
        }
    }

    fire_log.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.neuron.cmp(&b.neuron)));
    Ok(SimResult {
        fire_log,
        trace,
        detector_neurons: detectors,
        config: *config,
        stimulus: stimulus.iter().map(|e| (e.time, e.dst)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_bidirectional, CircuitParams, DelayPlan};
    use approx::assert_abs_diff_eq;

    fn n3() -> CircuitSpec {
        build_bidirectional(3, DelayPlan::default(), CircuitParams::default()).unwrap()
    }

    #[test]
    fn tuned_crossing_matches_proof_times() {
        let stim: Vec<_> =
            [(1.0, 0), (1.2, 1), (1.4, 2)].iter().map(|&(t, s)| SpikeEvent::stimulus(t, s, 1.0)).collect();
        let r = dense_simulate_events(&n3(), &stim, &SimConfig::default(), 1e-4).unwrap();
        let c0: Vec<_> = r.fire_log.iter().filter(|f| f.kind == NeuronKind::Combined).collect();
        assert_eq!(c0.len(), 1);
        assert_abs_diff_eq!(c0[0].time, 1.26, epsilon = 1e-4);
    }

    #[test]
    fn quiet_without_stimulus() {
        let r = dense_simulate_events(&n3(), &[], &SimConfig::default(), 1e-4).unwrap();
        assert!(r.fire_log.is_empty());
        assert!(r.trace.iter().all(|s| s.total_potential == 0.0));
    }

    #[test]
    fn step_must_undercut_shortest_delay() {
        assert!(dense_simulate_events(&n3(), &[], &SimConfig::default(), 0.01).is_err());
        assert!(dense_simulate_events(&n3(), &[], &SimConfig::default(), 0.0).is_err());
    }
}
