//! Event-driven leaky integrate-and-fire simulation.
//!
//! Membrane potentials are only touched when a spike arrives; between
//! arrivals they decay analytically, `u(t) = u(t0) * exp(-(t - t0) / tau)`.
//! Spikes are processed in ascending `(time, dst, seq)` order, so a run is a
//! pure function of its inputs.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use thiserror::Error;

use crate::circuit::{CircuitSpec, NeuronId, NeuronKind, NeuronParams, Subcircuit};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),
    #[error("event at {t} precedes last update at {t_last}")]
    Ordering { t_last: f64, t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub t_end: f64,
    pub dt_sample: f64,
    /// Potential at or above which a non-refractory neuron counts as active.
    pub theta_active: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { t_end: 3.0, dt_sample: 0.001, theta_active: 0.5 }
    }
}

impl SimConfig {
    pub fn check(&self) -> Result<(), EngineError> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(EngineError::InvalidParameter(format!("t_end must be > 0, got {}", self.t_end)));
        }
        if !(self.dt_sample > 0.0 && self.dt_sample.is_finite()) {
            return Err(EngineError::InvalidParameter(format!("dt_sample must be > 0, got {}", self.dt_sample)));
        }
        if !self.theta_active.is_finite() {
            return Err(EngineError::InvalidParameter("theta_active must be finite".into()));
        }
        Ok(())
    }

    /// Sample instants `k * dt_sample` for `k = 0..=K`, `K * dt_sample <= t_end`.
    pub fn sample_count(&self) -> usize {
        (self.t_end / self.dt_sample + 1e-9).floor() as usize + 1
    }

    pub fn sample_time(&self, k: usize) -> f64 {
        k as f64 * self.dt_sample
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpikeEvent {
    pub time: f64,
    pub dst: NeuronId,
    pub weight: f64,
    /// `None` for external stimulus.
    pub src: Option<NeuronId>,
    pub seq: u64,
}

impl SpikeEvent {
    pub fn stimulus(time: f64, dst: NeuronId, weight: f64) -> Self {
        SpikeEvent { time, dst, weight, src: None, seq: 0 }
    }
}

pub fn decay(u: f64, t_last: f64, t: f64, tau: f64) -> Result<f64, EngineError> {
    if t < t_last {
        return Err(EngineError::Ordering { t_last, t });
    }
    if u == 0.0 || t == t_last {
        return Ok(u);
    }
    Ok(u * (-(t - t_last) / tau).exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeuronState {
    pub u: f64,
    pub last_update: f64,
    pub refractory_until: f64,
    pub fire_times: Vec<f64>,
}

impl Default for NeuronState {
    fn default() -> Self {
        NeuronState { u: 0.0, last_update: 0.0, refractory_until: f64::NEG_INFINITY, fire_times: Vec::new() }
    }
}

impl NeuronState {
    /// Applies one input at `t`. Inputs during refractoriness are dropped.
    pub fn deliver(&mut self, params: &NeuronParams, weight: f64, t: f64) -> Result<bool, EngineError> {
        self.u = decay(self.u, self.last_update, t, params.tau)?;
        self.last_update = t;
        if t < self.refractory_until {
            return Ok(false);
        }
        self.u += weight;
        if self.u >= params.theta {
            self.u = 0.0;
            self.refractory_until = t + params.t_ref;
            self.fire_times.push(t);
            return Ok(true);
        }
        Ok(false)
    }

    pub fn potential_at(&self, t: f64, tau: f64) -> Result<f64, EngineError> {
        decay(self.u, self.last_update, t, tau)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FireRecord {
    pub time: f64,
    pub neuron: NeuronId,
    pub kind: NeuronKind,
    pub subcircuit: Subcircuit,
    pub index: usize,
    /// Latest sensor spike time among the excitatory inputs that led here.
    pub origin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub time: f64,
    /// Sum of positive detector potentials.
    pub total_potential: f64,
    pub active_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub fire_log: Vec<FireRecord>,
    pub trace: Vec<TraceSample>,
    pub detector_neurons: usize,
    pub config: SimConfig,
    /// `(time, sensor id)` of every stimulus spike, in input order.
    pub stimulus: Vec<(f64, NeuronId)>,
}

impl SimResult {
    pub fn active_fraction(&self, sample: &TraceSample) -> f64 {
        if self.detector_neurons == 0 {
            0.0
        } else {
            sample.active_count as f64 / self.detector_neurons as f64
        }
    }

    pub fn fires_of(&self, neuron: NeuronId) -> impl Iterator<Item = f64> + '_ {
        self.fire_log.iter().filter(move |r| r.neuron == neuron).map(|r| r.time)
    }
}

#[derive(Debug, Clone, Copy)]
struct Queued {
    ev: SpikeEvent,
    origin: f64,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    // BinaryHeap is a max-heap; reverse so the earliest event pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        self.ev
            .time
            .total_cmp(&other.ev.time)
            .then(self.ev.dst.cmp(&other.ev.dst))
            .then(self.ev.seq.cmp(&other.ev.seq))
            .reverse()
    }
}

struct Outgoing {
    dst: usize,
    dst_id: NeuronId,
    weight: f64,
    delay: f64,
}

/// Simulates `circuit` driven by `stimulus` (events addressed to sensors).
pub fn run(circuit: &CircuitSpec, stimulus: &[SpikeEvent], config: &SimConfig) -> Result<SimResult, EngineError> {
    config.check()?;
    let problems = circuit.structural_problems();
    if !problems.is_empty() {
        return Err(EngineError::InvalidCircuit(problems.join("; ")));
    }

    let slot: HashMap<NeuronId, usize> = circuit.neurons.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
    let mut outgoing: Vec<Vec<Outgoing>> = circuit.neurons.iter().map(|_| Vec::new()).collect();
    for c in &circuit.connections {
        outgoing[slot[&c.src]].push(Outgoing { dst: slot[&c.dst], dst_id: c.dst, weight: c.weight, delay: c.delay });
    }
    for out in &mut outgoing {
        out.sort_by_key(|o| o.dst_id);
    }

    let mut queue = BinaryHeap::with_capacity(stimulus.len() * 4);
    let mut seq: u64 = 0;
    for ev in stimulus {
        let target = slot.get(&ev.dst).map(|&i| &circuit.neurons[i]);
        if !matches!(target, Some(n) if n.kind == NeuronKind::Sensor) {
            return Err(EngineError::InvalidParameter(format!("stimulus targets non-sensor neuron {}", ev.dst)));
        }
        if !(ev.time >= 0.0 && ev.time <= config.t_end) {
            return Err(EngineError::InvalidParameter(format!(
                "stimulus time {} outside [0, {}]",
                ev.time, config.t_end
            )));
        }
        queue.push(Queued { ev: SpikeEvent { seq, src: None, ..*ev }, origin: ev.time });
        seq += 1;
    }

    let mut states = vec![NeuronState::default(); circuit.neurons.len()];
    let mut pending_origin = vec![f64::NEG_INFINITY; circuit.neurons.len()];
    let detectors: Vec<usize> =
        (0..circuit.neurons.len()).filter(|&i| circuit.neurons[i].kind != NeuronKind::Sensor).collect();

    let n_samples = config.sample_count();
    let mut trace = Vec::with_capacity(n_samples);
    let mut fire_log = Vec::new();

    let sample = |k: usize, states: &[NeuronState]| -> Result<TraceSample, EngineError> {
        let time = config.sample_time(k);
        let mut total_potential = 0.0;
        let mut active_count = 0;
        for &i in &detectors {
            let st = &states[i];
            let u = st.potential_at(time, circuit.neurons[i].params.tau)?;
            total_potential += u.max(0.0);
            if time < st.refractory_until || u >= config.theta_active {
                active_count += 1;
            }
        }
        Ok(TraceSample { time, total_potential, active_count })
    };

    while let Some(Queued { ev, origin }) = queue.pop() {
        if ev.time > config.t_end {
            break;
        }
        // samples strictly before this event see the pre-event state
        while trace.len() < n_samples && config.sample_time(trace.len()) < ev.time {
            trace.push(sample(trace.len(), &states)?);
        }

        let i = slot[&ev.dst];
        let spec = &circuit.neurons[i];
        let accepted = ev.time >= states[i].refractory_until;
        if accepted && ev.weight > 0.0 {
            pending_origin[i] = pending_origin[i].max(origin);
        }
        if states[i].deliver(&spec.params, ev.weight, ev.time)? {
            let fire_origin = pending_origin[i];
            pending_origin[i] = f64::NEG_INFINITY;
            fire_log.push(FireRecord {
                time: ev.time,
                neuron: spec.id,
                kind: spec.kind,
                subcircuit: spec.subcircuit,
                index: spec.index,
                origin: fire_origin,
            });
            for o in &outgoing[i] {
                queue.push(Queued {
                    ev: SpikeEvent {
                        time: ev.time + o.delay,
                        dst: o.dst_id,
                        weight: o.weight,
                        src: Some(spec.id),
                        seq,
                    },
                    origin: fire_origin,
                });
                seq += 1;
                debug_assert!(o.dst < states.len());
            }
        }
    }
    while trace.len() < n_samples {
        trace.push(sample(trace.len(), &states)?);
    }

    // zero-delay fan-out can emit a lower id after a higher one at one instant
    fire_log.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.neuron.cmp(&b.neuron)));

    Ok(SimResult {
        fire_log,
        trace,
        detector_neurons: detectors.len(),
        config: *config,
        stimulus: stimulus.iter().map(|e| (e.time, e.dst)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_bidirectional, CircuitParams, DelayPlan};
    use approx::assert_relative_eq;

    #[test]
    fn decay_closed_form() {
        assert_eq!(decay(1.0, 2.0, 2.0, 1.0).unwrap(), 1.0);
        assert_relative_eq!(decay(2.0, 0.0, 1.0, 1.0).unwrap(), 2.0 * (-1.0f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(decay(2.0, 0.0, 1.0, 1.0).unwrap(), 0.7357588823428847, max_relative = 1e-12);
        assert_eq!(decay(0.0, 0.0, 5.0, 0.3).unwrap(), 0.0);
        assert!(matches!(decay(1.0, 1.0, 0.5, 1.0), Err(EngineError::Ordering { .. })));
    }

    #[test]
    fn threshold_equality_fires() {
        let p = NeuronParams::new(1.0, 1.0, 0.3);
        let mut s = NeuronState::default();
        assert!(s.deliver(&p, 1.0, 0.5).unwrap());
        assert_eq!(s.u, 0.0);
        assert_eq!(s.refractory_until, 0.8);
        assert_eq!(s.fire_times, vec![0.5]);
    }

    #[test]
    fn inhibition_blocks_later_excitation() {
        let p = NeuronParams::new(1.0, 1.0, 0.3);
        let mut s = NeuronState::default();
        assert!(!s.deliver(&p, -2.0, 1.0).unwrap());
        assert!(!s.deliver(&p, 1.0, 1.2).unwrap());
        assert_relative_eq!(s.u, -0.6374615061559636, max_relative = 1e-12);
        // negative potential relaxes back toward rest
        assert!(s.potential_at(10.0, 1.0).unwrap() > -1e-3);
    }

    #[test]
    fn coincident_pair_fires_combined() {
        let p = NeuronParams::new(0.05, 1.8, 0.3);
        let mut s = NeuronState::default();
        assert!(!s.deliver(&p, 1.0, 2.0).unwrap());
        assert!(s.deliver(&p, 1.0, 2.0).unwrap());
    }

    #[test]
    fn refractory_inputs_are_discarded() {
        let p = NeuronParams::new(1.0, 1.0, 0.3);
        let mut s = NeuronState::default();
        assert!(s.deliver(&p, 1.0, 0.0).unwrap());
        assert!(!s.deliver(&p, 5.0, 0.1).unwrap());
        assert_eq!(s.u, 0.0);
        assert_eq!(s.last_update, 0.1);
        assert!(s.deliver(&p, 1.0, 0.3).unwrap());
        assert_eq!(s.fire_times, vec![0.0, 0.3]);
    }

    fn sensors(times: &[(f64, usize)]) -> Vec<SpikeEvent> {
        times.iter().map(|&(t, s)| SpikeEvent::stimulus(t, s, 1.0)).collect()
    }

    #[test]
    fn tuned_crossing_n3() {
        let c = build_bidirectional(3, DelayPlan::default(), CircuitParams::default()).unwrap();
        let r = run(&c, &sensors(&[(1.0, 0), (1.2, 1), (1.4, 2)]), &SimConfig::default()).unwrap();
        let fires = |kind, sub, index| -> Vec<f64> {
            r.fire_log
                .iter()
                .filter(|f| f.kind == kind && f.subcircuit == sub && f.index == index)
                .map(|f| f.time)
                .collect()
        };
        let p0 = fires(NeuronKind::Simple, Subcircuit::LeftToRight, 0);
        let p1 = fires(NeuronKind::Simple, Subcircuit::LeftToRight, 1);
        let c0 = fires(NeuronKind::Combined, Subcircuit::LeftToRight, 0);
        assert_eq!(p0.len(), 1);
        assert_relative_eq!(p0[0], 1.05, max_relative = 1e-12);
        assert_relative_eq!(p1[0], 1.25, max_relative = 1e-12);
        assert_eq!(c0.len(), 1);
        assert_relative_eq!(c0[0], 1.26, max_relative = 1e-12);
        assert!(fires(NeuronKind::Combined, Subcircuit::RightToLeft, 0).is_empty());
        assert!(fires(NeuronKind::Simple, Subcircuit::RightToLeft, 0).is_empty());

        let origin = r.fire_log.iter().find(|f| f.kind == NeuronKind::Combined).unwrap().origin;
        assert_eq!(origin, 1.2);
    }

    #[test]
    fn reversed_crossing_leaves_l2r_silent() {
        let c = build_bidirectional(3, DelayPlan::default(), CircuitParams::default()).unwrap();
        let r = run(&c, &sensors(&[(1.0, 2), (1.2, 1), (1.4, 0)]), &SimConfig::default()).unwrap();
        assert!(r.fire_log.iter().all(|f| f.subcircuit != Subcircuit::LeftToRight));
        let c0: Vec<_> = r.fire_log.iter().filter(|f| f.kind == NeuronKind::Combined).collect();
        assert_eq!(c0.len(), 1);
        assert_eq!(c0[0].subcircuit, Subcircuit::RightToLeft);
    }

    #[test]
    fn empty_stimulus_is_quiet() {
        let c = build_bidirectional(5, DelayPlan::default(), CircuitParams::default()).unwrap();
        let cfg = SimConfig::default();
        let r = run(&c, &[], &cfg).unwrap();
        assert!(r.fire_log.is_empty());
        assert_eq!(r.trace.len(), 3001);
        assert!(r.trace.iter().all(|s| s.total_potential == 0.0 && s.active_count == 0));
        assert_eq!(r.detector_neurons, 14);
    }

    #[test]
    fn bad_inputs_rejected() {
        let c = build_bidirectional(3, DelayPlan::default(), CircuitParams::default()).unwrap();
        let bad = SimConfig { t_end: 0.0, ..SimConfig::default() };
        assert!(run(&c, &[], &bad).is_err());
        let bad = SimConfig { dt_sample: -1.0, ..SimConfig::default() };
        assert!(run(&c, &[], &bad).is_err());
        assert!(run(&c, &sensors(&[(1.0, 4)]), &SimConfig::default()).is_err());
        assert!(run(&c, &sensors(&[(9.0, 0)]), &SimConfig::default()).is_err());
    }

    #[test]
    fn sample_sees_events_at_its_instant() {
        let c = build_bidirectional(3, DelayPlan::default(), CircuitParams::default()).unwrap();
        let cfg = SimConfig { t_end: 2.0, dt_sample: 0.05, theta_active: 0.5 };
        let r = run(&c, &sensors(&[(1.0, 0)]), &cfg).unwrap();
        // p_0 fires at 1.05 and is refractory for 0.3 s
        let at = |t: f64| r.trace.iter().find(|s| (s.time - t).abs() < 1e-9).unwrap().active_count;
        assert_eq!(at(1.0), 0);
        assert_eq!(at(1.1), 1);
        assert_eq!(at(1.5), 0);
    }
}
