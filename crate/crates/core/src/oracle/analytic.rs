//! Closed-form activation timeline for one constant-velocity object.
//!
//! Every first-stage unit fires once, on its excitatory sensor crossing
//! plus the connection latency, unless inhibition got there first. A
//! combined unit sees its two branch arrivals and fires at the later one
//! when they fall within the coincidence window.

use crate::circuit::{coincidence_window, CircuitSpec, NeuronId, NeuronKind, NeuronSpec, Subcircuit};
use crate::stimulus::Scenario;

use super::OracleError;

/// Predicted timing of one combined neuron. "First" refers to the branch
/// fed by the sensor the object reaches first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivationTimeline {
    pub neuron: NeuronId,
    pub pair_index: usize,
    /// Crossing time of the first sensor.
    pub t0: f64,
    /// Fire time of the first-stage unit on the first (long) branch.
    pub first_stage_fire: f64,
    /// Fire time of the first-stage unit on the second (short) branch.
    pub second_stage_fire: f64,
    pub long_arrival: f64,
    pub short_arrival: f64,
    pub fires: bool,
}

impl ActivationTimeline {
    pub fn fire_time(&self) -> Option<f64> {
        self.fires.then(|| self.long_arrival.max(self.short_arrival))
    }

    pub fn arrival_gap(&self) -> f64 {
        (self.long_arrival - self.short_arrival).abs()
    }
}

/// Whether a detector tuned for `transit = spacing / v_design` sees a
/// coincidence for an object at `speed`. Depends on `spacing / speed` only.
pub fn coincides(spacing: f64, speed: f64, transit: f64, window: f64) -> bool {
    (transit - spacing / speed.abs()).abs() <= window
}

/// Crossing time of each sensor, solved directly from the Gaussian field.
fn crossings(scenario: &Scenario) -> Vec<Option<f64>> {
    let a = &scenario.array;
    let o = &scenario.objects[0];
    let peak = a.amplitude * (-(o.distance * o.distance) / (2.0 * a.lateral_sigma * a.lateral_sigma)).exp();
    let n = a.n_sensors;
    if peak <= a.sensor_threshold {
        return vec![None; n];
    }
    let r = a.sigma * (2.0 * (peak / a.sensor_threshold).ln()).sqrt();
    (0..n)
        .map(|i| {
            let x = i as f64 * a.spacing;
            let (near, far) = if o.velocity > 0.0 { (x - r, x + r) } else { (x + r, x - r) };
            let to_near = (near - o.x0) / o.velocity;
            let to_far = (far - o.x0) / o.velocity;
            let t = if to_near >= 0.0 {
                o.t_start + to_near
            } else if to_far > 0.0 {
                o.t_start
            } else {
                return None;
            };
            (t <= scenario.t_end).then_some(t)
        })
        .collect()
}

struct Branch {
    sensor: usize,
    /// Stage-one unit on this branch (absent for a direct sensor connection).
    stage: Option<NeuronId>,
    delay: f64,
}

fn branch_of(circuit: &CircuitSpec, src: NeuronId, delay: f64) -> Option<Branch> {
    let n = circuit.neuron(src)?;
    if n.kind == NeuronKind::Sensor {
        return Some(Branch { sensor: n.index, stage: None, delay });
    }
    let exc = circuit.incoming(src).find(|c| c.weight > 0.0)?;
    let s = circuit.neuron(exc.src)?;
    (s.kind == NeuronKind::Sensor).then_some(Branch { sensor: s.index, stage: Some(src), delay })
}

/// Fire time of a stage-one unit, or `None` if inhibition silences it.
fn stage_fire(circuit: &CircuitSpec, unit: NeuronId, cross: &[Option<f64>]) -> Option<f64> {
    let spec = circuit.neuron(unit)?;
    let mut exc_at = None;
    let mut exc_w = 0.0;
    let mut inh = None;
    for c in circuit.incoming(unit) {
        let s = circuit.neuron(c.src)?;
        let t = cross[s.index].map(|t| t + c.delay);
        if c.weight > 0.0 {
            exc_at = t;
            exc_w = c.weight;
        } else if let Some(t) = t {
            inh = Some((t, c.weight));
        }
    }
    let exc_at = exc_at?;
    let u = match inh {
        Some((t_inh, w_inh)) if t_inh <= exc_at => w_inh * (-(exc_at - t_inh) / spec.params.tau).exp(),
        _ => 0.0,
    };
    (u + exc_w >= spec.params.theta).then_some(exc_at)
}

fn combined_branches(circuit: &CircuitSpec, n: &NeuronSpec) -> Result<(Branch, Branch, f64), OracleError> {
    let inputs: Vec<_> = circuit.incoming(n.id).collect();
    let unsupported = || OracleError::Unsupported(format!("combined neuron {} is not a two-branch unit", n.id));
    if inputs.len() != 2 || inputs[0].weight != inputs[1].weight || inputs[0].weight <= 0.0 {
        return Err(unsupported());
    }
    let a = branch_of(circuit, inputs[0].src, inputs[0].delay).ok_or_else(unsupported)?;
    let b = branch_of(circuit, inputs[1].src, inputs[1].delay).ok_or_else(unsupported)?;
    let window = coincidence_window(inputs[0].weight, n.params.theta, n.params.tau).ok_or_else(|| {
        OracleError::Unsupported(format!("combined neuron {} has no finite coincidence window", n.id))
    })?;
    Ok((a, b, window))
}

/// Timeline of every combined neuron on the path of the single object in
/// `scenario`, in the subcircuit matching its direction of motion.
///
/// Fails when the scenario has more than one object, or when a combined
/// neuron of the opposite subcircuit would respond (its silence is part of
/// the prediction).
pub fn predict_timeline(circuit: &CircuitSpec, scenario: &Scenario) -> Result<Vec<ActivationTimeline>, OracleError> {
    if scenario.objects.len() != 1 {
        return Err(OracleError::Unsupported(format!(
            "analytic timeline needs exactly one object, got {}",
            scenario.objects.len()
        )));
    }
    scenario.check().map_err(|e| OracleError::InvalidParameter(e.to_string()))?;
    if scenario.array.n_sensors != circuit.n_sensors {
        return Err(OracleError::InvalidParameter("sensor count differs between circuit and scenario".into()));
    }
    let v = scenario.objects[0].velocity;
    let along = if v > 0.0 { Subcircuit::LeftToRight } else { Subcircuit::RightToLeft };
    let cross = crossings(scenario);

    let mut out = Vec::new();
    for n in circuit.neurons.iter().filter(|n| n.kind == NeuronKind::Combined) {
        let (a, b, window) = combined_branches(circuit, n)?;
        let (Some(ta), Some(tb)) = (cross[a.sensor], cross[b.sensor]) else {
            continue;
        };
        let (first, second, t0, t1) = if ta <= tb { (a, b, ta, tb) } else { (b, a, tb, ta) };
        let fire_of = |br: &Branch, t_sensor: f64| match br.stage {
            Some(unit) => stage_fire(circuit, unit, &cross),
            None => Some(t_sensor),
        };
        let (Some(f0), Some(f1)) = (fire_of(&first, t0), fire_of(&second, t1)) else {
            continue;
        };
        let long_arrival = f0 + first.delay;
        let short_arrival = f1 + second.delay;
        let fires = (long_arrival - short_arrival).abs() <= window && long_arrival.max(short_arrival) <= scenario.t_end;
        if n.subcircuit != along {
            if fires {
                return Err(OracleError::Unsupported(format!(
                    "opposite-direction neuron {} would respond (arrival gap {})",
                    n.id,
                    (long_arrival - short_arrival).abs()
                )));
            }
            continue;
        }
        out.push(ActivationTimeline {
            neuron: n.id,
            pair_index: n.index,
            t0,
            first_stage_fire: f0,
            second_stage_fire: f1,
            long_arrival,
            short_arrival,
            fires,
        });
    }
    out.sort_by(|x, y| x.t0.total_cmp(&y.t0).then(x.neuron.cmp(&y.neuron)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build, CircuitFamily, CircuitParams, DelayPlan};
    use crate::stimulus::ObjectTrajectory;
    use approx::assert_relative_eq;

    fn at_speed(v: f64) -> Scenario {
        let mut s = Scenario::single_crossing();
        s.objects[0].velocity = v;
        s.t_end = 5.0;
        s
    }

    fn bidir(n: usize) -> CircuitSpec {
        build(CircuitFamily::Bidirectional, n, DelayPlan::default(), CircuitParams::default()).unwrap()
    }

    #[test]
    fn design_speed_fixed_point() {
        let c = bidir(5);
        let plan = c.plan;
        let tl = predict_timeline(&c, &at_speed(0.5)).unwrap();
        assert_eq!(tl.len(), 3);
        for t in &tl {
            assert!(t.fires);
            assert_relative_eq!(t.first_stage_fire, t.t0 + plan.excitatory_delay, max_relative = 1e-12);
            assert_relative_eq!(t.second_stage_fire, t.t0 + plan.excitatory_delay + 0.2, max_relative = 1e-12);
            let expect = t.t0 + plan.excitatory_delay + 0.2 + plan.short_delay;
            assert_relative_eq!(t.long_arrival, expect, max_relative = 1e-12);
            assert_relative_eq!(t.short_arrival, expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn detuned_speeds() {
        let c = bidir(5);
        let fast = predict_timeline(&c, &at_speed(0.6)).unwrap();
        assert_eq!(fast.len(), 3);
        for t in &fast {
            assert!(!t.fires);
            assert_relative_eq!(t.long_arrival - t.short_arrival, 0.2 - 0.1 / 0.6, max_relative = 1e-9);
        }
        let near = predict_timeline(&c, &at_speed(0.52)).unwrap();
        assert!(near.iter().all(|t| t.fires));
        assert_relative_eq!(near[0].arrival_gap(), 0.007692307692307693, max_relative = 1e-9);
    }

    #[test]
    fn reverse_motion_uses_right_to_left_half() {
        let c = bidir(5);
        let s = at_speed(0.5).reflected();
        let tl = predict_timeline(&c, &s).unwrap();
        assert_eq!(tl.iter().map(|t| t.pair_index).collect::<Vec<_>>(), vec![2, 1, 0]);
        assert!(tl.iter().all(|t| c.neuron(t.neuron).unwrap().subcircuit == Subcircuit::RightToLeft));
    }

    #[test]
    fn prototype_pair_timeline() {
        let c = build(CircuitFamily::PrototypePair, 5, DelayPlan::default(), CircuitParams::default()).unwrap();
        let tl = predict_timeline(&c, &at_speed(0.5)).unwrap();
        assert_eq!(tl.len(), 4);
        assert!(tl.iter().all(|t| t.fires));
        for t in &tl {
            assert_relative_eq!(t.fire_time().unwrap() - t.t0, 0.05 + 0.2 + 0.01, max_relative = 1e-9);
        }
    }

    #[test]
    fn multi_object_unsupported() {
        assert!(matches!(predict_timeline(&bidir(5), &Scenario::two_objects()), Err(OracleError::Unsupported(_))));
    }

    #[test]
    fn object_starting_mid_row_skips_passed_pairs() {
        let c = bidir(5);
        let mut s = at_speed(0.5);
        s.objects[0] = ObjectTrajectory { x0: 0.15, ..s.objects[0] };
        let tl = predict_timeline(&c, &s).unwrap();
        assert_eq!(tl.iter().map(|t| t.pair_index).collect::<Vec<_>>(), vec![2]);
    }

    #[test]
    fn coincidence_predicate_depends_on_ratio_only() {
        let eps = 0.011157177565710485;
        for &(r, v) in &[(0.1, 0.5), (0.1, 0.52), (0.1, 0.6), (0.1, 0.47)] {
            let base = coincides(r, v, 0.2, eps);
            for c in [0.5, 3.0, 17.0] {
                assert_eq!(base, coincides(c * r, c * v, 0.2, eps));
            }
        }
    }
}
