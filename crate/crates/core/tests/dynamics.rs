use bimotion::analysis::{epilepsy_indicator, AnalysisConfig};
use bimotion::circuit::{build, CircuitFamily, CircuitParams, CircuitSpec, DelayPlan, NeuronKind};
use bimotion::engine::{run, SimConfig, SimResult, SpikeEvent};
use bimotion::stimulus::{scenario_events, sensor_drive, ObjectTrajectory, Scenario, SensorArray};
use proptest::prelude::*;

fn circuit(family: CircuitFamily) -> CircuitSpec {
    build(family, 5, DelayPlan::default(), CircuitParams::default()).unwrap()
}

fn family() -> impl Strategy<Value = CircuitFamily> {
    prop_oneof![Just(CircuitFamily::Bidirectional), Just(CircuitFamily::PrototypePair)]
}

/// Arbitrary sensor spike trains on a five-sensor row.
fn stimulus() -> impl Strategy<Value = Vec<SpikeEvent>> {
    prop::collection::vec((0.0f64..2.0, 0usize..5), 0..40).prop_map(|mut xs| {
        xs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        xs.into_iter().map(|(t, s)| SpikeEvent::stimulus(t, s, 1.0)).collect()
    })
}

fn objects() -> impl Strategy<Value = Scenario> {
    let object = (-1.0f64..1.5, 0.2f64..1.0, any::<bool>(), 0.0f64..0.5).prop_map(|(x0, speed, left, t_start)| {
        ObjectTrajectory { x0, velocity: if left { -speed } else { speed }, t_start, distance: 0.0 }
    });
    prop::collection::vec(object, 1..4).prop_map(|objects| Scenario {
        array: SensorArray::default(),
        objects,
        t_end: 3.0,
    })
}

fn simulate(c: &CircuitSpec, stim: &[SpikeEvent]) -> SimResult {
    run(c, stim, &SimConfig::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn runs_are_deterministic(f in family(), stim in stimulus()) {
        let c = circuit(f);
        prop_assert_eq!(simulate(&c, &stim), simulate(&c, &stim));
    }

    #[test]
    fn fires_respect_refractory_period(f in family(), stim in stimulus()) {
        let c = circuit(f);
        let r = simulate(&c, &stim);
        for n in &c.neurons {
            let times: Vec<f64> = r.fires_of(n.id).collect();
            for w in times.windows(2) {
                prop_assert!(w[1] - w[0] >= n.params.t_ref - 1e-12, "neuron {} fired at {} and {}", n.id, w[0], w[1]);
            }
        }
    }

    #[test]
    fn every_fire_has_a_cause(f in family(), stim in stimulus()) {
        let c = circuit(f);
        let r = simulate(&c, &stim);
        for rec in &r.fire_log {
            let caused = if rec.kind == NeuronKind::Sensor {
                stim.iter().any(|e| e.dst == rec.neuron && e.time == rec.time)
            } else {
                c.incoming(rec.neuron)
                    .filter(|x| x.weight > 0.0)
                    .any(|x| r.fires_of(x.src).any(|t| (t + x.delay - rec.time).abs() < 1e-9))
            };
            prop_assert!(caused, "{:?} has no input arriving at its fire time", rec);
        }
        prop_assert!(r.fire_log.windows(2).all(|w| w[0].time <= w[1].time));
    }

    #[test]
    fn raising_kappa_never_triggers(s in objects(), k1 in 0.05f64..1.0, k2 in 0.05f64..1.0, t_epi in 0.0f64..0.2) {
        let (lo, hi) = if k1 <= k2 { (k1, k2) } else { (k2, k1) };
        for f in [CircuitFamily::Bidirectional, CircuitFamily::PrototypePair] {
            let c = circuit(f);
            let r = simulate(&c, &scenario_events(&s, sensor_drive(&c)));
            let at = |kappa| epilepsy_indicator(&r, &AnalysisConfig { kappa, t_epi, ..AnalysisConfig::default() }).unwrap();
            let (a, b) = (at(lo), at(hi));
            prop_assert!(!b.triggered || a.triggered);
        }
    }
}
