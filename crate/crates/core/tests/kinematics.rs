use std::collections::BTreeMap;

use bimotion::analysis::{classify, Direction};
use bimotion::circuit::{
    build_bidirectional, tune_delays, validate, CircuitParams, CircuitSpec, DelayPlan, NeuronKind, Subcircuit,
};
use bimotion::engine::{run, SimConfig, SimResult};
use bimotion::oracle::{coincides, predict_timeline};
use bimotion::stimulus::{scenario_events, sensor_drive, sensor_spike_times, ObjectTrajectory, Scenario, SensorArray};
use proptest::prelude::*;

fn simulate(c: &CircuitSpec, s: &Scenario) -> SimResult {
    let cfg = SimConfig { t_end: s.t_end, ..SimConfig::default() };
    run(c, &scenario_events(s, sensor_drive(c)), &cfg).unwrap()
}

/// Scenario with one object entering from the side its velocity points away from.
fn crossing(n: usize, spacing: f64, v: f64, t_start: f64) -> Scenario {
    let array = SensorArray { n_sensors: n, spacing, ..SensorArray::default() };
    let x0 = if v > 0.0 { -0.2 } else { array.span() + 0.2 };
    let t_end = t_start + (array.span() + 0.4) / v.abs() + 1.0;
    Scenario { array, objects: vec![ObjectTrajectory { x0, velocity: v, t_start, distance: 0.0 }], t_end }
}

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(48)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn arrival_gap_is_transit_mismatch(v in 0.2f64..1.5, n in 3usize..7) {
        let c = build_bidirectional(n, DelayPlan::default(), CircuitParams::default()).unwrap();
        let tl = predict_timeline(&c, &crossing(n, 0.1, v, 0.0)).unwrap();
        prop_assert_eq!(tl.len(), n - 2);
        for t in &tl {
            prop_assert!((t.long_arrival - t.short_arrival - (0.2 - 0.1 / v)).abs() < 1e-9);
        }
    }

    #[test]
    fn reflected_crossing_mirrors_fire_log(v in 0.3f64..0.8, n in 3usize..7, t_start in 0.0f64..0.5) {
        let c = build_bidirectional(n, DelayPlan::default(), CircuitParams::default()).unwrap();
        let s = crossing(n, 0.1, v, t_start);
        let a = simulate(&c, &s);
        let b = simulate(&c, &s.reflected());
        let mirrored = |r: &SimResult, flip: bool| {
            let mut m: BTreeMap<(NeuronKind, Subcircuit, usize), Vec<f64>> = BTreeMap::new();
            for f in &r.fire_log {
                let (sub, index) = match (flip, f.kind, f.subcircuit) {
                    (false, _, sub) => (sub, f.index),
                    (true, NeuronKind::Sensor, sub) => (sub, n - 1 - f.index),
                    (true, kind, sub) => {
                        let other = if sub == Subcircuit::LeftToRight { Subcircuit::RightToLeft } else { Subcircuit::LeftToRight };
                        let top = if kind == NeuronKind::Simple { n - 2 } else { n - 3 };
                        (other, top - f.index)
                    }
                };
                m.entry((f.kind, sub, index)).or_default().push(f.time);
            }
            m
        };
        let (ma, mb) = (mirrored(&a, false), mirrored(&b, true));
        prop_assert_eq!(ma.keys().collect::<Vec<_>>(), mb.keys().collect::<Vec<_>>());
        for (k, ta) in &ma {
            let tb = &mb[k];
            prop_assert_eq!(ta.len(), tb.len());
            for (x, y) in ta.iter().zip(tb) {
                prop_assert!((x - y).abs() < 1e-9, "{:?}: {} vs {}", k, x, y);
            }
        }
    }

    #[test]
    fn lateral_distance_delays_or_removes_spikes(d1 in 0.0f64..0.3, d2 in 0.0f64..0.3, v in 0.2f64..1.0) {
        let (near, far) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let array = SensorArray::default();
        let at = |d: f64| sensor_spike_times(&ObjectTrajectory { x0: -0.5, velocity: v, t_start: 0.0, distance: d }, &array);
        let (a, b) = (at(near), at(far));
        for (sa, sb) in a.iter().zip(&b) {
            prop_assert!(sb.len() <= sa.len());
            if let (Some(x), Some(y)) = (sa.first(), sb.first()) {
                prop_assert!(y >= x);
            }
        }
    }

    #[test]
    fn coincidence_depends_on_spacing_over_speed(r in 0.05f64..0.5, v in 0.1f64..2.0, c in 0.1f64..10.0) {
        let eps = CircuitParams::default().coincidence_window().unwrap();
        let transit = 0.2;
        // skip points within rounding distance of the window edge
        prop_assume!(((transit - r / v).abs() - eps).abs() > 1e-9);
        prop_assert_eq!(coincides(r, v, transit, eps), coincides(c * r, c * v, transit, eps));
    }

    #[test]
    fn timeline_fires_are_scale_invariant(v in 0.3f64..0.9, c in 0.5f64..4.0) {
        let params = CircuitParams::default();
        let base = build_bidirectional(5, DelayPlan::default(), params).unwrap();
        let scaled_plan = tune_delays(0.1 * c, 0.5 * c, 0.01, 0.05, 0.05).unwrap();
        let scaled = build_bidirectional(5, scaled_plan, params).unwrap();
        let fa: Vec<bool> = predict_timeline(&base, &crossing(5, 0.1, v, 0.0)).unwrap().iter().map(|t| t.fires).collect();
        let ta = predict_timeline(&scaled, &crossing(5, 0.1 * c, v * c, 0.0)).unwrap();
        let fb: Vec<bool> = ta.iter().map(|t| t.fires).collect();
        let eps = params.coincidence_window().unwrap();
        prop_assume!(ta.iter().all(|t| (t.arrival_gap() - eps).abs() > 1e-9));
        prop_assert_eq!(fa, fb);
    }

    #[test]
    fn tuned_crossings_report_only_the_true_direction(
        r in 0.05f64..0.5,
        vd in 0.1f64..2.0,
        n in 3usize..8,
        frac in -0.5f64..0.5,
        leftward in any::<bool>(),
    ) {
        let params = CircuitParams::default();
        let eps = params.coincidence_window().unwrap();
        let plan = tune_delays(r, vd, 0.01, 0.05, 0.05).unwrap();
        let c = build_bidirectional(n, plan, params).unwrap();
        prop_assume!(validate(&c, 0.1, 2.0).unwrap().is_empty());
        // |R/v - R/vd| <= eps / 2
        let speed = r / (r / vd + frac * eps);
        let v = if leftward { -speed } else { speed };
        let result = simulate(&c, &crossing(n, r, v, 0.0));
        let events = classify(&result);
        prop_assert_eq!(events.len(), n - 2);
        prop_assert!(events.iter().all(|e| e.direction == Direction::of_velocity(v)));
    }
}
