//! Batch evaluation of independent simulations.
//!
//! Each grid point is a pure function of its inputs, so with the `parallel`
//! feature the points are spread over the rayon pool. Output order always
//! follows input order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::analysis::classify;
use crate::circuit::CircuitSpec;
use crate::engine::{self, SimConfig};
use crate::oracle::predict_timeline;
use crate::stimulus::{scenario_events, sensor_drive, trigger_radius, Scenario};
use crate::Error;

/// Applies `f` to every item, in parallel when the feature is enabled.
pub fn map_batch<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// `start, start + step, ..., stop`, each point snapped to 1e-12 so that
/// printed grids stay readable.
pub fn velocity_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, Error> {
    if !(step > 0.0 && step.is_finite() && start.is_finite() && stop.is_finite() && stop >= start) {
        return Err(Error::InvalidParameter(format!("bad velocity grid {start}..{stop} step {step}")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub velocity: f64,
    /// Any combined neuron fired in the event engine.
    pub fired: bool,
    pub first_event_time: Option<f64>,
    /// Any combined neuron predicted to fire by the closed-form timeline.
    pub predicted_fired: bool,
}

/// The template scenario with its first object moved at `velocity`.
///
/// The object is mirrored when the sign flips, and the horizon is stretched
/// if needed so slow objects still clear the row.
pub fn scenario_at(template: &Scenario, velocity: f64, circuit: &CircuitSpec) -> Result<Scenario, Error> {
    let mut s = template.clone();
    let first =
        s.objects.first_mut().ok_or_else(|| Error::InvalidParameter("sweep needs an object template".into()))?;
    if velocity == 0.0 || !velocity.is_finite() {
        return Err(Error::InvalidParameter(format!("sweep velocity must be non-zero, got {velocity}")));
    }
    if (velocity > 0.0) != (first.velocity > 0.0) {
        *first = first.reflected(&s.array);
    }
    first.velocity = velocity;
    let first = *first;
    s.objects.truncate(1);

    let radius = trigger_radius(&first, &s.array).unwrap_or(0.0);
    let far = if velocity > 0.0 { s.array.span() - radius } else { radius };
    let travel = ((far - first.x0) / velocity).max(0.0);
    let latency: f64 = circuit.connections.iter().map(|c| c.delay).fold(0.0, f64::max) * 2.0;
    s.t_end = s.t_end.max(first.t_start + travel + latency + 0.5);
    Ok(s)
}

pub fn sweep_point(
    circuit: &CircuitSpec,
    template: &Scenario,
    velocity: f64,
    config: &SimConfig,
) -> Result<SweepRow, Error> {
    let s = scenario_at(template, velocity, circuit)?;
    let cfg = SimConfig { t_end: s.t_end, ..*config };
    let result = engine::run(circuit, &scenario_events(&s, sensor_drive(circuit)), &cfg)?;
    let events = classify(&result);
    let timeline = predict_timeline(circuit, &s)?;
    Ok(SweepRow {
        velocity,
        fired: !events.is_empty(),
        first_event_time: events.first().map(|e| e.time),
        predicted_fired: timeline.iter().any(|t| t.fires),
    })
}

pub fn sweep_sequential(
    circuit: &CircuitSpec,
    template: &Scenario,
    grid: &[f64],
    config: &SimConfig,
) -> Result<Vec<SweepRow>, Error> {
    grid.iter().map(|&v| sweep_point(circuit, template, v, config)).collect()
}

#[cfg(feature = "parallel")]
pub fn sweep_parallel(
    circuit: &CircuitSpec,
    template: &Scenario,
    grid: &[f64],
    config: &SimConfig,
) -> Result<Vec<SweepRow>, Error> {
    grid.par_iter().map(|&v| sweep_point(circuit, template, v, config)).collect()
}

pub fn sweep_velocities(
    circuit: &CircuitSpec,
    template: &Scenario,
    grid: &[f64],
    config: &SimConfig,
) -> Result<Vec<SweepRow>, Error> {
    #[cfg(feature = "parallel")]
    {
        sweep_parallel(circuit, template, grid, config)
    }
    #[cfg(not(feature = "parallel"))]
    {
        sweep_sequential(circuit, template, grid, config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_bidirectional, CircuitParams, DelayPlan};

    #[test]
    fn grid_endpoints() {
        let g = velocity_grid(0.4, 0.6, 0.005).unwrap();
        assert_eq!(g.len(), 41);
        assert_eq!(g[0], 0.4);
        assert_eq!(g[15], 0.475);
        assert_eq!(g[40], 0.6);
        assert!(velocity_grid(0.6, 0.4, 0.005).is_err());
        assert!(velocity_grid(0.4, 0.6, 0.0).is_err());
    }

    #[test]
    fn map_batch_keeps_order() {
        let xs: Vec<u64> = (0..200).collect();
        let ys = map_batch(&xs, |x| x * x);
        assert!(ys.iter().enumerate().all(|(i, &y)| y == (i * i) as u64));
    }

    #[test]
    fn slow_objects_get_enough_horizon() {
        let c = build_bidirectional(5, DelayPlan::default(), CircuitParams::default()).unwrap();
        let s = scenario_at(&Scenario::single_crossing(), 0.1, &c).unwrap();
        assert!(s.t_end > 9.0);
        let back = scenario_at(&Scenario::single_crossing(), -0.5, &c).unwrap();
        assert!(back.objects[0].x0 > 0.4);
    }

    #[test]
    fn sequential_and_default_paths_agree() {
        let c = build_bidirectional(5, DelayPlan::default(), CircuitParams::default()).unwrap();
        let g = velocity_grid(0.45, 0.55, 0.01).unwrap();
        let cfg = SimConfig::default();
        let a = sweep_sequential(&c, &Scenario::single_crossing(), &g, &cfg).unwrap();
        let b = sweep_velocities(&c, &Scenario::single_crossing(), &g, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|r| r.fired == r.predicted_fired));
    }
}
