//! Moving objects, Gaussian sensor fields, and sensor spike generation.

use thiserror::Error;

use crate::circuit::{CircuitSpec, NeuronKind};
use crate::engine::SpikeEvent;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StimulusError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

/// A row of sensors at `x_i = i * spacing` on the line `y = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorArray {
    pub n_sensors: usize,
    pub spacing: f64,
    /// Along-array Gaussian width (m).
    pub sigma: f64,
    pub amplitude: f64,
    pub sensor_threshold: f64,
    /// Re-arm level as a fraction of `sensor_threshold`.
    pub hysteresis: f64,
    /// Lateral distance falloff width (m).
    pub lateral_sigma: f64,
}

impl Default for SensorArray {
    fn default() -> Self {
        SensorArray {
            n_sensors: 5,
            spacing: 0.1,
            sigma: 0.04,
            amplitude: 1.0,
            sensor_threshold: 0.5,
            hysteresis: 0.5,
            lateral_sigma: 0.2,
        }
    }
}

impl SensorArray {
    pub fn check(&self) -> Result<(), StimulusError> {
        let bad = |msg: String| Err(StimulusError::InvalidScenario(msg));
        if self.n_sensors == 0 {
            return bad("n_sensors must be >= 1".into());
        }
        for (name, v) in [
            ("spacing", self.spacing),
            ("sigma", self.sigma),
            ("amplitude", self.amplitude),
            ("sensor_threshold", self.sensor_threshold),
            ("lateral_sigma", self.lateral_sigma),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be > 0, got {v}"));
            }
        }
        if self.sensor_threshold >= self.amplitude {
            return bad(format!(
                "sensor_threshold {} must be below amplitude {}",
                self.sensor_threshold, self.amplitude
            ));
        }
        if !(self.hysteresis > 0.0 && self.hysteresis < 1.0) {
            return bad(format!("hysteresis must be in (0, 1), got {}", self.hysteresis));
        }
        Ok(())
    }

    pub fn position(&self, sensor: usize) -> f64 {
        sensor as f64 * self.spacing
    }

    /// Far end of the row.
    pub fn span(&self) -> f64 {
        self.position(self.n_sensors.saturating_sub(1))
    }
}

/// Constant-velocity object; positive velocity moves left to right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectTrajectory {
    pub x0: f64,
    pub velocity: f64,
    pub t_start: f64,
    /// Lateral distance from the sensor line (m).
    pub distance: f64,
}

impl Default for ObjectTrajectory {
    fn default() -> Self {
        ObjectTrajectory { x0: -0.5, velocity: 0.5, t_start: 0.0, distance: 0.0 }
    }
}

impl ObjectTrajectory {
    pub fn position(&self, t: f64) -> f64 {
        self.x0 + self.velocity * (t - self.t_start)
    }

    /// Mirror image about the centre of `array`.
    pub fn reflected(&self, array: &SensorArray) -> Self {
        ObjectTrajectory { x0: array.span() - self.x0, velocity: -self.velocity, ..*self }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub array: SensorArray,
    pub objects: Vec<ObjectTrajectory>,
    pub t_end: f64,
}

impl Scenario {
    /// One object crossing the default row left to right at 0.5 m/s.
    pub fn single_crossing() -> Self {
        Scenario { array: SensorArray::default(), objects: vec![ObjectTrajectory::default()], t_end: 3.0 }
    }

    /// Two objects crossing the default row in opposite directions.
    pub fn two_objects() -> Self {
        let array = SensorArray::default();
        let right = ObjectTrajectory { x0: array.span() + 0.5, velocity: -0.5, t_start: 0.1, distance: 0.0 };
        Scenario { array, objects: vec![ObjectTrajectory::default(), right], t_end: 3.0 }
    }

    pub fn check(&self) -> Result<(), StimulusError> {
        self.array.check()?;
        for (i, o) in self.objects.iter().enumerate() {
            if o.velocity == 0.0 || !o.velocity.is_finite() {
                return Err(StimulusError::InvalidScenario(format!("object {i}: velocity must be non-zero")));
            }
            if !(o.x0.is_finite() && o.t_start.is_finite() && o.distance.is_finite()) {
                return Err(StimulusError::InvalidScenario(format!("object {i}: non-finite field")));
            }
            if o.t_start < 0.0 {
                return Err(StimulusError::InvalidScenario(format!("object {i}: t_start must be >= 0")));
            }
            if self.t_end <= o.t_start {
                return Err(StimulusError::InvalidScenario(format!(
                    "t_end {} must exceed object {i} t_start {}",
                    self.t_end, o.t_start
                )));
            }
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(StimulusError::InvalidScenario(format!("t_end must be > 0, got {}", self.t_end)));
        }
        Ok(())
    }

    /// Mirror image: positions reflected about the row centre, velocities negated.
    pub fn reflected(&self) -> Self {
        Scenario { objects: self.objects.iter().map(|o| o.reflected(&self.array)).collect(), ..self.clone() }
    }
}

/// Peak stimulus an object can produce at lateral distance `traj.distance`.
pub fn effective_amplitude(traj: &ObjectTrajectory, array: &SensorArray) -> f64 {
    let d = traj.distance;
    array.amplitude * (-d * d / (2.0 * array.lateral_sigma * array.lateral_sigma)).exp()
}

pub fn intensity(traj: &ObjectTrajectory, array: &SensorArray, sensor: usize, t: f64) -> f64 {
    let dx = traj.position(t) - array.position(sensor);
    effective_amplitude(traj, array) * (-dx * dx / (2.0 * array.sigma * array.sigma)).exp()
}

/// Along-array offset at which intensity equals `level`, if reachable.
fn crossing_radius(a_eff: f64, level: f64, sigma: f64) -> Option<f64> {
    (a_eff > level).then(|| sigma * (2.0 * (a_eff / level).ln()).sqrt())
}

/// Radius around a sensor inside which the object drives it over threshold.
pub fn trigger_radius(traj: &ObjectTrajectory, array: &SensorArray) -> Option<f64> {
    crossing_radius(effective_amplitude(traj, array), array.sensor_threshold, array.sigma)
}

/// Rising threshold crossings per sensor, from the closed-form solve.
///
/// A constant-velocity object enters each trigger disc at most once, and the
/// re-arm disc (`hysteresis * threshold`) is strictly larger, so every
/// sensor spikes at most once per object. An object that appears inside a
/// disc spikes that sensor at `t_start`.
pub fn sensor_spike_times(traj: &ObjectTrajectory, array: &SensorArray) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new(); array.n_sensors];
    let Some(radius) = trigger_radius(traj, array) else {
        return out;
    };
    let v = traj.velocity;
    for (i, spikes) in out.iter_mut().enumerate() {
        let xi = array.position(i);
        // approach-side edge of the disc, in the direction of travel
        let entry = if v > 0.0 { xi - radius } else { xi + radius };
        let exit = if v > 0.0 { xi + radius } else { xi - radius };
        let ahead = (entry - traj.x0) / v;
        if ahead >= 0.0 {
            spikes.push(traj.t_start + ahead);
        } else if (exit - traj.x0) / v > 0.0 {
            spikes.push(traj.t_start);
        }
    }
    out
}

/// Stimulus weight that drives every sensor of `circuit` to threshold.
pub fn sensor_drive(circuit: &CircuitSpec) -> f64 {
    circuit
        .neurons
        .iter()
        .filter(|n| n.kind == NeuronKind::Sensor)
        .map(|n| n.params.theta)
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0)
}

/// Merged sensor spikes of all objects, as excitatory events of `weight`
/// addressed to sensor ids `0..n_sensors`, sorted by `(time, sensor)`.
/// Crossings after `scenario.t_end` are dropped.
pub fn scenario_events(scenario: &Scenario, weight: f64) -> Vec<SpikeEvent> {
    let mut events: Vec<SpikeEvent> = scenario
        .objects
        .iter()
        .flat_map(|o| {
            sensor_spike_times(o, &scenario.array)
                .into_iter()
                .enumerate()
                .flat_map(|(i, ts)| ts.into_iter().map(move |t| (t, i)))
        })
        .filter(|&(t, _)| t <= scenario.t_end)
        .map(|(t, i)| SpikeEvent::stimulus(t, i, weight))
        .collect();
    events.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.dst.cmp(&b.dst)));
    events
}
