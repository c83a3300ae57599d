//! Direction events, potential metrics, and runaway-activity detection over
//! finished simulation results.

use thiserror::Error;

use crate::circuit::{NeuronId, NeuronKind, Subcircuit};
use crate::engine::{SimConfig, SimResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid comparison: {0}")]
    InvalidComparison(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    LeftToRight,
    RightToLeft,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::LeftToRight => "left_to_right",
            Direction::RightToLeft => "right_to_left",
        }
    }

    pub fn of_velocity(v: f64) -> Self {
        if v > 0.0 {
            Direction::LeftToRight
        } else {
            Direction::RightToLeft
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionEvent {
    pub time: f64,
    pub direction: Direction,
    pub pair_index: usize,
    pub neuron: NeuronId,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisConfig {
    /// Critical active fraction, in (0, 1].
    pub kappa: f64,
    /// Minimum sustained duration above `kappa` (s).
    pub t_epi: f64,
    /// Forwarded to the engine, which does the per-sample activity count.
    pub theta_active: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig { kappa: 0.5, t_epi: 0.1, theta_active: 0.5 }
    }
}

impl AnalysisConfig {
    pub fn check(&self) -> Result<(), AnalysisError> {
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(AnalysisError::InvalidParameter(format!("kappa must be in (0, 1], got {}", self.kappa)));
        }
        if !(self.t_epi >= 0.0 && self.t_epi.is_finite()) {
            return Err(AnalysisError::InvalidParameter(format!("t_epi must be >= 0, got {}", self.t_epi)));
        }
        if !self.theta_active.is_finite() {
            return Err(AnalysisError::InvalidParameter("theta_active must be finite".into()));
        }
        Ok(())
    }

    pub fn sim_config(&self, t_end: f64, dt_sample: f64) -> SimConfig {
        SimConfig { t_end, dt_sample, theta_active: self.theta_active }
    }
}

/// One event per combined-neuron fire, labelled by the neuron's subcircuit.
pub fn classify(result: &SimResult) -> Vec<DirectionEvent> {
    let mut out: Vec<DirectionEvent> = result
        .fire_log
        .iter()
        .filter(|f| f.kind == NeuronKind::Combined)
        .filter_map(|f| {
            let direction = match f.subcircuit {
                Subcircuit::LeftToRight => Direction::LeftToRight,
                Subcircuit::RightToLeft => Direction::RightToLeft,
                Subcircuit::Shared => return None,
            };
            Some(DirectionEvent { time: f.time, direction, pair_index: f.index, neuron: f.neuron })
        })
        .collect();
    out.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.neuron.cmp(&b.neuron)));
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub time: f64,
    pub total_potential: f64,
    pub active_count: usize,
    pub active_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSummary {
    pub points: Vec<TracePoint>,
    /// Trapezoid integral of total potential over the sampled span.
    pub integrated_potential: f64,
    pub peak_active_fraction: f64,
}

pub fn potential_trace(result: &SimResult) -> PotentialSummary {
    let points: Vec<TracePoint> = result
        .trace
        .iter()
        .map(|s| TracePoint {
            time: s.time,
            total_potential: s.total_potential,
            active_count: s.active_count,
            active_fraction: result.active_fraction(s),
        })
        .collect();
    let integrated_potential =
        points.windows(2).map(|w| 0.5 * (w[0].total_potential + w[1].total_potential) * (w[1].time - w[0].time)).sum();
    let peak_active_fraction = points.iter().map(|p| p.active_fraction).fold(0.0, f64::max);
    PotentialSummary { points, integrated_potential, peak_active_fraction }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpilepsyReport {
    pub triggered: bool,
    /// `[start, end)` spans where the active fraction stayed at or above
    /// kappa for at least `t_epi`. Each sample covers one `dt_sample`.
    pub intervals: Vec<(f64, f64)>,
}

pub fn epilepsy_indicator(result: &SimResult, config: &AnalysisConfig) -> Result<EpilepsyReport, AnalysisError> {
    config.check()?;
    let dt = result.config.dt_sample;
    let mut intervals = Vec::new();
    let mut run: Option<(f64, usize)> = None;
    let mut close = |run: &mut Option<(f64, usize)>| {
        if let Some((start, count)) = run.take() {
            let duration = count as f64 * dt;
            if duration >= config.t_epi - 1e-12 {
                intervals.push((start, start + duration));
            }
        }
    };
    for s in &result.trace {
        if result.active_fraction(s) >= config.kappa {
            match &mut run {
                Some((_, count)) => *count += 1,
                None => run = Some((s.time, 1)),
            }
        } else {
            close(&mut run);
        }
    }
    close(&mut run);
    Ok(EpilepsyReport { triggered: !intervals.is_empty(), intervals })
}

/// Combined-neuron fire time minus the later of its contributing sensor spikes.
pub fn detection_latencies(result: &SimResult) -> Vec<f64> {
    result
        .fire_log
        .iter()
        .filter(|f| f.kind == NeuronKind::Combined && f.origin.is_finite())
        .map(|f| f.time - f.origin)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub detector_neurons: (usize, usize),
    pub integrated_potential: (f64, f64),
    pub integrated_potential_ratio: f64,
    pub peak_active_fraction: (f64, f64),
    pub peak_active_fraction_ratio: f64,
    pub direction_events: (usize, usize),
    pub latencies: (Vec<f64>, Vec<f64>),
}

fn ratio(a: f64, b: f64) -> f64 {
    if a == b {
        1.0
    } else {
        a / b
    }
}

/// Side-by-side metrics of two runs of the same scenario; ratios are `a / b`.
pub fn compare(a: &SimResult, b: &SimResult) -> Result<CompareReport, AnalysisError> {
    if a.stimulus != b.stimulus {
        return Err(AnalysisError::InvalidComparison("results were driven by different stimuli".into()));
    }
    if a.config.t_end != b.config.t_end || a.config.dt_sample != b.config.dt_sample {
        return Err(AnalysisError::InvalidComparison("results use different time bases".into()));
    }
    let pa = potential_trace(a);
    let pb = potential_trace(b);
    Ok(CompareReport {
        detector_neurons: (a.detector_neurons, b.detector_neurons),
        integrated_potential: (pa.integrated_potential, pb.integrated_potential),
        integrated_potential_ratio: ratio(pa.integrated_potential, pb.integrated_potential),
        peak_active_fraction: (pa.peak_active_fraction, pb.peak_active_fraction),
        peak_active_fraction_ratio: ratio(pa.peak_active_fraction, pb.peak_active_fraction),
        direction_events: (classify(a).len(), classify(b).len()),
        latencies: (detection_latencies(a), detection_latencies(b)),
    })
}
