//! CSV and key=value writers. Floats use Rust's shortest round-trip form.

use std::io::{self, Write};

use bimotion::analysis::{classify, epilepsy_indicator, potential_trace, AnalysisConfig, CompareReport};
use bimotion::engine::SimResult;
use bimotion::sweep::SweepRow;

pub const EVENTS_HEADER: &str = "time,neuron_id,kind,subcircuit,index,event";
pub const TRACE_HEADER: &str = "time,total_potential,active_count,active_fraction";
pub const DIRECTIONS_HEADER: &str = "time,direction,pair_index";
pub const SWEEP_HEADER: &str = "velocity,fired,first_event_time,predicted_fired";

pub fn write_events(w: &mut (impl Write + ?Sized), result: &SimResult) -> io::Result<()> {
    writeln!(w, "{EVENTS_HEADER}")?;
    for f in &result.fire_log {
        writeln!(w, "{},{},{},{},{},fire", f.time, f.neuron, f.kind, f.subcircuit, f.index)?;
    }
    Ok(())
}

pub fn write_trace(w: &mut (impl Write + ?Sized), result: &SimResult) -> io::Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    for p in potential_trace(result).points {
        writeln!(w, "{},{},{},{}", p.time, p.total_potential, p.active_count, p.active_fraction)?;
    }
    Ok(())
}

pub fn write_directions(w: &mut (impl Write + ?Sized), result: &SimResult) -> io::Result<()> {
    writeln!(w, "{DIRECTIONS_HEADER}")?;
    for e in classify(result) {
        writeln!(w, "{},{},{}", e.time, e.direction.as_str(), e.pair_index)?;
    }
    Ok(())
}

pub fn write_summary(
    w: &mut (impl Write + ?Sized),
    result: &SimResult,
    analysis: &AnalysisConfig,
) -> Result<(), crate::CliError> {
    let p = potential_trace(result);
    let epi = epilepsy_indicator(result, analysis).map_err(bimotion::Error::from)?;
    writeln!(w, "integrated_potential={}", p.integrated_potential)?;
    writeln!(w, "peak_active_fraction={}", p.peak_active_fraction)?;
    writeln!(w, "n_direction_events={}", classify(result).len())?;
    writeln!(w, "epilepsy_triggered={}", epi.triggered)?;
    writeln!(w, "detector_neurons={}", result.detector_neurons)?;
    Ok(())
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
}

/// `a` and `b` name the two compared families.
pub fn write_compare(w: &mut (impl Write + ?Sized), report: &CompareReport, a: &str, b: &str) -> io::Result<()> {
    writeln!(w, "detector_neurons_{a}={}", report.detector_neurons.0)?;
    writeln!(w, "detector_neurons_{b}={}", report.detector_neurons.1)?;
    writeln!(w, "integrated_potential_{a}={}", report.integrated_potential.0)?;
    writeln!(w, "integrated_potential_{b}={}", report.integrated_potential.1)?;
    writeln!(w, "integrated_potential_ratio={}", report.integrated_potential_ratio)?;
    writeln!(w, "peak_active_fraction_{a}={}", report.peak_active_fraction.0)?;
    writeln!(w, "peak_active_fraction_{b}={}", report.peak_active_fraction.1)?;
    writeln!(w, "peak_active_fraction_ratio={}", report.peak_active_fraction_ratio)?;
    writeln!(w, "direction_events_{a}={}", report.direction_events.0)?;
    writeln!(w, "direction_events_{b}={}", report.direction_events.1)?;
    writeln!(w, "detection_latencies_{a}={}", join(&report.latencies.0))?;
    writeln!(w, "detection_latencies_{b}={}", join(&report.latencies.1))?;
    Ok(())
}

pub fn write_sweep(w: &mut (impl Write + ?Sized), rows: &[SweepRow]) -> io::Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in rows {
        let first = r.first_event_time.map(|t| t.to_string()).unwrap_or_default();
        writeln!(w, "{},{},{},{}", r.velocity, r.fired, first, r.predicted_fired)?;
    }
    Ok(())
}
