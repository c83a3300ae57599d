//! Config-driven front end for the `bimotion` simulator.

pub mod config;
pub mod report;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use bimotion::analysis::compare;
use bimotion::circuit::{validate, CircuitFamily, CircuitSpec};
use bimotion::engine::{self, SimResult};
use bimotion::oracle::verify;
use bimotion::stimulus::{scenario_events, sensor_drive};
use bimotion::sweep::{sweep_velocities, velocity_grid};
use thiserror::Error;

pub use config::{parse_config, ConfigError, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    File { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Sim(#[from] bimotion::Error),
}

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success = 0,
    ConfigError = 1,
    ValidationFailure = 2,
    Disagreement = 3,
}

impl Status {
    pub fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Tune,
    Validate,
    Run,
    Compare,
    Sweep,
    Verify,
}

pub fn load_config(path: Option<&Path>) -> Result<RunConfig, CliError> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|source| CliError::File { path: p.to_path_buf(), source })?;
            Ok(parse_config(&text)?)
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|source| CliError::File { path: path.to_path_buf(), source })
}

fn simulate(cfg: &RunConfig, circuit: &CircuitSpec) -> Result<SimResult, CliError> {
    let events = scenario_events(&cfg.scenario(), sensor_drive(circuit));
    Ok(engine::run(circuit, &events, &cfg.sim_config()).map_err(bimotion::Error::from)?)
}

/// Writes events.csv, trace.csv, directions.csv and summary.txt into `dir`.
pub fn write_run(dir: &Path, result: &SimResult, cfg: &RunConfig) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::File { path: dir.to_path_buf(), source })?;
    let mut w = create(&dir.join("events.csv"))?;
    report::write_events(&mut w, result)?;
    w.flush()?;
    let mut w = create(&dir.join("trace.csv"))?;
    report::write_trace(&mut w, result)?;
    w.flush()?;
    let mut w = create(&dir.join("directions.csv"))?;
    report::write_directions(&mut w, result)?;
    w.flush()?;
    let mut w = create(&dir.join("summary.txt"))?;
    report::write_summary(&mut w, result, &cfg.analysis)?;
    w.flush()?;
    Ok(())
}

pub fn cmd_tune(cfg: &RunConfig, out: &mut dyn Write) -> Result<Status, CliError> {
    let plan = cfg.plan();
    writeln!(out, "spacing={}", plan.spacing)?;
    writeln!(out, "design_velocity={}", plan.design_velocity)?;
    writeln!(out, "excitatory_delay={}", plan.excitatory_delay)?;
    writeln!(out, "inhibitory_delay={}", plan.inhibitory_delay)?;
    writeln!(out, "short_delay={}", plan.short_delay)?;
    writeln!(out, "long_delay={}", plan.long_delay)?;
    writeln!(out, "transit_time={}", plan.transit_time())?;
    if let Some(eps) = cfg.neurons.coincidence_window() {
        let (lo, hi) = plan.velocity_band(eps);
        writeln!(out, "coincidence_window={eps}")?;
        writeln!(out, "velocity_band_min={lo}")?;
        writeln!(out, "velocity_band_max={hi}")?;
    }
    Ok(Status::Success)
}

pub fn cmd_validate(cfg: &RunConfig, circuit: &CircuitSpec, out: &mut dyn Write) -> Result<Status, CliError> {
    let violations =
        validate(circuit, cfg.delays.velocity_min, cfg.delays.velocity_max).map_err(bimotion::Error::from)?;
    for v in &violations {
        writeln!(out, "{v}")?;
    }
    writeln!(out, "violations={}", violations.len())?;
    Ok(if violations.is_empty() { Status::Success } else { Status::ValidationFailure })
}

pub fn cmd_run(cfg: &RunConfig, circuit: &CircuitSpec, dir: &Path, out: &mut dyn Write) -> Result<Status, CliError> {
    let result = simulate(cfg, circuit)?;
    write_run(dir, &result, cfg)?;
    writeln!(out, "fires={}", result.fire_log.len())?;
    writeln!(out, "output={}", dir.display())?;
    Ok(Status::Success)
}

pub fn cmd_compare(cfg: &RunConfig, dir: &Path, out: &mut dyn Write) -> Result<Status, CliError> {
    let (fa, fb) = (CircuitFamily::Bidirectional, CircuitFamily::PrototypePair);
    let a = simulate(cfg, &cfg.circuit_for(fa)?)?;
    let b = simulate(cfg, &cfg.circuit_for(fb)?)?;
    write_run(&dir.join(fa.as_str()), &a, cfg)?;
    write_run(&dir.join(fb.as_str()), &b, cfg)?;
    let rep = compare(&a, &b).map_err(bimotion::Error::from)?;
    let mut w = create(&dir.join("compare.txt"))?;
    report::write_compare(&mut w, &rep, fa.as_str(), fb.as_str())?;
    w.flush()?;
    report::write_compare(out, &rep, fa.as_str(), fb.as_str())?;
    Ok(Status::Success)
}

pub fn cmd_sweep(cfg: &RunConfig, circuit: &CircuitSpec, dir: &Path, out: &mut dyn Write) -> Result<Status, CliError> {
    let s = &cfg.sweep;
    let grid = velocity_grid(s.v_start, s.v_stop, s.v_step)?;
    let rows = sweep_velocities(circuit, &cfg.scenario(), &grid, &cfg.sim_config())?;
    fs::create_dir_all(dir).map_err(|source| CliError::File { path: dir.to_path_buf(), source })?;
    let mut w = create(&dir.join("sweep.csv"))?;
    report::write_sweep(&mut w, &rows)?;
    w.flush()?;
    let mismatches = rows.iter().filter(|r| r.fired != r.predicted_fired).count();
    writeln!(out, "points={}", rows.len())?;
    writeln!(out, "fired={}", rows.iter().filter(|r| r.fired).count())?;
    writeln!(out, "mismatches={mismatches}")?;
    Ok(if mismatches == 0 { Status::Success } else { Status::Disagreement })
}

pub fn cmd_verify(cfg: &RunConfig, circuit: &CircuitSpec, out: &mut dyn Write) -> Result<Status, CliError> {
    let rep =
        verify(circuit, &cfg.scenario(), &cfg.sim_config(), cfg.engine.dense_dt).map_err(bimotion::Error::from)?;
    let show = |r: &Result<(), String>| match r {
        Ok(()) => "ok".to_string(),
        Err(e) => e.clone(),
    };
    writeln!(out, "predicted_fires={}", rep.timeline.iter().filter(|t| t.fires).count())?;
    writeln!(out, "engine_fires={}", rep.engine.fire_log.len())?;
    writeln!(out, "dense_fires={}", rep.dense.fire_log.len())?;
    writeln!(out, "engine_vs_dense={}", show(&rep.engine_vs_dense))?;
    writeln!(out, "engine_vs_analytic={}", show(&rep.engine_vs_analytic))?;
    writeln!(out, "dense_vs_analytic={}", show(&rep.dense_vs_analytic))?;
    Ok(if rep.agrees() { Status::Success } else { Status::Disagreement })
}

/// Runs one command. `netlist`, when given, receives the configured circuit.
pub fn execute(
    command: Command,
    cfg: &RunConfig,
    out_dir: &Path,
    netlist: Option<&Path>,
    out: &mut dyn Write,
) -> Result<Status, CliError> {
    let circuit = cfg.circuit()?;
    if let Some(path) = netlist {
        fs::write(path, circuit.netlist()).map_err(|source| CliError::File { path: path.to_path_buf(), source })?;
    }
    match command {
        Command::Tune => cmd_tune(cfg, out),
        Command::Validate => cmd_validate(cfg, &circuit, out),
        Command::Run => cmd_run(cfg, &circuit, out_dir, out),
        Command::Compare => cmd_compare(cfg, out_dir, out),
        Command::Sweep => cmd_sweep(cfg, &circuit, out_dir, out),
        Command::Verify => cmd_verify(cfg, &circuit, out),
    }
}
