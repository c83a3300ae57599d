//! Flat INI-style run configuration.
//!
//! ```text
//! # comment
//! [array]
//! spacing = 0.1
//! [object]
//! velocity = -0.5
//! ```
//!
//! Sections may appear in any order. Every `[object]` header starts a new
//! object; with no `[object]` block the single default crossing is used.

use std::collections::HashMap;
use std::fmt;

use bimotion::analysis::AnalysisConfig;
use bimotion::circuit::{build, tune_delays, CircuitFamily, CircuitParams, CircuitSpec, DelayPlan, NeuronParams};
use bimotion::engine::SimConfig;
use bimotion::stimulus::{ObjectTrajectory, Scenario, SensorArray};
use bimotion::sweep::velocity_grid;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "config error at line {n}: {}", self.message),
            None => write!(f, "config error: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(line: Option<usize>, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError { line, message: message.into() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayInputs {
    pub design_velocity: f64,
    pub short_delay: f64,
    pub excitatory_delay: f64,
    pub inhibitory_delay: f64,
    /// Speed envelope used by `validate`.
    pub velocity_min: f64,
    pub velocity_max: f64,
}

impl Default for DelayInputs {
    fn default() -> Self {
        DelayInputs {
            design_velocity: 0.5,
            short_delay: 0.01,
            excitatory_delay: 0.05,
            inhibitory_delay: 0.05,
            velocity_min: 0.1,
            velocity_max: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineSettings {
    pub t_end: f64,
    pub dt_sample: f64,
    /// Step of the fixed-step reference used by `verify`.
    pub dense_dt: f64,
    pub family: CircuitFamily,
}

impl Default for EngineSettings {
    fn default() -> Self {
        EngineSettings { t_end: 3.0, dt_sample: 0.001, dense_dt: 1e-4, family: CircuitFamily::Bidirectional }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSettings {
    pub v_start: f64,
    pub v_stop: f64,
    pub v_step: f64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings { v_start: 0.40, v_stop: 0.60, v_step: 0.005 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub array: SensorArray,
    pub neurons: CircuitParams,
    pub delays: DelayInputs,
    pub analysis: AnalysisConfig,
    pub engine: EngineSettings,
    pub objects: Vec<ObjectTrajectory>,
    pub sweep: SweepSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            array: SensorArray::default(),
            neurons: CircuitParams::default(),
            delays: DelayInputs::default(),
            analysis: AnalysisConfig::default(),
            engine: EngineSettings::default(),
            objects: vec![ObjectTrajectory::default()],
            sweep: SweepSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn plan(&self) -> DelayPlan {
        let d = &self.delays;
        tune_delays(self.array.spacing, d.design_velocity, d.short_delay, d.excitatory_delay, d.inhibitory_delay)
            .expect("checked at parse time")
    }

    pub fn circuit_for(&self, family: CircuitFamily) -> Result<CircuitSpec, bimotion::Error> {
        Ok(build(family, self.array.n_sensors, self.plan(), self.neurons)?)
    }

    pub fn circuit(&self) -> Result<CircuitSpec, bimotion::Error> {
        self.circuit_for(self.engine.family)
    }

    pub fn scenario(&self) -> Scenario {
        Scenario { array: self.array, objects: self.objects.clone(), t_end: self.engine.t_end }
    }

    pub fn sim_config(&self) -> SimConfig {
        self.analysis.sim_config(self.engine.t_end, self.engine.dt_sample)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum Section {
    Array,
    Neurons,
    Delays,
    Analysis,
    Engine,
    Object,
    Sweep,
}

impl Section {
    const ALL: [Section; 7] = [
        Section::Array,
        Section::Neurons,
        Section::Delays,
        Section::Analysis,
        Section::Engine,
        Section::Object,
        Section::Sweep,
    ];

    fn name(self) -> &'static str {
        match self {
            Section::Array => "array",
            Section::Neurons => "neurons",
            Section::Delays => "delays",
            Section::Analysis => "analysis",
            Section::Engine => "engine",
            Section::Object => "object",
            Section::Sweep => "sweep",
        }
    }

    fn parse(name: &str) -> Option<Self> {
        Section::ALL.into_iter().find(|s| s.name() == name)
    }
}

fn number(line: usize, key: &str, raw: &str) -> Result<f64, ConfigError> {
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => err(Some(line), format!("{key}: expected a finite number, got '{raw}'")),
    }
}

fn positive(line: usize, key: &str, raw: &str) -> Result<f64, ConfigError> {
    let v = number(line, key, raw)?;
    if v > 0.0 {
        Ok(v)
    } else {
        err(Some(line), format!("{key} must be > 0, got {v}"))
    }
}

fn non_negative(line: usize, key: &str, raw: &str) -> Result<f64, ConfigError> {
    let v = number(line, key, raw)?;
    if v >= 0.0 {
        Ok(v)
    } else {
        err(Some(line), format!("{key} must be >= 0, got {v}"))
    }
}

/// Splits `<kind>_<field>` into the matching parameter block and field.
fn neuron_field<'a>(params: &'a mut CircuitParams, key: &str) -> Option<(&'a mut NeuronParams, &'static str)> {
    let (kind, field) =
        ["tau", "theta", "t_ref"].into_iter().find_map(|f| Some((key.strip_suffix(f)?.strip_suffix('_')?, f)))?;
    let p = match kind {
        "sensor" => &mut params.sensor,
        "simple" => &mut params.simple,
        "combined" => &mut params.combined,
        "relay" => &mut params.relay,
        _ => return None,
    };
    Some((p, field))
}

fn set(cfg: &mut RunConfig, section: Section, key: &str, raw: &str, line: usize) -> Result<(), ConfigError> {
    let unknown = || err(Some(line), format!("unknown key '{key}' in [{}]", section.name()));
    match section {
        Section::Array => {
            let a = &mut cfg.array;
            match key {
                "n_sensors" => {
                    a.n_sensors = match raw.parse::<usize>() {
                        Ok(n) if n >= 1 => n,
                        _ => return err(Some(line), format!("n_sensors: expected a positive integer, got '{raw}'")),
                    }
                }
                "spacing" => a.spacing = positive(line, key, raw)?,
                "sigma" => a.sigma = positive(line, key, raw)?,
                "amplitude" => a.amplitude = positive(line, key, raw)?,
                "sensor_threshold" => a.sensor_threshold = positive(line, key, raw)?,
                "hysteresis" => {
                    let v = number(line, key, raw)?;
                    if !(v > 0.0 && v < 1.0) {
                        return err(Some(line), format!("hysteresis must be in (0, 1), got {v}"));
                    }
                    a.hysteresis = v;
                }
                "lateral_sigma" => a.lateral_sigma = positive(line, key, raw)?,
                _ => return unknown(),
            }
        }
        Section::Neurons => match key {
            "w_exc" => cfg.neurons.w_exc = positive(line, key, raw)?,
            "w_inh" => cfg.neurons.w_inh = non_negative(line, key, raw)?,
            _ => {
                let Some((p, field)) = neuron_field(&mut cfg.neurons, key) else {
                    return unknown();
                };
                match field {
                    "tau" => p.tau = positive(line, key, raw)?,
                    "theta" => p.theta = positive(line, key, raw)?,
                    _ => p.t_ref = non_negative(line, key, raw)?,
                }
            }
        },
        Section::Delays => {
            let d = &mut cfg.delays;
            let slot = match key {
                "design_velocity" => &mut d.design_velocity,
                "short_delay" => &mut d.short_delay,
                "excitatory_delay" => &mut d.excitatory_delay,
                "inhibitory_delay" => &mut d.inhibitory_delay,
                "velocity_min" => &mut d.velocity_min,
                "velocity_max" => &mut d.velocity_max,
                _ => return unknown(),
            };
            *slot = positive(line, key, raw)?;
        }
        Section::Analysis => {
            let a = &mut cfg.analysis;
            match key {
                "kappa" => {
                    let v = number(line, key, raw)?;
                    if !(v > 0.0 && v <= 1.0) {
                        return err(Some(line), format!("kappa must be in (0, 1], got {v}"));
                    }
                    a.kappa = v;
                }
                "t_epi" => a.t_epi = non_negative(line, key, raw)?,
                "theta_active" => a.theta_active = number(line, key, raw)?,
                _ => return unknown(),
            }
        }
        Section::Engine => {
            let e = &mut cfg.engine;
            match key {
                "t_end" => e.t_end = positive(line, key, raw)?,
                "dt_sample" => e.dt_sample = positive(line, key, raw)?,
                "dense_dt" => e.dense_dt = positive(line, key, raw)?,
                "family" => {
                    e.family = CircuitFamily::parse(raw).ok_or_else(|| ConfigError {
                        line: Some(line),
                        message: format!(
                        "family: expected bidirectional, prototype_l2r, prototype_r2l or prototype_pair, got '{raw}'"
                    ),
                    })?
                }
                _ => return unknown(),
            }
        }
        Section::Object => {
            let o = cfg.objects.last_mut().expect("object block opened");
            match key {
                "x0" => o.x0 = number(line, key, raw)?,
                "velocity" => {
                    let v = number(line, key, raw)?;
                    if v == 0.0 {
                        return err(Some(line), "velocity must be non-zero");
                    }
                    o.velocity = v;
                }
                "t_start" => o.t_start = non_negative(line, key, raw)?,
                "distance" => o.distance = number(line, key, raw)?,
                _ => return unknown(),
            }
        }
        Section::Sweep => {
            let s = &mut cfg.sweep;
            match key {
                "v_start" => s.v_start = number(line, key, raw)?,
                "v_stop" => s.v_stop = number(line, key, raw)?,
                "v_step" => s.v_step = positive(line, key, raw)?,
                _ => return unknown(),
            }
        }
    }
    Ok(())
}

/// Parses a configuration; missing sections and keys keep their defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut section = None;
    let mut saw_object = false;
    // first line each section appeared on, for cross-field errors
    let mut opened: HashMap<Section, usize> = HashMap::new();

    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                return err(Some(line), format!("malformed section header '{content}'"));
            };
            let Some(s) = Section::parse(name.trim()) else {
                return err(Some(line), format!("unknown section [{}]", name.trim()));
            };
            if s == Section::Object {
                if !saw_object {
                    cfg.objects.clear();
                    saw_object = true;
                }
                cfg.objects.push(ObjectTrajectory::default());
            }
            opened.entry(s).or_insert(line);
            section = Some(s);
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return err(Some(line), format!("expected 'key = value', got '{content}'"));
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(s) = section else {
            return err(Some(line), format!("key '{key}' appears before any section"));
        };
        set(&mut cfg, s, key, value, line)?;
    }

    let at = |s: Section| opened.get(&s).copied();
    cfg.array.check().or_else(|e| err(at(Section::Array), e.to_string()))?;
    cfg.neurons.check().or_else(|e| err(at(Section::Neurons), e.to_string()))?;
    let d = &cfg.delays;
    if d.velocity_min >= d.velocity_max {
        return err(
            at(Section::Delays),
            format!("velocity_min {} must be below velocity_max {}", d.velocity_min, d.velocity_max),
        );
    }
    if !(d.velocity_min..=d.velocity_max).contains(&d.design_velocity) {
        return err(
            at(Section::Delays),
            format!("design_velocity {} lies outside the velocity envelope", d.design_velocity),
        );
    }
    cfg.analysis.check().or_else(|e| err(at(Section::Analysis), e.to_string()))?;
    cfg.sim_config().check().or_else(|e| err(at(Section::Engine), e.to_string()))?;
    if cfg.engine.dense_dt >= cfg.plan().short_delay.min(cfg.plan().excitatory_delay).min(cfg.plan().inhibitory_delay) {
        return err(at(Section::Engine), "dense_dt must be below every connection delay");
    }
    cfg.scenario().check().or_else(|e| err(at(Section::Object).or(at(Section::Engine)), e.to_string()))?;
    velocity_grid(cfg.sweep.v_start, cfg.sweep.v_stop, cfg.sweep.v_step)
        .or_else(|e| err(at(Section::Sweep), e.to_string()))?;
    if cfg.sweep.v_start <= 0.0 && cfg.sweep.v_stop >= 0.0 {
        return err(at(Section::Sweep), "sweep grid must not include zero velocity");
    }
    cfg.circuit().or_else(|e| err(at(Section::Array).or(at(Section::Engine)), e.to_string()))?;
    Ok(cfg)
}
