//! Detector circuits as explicit neuron/connection graphs.
//!
//! Two families are supported: the bi-directional detector (one simple
//! stage with paired excitatory/inhibitory sensor taps, one combined
//! coincidence stage per direction) and the three-level single-direction
//! prototype, optionally mounted as a pair to cover both directions.
//!
//! Sensor neurons always take ids `0..n_sensors`, left to right. Detector
//! neurons follow in construction order.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::{self, Write as _};

use thiserror::Error;

pub type NeuronId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NeuronKind {
    Sensor,
    Simple,
    Combined,
    /// Relay stage of the prototype detector.
    Relay,
}

impl NeuronKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NeuronKind::Sensor => "sensor",
            NeuronKind::Simple => "simple",
            NeuronKind::Combined => "combined",
            NeuronKind::Relay => "relay",
        }
    }
}

impl fmt::Display for NeuronKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which direction-selective half of a circuit a neuron belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Subcircuit {
    LeftToRight,
    RightToLeft,
    /// Sensors, shared by both halves.
    Shared,
}

impl Subcircuit {
    pub fn as_str(self) -> &'static str {
        match self {
            Subcircuit::LeftToRight => "l2r",
            Subcircuit::RightToLeft => "r2l",
            Subcircuit::Shared => "none",
        }
    }
}

impl fmt::Display for Subcircuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CircuitFamily {
    Bidirectional,
    PrototypeLeftToRight,
    PrototypeRightToLeft,
    PrototypePair,
}

impl CircuitFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            CircuitFamily::Bidirectional => "bidirectional",
            CircuitFamily::PrototypeLeftToRight => "prototype_l2r",
            CircuitFamily::PrototypeRightToLeft => "prototype_r2l",
            CircuitFamily::PrototypePair => "prototype_pair",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "bidirectional" => Some(CircuitFamily::Bidirectional),
            "prototype_l2r" => Some(CircuitFamily::PrototypeLeftToRight),
            "prototype_r2l" => Some(CircuitFamily::PrototypeRightToLeft),
            "prototype_pair" => Some(CircuitFamily::PrototypePair),
            _ => None,
        }
    }
}

impl fmt::Display for CircuitFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Leaky integrate-and-fire parameters (seconds, dimensionless threshold).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronParams {
    pub tau: f64,
    pub theta: f64,
    pub t_ref: f64,
}

impl NeuronParams {
    pub const fn new(tau: f64, theta: f64, t_ref: f64) -> Self {
        NeuronParams { tau, theta, t_ref }
    }

    fn check(&self, what: &str) -> Result<(), CircuitError> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(invalid(format!("{what}: tau must be > 0, got {}", self.tau)));
        }
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(invalid(format!("{what}: theta must be > 0, got {}", self.theta)));
        }
        if !(self.t_ref >= 0.0 && self.t_ref.is_finite()) {
            return Err(invalid(format!("{what}: t_ref must be >= 0, got {}", self.t_ref)));
        }
        Ok(())
    }
}

/// Per-kind neuron parameters plus the two synaptic weight magnitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitParams {
    pub sensor: NeuronParams,
    pub simple: NeuronParams,
    pub combined: NeuronParams,
    pub relay: NeuronParams,
    /// Magnitude of every excitatory connection.
    pub w_exc: f64,
    /// Magnitude of every inhibitory connection (applied with negative sign).
    pub w_inh: f64,
}

impl Default for CircuitParams {
    fn default() -> Self {
        CircuitParams {
            sensor: NeuronParams::new(1.0, 1.0, 0.05),
            simple: NeuronParams::new(1.0, 1.0, 0.3),
            combined: NeuronParams::new(0.05, 1.8, 0.3),
            relay: NeuronParams::new(0.05, 1.0, 0.3),
            w_exc: 1.0,
            w_inh: 2.0,
        }
    }
}

impl CircuitParams {
    pub fn check(&self) -> Result<(), CircuitError> {
        self.sensor.check("sensor")?;
        self.simple.check("simple")?;
        self.combined.check("combined")?;
        self.relay.check("relay")?;
        if !(self.w_exc > 0.0 && self.w_exc.is_finite()) {
            return Err(invalid(format!("w_exc must be > 0, got {}", self.w_exc)));
        }
        if !(self.w_inh >= 0.0 && self.w_inh.is_finite()) {
            return Err(invalid(format!("w_inh must be >= 0, got {}", self.w_inh)));
        }
        Ok(())
    }

    pub fn for_kind(&self, kind: NeuronKind) -> NeuronParams {
        match kind {
            NeuronKind::Sensor => self.sensor,
            NeuronKind::Simple => self.simple,
            NeuronKind::Combined => self.combined,
            NeuronKind::Relay => self.relay,
        }
    }

    /// Coincidence window of a combined neuron fed by two `w_exc` inputs.
    pub fn coincidence_window(&self) -> Option<f64> {
        coincidence_window(self.w_exc, self.combined.theta, self.combined.tau)
    }
}

/// Largest arrival-time difference at which two pulses of weight `w` still
/// drive a resting leaky neuron with threshold `theta` over threshold.
///
/// Defined only for `w < theta <= 2w`: below that range one input fires the
/// neuron alone, above it two inputs never suffice.
pub fn coincidence_window(w: f64, theta: f64, tau: f64) -> Option<f64> {
    if w > 0.0 && w < theta && theta <= 2.0 * w && tau > 0.0 {
        Some(tau * (w / (theta - w)).ln())
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronSpec {
    pub id: NeuronId,
    pub kind: NeuronKind,
    pub subcircuit: Subcircuit,
    pub index: usize,
    pub params: NeuronParams,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectionSpec {
    pub src: NeuronId,
    pub dst: NeuronId,
    /// Positive is excitatory, negative inhibitory.
    pub weight: f64,
    pub delay: f64,
}

impl ConnectionSpec {
    pub fn is_inhibitory(&self) -> bool {
        self.weight < 0.0
    }
}

/// Tuned connection latencies. The long branch always exceeds the short
/// branch by exactly the sensor-to-sensor travel time at design velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayPlan {
    /// Sensor to simple (or relay) excitatory latency.
    pub excitatory_delay: f64,
    /// Sensor to simple inhibitory latency.
    pub inhibitory_delay: f64,
    /// Simple to combined latency on the short branch.
    pub short_delay: f64,
    /// Simple to combined latency on the long branch.
    pub long_delay: f64,
    /// Centre-to-centre sensor spacing (m).
    pub spacing: f64,
    /// Object speed the plan is tuned for (m/s).
    pub design_velocity: f64,
}

impl DelayPlan {
    /// Sensor-to-sensor travel time at design velocity.
    pub fn transit_time(&self) -> f64 {
        self.spacing / self.design_velocity
    }

    /// Speeds `v` with `|spacing / v - transit_time| <= window`. The upper
    /// end is infinite when the window covers the whole transit time.
    pub fn velocity_band(&self, window: f64) -> (f64, f64) {
        let t = self.transit_time();
        let hi = if t > window { self.spacing / (t - window) } else { f64::INFINITY };
        (self.spacing / (t + window), hi)
    }
}

impl Default for DelayPlan {
    fn default() -> Self {
        tune_delays(0.1, 0.5, 0.01, 0.05, 0.05).expect("default plan is valid")
    }
}

/// Builds a plan satisfying `long - short = spacing / design_velocity`.
pub fn tune_delays(
    spacing: f64,
    design_velocity: f64,
    short_delay: f64,
    excitatory_delay: f64,
    inhibitory_delay: f64,
) -> Result<DelayPlan, CircuitError> {
    for (name, value) in [
        ("spacing", spacing),
        ("design_velocity", design_velocity),
        ("short_delay", short_delay),
        ("excitatory_delay", excitatory_delay),
        ("inhibitory_delay", inhibitory_delay),
    ] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(invalid(format!("{name} must be > 0, got {value}")));
        }
    }
    Ok(DelayPlan {
        excitatory_delay,
        inhibitory_delay,
        short_delay,
        long_delay: short_delay + spacing / design_velocity,
        spacing,
        design_velocity,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitSpec {
    pub neurons: Vec<NeuronSpec>,
    pub connections: Vec<ConnectionSpec>,
    pub n_sensors: usize,
    pub plan: DelayPlan,
    pub family: CircuitFamily,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeuronCount {
    pub sensors: usize,
    pub detector_neurons: usize,
    pub by_kind: BTreeMap<NeuronKind, usize>,
}

fn invalid(msg: impl Into<String>) -> CircuitError {
    CircuitError::InvalidParameter(msg.into())
}

struct Builder {
    neurons: Vec<NeuronSpec>,
    connections: Vec<ConnectionSpec>,
    params: CircuitParams,
}

impl Builder {
    fn new(n_sensors: usize, params: CircuitParams) -> Self {
        let neurons = (0..n_sensors)
            .map(|i| NeuronSpec {
                id: i,
                kind: NeuronKind::Sensor,
                subcircuit: Subcircuit::Shared,
                index: i,
                params: params.sensor,
            })
            .collect();
        Builder { neurons, connections: Vec::new(), params }
    }

    fn add(&mut self, kind: NeuronKind, subcircuit: Subcircuit, index: usize) -> NeuronId {
        let id = self.neurons.len();
        self.neurons.push(NeuronSpec { id, kind, subcircuit, index, params: self.params.for_kind(kind) });
        id
    }

    fn excite(&mut self, src: NeuronId, dst: NeuronId, delay: f64) {
        let weight = self.params.w_exc;
        self.connections.push(ConnectionSpec { src, dst, weight, delay });
    }

    fn inhibit(&mut self, src: NeuronId, dst: NeuronId, delay: f64) {
        if self.params.w_inh == 0.0 {
            return;
        }
        let weight = -self.params.w_inh;
        self.connections.push(ConnectionSpec { src, dst, weight, delay });
    }

    fn finish(mut self, n_sensors: usize, plan: DelayPlan, family: CircuitFamily) -> CircuitSpec {
        self.connections.sort_by_key(|c| (c.src, c.dst));
        CircuitSpec { neurons: self.neurons, connections: self.connections, n_sensors, plan, family }
    }
}

fn check_plan(plan: &DelayPlan) -> Result<(), CircuitError> {
    let rebuilt = tune_delays(
        plan.spacing,
        plan.design_velocity,
        plan.short_delay,
        plan.excitatory_delay,
        plan.inhibitory_delay,
    )?;
    if plan.long_delay.is_nan()
        || plan.long_delay <= 0.0
        || !approx_eq(plan.long_delay - plan.short_delay, rebuilt.transit_time())
    {
        return Err(invalid(format!(
            "long_delay - short_delay = {} but spacing / design_velocity = {}",
            plan.long_delay - plan.short_delay,
            rebuilt.transit_time()
        )));
    }
    Ok(())
}

fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Bi-directional detector over `n_sensors` sensors.
///
/// Left-to-right half: simple `p_i` is excited by sensor `i` and inhibited by
/// sensor `i + 1`; combined `c_i` takes `p_i` over the long branch and
/// `p_{i+1}` over the short one. The right-to-left half is the mirror image.
pub fn build_bidirectional(
    n_sensors: usize,
    plan: DelayPlan,
    params: CircuitParams,
) -> Result<CircuitSpec, CircuitError> {
    if n_sensors < 3 {
        return Err(invalid(format!("bidirectional detector needs >= 3 sensors, got {n_sensors}")));
    }
    check_plan(&plan)?;
    params.check()?;
    let mut b = Builder::new(n_sensors, params);

    for sub in [Subcircuit::LeftToRight, Subcircuit::RightToLeft] {
        let simple: Vec<NeuronId> = (0..n_sensors - 1).map(|i| b.add(NeuronKind::Simple, sub, i)).collect();
        let combined: Vec<NeuronId> = (0..n_sensors - 2).map(|i| b.add(NeuronKind::Combined, sub, i)).collect();
        for (i, &p) in simple.iter().enumerate() {
            let (exc, inh) = match sub {
                Subcircuit::LeftToRight => (i, i + 1),
                _ => (i + 1, i),
            };
            b.excite(exc, p, plan.excitatory_delay);
            b.inhibit(inh, p, plan.inhibitory_delay);
        }
        for (i, &c) in combined.iter().enumerate() {
            let (long, short) = match sub {
                Subcircuit::LeftToRight => (simple[i], simple[i + 1]),
                _ => (simple[i + 1], simple[i]),
            };
            b.excite(long, c, plan.long_delay);
            b.excite(short, c, plan.short_delay);
        }
    }
    Ok(b.finish(n_sensors, plan, CircuitFamily::Bidirectional))
}

fn add_prototype(b: &mut Builder, n_sensors: usize, plan: &DelayPlan, sub: Subcircuit) {
    let relays: Vec<NeuronId> = (0..n_sensors - 1).map(|i| b.add(NeuronKind::Relay, sub, i)).collect();
    let combined: Vec<NeuronId> = (0..n_sensors - 1).map(|i| b.add(NeuronKind::Combined, sub, i)).collect();
    let direct_delay = plan.excitatory_delay + plan.transit_time() + plan.short_delay;
    for i in 0..n_sensors - 1 {
        // The relay listens to the sensor seen second; the sensor seen first
        // reaches the coincidence unit over one long connection.
        let (first, second) = match sub {
            Subcircuit::LeftToRight => (i, i + 1),
            _ => (i + 1, i),
        };
        b.excite(second, relays[i], plan.excitatory_delay);
        b.excite(relays[i], combined[i], plan.short_delay);
        b.excite(first, combined[i], direct_delay);
    }
}

/// Single-direction three-level prototype (sensor, relay, coincidence).
pub fn build_prototype(
    n_sensors: usize,
    direction: Subcircuit,
    plan: DelayPlan,
    params: CircuitParams,
) -> Result<CircuitSpec, CircuitError> {
    if n_sensors < 2 {
        return Err(invalid(format!("prototype detector needs >= 2 sensors, got {n_sensors}")));
    }
    let family = match direction {
        Subcircuit::LeftToRight => CircuitFamily::PrototypeLeftToRight,
        Subcircuit::RightToLeft => CircuitFamily::PrototypeRightToLeft,
        Subcircuit::Shared => return Err(invalid("prototype direction must be l2r or r2l")),
    };
    check_plan(&plan)?;
    params.check()?;
    let mut b = Builder::new(n_sensors, params);
    add_prototype(&mut b, n_sensors, &plan, direction);
    Ok(b.finish(n_sensors, plan, family))
}

/// Both prototype directions mounted on one shared sensor row.
pub fn build_prototype_pair(
    n_sensors: usize,
    plan: DelayPlan,
    params: CircuitParams,
) -> Result<CircuitSpec, CircuitError> {
    if n_sensors < 2 {
        return Err(invalid(format!("prototype detector needs >= 2 sensors, got {n_sensors}")));
    }
    check_plan(&plan)?;
    params.check()?;
    let mut b = Builder::new(n_sensors, params);
    add_prototype(&mut b, n_sensors, &plan, Subcircuit::LeftToRight);
    add_prototype(&mut b, n_sensors, &plan, Subcircuit::RightToLeft);
    Ok(b.finish(n_sensors, plan, CircuitFamily::PrototypePair))
}

pub fn build(
    family: CircuitFamily,
    n_sensors: usize,
    plan: DelayPlan,
    params: CircuitParams,
) -> Result<CircuitSpec, CircuitError> {
    match family {
        CircuitFamily::Bidirectional => build_bidirectional(n_sensors, plan, params),
        CircuitFamily::PrototypeLeftToRight => build_prototype(n_sensors, Subcircuit::LeftToRight, plan, params),
        CircuitFamily::PrototypeRightToLeft => build_prototype(n_sensors, Subcircuit::RightToLeft, plan, params),
        CircuitFamily::PrototypePair => build_prototype_pair(n_sensors, plan, params),
    }
}

/// Sensors are excluded from the detector count.
pub fn neuron_count(circuit: &CircuitSpec) -> NeuronCount {
    let mut by_kind = BTreeMap::new();
    for n in &circuit.neurons {
        *by_kind.entry(n.kind).or_insert(0) += 1;
    }
    let sensors = by_kind.get(&NeuronKind::Sensor).copied().unwrap_or(0);
    NeuronCount { sensors, detector_neurons: circuit.neurons.len() - sensors, by_kind }
}

/// A failed validation condition.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Graph or parameter malformation.
    Structural(String),
    /// A simple neuron is not silenced when its inhibitory sensor fires first.
    Blocking { neuron: NeuronId, residual: f64, theta: f64 },
    /// Wrong-direction input pairs could land inside the coincidence window.
    CoincidenceSeparation { neuron: NeuronId, window: Option<f64>, min_gap: f64 },
    /// Delay plan or wired delays break the tuning relation.
    DelayPlan(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Structural(msg) => write!(f, "structural: {msg}"),
            Violation::Blocking { neuron, residual, theta } => {
                write!(f, "blocking: simple neuron {neuron} reaches {residual} >= theta {theta} in the wrong direction")
            }
            Violation::CoincidenceSeparation { neuron, window: Some(w), min_gap } => {
                write!(f, "coincidence: combined neuron {neuron} window {w} is not below wrong-direction gap {min_gap}")
            }
            Violation::CoincidenceSeparation { neuron, window: None, .. } => write!(
                f,
                "coincidence: combined neuron {neuron} has no finite coincidence window (need w < theta <= 2w)"
            ),
            Violation::DelayPlan(msg) => write!(f, "delay plan: {msg}"),
        }
    }
}

impl CircuitSpec {
    pub fn neuron(&self, id: NeuronId) -> Option<&NeuronSpec> {
        // ids are dense for every built circuit; fall back to a scan otherwise
        match self.neurons.get(id) {
            Some(n) if n.id == id => Some(n),
            _ => self.neurons.iter().find(|n| n.id == id),
        }
    }

    pub fn incoming(&self, id: NeuronId) -> impl Iterator<Item = &ConnectionSpec> {
        self.connections.iter().filter(move |c| c.dst == id)
    }

    pub fn sensor_id(&self, index: usize) -> Option<NeuronId> {
        self.neurons.iter().find(|n| n.kind == NeuronKind::Sensor && n.index == index).map(|n| n.id)
    }

    pub fn detector_ids(&self) -> impl Iterator<Item = NeuronId> + '_ {
        self.neurons.iter().filter(|n| n.kind != NeuronKind::Sensor).map(|n| n.id)
    }

    pub fn min_delay(&self) -> Option<f64> {
        self.connections.iter().map(|c| c.delay).min_by(f64::total_cmp)
    }

    /// Structural problems only; empty for every well-formed graph.
    pub fn structural_problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut ids = BTreeSet::new();
        for n in &self.neurons {
            if !ids.insert(n.id) {
                out.push(format!("duplicate neuron id {}", n.id));
            }
            if n.kind == NeuronKind::Sensor && n.subcircuit != Subcircuit::Shared {
                out.push(format!("sensor {} is assigned to a subcircuit", n.id));
            }
            if let Err(CircuitError::InvalidParameter(msg)) = n.params.check(&format!("neuron {}", n.id)) {
                out.push(msg);
            }
        }
        let mut sensor_indices: Vec<usize> =
            self.neurons.iter().filter(|n| n.kind == NeuronKind::Sensor).map(|n| n.index).collect();
        sensor_indices.sort_unstable();
        if sensor_indices != (0..self.n_sensors).collect::<Vec<_>>() {
            out.push(format!("sensors are not indexed 0..{}", self.n_sensors));
        }

        let kind_of: HashMap<NeuronId, NeuronKind> = self.neurons.iter().map(|n| (n.id, n.kind)).collect();
        let mut pairs = BTreeSet::new();
        for c in &self.connections {
            for end in [c.src, c.dst] {
                if !kind_of.contains_key(&end) {
                    out.push(format!("connection {}->{} references missing neuron {end}", c.src, c.dst));
                }
            }
            if kind_of.get(&c.dst) == Some(&NeuronKind::Sensor) {
                out.push(format!("sensor {} has an incoming connection from {}", c.dst, c.src));
            }
            if c.weight == 0.0 || !c.weight.is_finite() {
                out.push(format!("connection {}->{} has weight {}", c.src, c.dst, c.weight));
            }
            if !(c.delay >= 0.0 && c.delay.is_finite()) {
                out.push(format!("connection {}->{} has delay {}", c.src, c.dst, c.delay));
            }
            if !pairs.insert((c.src, c.dst)) {
                out.push(format!("duplicate connection {}->{}", c.src, c.dst));
            }
        }
        if self.has_detector_cycle(&kind_of) {
            out.push("detector graph contains a cycle".to_string());
        }
        out
    }

    fn has_detector_cycle(&self, kind_of: &HashMap<NeuronId, NeuronKind>) -> bool {
        let is_detector = |id: &NeuronId| matches!(kind_of.get(id), Some(k) if *k != NeuronKind::Sensor);
        let mut indegree: HashMap<NeuronId, usize> =
            kind_of.keys().filter(|id| is_detector(id)).map(|&id| (id, 0)).collect();
        let mut edges: HashMap<NeuronId, Vec<NeuronId>> = HashMap::new();
        for c in self.connections.iter().filter(|c| is_detector(&c.src) && is_detector(&c.dst)) {
            *indegree.get_mut(&c.dst).expect("detector") += 1;
            edges.entry(c.src).or_default().push(c.dst);
        }
        let mut queue: VecDeque<NeuronId> = indegree.iter().filter(|(_, &d)| d == 0).map(|(&id, _)| id).collect();
        let mut seen = 0;
        while let Some(id) = queue.pop_front() {
            seen += 1;
            for &next in edges.get(&id).into_iter().flatten() {
                let d = indegree.get_mut(&next).expect("detector");
                *d -= 1;
                if *d == 0 {
                    queue.push_back(next);
                }
            }
        }
        seen != indegree.len()
    }

    /// Deterministic text netlist, one line per neuron then per connection.
    pub fn netlist(&self) -> String {
        let mut neurons = self.neurons.clone();
        neurons.sort_by_key(|n| n.id);
        let mut connections = self.connections.clone();
        connections.sort_by_key(|c| (c.src, c.dst));
        let mut out = String::new();
        for n in &neurons {
            let _ = writeln!(
                out,
                "N {} {} {} {} {} {} {}",
                n.id, n.kind, n.subcircuit, n.index, n.params.tau, n.params.theta, n.params.t_ref
            );
        }
        for c in &connections {
            let _ = writeln!(out, "C {} {} {} {}", c.src, c.dst, c.weight, c.delay);
        }
        out
    }

    /// Sensor index and accumulated latency of the excitatory sensor path
    /// feeding `id`. Every detector neuron in both families has exactly one.
    fn sensor_path(&self, id: NeuronId) -> Option<(usize, f64)> {
        let n = self.neuron(id)?;
        if n.kind == NeuronKind::Sensor {
            return Some((n.index, 0.0));
        }
        let mut exc = self.incoming(id).filter(|c| !c.is_inhibitory());
        let c = exc.next()?;
        if exc.next().is_some() {
            return None;
        }
        let (sensor, latency) = self.sensor_path(c.src)?;
        Some((sensor, latency + c.delay))
    }
}

/// Checks structure, wrong-direction blocking, coincidence separation, and
/// delay tuning over the velocity envelope `[v_min, v_max]`.
pub fn validate(circuit: &CircuitSpec, v_min: f64, v_max: f64) -> Result<Vec<Violation>, CircuitError> {
    let plan = &circuit.plan;
    if !(v_min > 0.0 && v_min.is_finite() && v_max.is_finite()) {
        return Err(invalid(format!("velocity envelope must be positive, got [{v_min}, {v_max}]")));
    }
    if !(v_min <= plan.design_velocity && plan.design_velocity <= v_max) {
        return Err(invalid(format!("design velocity {} outside envelope [{v_min}, {v_max}]", plan.design_velocity)));
    }

    let mut out: Vec<Violation> = circuit.structural_problems().into_iter().map(Violation::Structural).collect();
    if !out.is_empty() {
        return Ok(out);
    }

    if let Err(CircuitError::InvalidParameter(msg)) = check_plan(plan) {
        out.push(Violation::DelayPlan(msg));
    }
    if plan.inhibitory_delay.is_nan() || plan.inhibitory_delay < 0.0 {
        out.push(Violation::DelayPlan(format!("inhibitory delay {} < 0", plan.inhibitory_delay)));
    }

    let spacing = plan.spacing;
    for n in &circuit.neurons {
        match n.kind {
            NeuronKind::Simple => out.extend(check_blocking(circuit, n, spacing / v_min)),
            NeuronKind::Combined => {
                let inputs: Vec<&ConnectionSpec> = circuit.incoming(n.id).collect();
                if inputs.len() != 2 || inputs.iter().any(|c| c.is_inhibitory()) {
                    out.push(Violation::Structural(format!(
                        "combined neuron {} needs exactly two excitatory inputs",
                        n.id
                    )));
                    continue;
                }
                let window = if inputs[0].weight == inputs[1].weight {
                    coincidence_window(inputs[0].weight, n.params.theta, n.params.tau)
                } else {
                    None
                };
                let min_gap = 2.0 * spacing / v_max;
                if !matches!(window, Some(eps) if eps < min_gap) {
                    out.push(Violation::CoincidenceSeparation { neuron: n.id, window, min_gap });
                }
                match (circuit.sensor_path(inputs[0].src), circuit.sensor_path(inputs[1].src)) {
                    (Some((s0, l0)), Some((s1, l1))) => {
                        let l0 = l0 + inputs[0].delay;
                        let l1 = l1 + inputs[1].delay;
                        if s0.abs_diff(s1) != 1 {
                            out.push(Violation::Structural(format!(
                                "combined neuron {} is not fed by adjacent sensors",
                                n.id
                            )));
                        } else if !approx_eq((l0 - l1).abs(), plan.transit_time()) {
                            out.push(Violation::DelayPlan(format!(
                                "combined neuron {} input paths differ by {} instead of {}",
                                n.id,
                                (l0 - l1).abs(),
                                plan.transit_time()
                            )));
                        }
                    }
                    _ => out.push(Violation::Structural(format!(
                        "combined neuron {} inputs have no unique sensor path",
                        n.id
                    ))),
                }
            }
            _ => {}
        }
    }
    Ok(out)
}

/// Wrong-direction residual of one simple neuron. The inhibitory sensor
/// fires `transit` seconds before the excitatory one; the residual grows with
/// `transit`, so the slowest envelope velocity is the binding case.
fn check_blocking(circuit: &CircuitSpec, n: &NeuronSpec, transit: f64) -> Option<Violation> {
    let exc: Vec<&ConnectionSpec> = circuit.incoming(n.id).filter(|c| !c.is_inhibitory()).collect();
    let inh: Vec<&ConnectionSpec> = circuit.incoming(n.id).filter(|c| c.is_inhibitory()).collect();
    let theta = n.params.theta;
    if exc.len() == 1 && inh.is_empty() {
        return Some(Violation::Blocking { neuron: n.id, residual: exc[0].weight, theta });
    }
    if exc.len() != 1 || inh.len() != 1 {
        return Some(Violation::Structural(format!(
            "simple neuron {} needs one excitatory and one inhibitory input",
            n.id
        )));
    }
    let (exc, inh) = (exc[0], inh[0]);
    if exc.weight < theta {
        return Some(Violation::Blocking { neuron: n.id, residual: exc.weight, theta });
    }
    let lead = transit + exc.delay - inh.delay;
    let residual = if lead < 0.0 {
        // inhibition lands after the excitation it should block
        exc.weight
    } else {
        exc.weight + inh.weight * (-lead / n.params.tau).exp()
    };
    (residual >= theta).then_some(Violation::Blocking { neuron: n.id, residual, theta })
}
