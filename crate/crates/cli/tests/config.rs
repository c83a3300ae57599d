use approx::assert_relative_eq;
use bimotion::circuit::CircuitFamily;
use bimotion_cli::{parse_config, RunConfig};

fn line_of(text: &str) -> Option<usize> {
    parse_config(text).unwrap_err().line
}

#[test]
fn empty_file_gives_defaults() {
    let cfg = parse_config("").unwrap();
    assert_eq!(cfg, RunConfig::default());
    assert_eq!(cfg.objects.len(), 1);
    assert_eq!(cfg.engine.family, CircuitFamily::Bidirectional);
}

#[test]
fn zero_velocity_is_rejected_on_its_line() {
    assert_eq!(line_of("[object]\nvelocity = 0"), Some(2));
}

#[test]
fn spacing_is_inherited_by_the_delay_plan() {
    let cfg = parse_config("[delays]\ndesign_velocity = 0.5\n").unwrap();
    let plan = cfg.plan();
    assert_relative_eq!(plan.long_delay, plan.short_delay + 0.2, max_relative = 1e-12);

    let cfg = parse_config("[array]\nspacing = 0.2\n[delays]\ndesign_velocity = 0.5\nshort_delay = 0.02\n").unwrap();
    assert_relative_eq!(cfg.plan().long_delay, 0.42, max_relative = 1e-12);
}

#[test]
fn unknown_keys_and_sections() {
    assert_eq!(line_of("# header\n[array]\n\nspacing = 0.1\nspcing = 0.1\n"), Some(5));
    assert_eq!(line_of("[arrays]\n"), Some(1));
    assert_eq!(line_of("spacing = 0.1\n"), Some(1));
    assert_eq!(line_of("[array]\nspacing\n"), Some(2));
    assert_eq!(line_of("[array\n"), Some(1));
}

#[test]
fn non_numeric_values() {
    assert_eq!(line_of("[delays]\nshort_delay = fast\n"), Some(2));
    assert_eq!(line_of("[array]\nn_sensors = 4.5\n"), Some(2));
    assert_eq!(line_of("[analysis]\nkappa = nan\n"), Some(2));
    assert_eq!(line_of("[engine]\nfamily = reichardt\n"), Some(2));
}

#[test]
fn local_invariants_name_the_key_line() {
    assert_eq!(line_of("[analysis]\nt_epi = 0.1\nkappa = 0\n"), Some(3));
    assert_eq!(line_of("[array]\nhysteresis = 1.5\n"), Some(2));
    assert_eq!(line_of("[neurons]\ncombined_tau = -1\n"), Some(2));
    assert_eq!(line_of("[object]\nt_start = -1\n"), Some(2));
}

#[test]
fn cross_field_invariants_name_the_section() {
    // threshold above amplitude
    assert_eq!(line_of("\n[array]\nsensor_threshold = 2\n"), Some(2));
    // envelope excludes the design speed
    assert_eq!(line_of("[delays]\nvelocity_min = 0.6\n"), Some(1));
    // bidirectional wiring needs three sensors
    assert_eq!(line_of("[array]\nn_sensors = 2\n"), Some(1));
    assert!(parse_config("[array]\nn_sensors = 2\n[engine]\nfamily = prototype_pair\n").is_ok());
    assert_eq!(line_of("[sweep]\nv_start = -0.5\nv_stop = 0.5\n"), Some(1));
    assert_eq!(line_of("[engine]\ndense_dt = 0.05\n"), Some(1));
}

#[test]
fn repeated_objects_and_comments() {
    let text = "\
# two objects
[object]
x0 = -0.5   # left of the row
velocity = 0.5
[engine]
t_end = 4
[object]
x0 = 0.9
velocity = -0.5
t_start = 0.1
";
    let cfg = parse_config(text).unwrap();
    assert_eq!(cfg.objects.len(), 2);
    assert_eq!(cfg.objects[0].velocity, 0.5);
    assert_eq!(cfg.objects[1].x0, 0.9);
    assert_eq!(cfg.objects[1].t_start, 0.1);
    assert_eq!(cfg.engine.t_end, 4.0);
    assert_eq!(cfg.scenario().objects.len(), 2);
}

#[test]
fn every_documented_key_parses() {
    let text = "\
[array]
n_sensors = 6
spacing = 0.12
sigma = 0.03
amplitude = 1.5
sensor_threshold = 0.6
hysteresis = 0.4
lateral_sigma = 0.25
[neurons]
w_exc = 1
w_inh = 2.5
sensor_tau = 1
sensor_theta = 1
sensor_t_ref = 0.04
simple_tau = 0.9
simple_theta = 1
simple_t_ref = 0.3
combined_tau = 0.05
combined_theta = 1.8
combined_t_ref = 0.3
relay_tau = 0.05
relay_theta = 1
relay_t_ref = 0.3
[delays]
design_velocity = 0.6
short_delay = 0.01
excitatory_delay = 0.04
inhibitory_delay = 0.03
velocity_min = 0.2
velocity_max = 1.5
[analysis]
kappa = 0.4
t_epi = 0.2
theta_active = 0.3
[engine]
t_end = 5
dt_sample = 0.002
dense_dt = 0.0002
family = prototype_pair
[sweep]
v_start = 0.5
v_stop = 0.7
v_step = 0.01
[object]
x0 = -0.3
velocity = 0.6
t_start = 0.5
distance = 0.05
";
    let cfg = parse_config(text).unwrap();
    assert_eq!(cfg.array.n_sensors, 6);
    assert_eq!(cfg.neurons.w_inh, 2.5);
    assert_eq!(cfg.neurons.simple.tau, 0.9);
    assert_eq!(cfg.delays.inhibitory_delay, 0.03);
    assert_eq!(cfg.analysis.theta_active, 0.3);
    assert_eq!(cfg.engine.family, CircuitFamily::PrototypePair);
    assert_eq!(cfg.sweep.v_step, 0.01);
    assert_eq!(cfg.objects[0].distance, 0.05);
    assert_relative_eq!(cfg.plan().long_delay, 0.01 + 0.12 / 0.6, max_relative = 1e-12);
}
