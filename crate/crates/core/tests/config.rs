use elasto_core::config::{parse_grid, Config, GridConfig, SCHEMA_VERSION};
use elasto_core::dynamics::scenarios::Scenario;
use elasto_core::Error;

fn errors(text: &str) -> Vec<String> {
    match Config::parse(text) {
        Err(Error::ConfigInvalid(errs)) => errs,
        other => panic!("expected ConfigInvalid, got {other:?}"),
    }
}

#[test]
fn minimal_config_uses_defaults() {
    let cfg = Config::parse("schema = 1\nscenario = \"eps-mode\"\n").unwrap();
    assert_eq!(cfg.schema, SCHEMA_VERSION);
    assert_eq!(cfg.scenario, Scenario::EpsMode);
    assert_eq!(cfg.grid, GridConfig::default());
    assert_eq!(cfg.physics.c0, 0.1);
    assert_eq!(cfg.time.dt, None);
    assert!(cfg.run.reproject);
    assert!(cfg.gamma1.is_none());
}

#[test]
fn full_config_parses() {
    let text = r#"
schema = 1
scenario = "mixed-regions"

[grid]
n1 = 16
n2 = 8
nz = 12

[physics]
eps = 0.01
c0 = 0.05
s = 5

[initial]
amplitude = 2e-3
mode = 2

[time]
dt = 0.005
t_end = 0.02
output_every = 2
snapshot_every = 4

[run]
monitor = true
reproject = false
seed = 7

[[gamma1]]
x1 = [-0.5, 0.5]
x2 = [0.0, 6.283185307179586]
"#;
    let cfg = Config::parse(text).unwrap();
    assert_eq!((cfg.grid.n1, cfg.grid.n2, cfg.grid.nz), (16, 8, 12));
    assert_eq!(cfg.physics.s, 5);
    assert_eq!(cfg.time.dt, Some(0.005));
    assert_eq!(cfg.run.seed, 7);
    let spec = cfg.scenario_spec();
    assert_eq!(spec.amplitude, 2e-3);
    assert_eq!(spec.mode, 2);
    let params = cfg.params();
    assert_eq!(params.gamma1.rects.len(), 1);
    assert!(!params.reproject);
    assert_eq!(params.c0, 0.05);
}

#[test]
fn round_trips_through_toml() {
    let mut cfg = Config::preset(Scenario::MixedRegions);
    cfg.time.dt = Some(0.01);
    cfg.initial.flow = Some(0.2);
    let back = Config::parse(&cfg.to_toml()).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn unknown_keys_are_rejected_with_location() {
    let errs = errors("schema = 1\nscenario = \"rest\"\n[grid]\nn1 = 8\nn4 = 3\n");
    assert_eq!(errs.len(), 1);
    assert!(errs[0].contains("line 5"), "{errs:?}");
    assert!(errs[0].contains("n4"), "{errs:?}");

    let errs = errors("schema = 1\nscenario = \"rest\"\nbogus = true\n");
    assert!(errs[0].contains("bogus"), "{errs:?}");
}

#[test]
fn unknown_scenario_is_rejected() {
    let errs = errors("schema = 1\nscenario = \"turbulent\"\n");
    assert!(errs[0].contains("turbulent"), "{errs:?}");
}

#[test]
fn every_invalid_field_is_reported() {
    let text = r#"
schema = 2
scenario = "rest"
[grid]
n1 = 7
n2 = 2
nz = 3
[physics]
eps = -1.0
c0 = 1.5
s = 2
[time]
dt = 0.0
output_every = 0
"#;
    let errs = errors(text);
    for field in [
        "schema",
        "grid.n1",
        "grid.n2",
        "grid.nz",
        "physics.eps",
        "physics.c0",
        "physics.s",
        "time.dt",
        "time.output_every",
    ] {
        assert!(
            errs.iter().any(|e| e.starts_with(field)),
            "missing {field} in {errs:?}"
        );
    }
}

#[test]
fn amplitude_must_respect_the_ceiling() {
    let errs = errors("schema = 1\nscenario = \"eps-mode\"\n[initial]\namplitude = 0.95\n");
    assert!(errs.iter().any(|e| e.starts_with("initial.amplitude")), "{errs:?}");
}

#[test]
fn degenerate_regions_are_rejected() {
    let text = "schema = 1\nscenario = \"rest\"\n[[gamma2]]\nx1 = [1.0, 0.5]\nx2 = [0.0, 1.0]\n";
    let errs = errors(text);
    assert!(errs[0].starts_with("gamma2[0]"), "{errs:?}");
}

#[test]
fn grid_strings() {
    assert_eq!(
        parse_grid("16x8x12").unwrap(),
        GridConfig {
            n1: 16,
            n2: 8,
            nz: 12
        }
    );
    assert_eq!(parse_grid("32X32X24").unwrap().nz, 24);
    for bad in ["16x8", "16x8x", "axbxc", "16x8x12x2", ""] {
        assert!(parse_grid(bad).is_err(), "{bad}");
    }
}

#[test]
fn load_reports_missing_files() {
    let err = Config::load(std::path::Path::new("/nonexistent/elasto.toml")).unwrap_err();
    assert!(matches!(err, Error::Io(_)));
}
