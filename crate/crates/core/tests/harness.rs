use std::fs::File;
use std::io::BufReader;
use std::process::Command;

use elasto_core::config::Config;
use elasto_core::dynamics::scenarios::Scenario;
use elasto_core::geometry::read_snapshot;
use elasto_core::harness::{self, CheckKind, CheckOptions, Corruption, HaltReason, CSV_COLUMNS};
use elasto_core::stability::Rect;

fn small(scenario: Scenario, n1: usize, n2: usize, nz: usize) -> Config {
    let mut cfg = Config::preset(scenario);
    cfg.grid.n1 = n1;
    cfg.grid.n2 = n2;
    cfg.grid.nz = nz;
    cfg
}

fn opts(samples: usize, corruption: Option<Corruption>) -> CheckOptions {
    CheckOptions {
        seed: 11,
        samples,
        transport_steps: 3,
        corruption,
    }
}

#[test]
fn run_writes_csv_snapshots_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(Scenario::ElasticMode, 16, 4, 8);
    cfg.time.dt = Some(0.01);
    cfg.time.t_end = 0.04;
    cfg.time.snapshot_every = 2;
    let out = harness::run(&cfg, Some(dir.path())).unwrap();
    assert_eq!(out.summary.halt, HaltReason::Completed);
    assert_eq!(out.summary.steps, 4);
    assert!((out.summary.t_final - 0.04).abs() < 1e-12);

    let csv = std::fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
    let body: Vec<&str> = lines.collect();
    assert_eq!(body.len(), out.rows.len());
    assert_eq!(body.len(), 5);
    for (line, row) in body.iter().zip(&out.rows) {
        assert_eq!(line.split(',').count(), CSV_COLUMNS.len());
        assert_eq!(*line, row.csv_line());
    }
    let last: Vec<f64> = body[4].split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!(last[0], 4.0);
    assert!((last[1] - 0.04).abs() < 1e-12);

    let mut snaps: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with("snapshot_"))
        .collect();
    snaps.sort();
    assert_eq!(snaps, ["snapshot_000000.bin", "snapshot_000002.bin", "snapshot_000004.bin"]);
    let mut r = BufReader::new(File::open(dir.path().join(&snaps[2])).unwrap());
    let (header, comps) = read_snapshot(&mut r).unwrap();
    assert_eq!((header.n1, header.n2, header.levels), (16, 4, 9));
    assert_eq!(header.components, 13);
    assert_eq!(comps.len(), 13);
    assert!((header.time - 0.04).abs() < 1e-12);
    let state = out.final_state.unwrap();
    assert_eq!(comps[0], state.u.c[0].data());

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["halt"], "completed");
    assert_eq!(summary["steps"], 4);
    assert_eq!(summary["scenario"], "elastic-mode");
}

#[test]
fn output_every_thins_rows() {
    let mut cfg = small(Scenario::ElasticMode, 16, 4, 8);
    cfg.time.dt = Some(0.01);
    cfg.time.t_end = 0.04;
    cfg.time.output_every = 2;
    let out = harness::run(&cfg, None).unwrap();
    let steps: Vec<usize> = out.rows.iter().map(|r| r.step).collect();
    assert_eq!(steps, [0, 2, 4]);
}

#[test]
fn rest_run_is_silent() {
    let mut cfg = small(Scenario::Rest, 8, 8, 8);
    cfg.time.t_end = 0.05;
    cfg.time.dt = Some(0.01);
    let out = harness::run(&cfg, None).unwrap();
    for row in &out.rows {
        assert_eq!(row.energy.total(), 0.0);
        assert_eq!(row.max_abs_f, 0.0);
    }
}

#[test]
fn monitor_halts_when_stability_is_lost() {
    let mut cfg = small(Scenario::MixedRegions, 16, 4, 8);
    cfg.time.dt = Some(0.01);
    cfg.time.t_end = 0.05;
    cfg.run.monitor = true;
    cfg.gamma1 = Some(vec![Rect::full()]);
    let out = harness::run(&cfg, None).unwrap();
    assert_eq!(out.summary.halt, HaltReason::StabilityLost);
    assert!(out.summary.message.is_some());
    assert!(out.summary.t_final < 0.05);
}

#[test]
fn oversized_step_is_clamped_to_the_bound() {
    let mut cfg = small(Scenario::ElasticMode, 16, 4, 8);
    cfg.time.dt = Some(1.0);
    cfg.time.t_end = 0.1;
    let out = harness::run(&cfg, None).unwrap();
    assert_eq!(out.summary.halt, HaltReason::Completed);
    assert!((out.summary.t_final - 0.1).abs() < 1e-12);
    // Stability bound at this state is about 0.0386.
    assert!(out.rows[1..].iter().all(|r| r.dt < 0.04), "{:?}", out.rows[1].dt);
}

#[test]
fn checks_are_deterministic_and_exact_ones_hold_coarse() {
    let cfg = small(Scenario::ElasticMode, 8, 8, 8);
    let a = harness::checks(&cfg, opts(3, None)).unwrap();
    let b = harness::checks(&cfg, opts(3, None)).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(a.seed, 11);
    assert_eq!(a.grid, [8, 8, 8]);
    for c in a.checks.iter().filter(|c| c.kind == CheckKind::Exact) {
        assert!(c.passed, "{} = {:e} (tol {:e})", c.name, c.value, c.tolerance);
    }
    let json: serde_json::Value = serde_json::from_str(&a.to_json()).unwrap();
    assert_eq!(json["checks"].as_array().unwrap().len(), a.checks.len());
}

#[test]
fn corrupted_dn_is_caught() {
    let cfg = small(Scenario::ElasticMode, 16, 8, 20);
    let names = ["dn_flat_symbol", "dn_neumann_flat_symbol", "dn_inverse_round_trip"];
    let clean = harness::checks(&cfg, opts(2, None)).unwrap();
    let bad = harness::checks(&cfg, opts(2, Some(Corruption::Dn))).unwrap();
    assert_eq!(bad.corruption, Some(Corruption::Dn));
    assert!(!bad.passed);
    for name in names {
        assert!(clean.get(name).unwrap().passed, "{name} clean");
        assert!(!bad.get(name).unwrap().passed, "{name} corrupted");
    }
}

fn elasto(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_elasto"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn cli_run_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.toml");
    std::fs::write(
        &cfg_path,
        "schema = 1\nscenario = \"elastic-mode\"\n[time]\ndt = 0.01\nt_end = 0.02\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = elasto(&[
        "run",
        "--config",
        cfg_path.to_str().unwrap(),
        "--grid",
        "16x4x8",
        "--seed",
        "3",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["grid"], serde_json::json!([16, 4, 8]));
    assert_eq!(summary["seed"], 3);
    assert!(out_dir.join("diagnostics.csv").exists());
    assert!(out_dir.join("summary.json").exists());

    std::fs::write(&cfg_path, "schema = 1\nscenario = \"rest\"\ncolour = 3\n").unwrap();
    let out = elasto(&["run", "--config", cfg_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));

    let out = elasto(&["run", "--grid", "7x8x8"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid.n1"));
}

#[test]
fn cli_checks_reports_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["checks", "--grid", "16x8x20", "--samples", "2", "--transport-steps", "2"];
    let mut bad = args.to_vec();
    bad.extend(["--corrupt", "dn", "--out", dir.path().to_str().unwrap()]);
    let out = elasto(&bad);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("checks.json")).unwrap())
            .unwrap();
    assert_eq!(report["passed"], false);
    assert_eq!(report["corruption"], "dn");
}
