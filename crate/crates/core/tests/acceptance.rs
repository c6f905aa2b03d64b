//! Acceptance suite: one PASS/FAIL line per criterion. Runs as a plain binary
//! so the verdicts are always printed; exits non-zero if any criterion fails.

use std::process::ExitCode;

use elasto_core::config::{Config, GridConfig};
use elasto_core::dn::{apply_dn, apply_dn_neumann, flat_dn_neumann_symbol, flat_dn_symbol};
use elasto_core::dynamics::scenarios::{build, initial_data, Scenario, ScenarioSpec};
use elasto_core::dynamics::{
    evo_residual, prepare_initial_data, project_div, project_div_normal, step, Ablation,
    FlowState, Params,
};
use elasto_core::energy::{difference_energy, initial_size, regularized_size, vector_sobolev_sq};
use elasto_core::geometry::build_map;
use elasto_core::harness::{
    self, checks, dispersion, evo_refinement, flat_symbol_error, CheckOptions, CheckReport,
    HaltReason, EVO_LEVELS,
};
use elasto_core::stability::Rect;
use elasto_core::{CoordinateMap, InterfaceField, SlabGrid};

type Verdict = (bool, String);

fn sci(v: &[f64]) -> String {
    let cells: Vec<String> = v.iter().map(|x| format!("{x:.2e}")).collect();
    format!("[{}]", cells.join(", "))
}

fn grid(n1: usize, n2: usize, nz: usize) -> SlabGrid {
    SlabGrid::new(n1, n2, nz).unwrap()
}

fn elastic(grid: &SlabGrid, amplitude: f64, eps: f64, reproject: bool) -> FlowState {
    let mut spec = ScenarioSpec::new(Scenario::ElasticMode);
    spec.amplitude = amplitude;
    let mut params = Config::preset(Scenario::ElasticMode).params();
    params.reproject = reproject;
    build(&spec, grid, eps, params).unwrap()
}

fn advance(mut s: FlowState, dt: f64, steps: usize) -> FlowState {
    for _ in 0..steps {
        s = step(&s, dt).unwrap().0;
    }
    s
}

fn config(scenario: Scenario, n1: usize, n2: usize, nz: usize) -> Config {
    let mut c = Config::preset(scenario);
    c.grid = GridConfig { n1, n2, nz };
    c
}

fn criterion_1() -> Verdict {
    let n = 64;
    let g = grid(n, n, 64);
    let m = CoordinateMap::identity(&g);
    let mut modes = Vec::new();
    for k1 in 0..n as i64 / 2 {
        for k2 in -(n as i64) / 2 + 1..n as i64 / 2 {
            if k1 > 0 || k2 > 0 {
                modes.push((k1, k2));
            }
        }
    }
    let field = InterfaceField::from_fn(n, n, |x, y| {
        modes
            .iter()
            .map(|&(a, b)| (a as f64 * x + b as f64 * y + 0.1 * (a + 2 * b) as f64).cos())
            .sum()
    });
    let nf = apply_dn(&field, &m).unwrap();
    let nb = apply_dn_neumann(&field, &m).unwrap();
    let mut worst: f64 = 0.0;
    for &(a, b) in &modes {
        let k = (a as f64).hypot(b as f64);
        let c = field.coeff(a, b);
        worst = worst
            .max((nf.coeff(a, b) - c * flat_dn_symbol(k)).norm() / (c * flat_dn_symbol(k)).norm())
            .max((nb.coeff(a, b) - c * flat_dn_neumann_symbol(k)).norm() / (c * flat_dn_neumann_symbol(k)).norm());
    }
    let (e1, e2) = (flat_symbol_error(8, 4).unwrap(), flat_symbol_error(16, 4).unwrap());
    let order = (e1 / e2).log2();
    (
        worst <= 1e-6 && order >= 1.9,
        format!("max per-mode rel err {worst:.2e} at 64x64x65; order {order:.1} (nz 8 -> 16)"),
    )
}

fn entry(r: &CheckReport, name: &str) -> (bool, f64) {
    let e = r.get(name).unwrap_or_else(|| panic!("missing check {name}"));
    (e.passed, e.value)
}

fn criterion_2(r: &CheckReport) -> Verdict {
    let (a, adj) = entry(r, "dn_self_adjoint");
    let (b, pos) = entry(r, "dn_positivity");
    let (c, inv) = entry(r, "dn_inverse_round_trip");
    (
        a && b && c && r.samples == 100,
        format!("self-adjoint {adj:.2e}, min Rayleigh {pos:.3}, round trip {inv:.2e} over {} samples", r.samples),
    )
}

fn criterion_3(r: &CheckReport) -> Verdict {
    let names = [
        "dt_normal_decomposition",
        "dt_normal_time_oracle",
        "material_dn_commutator",
        "material_dn_commutator_order",
        "multiplier_dn_commutator",
    ];
    let vals: Vec<(bool, f64)> = names.iter().map(|n| entry(r, n)).collect();
    let order_ok = vals[3].1 >= 1.8;
    (
        vals.iter().all(|v| v.0) && order_ok && vals[0].1 <= 1e-10 && vals[1].1 <= 1e-10,
        format!(
            "D_t N {:.1e} / {:.1e}; material commutator {:.1e} (time order {:.2}); multiplier commutator {:.1e}",
            vals[0].1, vals[1].1, vals[2].1, vals[3].1, vals[4].1
        ),
    )
}

fn criterion_4(r: &CheckReport) -> Verdict {
    let names = ["commutator_dt_partial", "commutator_dt_dfk", "commutator_partial_dfk"];
    let worst = names.iter().map(|n| entry(r, n).1).fold(0.0, f64::max);
    (worst <= 1e-10, format!("largest defect {worst:.2e}"))
}

fn criterion_5() -> Verdict {
    let g = grid(16, 4, 8);
    let mut s = elastic(&g, 1e-2, 0.0, false);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (next, info) = step(&s, 0.02).unwrap();
        assert!(!info.reprojected);
        worst = worst.max(info.div_u).max(info.div_f).max(info.normal_f);
        s = next;
    }
    (worst < 1e-6, format!("max div / normal-trace residual {worst:.2e} over 100 steps"))
}

fn criterion_6() -> Verdict {
    let res = evo_refinement(&EVO_LEVELS).unwrap();
    let decreasing = res.windows(2).all(|w| w[1] < w[0]);
    let (n1, nz, dt) = EVO_LEVELS[0];
    let g = grid(n1, 4, nz);
    let s = advance(elastic(&g, 0.1, 0.1, true), dt, (0.3 / dt).round() as usize);
    let mut traj = vec![s];
    for _ in 0..4 {
        let next = step(traj.last().unwrap(), dt).unwrap().0;
        traj.push(next);
    }
    let base = evo_residual(&traj, Ablation::None).unwrap();
    let min_ratio = (0..7)
        .map(|i| evo_residual(&traj, Ablation::Drop(i)).unwrap() / base)
        .fold(f64::INFINITY, f64::min);
    (
        decreasing && min_ratio >= 10.0,
        format!("residual {:.2e} -> {:.2e}; weakest ablation x{min_ratio:.1e}", res[0], res[1]),
    )
}

fn criterion_7() -> Verdict {
    let report = dispersion(&config(Scenario::ElasticMode, 16, 4, 8)).unwrap();
    let detail = report
        .cases
        .iter()
        .map(|c| format!("{} {:.2e}", c.name, c.rel_error))
        .collect::<Vec<_>>()
        .join(", ");
    (report.passed(), format!("relative frequency errors: {detail}"))
}

fn criterion_8() -> Verdict {
    let mut cfg = config(Scenario::MixedRegions, 32, 4, 12);
    cfg.time.dt = Some(0.01);
    cfg.time.t_end = 0.05;
    cfg.run.monitor = true;
    let out = harness::run(&cfg, None).unwrap();
    let threshold = 0.5 * cfg.physics.c0;
    let taylor = out.rows.iter().map(|r| r.taylor_min).fold(f64::INFINITY, f64::min);
    let lambda = out.rows.iter().map(|r| r.lambda_min).fold(f64::INFINITY, f64::min);
    let held = out.summary.halt == HaltReason::Completed
        && (out.summary.t_final - 0.05).abs() < 1e-12
        && taylor >= threshold
        && lambda >= threshold;
    // Requiring the Taylor sign everywhere must trip the monitor.
    cfg.gamma1 = Some(vec![Rect::full()]);
    let lost = harness::run(&cfg, None).unwrap();
    let halts = lost.summary.halt == HaltReason::StabilityLost;
    (
        held && halts,
        format!("min taylor {taylor:.3}, min lambda {lambda:.3} (threshold {threshold}); loss halts: {halts}"),
    )
}

fn criterion_9() -> Verdict {
    let mut ratios = Vec::new();
    let mut rates = Vec::new();
    for eps in [1e-2, 1e-3, 0.0] {
        let mut cfg = config(Scenario::ElasticMode, 16, 4, 8);
        cfg.initial.amplitude = Some(0.05);
        cfg.physics.eps = eps;
        cfg.time.dt = Some(0.02);
        cfg.time.t_end = 0.1;
        let out = harness::run(&cfg, None).unwrap();
        ratios.push(out.summary.energy_max_ratio);
        rates.push(out.summary.energy_growth_rate);
    }
    let bounded = ratios.iter().all(|r| *r <= 2.0);
    let lo = rates.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let insensitive = hi <= 1e-3 || (lo > 0.0 && hi <= 2.0 * lo);
    (
        bounded && insensitive,
        format!("max E(t)/E(0) {ratios:.4?}; growth rates {}", sci(&rates)),
    )
}

fn criterion_10() -> Verdict {
    let g = grid(16, 4, 8);
    let f0 = InterfaceField::from_fn(16, 4, |x, y| 0.1 * x.cos() + 0.05 * (2.0 * x + y).sin());
    let m = build_map(&f0, &g).unwrap();
    let raw = initial_data(&ScenarioSpec::new(Scenario::MixedRegions), &g).unwrap();
    let zero = InterfaceField::zeros(16, 4);
    let cols = raw.cols.clone().map(|c| project_div_normal(&c, &m, &zero).unwrap());
    let u0 = project_div(&raw.u, &m).unwrap();
    let m0 = initial_size(&f0, &u0, &cols, &g, 4).unwrap();
    let c = 2.0;
    let mut ratios = Vec::new();
    let mut dists = Vec::new();
    for eps in [1e-1, 1e-2, 1e-3] {
        let s = prepare_initial_data(&f0, &u0, &cols, eps, Params::default()).unwrap();
        ratios.push(regularized_size(&s, 4) / m0);
        let du = vector_sobolev_sq(&s.u.zip(&u0, |a, b| a - b), &s.map, 4);
        let df: f64 = (0..3)
            .map(|j| vector_sobolev_sq(&s.deformation[j].zip(&cols[j], |a, b| a - b), &s.map, 4))
            .sum();
        dists.push((du + df).sqrt());
    }
    let ok = ratios.iter().all(|r| *r <= c) && dists.windows(2).all(|w| w[1] < w[0]);
    (ok, format!("M_eps/M_0 {ratios:.3?} (C = {c}); H^s distance {}", sci(&dists)))
}

fn criterion_11() -> Verdict {
    let g = grid(16, 4, 8);
    let s0 = elastic(&g, 0.05, 0.01, true);
    let t = 0.2;
    let run = |dt: f64| advance(s0.clone(), dt, (t / dt).round() as usize);
    let reference = run(0.003125);
    let d: Vec<f64> = [0.025, 0.0125]
        .iter()
        .map(|&dt| difference_energy(&run(dt), &reference, 4).unwrap().total().sqrt())
        .collect();
    let order = (d[0] / d[1]).log2();
    let mut eps_d = Vec::new();
    for eps in [1e-1, 1e-2, 1e-3] {
        let a = advance(elastic(&g, 0.05, eps, true), 0.02, 5);
        let b = advance(elastic(&g, 0.05, eps / 10.0, true), 0.02, 5);
        eps_d.push(difference_energy(&a, &b, 4).unwrap().total());
    }
    let ok = order >= 3.5 && eps_d.windows(2).all(|w| w[1] < w[0]);
    (
        ok,
        format!(
            "sqrt(E_D) {} -> dt order {order:.2}; E_D(eps, eps/10) {}",
            sci(&d),
            sci(&eps_d)
        ),
    )
}

fn criterion_12() -> Verdict {
    let cfg = config(Scenario::ElasticMode, 32, 32, 24);
    let opts = CheckOptions {
        seed: 7,
        samples: 4,
        transport_steps: 2,
        corruption: None,
    };
    let a = checks(&cfg, opts).unwrap();
    let b = checks(&cfg, opts).unwrap();
    let same = a.to_json() == b.to_json();
    (
        same && a.passed,
        format!("{} checks, all passed: {}, reruns identical: {same}", a.checks.len(), a.passed),
    )
}

fn main() -> ExitCode {
    let cfg = config(Scenario::ElasticMode, 32, 32, 24);
    let opts = CheckOptions {
        seed: 2024,
        samples: 100,
        transport_steps: 2,
        corruption: None,
    };
    let verdicts: Vec<Verdict> = std::thread::scope(|scope| {
        let report = scope.spawn(|| checks(&cfg, opts).unwrap());
        let jobs: Vec<_> = [
            criterion_1 as fn() -> Verdict,
            criterion_5,
            criterion_6,
            criterion_7,
            criterion_8,
            criterion_9,
            criterion_10,
            criterion_11,
            criterion_12,
        ]
        .into_iter()
        .map(|f| scope.spawn(f))
        .collect();
        let report = report.join().unwrap();
        let mut done: Vec<Verdict> = jobs.into_iter().map(|j| j.join().unwrap()).collect();
        let tail = done.split_off(1);
        done.extend([criterion_2(&report), criterion_3(&report), criterion_4(&report)]);
        done.extend(tail);
        done
    });
    let mut all = true;
    for (i, (ok, detail)) in verdicts.iter().enumerate() {
        all &= ok;
        println!("criterion {:>2}: {} - {detail}", i + 1, if *ok { "PASS" } else { "FAIL" });
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
