//! Refinement studies and the dispersion comparison.

use serde::Serialize;

use crate::config::Config;
use crate::dn::{apply_dn, apply_dn_neumann, flat_dn_neumann_symbol, flat_dn_symbol};
use crate::dynamics::scenarios::{build, Scenario, ScenarioSpec};
use crate::dynamics::{evo_residual, step, Ablation, FlowState};
use crate::error::Result;
use crate::geometry::{CoordinateMap, SlabGrid};
use crate::spectral::InterfaceField;

use super::checks::trajectory_dt;
use super::run;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub resolution: String,
    pub error: f64,
    /// Observed order against the previous row.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Study {
    pub name: String,
    /// What is required of the rows: a minimum order, or a monotone decrease.
    pub requirement: String,
    pub rows: Vec<StudyRow>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub studies: Vec<Study>,
}

impl ConvergenceReport {
    pub fn passed(&self) -> bool {
        self.studies.iter().all(|s| s.passed)
    }

    /// Plain-text table, one row per resolution.
    pub fn table(&self) -> String {
        let mut out = format!("{:<22} {:<18} {:>12} {:>8}\n", "study", "resolution", "error", "order");
        for s in &self.studies {
            for r in &s.rows {
                let order = r.order.map_or("-".to_string(), |o| format!("{o:.2}"));
                out += &format!("{:<22} {:<18} {:>12.4e} {:>8}\n", s.name, r.resolution, r.error, order);
            }
            out += &format!(
                "{:<22} {} -> {}\n",
                s.name,
                s.requirement,
                if s.passed { "PASS" } else { "FAIL" }
            );
        }
        out
    }
}

fn with_orders(rows: Vec<(String, f64)>, ratio: f64) -> Vec<StudyRow> {
    let mut out: Vec<StudyRow> = Vec::new();
    for (res, e) in rows {
        let order = out.last().map(|p| (p.error / e).ln() / ratio.ln());
        out.push(StudyRow {
            resolution: res,
            error: e,
            order,
        });
    }
    out
}

fn order_study(name: &str, min_order: f64, rows: Vec<StudyRow>) -> Study {
    let passed = rows.iter().skip(1).take(1).all(|r| r.order.is_some_and(|o| o >= min_order))
        && rows.len() >= 2;
    Study {
        name: name.to_string(),
        requirement: format!("first-pair order >= {min_order}"),
        rows,
        passed,
    }
}

/// Relative error of the flat operators on the mode `cos(k x1)` with `nz`
/// vertical intervals.
pub fn flat_symbol_error(nz: usize, k: u32) -> Result<f64> {
    let n1 = (4 * k as usize).max(8);
    let grid = SlabGrid::new(n1, 4, nz)?;
    let m = CoordinateMap::identity(&grid);
    let g = InterfaceField::from_fn(n1, 4, |x, _| (k as f64 * x).cos());
    let kf = k as f64;
    let e1 = (&apply_dn(&g, &m)? - &g.scale(flat_dn_symbol(kf))).max_abs() / flat_dn_symbol(kf);
    let e2 = (&apply_dn_neumann(&g, &m)? - &g.scale(flat_dn_neumann_symbol(kf))).max_abs()
        / flat_dn_neumann_symbol(kf);
    Ok(e1.max(e2))
}

fn elastic_state(grid: &SlabGrid, amplitude: f64, eps: f64) -> Result<FlowState> {
    let mut spec = ScenarioSpec::new(Scenario::ElasticMode);
    spec.amplitude = amplitude;
    let cfg = Config::preset(Scenario::ElasticMode);
    build(&spec, grid, eps, cfg.params())
}

fn integrate(mut s: FlowState, dt: f64, steps: usize) -> Result<FlowState> {
    for _ in 0..steps {
        s = step(&s, dt)?.0;
    }
    Ok(s)
}

/// Self-convergence of the time integrator: errors at `dt0` and `dt0/2`
/// against `dt0/8`, over `[0, 8 dt0]`.
pub fn rk4_errors(grid: &SlabGrid, eps: f64) -> Result<Vec<(f64, f64)>> {
    let s0 = elastic_state(grid, 0.05, eps)?;
    let dt0 = trajectory_dt(&s0)?;
    let reference = integrate(s0.clone(), dt0 / 8.0, 64)?;
    let mut out = Vec::new();
    for m in [1usize, 2] {
        let s = integrate(s0.clone(), dt0 / m as f64, 8 * m)?;
        let ef = (&s.f - &reference.f).max_abs();
        let eu = s.u.zip(&reference.u, |a, b| a - b).max_abs();
        out.push((dt0 / m as f64, ef.max(eu)));
    }
    Ok(out)
}

/// `evo_residual` on the elastic-mode scenario after a spin-up, at jointly
/// refined `(n1, nz, dt)`.
pub fn evo_refinement(levels: &[(usize, usize, f64)]) -> Result<Vec<f64>> {
    levels
        .iter()
        .map(|&(n1, nz, dt)| {
            let grid = SlabGrid::new(n1, 4, nz)?;
            let s0 = elastic_state(&grid, 0.1, 0.1)?;
            let spin = (0.3 / dt).round() as usize;
            let mut traj = vec![integrate(s0, dt, spin)?];
            for _ in 0..4 {
                let next = step(traj.last().expect("nonempty"), dt)?.0;
                traj.push(next);
            }
            evo_residual(&traj, Ablation::None)
        })
        .collect()
}

pub const EVO_LEVELS: [(usize, usize, f64); 2] = [(16, 8, 0.02), (32, 12, 0.01)];

/// Flat-symbol vertical refinement, RK4 self-convergence (on the configured
/// `n1 x 4 x nz` grid; the preset is independent of `x2`) and the
/// interface-equation residual under joint refinement.
pub fn convergence(cfg: &Config) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let mut studies = Vec::new();

    let k = 4;
    let rows = [8usize, 16]
        .iter()
        .map(|&nz| Ok((format!("nz={nz}, k={k}"), flat_symbol_error(nz, k)?)))
        .collect::<Result<Vec<_>>>()?;
    studies.push(order_study("flat_dn_symbol", 1.9, with_orders(rows, 2.0)));

    let grid = SlabGrid::new(cfg.grid.n1, 4, cfg.grid.nz)?;
    let rows = rk4_errors(&grid, cfg.physics.eps)?
        .into_iter()
        .map(|(dt, e)| (format!("dt={dt}"), e))
        .collect();
    studies.push(order_study("rk4_elastic_mode", 3.8, with_orders(rows, 2.0)));

    let res = evo_refinement(&EVO_LEVELS)?;
    let rows = EVO_LEVELS
        .iter()
        .zip(&res)
        .map(|(&(n1, nz, dt), &e)| (format!("{n1}x4x{nz}, dt={dt}"), e))
        .collect();
    let rows = with_orders(rows, 2.0);
    let passed = res.windows(2).all(|w| w[1] < w[0]);
    studies.push(Study {
        name: "evo_residual".into(),
        requirement: "monotone decrease".into(),
        rows,
        passed,
    });
    Ok(ConvergenceReport { studies })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispersionCase {
    pub name: String,
    pub elastic: f64,
    pub eps: f64,
    pub mode: u32,
    pub omega_predicted: f64,
    pub omega_measured: Option<f64>,
    pub rel_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispersionReport {
    pub grid: [usize; 3],
    pub tolerance: f64,
    pub cases: Vec<DispersionCase>,
}

impl DispersionReport {
    pub fn passed(&self) -> bool {
        self.cases.iter().all(|c| c.passed)
    }
}

/// Small-amplitude single-mode runs exercising the elastic term alone, the
/// regularization alone, and both; the measured frequency comes from the
/// first zero crossing of the mode amplitude.
pub fn dispersion(cfg: &Config) -> Result<DispersionReport> {
    cfg.validate()?;
    let eps = if cfg.physics.eps > 0.0 { cfg.physics.eps } else { 1.0 };
    let elastic = cfg.initial.elastic.filter(|c| *c != 0.0).unwrap_or(1.0);
    let tolerance = 0.05;
    let mut cases = Vec::new();
    for (name, scenario, c, e) in [
        ("elastic", Scenario::ElasticMode, elastic, 0.0),
        ("eps", Scenario::EpsMode, 0.0, eps),
        ("combined", Scenario::ElasticMode, elastic, eps),
    ] {
        let mut c_cfg = cfg.clone();
        c_cfg.scenario = scenario;
        c_cfg.physics.eps = e;
        c_cfg.initial.amplitude = Some(1e-3);
        c_cfg.initial.elastic = Some(c);
        c_cfg.initial.flow = Some(0.0);
        c_cfg.gamma1 = None;
        c_cfg.gamma2 = None;
        c_cfg.run.monitor = false;
        c_cfg.time.output_every = usize::MAX;
        c_cfg.time.snapshot_every = 0;
        let mode = cfg.initial.mode.unwrap_or(1);
        // Predict first, then run just past the quarter period.
        let grid = c_cfg.slab_grid()?;
        let s0 = build(&c_cfg.scenario_spec(), &grid, e, c_cfg.params())?;
        let p0 = crate::dynamics::assemble_pressure(&s0)?;
        let predicted = super::predicted_omega(&s0, &p0, mode);
        c_cfg.time.t_end = 1.3 * std::f64::consts::FRAC_PI_2 / predicted;
        let out = run(&c_cfg, None)?;
        let measured = out.summary.omega_measured;
        let rel_error = measured.map_or(f64::INFINITY, |m| (m - predicted).abs() / predicted);
        cases.push(DispersionCase {
            name: name.into(),
            elastic: c,
            eps: e,
            mode,
            omega_predicted: predicted,
            omega_measured: measured,
            rel_error,
            passed: rel_error <= tolerance,
        });
    }
    Ok(DispersionReport {
        grid: [cfg.grid.n1, cfg.grid.n2, cfg.grid.nz],
        tolerance,
        cases,
    })
}
