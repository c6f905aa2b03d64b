//! Drivers behind the `elasto` subcommands: time integration with
//! diagnostics, the property-check suite and the refinement studies.

mod checks;
mod studies;

pub use checks::{checks, CheckEntry, CheckKind, CheckOptions, CheckReport, Comparison, Corruption};
pub use studies::{
    convergence, dispersion, evo_refinement, flat_symbol_error, rk4_errors, ConvergenceReport,
    DispersionCase, DispersionReport, Study, StudyRow, EVO_LEVELS,
};

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::config::Config;
use crate::dynamics::scenarios::{build, Scenario};
use crate::dynamics::{
    assemble_pressure, divergence_residual, max_stable_dt, step, FlowState, Pressure, StepInfo,
};
use crate::energy::{energy_es_eps, EnergyReport};
use crate::error::{Error, Result};
use crate::geometry::write_snapshot;
use crate::spectral::InterfaceField;
use crate::stability::{dispersion_omega, stability_report, taylor_coefficient};

/// Column order of `diagnostics.csv`. Stable; new columns are only appended.
pub const CSV_COLUMNS: [&str; 20] = [
    "step",
    "t",
    "dt",
    "taylor_min",
    "lambda_min",
    "e_material",
    "e_elastic",
    "e_capillary",
    "e_weighted",
    "e_height",
    "e_rate",
    "e_velocity",
    "e_deformation",
    "e_total",
    "div_u",
    "div_f",
    "normal_f",
    "max_abs_f",
    "mode_amplitude",
    "reprojected",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HaltReason {
    Completed,
    StabilityLost,
    CeilingViolated,
    DegenerateMap,
}

/// One diagnostic row; see [`CSV_COLUMNS`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticRow {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub taylor_min: f64,
    pub lambda_min: f64,
    pub energy: EnergyReport,
    pub div_u: f64,
    pub div_f: f64,
    pub normal_f: f64,
    pub max_abs_f: f64,
    pub mode_amplitude: f64,
    pub reprojected: bool,
}

impl DiagnosticRow {
    pub fn csv_line(&self) -> String {
        let mut cells = vec![self.step.to_string()];
        let mut nums = vec![self.t, self.dt, self.taylor_min, self.lambda_min];
        nums.extend(self.energy.values());
        nums.push(self.energy.total());
        nums.extend([
            self.div_u,
            self.div_f,
            self.normal_f,
            self.max_abs_f,
            self.mode_amplitude,
        ]);
        cells.extend(nums.iter().map(|v| format!("{v:e}")));
        cells.push(u8::from(self.reprojected).to_string());
        cells.join(",")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub scenario: Scenario,
    pub grid: [usize; 3],
    pub eps: f64,
    pub seed: u64,
    pub dt: f64,
    pub halt: HaltReason,
    pub message: Option<String>,
    pub steps: usize,
    pub t_final: f64,
    pub energy_initial: f64,
    /// `max_t E(t) / E(0)` over the emitted rows.
    pub energy_max_ratio: f64,
    /// `max_t log(E(t) / E(0)) / t` over rows with `t > 0`: the observed
    /// exponential growth rate (negative when the energy only decays).
    pub energy_growth_rate: f64,
    /// Frequency of the tracked mode from its first zero crossing.
    pub omega_measured: Option<f64>,
    /// Linear prediction for the tracked mode about the initial state.
    pub omega_predicted: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub rows: Vec<DiagnosticRow>,
    pub final_state: Option<FlowState>,
}

/// Cosine amplitude of the interface mode `(k, 0)`.
pub fn mode_amplitude(f: &InterfaceField, k: u32) -> f64 {
    2.0 * f.coeff(k as i64, 0).re
}

fn max_normal_trace(state: &FlowState) -> f64 {
    state
        .deformation
        .iter()
        .map(|c| state.map.normal_component(c).max_abs())
        .fold(0.0, f64::max)
}

fn make_row(
    state: &FlowState,
    pressure: &Pressure,
    step_no: usize,
    dt: f64,
    info: Option<&StepInfo>,
    mode: u32,
) -> Result<DiagnosticRow> {
    let report = stability_report(state, pressure);
    let energy = energy_es_eps(state, state.params.s)?;
    let (div_u, div_f, normal_f, reprojected) = match info {
        Some(i) => (i.div_u, i.div_f, i.normal_f, i.reprojected),
        None => (
            divergence_residual(&state.u, &state.map),
            state
                .deformation
                .iter()
                .map(|c| divergence_residual(c, &state.map))
                .fold(0.0, f64::max),
            max_normal_trace(state),
            false,
        ),
    };
    Ok(DiagnosticRow {
        step: step_no,
        t: state.t,
        dt,
        taylor_min: report.taylor_min,
        lambda_min: report.lambda_min,
        energy,
        div_u,
        div_f,
        normal_f,
        max_abs_f: state.f.max_abs(),
        mode_amplitude: mode_amplitude(&state.f, mode),
        reprojected,
    })
}

/// Linear frequency of the tracked mode about the (mean) initial state.
fn predicted_omega(state: &FlowState, pressure: &Pressure, mode: u32) -> f64 {
    let traces = state.deformation_traces();
    let mut cols = [[0.0; 3]; 3];
    for j in 0..3 {
        for i in 0..3 {
            cols[j][i] = traces[j][i].mean();
        }
    }
    let a = taylor_coefficient(state, pressure).normal.mean();
    dispersion_omega(&cols, a, state.eps, [mode as f64, 0.0])
}

/// Frequency from the first sign change of a cosine-like signal that starts
/// at an extremum.
fn first_crossing_omega(history: &[(f64, f64)]) -> Option<f64> {
    let a0 = history.first()?.1;
    if a0 == 0.0 {
        return None;
    }
    history.windows(2).find_map(|w| {
        let ((t0, a), (t1, b)) = (w[0], w[1]);
        if a * a0 > 0.0 && b * a0 <= 0.0 {
            let tc = t0 + (t1 - t0) * a / (a - b);
            Some(std::f64::consts::FRAC_PI_2 / tc)
        } else {
            None
        }
    })
}

fn halt_for(err: &Error) -> Option<HaltReason> {
    match err {
        Error::CeilingViolated { .. } => Some(HaltReason::CeilingViolated),
        Error::DegenerateMap { .. } => Some(HaltReason::DegenerateMap),
        Error::StabilityLost { .. } => Some(HaltReason::StabilityLost),
        _ => None,
    }
}

struct Sinks {
    csv: Option<BufWriter<File>>,
    dir: Option<std::path::PathBuf>,
}

impl Sinks {
    fn open(out: Option<&Path>) -> Result<Self> {
        let Some(dir) = out else {
            return Ok(Self {
                csv: None,
                dir: None,
            });
        };
        std::fs::create_dir_all(dir)?;
        let mut csv = BufWriter::new(File::create(dir.join("diagnostics.csv"))?);
        writeln!(csv, "{}", CSV_COLUMNS.join(","))?;
        Ok(Self {
            csv: Some(csv),
            dir: Some(dir.to_path_buf()),
        })
    }

    fn row(&mut self, row: &DiagnosticRow) -> Result<()> {
        if let Some(csv) = &mut self.csv {
            writeln!(csv, "{}", row.csv_line())?;
        }
        Ok(())
    }

    fn snapshot(&self, state: &FlowState, pressure: &Pressure, step_no: usize) -> Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let mut fields = vec![&state.u.c[0], &state.u.c[1], &state.u.c[2]];
        for col in &state.deformation {
            fields.extend(col.c.iter());
        }
        fields.push(&pressure.p);
        let mut w = BufWriter::new(File::create(dir.join(format!("snapshot_{step_no:06}.bin")))?);
        write_snapshot(&mut w, &fields, state.t)?;
        w.flush()?;
        Ok(())
    }

    fn finish(&mut self, summary: &RunSummary) -> Result<()> {
        if let Some(csv) = &mut self.csv {
            csv.flush()?;
        }
        if let Some(dir) = &self.dir {
            let json = serde_json::to_string_pretty(summary).expect("summary serializes");
            std::fs::write(dir.join("summary.json"), json + "\n")?;
        }
        Ok(())
    }
}

/// Prepare the initial data and integrate to `time.t_end`, emitting a
/// diagnostic row every `time.output_every` steps (and at the end) and a
/// snapshot every `time.snapshot_every` steps. With `out` set, writes
/// `diagnostics.csv`, `snapshot_NNNNNN.bin` and `summary.json` there.
///
/// Losing the map or the ceiling, or (with `run.monitor`) the stability
/// conditions, ends the run with the corresponding [`HaltReason`] instead of
/// an error.
pub fn run(cfg: &Config, out: Option<&Path>) -> Result<RunOutput> {
    cfg.validate()?;
    let grid = cfg.slab_grid()?;
    let spec = cfg.scenario_spec();
    let mut sinks = Sinks::open(out)?;
    let mut summary = RunSummary {
        scenario: cfg.scenario,
        grid: [cfg.grid.n1, cfg.grid.n2, cfg.grid.nz],
        eps: cfg.physics.eps,
        seed: cfg.run.seed,
        dt: 0.0,
        halt: HaltReason::Completed,
        message: None,
        steps: 0,
        t_final: 0.0,
        energy_initial: 0.0,
        energy_max_ratio: 1.0,
        energy_growth_rate: 0.0,
        omega_measured: None,
        omega_predicted: None,
    };
    let mut state = match build(&spec, &grid, cfg.physics.eps, cfg.params()) {
        Ok(s) => s,
        Err(e) => {
            let halt = halt_for(&e).ok_or(e.clone())?;
            summary.halt = halt;
            summary.message = Some(e.to_string());
            sinks.finish(&summary)?;
            return Ok(RunOutput {
                summary,
                rows: Vec::new(),
                final_state: None,
            });
        }
    };
    let pressure0 = assemble_pressure(&state)?;
    let dt = cfg
        .time
        .dt
        .unwrap_or_else(|| 0.8 * max_stable_dt(&state, &pressure0));
    summary.dt = dt;
    if matches!(cfg.scenario, Scenario::ElasticMode | Scenario::EpsMode) {
        summary.omega_predicted = Some(predicted_omega(&state, &pressure0, spec.mode));
    }
    let t_end = cfg.time.t_end;
    let mut rows: Vec<DiagnosticRow> = Vec::new();
    let mut history = vec![(state.t, mode_amplitude(&state.f, spec.mode))];
    let mut last_info: Option<StepInfo> = None;
    let mut last_dt = 0.0;
    let mut step_no = 0usize;
    let mut pressure = pressure0;
    loop {
        let done = state.t >= t_end - 1e-12;
        if step_no % cfg.time.output_every == 0 || done {
            let row = make_row(&state, &pressure, step_no, last_dt, last_info.as_ref(), spec.mode)?;
            sinks.row(&row)?;
            rows.push(row);
        }
        if cfg.time.snapshot_every > 0 && step_no % cfg.time.snapshot_every == 0 {
            sinks.snapshot(&state, &pressure, step_no)?;
        }
        if cfg.run.monitor {
            if let Err(e) = stability_report(&state, &pressure).check() {
                summary.halt = HaltReason::StabilityLost;
                summary.message = Some(e.to_string());
                break;
            }
        }
        if done {
            break;
        }
        let h = dt.min(t_end - state.t);
        let result = match step(&state, h) {
            Err(Error::TimeStepTooLarge { bound, .. }) => step(&state, 0.9 * bound),
            r => r,
        };
        match result {
            Ok((next, info)) => {
                last_dt = next.t - state.t;
                state = next;
                last_info = Some(info);
                step_no += 1;
                history.push((state.t, mode_amplitude(&state.f, spec.mode)));
            }
            Err(e) => match halt_for(&e) {
                Some(h) => {
                    summary.halt = h;
                    summary.message = Some(e.to_string());
                    break;
                }
                None => return Err(e),
            },
        }
        pressure = assemble_pressure(&state)?;
    }
    summary.steps = step_no;
    summary.t_final = state.t;
    summary.omega_measured = first_crossing_omega(&history);
    if let Some(first) = rows.first() {
        let e0 = first.energy.total();
        summary.energy_initial = e0;
        if e0 > 0.0 {
            let mut rate = f64::NEG_INFINITY;
            for r in &rows {
                let ratio = r.energy.total() / e0;
                summary.energy_max_ratio = summary.energy_max_ratio.max(ratio);
                if r.t > 0.0 {
                    rate = rate.max(ratio.ln() / r.t);
                }
            }
            if rate.is_finite() {
                summary.energy_growth_rate = rate;
            }
        }
    }
    sinks.finish(&summary)?;
    Ok(RunOutput {
        summary,
        rows,
        final_state: Some(state),
    })
}
