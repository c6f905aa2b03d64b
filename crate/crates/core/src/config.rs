//! Run configuration. TOML with a `schema` version; unknown keys are errors.
//!
//! ```toml
//! schema = 1
//! scenario = "elastic-mode"        # rest | elastic-mode | eps-mode | mixed-regions
//!
//! [grid]
//! n1 = 32
//! n2 = 32
//! nz = 32
//!
//! [physics]
//! eps = 0.0
//! c0 = 0.1
//! s = 4
//!
//! [initial]                        # omitted keys use the scenario preset
//! amplitude = 1e-3
//! mode = 1
//! elastic = 1.0
//! flow = 0.0
//!
//! [time]
//! dt = 0.01                        # omitted: 0.8 x the stability bound
//! t_end = 0.1
//! output_every = 1                 # steps between CSV rows
//! snapshot_every = 0               # steps between snapshots, 0 = none
//!
//! [run]
//! monitor = false                  # halt when the stability report fails
//! reproject = true
//! seed = 0
//!
//! [[gamma1]]                       # optional; replaces the preset regions
//! x1 = [-0.7, 0.7]
//! x2 = [0.0, 6.283185307179586]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::scenarios::{default_regions, Scenario, ScenarioSpec};
use crate::dynamics::Params;
use crate::error::{Error, Result};
use crate::geometry::SlabGrid;
use crate::stability::{Rect, Region};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n1: usize,
    pub n2: usize,
    pub nz: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n1: 32,
            n2: 32,
            nz: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsConfig {
    pub eps: f64,
    pub c0: f64,
    pub s: u32,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self {
            eps: 0.0,
            c0: 0.1,
            s: 4,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialConfig {
    pub amplitude: Option<f64>,
    pub mode: Option<u32>,
    pub elastic: Option<f64>,
    pub flow: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeConfig {
    pub dt: Option<f64>,
    pub t_end: f64,
    pub output_every: usize,
    pub snapshot_every: usize,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self {
            dt: None,
            t_end: 0.1,
            output_every: 1,
            snapshot_every: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub monitor: bool,
    pub reproject: bool,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            monitor: false,
            reproject: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema: u32,
    pub scenario: Scenario,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub physics: PhysicsConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma1: Option<Vec<Rect>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma2: Option<Vec<Rect>>,
}

impl Config {
    /// Defaults for a scenario.
    pub fn preset(scenario: Scenario) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            scenario,
            grid: GridConfig::default(),
            physics: PhysicsConfig::default(),
            initial: InitialConfig::default(),
            time: TimeConfig::default(),
            run: RunConfig::default(),
            gamma1: None,
            gamma2: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| {
            let msg = match e.span() {
                Some(span) => {
                    let line = text[..span.start].matches('\n').count() + 1;
                    format!("line {line}: {}", e.message())
                }
                None => e.message().to_string(),
            };
            Error::ConfigInvalid(vec![msg])
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Field-level validation; collects every problem.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.schema != SCHEMA_VERSION {
            errs.push(format!(
                "schema: unsupported version {} (expected {SCHEMA_VERSION})",
                self.schema
            ));
        }
        let g = &self.grid;
        for (name, n) in [("grid.n1", g.n1), ("grid.n2", g.n2)] {
            if n < 4 || n % 2 != 0 {
                errs.push(format!("{name}: must be even and >= 4, got {n}"));
            }
        }
        if g.nz < 4 {
            errs.push(format!("grid.nz: must be >= 4, got {}", g.nz));
        }
        let p = &self.physics;
        if !(p.eps >= 0.0 && p.eps.is_finite()) {
            errs.push(format!("physics.eps: must be finite and >= 0, got {}", p.eps));
        }
        if !(p.c0 >= 0.0 && p.c0 < 1.0) {
            errs.push(format!("physics.c0: must lie in [0, 1), got {}", p.c0));
        }
        if p.s < 4 {
            errs.push(format!("physics.s: must be >= 4, got {}", p.s));
        }
        if let Some(a) = self.initial.amplitude {
            if !(a.abs() < 1.0 - p.c0) {
                errs.push(format!("initial.amplitude: |{a}| must be below 1 - c0"));
            }
        }
        if self.initial.mode == Some(0) {
            errs.push("initial.mode: must be >= 1".into());
        }
        let t = &self.time;
        if let Some(dt) = t.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                errs.push(format!("time.dt: must be positive, got {dt}"));
            }
        }
        if !(t.t_end >= 0.0 && t.t_end.is_finite()) {
            errs.push(format!("time.t_end: must be finite and >= 0, got {}", t.t_end));
        }
        if t.output_every == 0 {
            errs.push("time.output_every: must be >= 1".into());
        }
        for (name, rects) in [("gamma1", &self.gamma1), ("gamma2", &self.gamma2)] {
            for (i, r) in rects.iter().flatten().enumerate() {
                if !(r.x1[1] > r.x1[0] && r.x2[1] > r.x2[0]) {
                    errs.push(format!("{name}[{i}]: rectangle bounds must be increasing"));
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigInvalid(errs))
        }
    }

    pub fn slab_grid(&self) -> Result<SlabGrid> {
        SlabGrid::new(self.grid.n1, self.grid.n2, self.grid.nz)
    }

    pub fn scenario_spec(&self) -> ScenarioSpec {
        let mut spec = ScenarioSpec::new(self.scenario);
        let i = &self.initial;
        spec.amplitude = i.amplitude.unwrap_or(spec.amplitude);
        spec.mode = i.mode.unwrap_or(spec.mode);
        spec.elastic = i.elastic.unwrap_or(spec.elastic);
        spec.flow = i.flow.unwrap_or(spec.flow);
        spec
    }

    pub fn params(&self) -> Params {
        let (g1, g2) = default_regions(self.scenario);
        let region = |r: &Option<Vec<Rect>>, preset: Region| match r {
            Some(rects) => Region {
                rects: rects.clone(),
            },
            None => preset,
        };
        Params {
            s: self.physics.s,
            c0: self.physics.c0,
            gamma1: region(&self.gamma1, g1),
            gamma2: region(&self.gamma2, g2),
            reproject: self.run.reproject,
        }
    }
}

/// Parse `N1xN2xNz`.
pub fn parse_grid(text: &str) -> Result<GridConfig> {
    let parts: Vec<&str> = text.split(['x', 'X']).collect();
    let bad = || Error::ConfigInvalid(vec![format!("--grid: expected N1xN2xNz, got '{text}'")]);
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<usize> = parts
        .iter()
        .map(|p| p.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad())?;
    Ok(GridConfig {
        n1: nums[0],
        n2: nums[1],
        nz: nums[2],
    })
}
