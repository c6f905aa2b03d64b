//! Preset initial data.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{build_map, BulkField, SlabGrid, VectorField};
use crate::spectral::InterfaceField;
use crate::stability::{Rect, Region};

use super::{prepare_initial_data, FlowState, Params};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// Flat interface, no flow, no deformation.
    Rest,
    /// Single interface mode over a uniform tangential deformation.
    ElasticMode,
    /// Single interface mode with no deformation; restoring force from the
    /// regularization alone.
    EpsMode,
    /// Overturning flow whose Taylor coefficient is positive near `x1 = 0, pi`
    /// and a deformation that is non-collinear near `x1 = +-pi/2`.
    MixedRegions,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::Rest,
        Scenario::ElasticMode,
        Scenario::EpsMode,
        Scenario::MixedRegions,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Rest => "rest",
            Scenario::ElasticMode => "elastic-mode",
            Scenario::EpsMode => "eps-mode",
            Scenario::MixedRegions => "mixed-regions",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }
}

/// Scenario knobs; unused ones are ignored by a given preset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    /// Interface amplitude `delta` in `f = delta cos(k x1)`.
    pub amplitude: f64,
    /// Horizontal wavenumber `k`.
    pub mode: u32,
    /// Deformation scale `c`.
    pub elastic: f64,
    /// Stream-function amplitude of the mixed-regions flow.
    pub flow: f64,
}

impl ScenarioSpec {
    pub fn new(scenario: Scenario) -> Self {
        let (amplitude, elastic, flow) = match scenario {
            Scenario::Rest => (0.0, 0.0, 0.0),
            Scenario::ElasticMode => (1e-3, 1.0, 0.0),
            Scenario::EpsMode => (1e-3, 0.0, 0.0),
            Scenario::MixedRegions => (0.0, 1.0, 0.4),
        };
        Self {
            scenario,
            amplitude,
            mode: 1,
            elastic,
            flow,
        }
    }
}

/// Raw (unprojected) initial fields.
#[derive(Debug, Clone)]
pub struct InitialData {
    pub f: InterfaceField,
    pub u: VectorField,
    pub cols: [VectorField; 3],
}

fn zeros3(grid: &SlabGrid) -> [VectorField; 3] {
    [
        VectorField::zeros(grid),
        VectorField::zeros(grid),
        VectorField::zeros(grid),
    ]
}

/// Push forward the constant reference columns `c e_1`, `c e_2` by the
/// harmonic coordinate (Piola transform), which keeps them divergence-free
/// and tangent to the interface: `F_a = c (e_a + phi_a e_3) / phi_3`.
pub fn tangential_background(f: &InterfaceField, grid: &SlabGrid, c: f64) -> Result<[VectorField; 3]> {
    let map = build_map(f, grid)?;
    let [p1, p2, p3] = map.phi_gradient();
    let inv = p3.map(|j| c / j);
    let zero = BulkField::zeros(grid);
    Ok([
        VectorField::new(inv.clone(), zero.clone(), &inv * p1),
        VectorField::new(zero.clone(), inv.clone(), &inv * p2),
        VectorField::zeros(grid),
    ])
}

pub fn initial_data(spec: &ScenarioSpec, grid: &SlabGrid) -> Result<InitialData> {
    let (n1, n2) = (grid.n1, grid.n2);
    let k = spec.mode as f64;
    let single = |amp: f64| InterfaceField::from_fn(n1, n2, move |x, _| amp * (k * x).cos());
    Ok(match spec.scenario {
        Scenario::Rest => InitialData {
            f: InterfaceField::zeros(n1, n2),
            u: VectorField::zeros(grid),
            cols: zeros3(grid),
        },
        Scenario::ElasticMode => {
            let f = single(spec.amplitude);
            let cols = tangential_background(&f, grid, spec.elastic)?;
            InitialData {
                f,
                u: VectorField::zeros(grid),
                cols,
            }
        }
        Scenario::EpsMode => InitialData {
            f: single(spec.amplitude),
            u: VectorField::zeros(grid),
            cols: zeros3(grid),
        },
        Scenario::MixedRegions => {
            // psi = A sin x1 sin(pi (y + 1)), u = (d3 psi, 0, -d1 psi).
            let a = spec.flow;
            let u1 = BulkField::from_fn(grid, |x, _, y| a * PI * x.sin() * (PI * (y + 1.0)).cos());
            let u3 = BulkField::from_fn(grid, |x, _, y| -a * x.cos() * (PI * (y + 1.0)).sin());
            let c = spec.elastic;
            let zero = BulkField::zeros(grid);
            let cols = [
                VectorField::new(BulkField::constant(grid, c), zero.clone(), zero.clone()),
                VectorField::new(
                    zero.clone(),
                    BulkField::from_fn(grid, |x, _, _| c * x.sin()),
                    zero.clone(),
                ),
                VectorField::zeros(grid),
            ];
            InitialData {
                f: InterfaceField::zeros(n1, n2),
                u: VectorField::new(u1, zero, u3),
                cols,
            }
        }
    })
}

/// Default regions: Taylor condition everywhere for the single-mode and
/// rest presets is not expected, so `gamma1` is empty and `gamma2` is the
/// whole torus; the mixed preset splits the torus into bands.
pub fn default_regions(scenario: Scenario) -> (Region, Region) {
    match scenario {
        Scenario::MixedRegions => {
            let band = |c: f64, h: f64| Rect {
                x1: [c - h, c + h],
                x2: [0.0, 2.0 * PI],
            };
            (
                Region {
                    rects: vec![band(0.0, 0.7), band(PI, 0.7)],
                },
                Region {
                    rects: vec![band(0.5 * PI, 1.0), band(1.5 * PI, 1.0)],
                },
            )
        }
        Scenario::EpsMode => (Region::empty(), Region::empty()),
        _ => (Region::empty(), Region::all()),
    }
}

pub fn default_params(scenario: Scenario) -> Params {
    let (gamma1, gamma2) = default_regions(scenario);
    Params {
        gamma1,
        gamma2,
        ..Params::default()
    }
}

/// Build and prepare the preset state.
pub fn build(spec: &ScenarioSpec, grid: &SlabGrid, eps: f64, params: Params) -> Result<FlowState> {
    let data = initial_data(spec, grid)?;
    prepare_initial_data(&data.f, &data.u, &data.cols, eps, params)
}
