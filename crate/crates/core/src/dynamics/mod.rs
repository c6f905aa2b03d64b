//! The evolution system: state, pressure, projections, interface equations,
//! the `D_t p` problem and RK4 time stepping on the reference slab.
//!
//! Bulk fields are stored against reference coordinates (ALE form); every
//! spatial derivative below is a physical derivative taken through the
//! current coordinate map.

mod evo;
mod identities;
mod initial;
mod interface;
mod pressure;
mod projection;
mod rhs;
pub mod scenarios;
mod stepper;

pub use evo::{evo_residual, material_pressure_derivative, Ablation};
pub use identities::{
    commutator_dt_dfk, commutator_dt_partial, commutator_partial_dfk, elastic_identity_defect,
    kinematic_identity_defect,
};
pub use initial::prepare_initial_data;
pub use interface::{interface_accel_rhs, interface_theta_rhs, q_field, AccelTerms};
pub use pressure::{assemble_pressure, Pressure};
pub use projection::{divergence_residual, project_div, project_div_normal};
pub use rhs::{bulk_rhs, grid_velocity, BulkRhs};
pub use stepper::{max_stable_dt, step, step_theta, StepInfo, ThetaState};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{build_map, CoordinateMap, SlabGrid, VectorField};
use crate::spectral::{Axis, InterfaceField};
use crate::stability::Region;

/// Threshold on the divergence / normal-trace residual that triggers
/// re-projection.
pub const DRIFT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Sobolev index of the energy functionals.
    pub s: u32,
    /// Stability margin; also sets the ceiling `|f| <= 1 - c0`.
    pub c0: f64,
    /// Region where the Taylor sign condition is required.
    pub gamma1: Region,
    /// Region where the non-collinearity condition is required.
    pub gamma2: Region,
    /// Re-project `u`, `F` when their divergence drifts past
    /// [`DRIFT_TOLERANCE`].
    pub reproject: bool,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            s: 4,
            c0: 0.1,
            gamma1: Region::empty(),
            gamma2: Region::all(),
            reproject: true,
        }
    }
}

/// Complete simulation state. `deformation[j]` is the column `F_j`, so the
/// matrix entry `F_ij` is `deformation[j].c[i]`.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub t: f64,
    pub f: InterfaceField,
    pub u: VectorField,
    pub deformation: [VectorField; 3],
    pub eps: f64,
    pub map: CoordinateMap,
    pub params: Params,
}

impl FlowState {
    /// Assemble a state, building the coordinate map from `f`.
    pub fn new(
        t: f64,
        f: InterfaceField,
        u: VectorField,
        deformation: [VectorField; 3],
        eps: f64,
        params: Params,
    ) -> Result<Self> {
        if !(eps >= 0.0) {
            return Err(Error::InvalidParameter(format!("eps must be >= 0, got {eps}")));
        }
        let grid = u.grid().clone();
        for col in &deformation {
            if col.grid() != &grid {
                return Err(Error::GridMismatch("deformation columns vs velocity".into()));
            }
        }
        check_ceiling(&f, params.c0)?;
        let map = build_map(&f, &grid)?;
        Ok(Self {
            t,
            f,
            u,
            deformation,
            eps,
            map,
            params,
        })
    }

    pub fn grid(&self) -> &SlabGrid {
        self.map.grid()
    }

    /// Interface traces arranged as `out[j][i] = F_ij` on the interface.
    pub fn deformation_traces(&self) -> [[InterfaceField; 3]; 3] {
        [
            self.deformation[0].trace(),
            self.deformation[1].trace(),
            self.deformation[2].trace(),
        ]
    }

    /// `d_t f = u_bar . N_f`.
    pub fn kinematic_velocity(&self) -> InterfaceField {
        self.map.normal_component(&self.u)
    }
}

pub(crate) fn check_ceiling(f: &InterfaceField, c0: f64) -> Result<()> {
    let limit = 1.0 - c0;
    let max_abs = f.max_abs();
    if !(max_abs <= limit) {
        return Err(Error::CeilingViolated { max_abs, limit });
    }
    Ok(())
}

/// Horizontal derivative by zero-based index.
pub(crate) fn d(g: &InterfaceField, i: usize) -> InterfaceField {
    g.horizontal_derivative(if i == 0 { Axis::X1 } else { Axis::X2 })
}

/// `D_{F_k} g = F_1k d_1 g + F_2k d_2 g` with `col = [F_1k, F_2k, F_3k]`.
pub(crate) fn d_along(col: &[InterfaceField; 3], g: &InterfaceField) -> InterfaceField {
    let [g1, g2] = g.gradient();
    &(&col[0] * &g1) + &(&col[1] * &g2)
}

/// `u_bar_1 d_1 g + u_bar_2 d_2 g`.
pub(crate) fn advect(u_bar: &[InterfaceField; 3], g: &InterfaceField) -> InterfaceField {
    d_along(u_bar, g)
}
