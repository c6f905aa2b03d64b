use crate::error::Result;
use crate::geometry::VectorField;
use crate::spectral::InterfaceField;

use super::{project_div, project_div_normal, FlowState, Params};

/// Regularized initial data: `f^eps = f0` mollified at scale `eps`, and
/// `(u0, F0)` carried to the new domain by composing harmonic coordinates
/// (on the reference slab this keeps the stored arrays) and then projected:
/// `u` onto divergence-free fields, each `F_j` onto divergence-free fields
/// tangent to the new interface.
pub fn prepare_initial_data(
    f0: &InterfaceField,
    u0: &VectorField,
    f_cols: &[VectorField; 3],
    eps: f64,
    params: Params,
) -> Result<FlowState> {
    let f = if eps > 0.0 { f0.mollify(eps)? } else { f0.clone() };
    let state = FlowState::new(0.0, f, u0.clone(), f_cols.clone(), eps, params)?;
    let map = &state.map;
    let (n1, n2) = state.f.dims();
    let zero = InterfaceField::zeros(n1, n2);
    let u = project_div(u0, map)?;
    let cols = [
        project_div_normal(&f_cols[0], map, &zero)?,
        project_div_normal(&f_cols[1], map, &zero)?,
        project_div_normal(&f_cols[2], map, &zero)?,
    ];
    Ok(FlowState {
        u,
        deformation: cols,
        ..state
    })
}
