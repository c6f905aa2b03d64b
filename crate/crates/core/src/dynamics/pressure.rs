use crate::dn::invert_dn_neumann_projected;
use crate::elliptic::{harmonic_ext_neumann, poisson_dirichlet, trace_product};
use crate::error::Result;
use crate::geometry::BulkField;
use crate::spectral::InterfaceField;

use super::FlowState;

/// Pressure split `p = p_ring + p_bar`: `p_ring` carries the bulk source with
/// zero interface value, `p_bar = -eps H-bar_f w` carries the regularized
/// interface value, `w = N-bar_f^{-1} Lap' f`.
#[derive(Debug, Clone)]
pub struct Pressure {
    pub p: BulkField,
    pub p_ring: BulkField,
    pub p_bar: BulkField,
    pub w: InterfaceField,
}

/// Bulk pressure source `-tr(grad u grad u) + sum_j tr(grad F_j grad F_j)`.
pub(crate) fn pressure_source(state: &FlowState) -> BulkField {
    let map = &state.map;
    let gu = map.jacobian_matrix(&state.u);
    let mut rhs = trace_product(&gu, &gu).scale(-1.0);
    for col in &state.deformation {
        let g = map.jacobian_matrix(col);
        rhs.axpy(1.0, &trace_product(&g, &g));
    }
    rhs
}

pub fn assemble_pressure(state: &FlowState) -> Result<Pressure> {
    let map = &state.map;
    let p_ring = poisson_dirichlet(&pressure_source(state), map)?;
    let (n1, n2) = state.f.dims();
    let (p_bar, w) = if state.eps > 0.0 {
        let w = invert_dn_neumann_projected(&state.f.laplacian(), map)?;
        (harmonic_ext_neumann(&w, map)?.scale(-state.eps), w)
    } else {
        (BulkField::zeros(map.grid()), InterfaceField::zeros(n1, n2))
    };
    let p = (&p_ring + &p_bar).with_map_hash(map.hash());
    Ok(Pressure { p, p_ring, p_bar, w })
}
