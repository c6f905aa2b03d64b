use crate::geometry::{flat_extension, BulkField, SlabGrid, VectorField};
use crate::spectral::InterfaceField;

use super::{FlowState, Pressure};

/// Reference-frame time derivatives of the state.
#[derive(Debug, Clone)]
pub struct BulkRhs {
    pub df: InterfaceField,
    pub du: VectorField,
    pub dfm: [VectorField; 3],
}

/// `d_t phi` for the interface velocity `f_t`; the map is linear in `f`.
pub fn grid_velocity(f_t: &InterfaceField, grid: &SlabGrid) -> BulkField {
    flat_extension(f_t, grid)
}

/// Bulk equations in physical form,
///
/// `u_t = -u.grad u - grad p + sum_j (F_j.grad) F_j`,
/// `F_j,t = -u.grad F_j + (F_j.grad) u`,
///
/// converted to reference-frame derivatives by adding `phi_t d_3 v`, where
/// `phi_t` is the grid velocity induced by `f_t`. Bottom values of `u_3`
/// and `F_3j` are held fixed.
pub fn bulk_rhs(state: &FlowState, pressure: &Pressure, f_t: &InterfaceField) -> BulkRhs {
    let map = &state.map;
    let grid = map.grid();
    let phi_t = grid_velocity(f_t, grid);
    let u = &state.u;
    let gu = map.jacobian_matrix(u);
    let gf: Vec<[VectorField; 3]> = state
        .deformation
        .iter()
        .map(|c| map.jacobian_matrix(c))
        .collect();
    let gp = map.gradient(&pressure.p);

    // (w . grad) of a component whose gradient is `g`.
    let along = |w: &VectorField, g: &VectorField| {
        let mut out = &w.c[0] * &g.c[0];
        out.axpy(1.0, &(&w.c[1] * &g.c[1]));
        out.axpy(1.0, &(&w.c[2] * &g.c[2]));
        out
    };
    let ale = |rate: BulkField, g: &VectorField| &rate + &(&phi_t * &g.c[2]);

    let mut du = Vec::with_capacity(3);
    for i in 0..3 {
        let mut r = along(u, &gu[i]).scale(-1.0);
        r.axpy(-1.0, &gp.c[i]);
        for (j, col) in state.deformation.iter().enumerate() {
            r.axpy(1.0, &along(col, &gf[j][i]));
        }
        du.push(ale(r, &gu[i]));
    }
    let mut dfm = Vec::with_capacity(3);
    for (j, col) in state.deformation.iter().enumerate() {
        let mut comps = Vec::with_capacity(3);
        for i in 0..3 {
            let mut r = along(u, &gf[j][i]).scale(-1.0);
            r.axpy(1.0, &along(col, &gu[i]));
            comps.push(ale(r, &gf[j][i]));
        }
        let [a, b, mut c]: [BulkField; 3] = comps.try_into().expect("three components");
        c.layer_mut(0).fill(0.0);
        dfm.push(VectorField::new(a, b, c));
    }
    let [a, b, mut c]: [BulkField; 3] = du.try_into().expect("three components");
    c.layer_mut(0).fill(0.0);
    BulkRhs {
        df: f_t.clone(),
        du: VectorField::new(a, b, c),
        dfm: dfm.try_into().expect("three columns"),
    }
}
