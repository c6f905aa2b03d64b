//! Exact surface identities, each returned as a defect field (left side
//! minus right side) so callers can assert it vanishes.

use crate::spectral::{combine, InterfaceField};

use super::{advect, d, d_along, FlowState};

/// `[D_t, d_i] g + d_i u_bar_j d_j g` for `g` with time derivative `g_t`.
pub fn commutator_dt_partial(
    g: &InterfaceField,
    g_t: &InterfaceField,
    u_bar: &[InterfaceField; 3],
    i: usize,
) -> InterfaceField {
    let dtg = g_t + &advect(u_bar, g);
    let lhs = &(&d(g_t, i) + &advect(u_bar, &d(g, i))) - &d(&dtg, i);
    let rhs = combine(&[
        (-1.0, &(&d(&u_bar[0], i) * &d(g, 0))),
        (-1.0, &(&d(&u_bar[1], i) * &d(g, 1))),
    ]);
    &lhs - &rhs
}

/// `[D_t, D_{F_k}] g` when the column `F_k` is transported,
/// `D_t F_jk = F_lk d_l u_bar_j`; vanishes identically.
pub fn commutator_dt_dfk(
    g: &InterfaceField,
    g_t: &InterfaceField,
    u_bar: &[InterfaceField; 3],
    col: &[InterfaceField; 3],
) -> InterfaceField {
    // d_t F_jk from the transport law.
    let col_t: Vec<InterfaceField> = (0..3)
        .map(|j| &d_along(col, &u_bar[j]) - &advect(u_bar, &col[j]))
        .collect();
    let col_t = [col_t[0].clone(), col_t[1].clone(), col_t[2].clone()];
    let dfg = d_along(col, g);
    let dfg_t = &d_along(&col_t, g) + &d_along(col, g_t);
    let dt_dfg = &dfg_t + &advect(u_bar, &dfg);
    let dtg = g_t + &advect(u_bar, g);
    &dt_dfg - &d_along(col, &dtg)
}

/// `[d_i, D_{F_k}] g - d_i F_jk d_j g`.
pub fn commutator_partial_dfk(
    g: &InterfaceField,
    col: &[InterfaceField; 3],
    i: usize,
) -> InterfaceField {
    let lhs = &d(&d_along(col, g), i) - &d_along(col, &d(g, i));
    let dcol = [d(&col[0], i), d(&col[1], i), d(&col[2], i)];
    &lhs - &d_along(&dcol, g)
}

/// `D_t d_i f - d_i u_bar . N_f` along the kinematic flow `d_t f = u_bar . N_f`.
pub fn kinematic_identity_defect(state: &FlowState, i: usize) -> InterfaceField {
    let ub = state.u.trace();
    let theta = state.kinematic_velocity();
    let fi = d(&state.f, i);
    let lhs = &d(&theta, i) + &advect(&ub, &fi);
    let [f1, f2] = state.f.gradient();
    let rhs = combine(&[
        (-1.0, &(&d(&ub[0], i) * &f1)),
        (-1.0, &(&d(&ub[1], i) * &f2)),
        (1.0, &d(&ub[2], i)),
    ]);
    &lhs - &rhs
}

/// `F_sk d_i d_s f - d_i F_k . N_f` for column `k`; vanishes when
/// `F_k . N_f = 0` on the interface.
pub fn elastic_identity_defect(state: &FlowState, k: usize, i: usize) -> InterfaceField {
    let col = &state.deformation_traces()[k];
    let fi = d(&state.f, i);
    let lhs = d_along(col, &fi);
    let [f1, f2] = state.f.gradient();
    let rhs = combine(&[
        (-1.0, &(&d(&col[0], i) * &f1)),
        (-1.0, &(&d(&col[1], i) * &f2)),
        (1.0, &d(&col[2], i)),
    ]);
    &lhs - &rhs
}
