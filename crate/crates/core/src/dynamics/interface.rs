use crate::dn::apply_dn;
use crate::elliptic::harmonic_ext_dirichlet;
use crate::error::Result;
use crate::geometry::BulkField;
use crate::spectral::{combine, InterfaceField};

use super::{advect, d, d_along, FlowState, Pressure};

/// Right side of the `theta = d_t f` equation:
///
/// `-2 u_bar.grad' theta - u_bar_s u_bar_r d_s d_r f - N.grad p_ring
///  + (F_s . F_r) d_s d_r f + eps Lap' f`
///
/// with `s, r` horizontal and `F_s . F_r = sum_j F_sj F_rj` on the interface.
pub fn interface_theta_rhs(
    state: &FlowState,
    pressure: &Pressure,
    theta: &InterfaceField,
) -> InterfaceField {
    let ub = state.u.trace();
    let fm = state.deformation_traces();
    let [f1, f2] = state.f.gradient();
    let hess = [[d(&f1, 0), d(&f1, 1)], [d(&f2, 0), d(&f2, 1)]];
    let mut out = advect(&ub, theta).scale(-2.0);
    for s in 0..2 {
        for r in 0..2 {
            let mut coef = &ub[s] * &ub[r];
            coef = coef.scale(-1.0);
            for col in &fm {
                coef = &coef + &(&col[s] * &col[r]);
            }
            out = &out + &(&coef * &hess[s][r]);
        }
    }
    out = &out - &state.map.normal_flux(&pressure.p_ring);
    if state.eps > 0.0 {
        out = &out + &state.f.laplacian().scale(state.eps);
    }
    out
}

/// `q_i = d_i p_ring + d_3 p_ring H_f(d_i f)`, `i` zero-based horizontal.
pub fn q_field(state: &FlowState, pressure: &Pressure, i: usize) -> Result<BulkField> {
    let map = &state.map;
    let h = harmonic_ext_dirichlet(&d(&state.f, i), map)?;
    let mut q = map.derivative(&pressure.p_ring, i);
    q.axpy(1.0, &(&map.derivative(&pressure.p_ring, 2) * &h));
    Ok(q)
}

/// The seven terms of the second-order interface equation for
/// `D_t^2 d_i f`, kept separate for ablation studies. Index order:
///
/// 0. `d_3 p_ring N_f(d_i f)`
/// 1. `sum_k D_{F_k}^2 d_i f`
/// 2. `eps Lap' d_i f`
/// 3. `sum_k 2 d_i F_sk D_{F_k} d_s f`
/// 4. `-2 d_i u_bar_j D_t d_j f`
/// 5. `-N.grad q_i`
/// 6. `-d_1 d_i f d_1 p_bar - d_2 d_i f d_2 p_bar`
#[derive(Debug, Clone)]
pub struct AccelTerms {
    pub terms: [[InterfaceField; 7]; 2],
}

impl AccelTerms {
    pub const NAMES: [&'static str; 7] = [
        "taylor",
        "elastic",
        "capillary",
        "elastic_gradient",
        "transport",
        "pressure_q",
        "regularized_pressure",
    ];

    pub fn total(&self, i: usize) -> InterfaceField {
        self.total_without(i, None)
    }

    pub fn total_without(&self, i: usize, skip: Option<usize>) -> InterfaceField {
        let parts: Vec<(f64, &InterfaceField)> = self.terms[i]
            .iter()
            .enumerate()
            .filter(|(k, _)| Some(*k) != skip)
            .map(|(_, t)| (1.0, t))
            .collect();
        combine(&parts)
    }
}

pub fn interface_accel_rhs(state: &FlowState, pressure: &Pressure) -> Result<AccelTerms> {
    let map = &state.map;
    let (n1, n2) = state.f.dims();
    let ub = state.u.trace();
    let fm = state.deformation_traces();
    let theta = state.kinematic_velocity();
    let grad_f = state.f.gradient();
    let d3p = map.derivative(&pressure.p_ring, 2).trace();
    let dpbar = [
        map.derivative(&pressure.p_bar, 0).trace(),
        map.derivative(&pressure.p_bar, 1).trace(),
    ];
    let mut terms: Vec<[InterfaceField; 7]> = Vec::with_capacity(2);
    for i in 0..2 {
        let g = &grad_f[i];
        let t0 = &d3p * &apply_dn(g, map)?;
        let mut t1 = InterfaceField::zeros(n1, n2);
        for col in &fm {
            t1 = &t1 + &d_along(col, &d_along(col, g));
        }
        let t2 = if state.eps > 0.0 {
            g.laplacian().scale(state.eps)
        } else {
            InterfaceField::zeros(n1, n2)
        };
        let mut t3 = InterfaceField::zeros(n1, n2);
        for col in &fm {
            for s in 0..2 {
                let coef = d(&col[s], i).scale(2.0);
                t3 = &t3 + &(&coef * &d_along(col, &grad_f[s]));
            }
        }
        let mut t4 = InterfaceField::zeros(n1, n2);
        for j in 0..2 {
            let material = &d(&theta, j) + &advect(&ub, &grad_f[j]);
            t4 = &t4 - &(&d(&ub[j], i).scale(2.0) * &material);
        }
        let t5 = map.normal_flux(&q_field(state, pressure, i)?).scale(-1.0);
        let t6 = -&(&(&d(g, 0) * &dpbar[0]) + &(&d(g, 1) * &dpbar[1]));
        terms.push([t0, t1, t2, t3, t4, t5, t6]);
    }
    Ok(AccelTerms {
        terms: terms.try_into().expect("two components"),
    })
}
