use crate::dn::{invert_dn_neumann_projected, material_dn_commutator};
use crate::elliptic::{solve, BottomBc};
use crate::error::{Error, Result};
use crate::geometry::{BulkField, VectorField};
use crate::spectral::{combine, InterfaceField};

use super::{advect, assemble_pressure, d, interface_accel_rhs, FlowState};

/// Which term of the interface equation to drop when forming the residual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Ablation {
    #[default]
    None,
    /// Index into [`super::AccelTerms::NAMES`].
    Drop(usize),
}

/// Relative `L^2` residual of the second-order interface equation at the
/// middle state of a uniformly spaced trajectory:
///
/// `sum_i |D_t^2 d_i f - rhs_i|^2 / sum_i |D_t^2 d_i f|^2`, square-rooted,
///
/// where `D_t^2 g = g_tt + (d_t u_bar_j) d_j g + 2 u_bar_j d_j g_t +
/// u_bar_k d_k (u_bar_j d_j g)` and the time derivatives use fourth-order
/// centered stencils over the five states around the middle.
pub fn evo_residual(trajectory: &[FlowState], ablation: Ablation) -> Result<f64> {
    let n = trajectory.len();
    if n < 5 {
        return Err(Error::InsufficientHistory { needed: 5, got: n });
    }
    let m = n / 2;
    let win = &trajectory[m - 2..=m + 2];
    let dt = win[1].t - win[0].t;
    for w in win.windows(2) {
        let h = w[1].t - w[0].t;
        if !(dt > 0.0) || (h - dt).abs() > 1e-9 * dt.max(1.0) {
            return Err(Error::InvalidParameter(
                "trajectory is not uniformly spaced in time".into(),
            ));
        }
    }
    if let Ablation::Drop(k) = ablation {
        if k >= 7 {
            return Err(Error::InvalidParameter(format!("no interface term {k}")));
        }
    }
    let first = |v: [&InterfaceField; 5]| {
        combine(&[(1.0, v[0]), (-8.0, v[1]), (8.0, v[3]), (-1.0, v[4])]).scale(1.0 / (12.0 * dt))
    };
    let second = |v: [&InterfaceField; 5]| {
        combine(&[(-1.0, v[0]), (16.0, v[1]), (-30.0, v[2]), (16.0, v[3]), (-1.0, v[4])])
            .scale(1.0 / (12.0 * dt * dt))
    };
    let ubs: Vec<[InterfaceField; 3]> = win.iter().map(|s| s.u.trace()).collect();
    let ub = &ubs[2];
    let ub_t: Vec<InterfaceField> = (0..2)
        .map(|j| first([&ubs[0][j], &ubs[1][j], &ubs[2][j], &ubs[3][j], &ubs[4][j]]))
        .collect();
    let mid = &win[2];
    let pressure = assemble_pressure(mid)?;
    let terms = interface_accel_rhs(mid, &pressure)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..2 {
        let gs: Vec<InterfaceField> = win.iter().map(|s| d(&s.f, i)).collect();
        let g = &gs[2];
        let g_t = first([&gs[0], &gs[1], &gs[2], &gs[3], &gs[4]]);
        let g_tt = second([&gs[0], &gs[1], &gs[2], &gs[3], &gs[4]]);
        let ub_t3 = [ub_t[0].clone(), ub_t[1].clone(), ub[2].clone()];
        let lhs = combine(&[
            (1.0, &g_tt),
            (1.0, &advect(&ub_t3, g)),
            (2.0, &advect(ub, &g_t)),
            (1.0, &advect(ub, &advect(ub, g))),
        ]);
        let skip = match ablation {
            Ablation::None => None,
            Ablation::Drop(k) => Some(k),
        };
        let rhs = terms.total_without(i, skip);
        num += (&lhs - &rhs).inner(&(&lhs - &rhs));
        den += lhs.inner(&lhs);
    }
    if den == 0.0 {
        return Ok(num.sqrt());
    }
    Ok((num / den).sqrt())
}

/// `D_t p` (physical material derivative) from its boundary-value problem
///
/// `Lap D_t p = D_t R + Lap u . grad p + 2 grad u : grad^2 p`,
///
/// `R = -tr(grad u grad u) + sum_k tr(grad F_k grad F_k)`, with interface
/// value `-eps D_t w` (`w = N-bar^{-1} Lap' f`, expanded through the
/// `[D_t, N-bar]` commutator) and bottom flux `d3 u_1 d1 p + d3 u_2 d2 p`.
pub fn material_pressure_derivative(state: &FlowState) -> Result<BulkField> {
    let map = &state.map;
    let grid = map.grid();
    let pressure = assemble_pressure(state)?;
    let p = &pressure.p;
    let u = &state.u;
    let gu = map.jacobian_matrix(u);
    let gp = map.gradient(p);
    let hp = map.jacobian_matrix(&gp);
    let cols = &state.deformation;
    let gf: Vec<[VectorField; 3]> = cols.iter().map(|c| map.jacobian_matrix(c)).collect();

    // a_i = D_t u_i, b_ik = D_t F_ik.
    let along = |w: &VectorField, g: &VectorField| {
        let mut out = &w.c[0] * &g.c[0];
        out.axpy(1.0, &(&w.c[1] * &g.c[1]));
        out.axpy(1.0, &(&w.c[2] * &g.c[2]));
        out
    };
    let mut acc = Vec::with_capacity(3);
    for i in 0..3 {
        let mut a = gp.c[i].scale(-1.0);
        for (k, col) in cols.iter().enumerate() {
            a.axpy(1.0, &along(col, &gf[k][i]));
        }
        acc.push(a);
    }
    let acc = VectorField::new(acc[0].clone(), acc[1].clone(), acc[2].clone());
    let ga = map.jacobian_matrix(&acc);

    let mut rhs = BulkField::zeros(grid);
    for i in 0..3 {
        for j in 0..3 {
            // D_t d_j u_i = d_j a_i - d_j u_s d_s u_i
            let mut dtdu = ga[i].c[j].clone();
            for s in 0..3 {
                dtdu.axpy(-1.0, &(&gu[s].c[j] * &gu[i].c[s]));
            }
            rhs.axpy(-2.0, &(&dtdu * &gu[j].c[i]));
            rhs.axpy(2.0, &(&gu[i].c[j] * &hp[i].c[j]));
        }
    }
    for (k, col) in cols.iter().enumerate() {
        let mut b = Vec::with_capacity(3);
        for i in 0..3 {
            b.push(along(col, &gu[i]));
        }
        let b = VectorField::new(b[0].clone(), b[1].clone(), b[2].clone());
        let gb = map.jacobian_matrix(&b);
        for i in 0..3 {
            for j in 0..3 {
                let mut dtdf = gb[i].c[j].clone();
                for s in 0..3 {
                    dtdf.axpy(-1.0, &(&gu[s].c[j] * &gf[k][i].c[s]));
                }
                rhs.axpy(2.0, &(&dtdf * &gf[k][j].c[i]));
            }
        }
    }
    for i in 0..3 {
        rhs.axpy(1.0, &(&map.laplacian(&u.c[i]) * &gp.c[i]));
    }

    let (n1, n2) = state.f.dims();
    let top = if state.eps > 0.0 {
        let ub = u.trace();
        let theta = state.kinematic_velocity();
        let lap_f = state.f.laplacian();
        let comm = material_dn_commutator(&pressure.w, u, map)?;
        let data = combine(&[(1.0, &theta.laplacian()), (1.0, &advect(&ub, &lap_f)), (-1.0, &comm)]);
        let dtw = invert_dn_neumann_projected(&data, map)?;
        let mean = advect(&ub, &pressure.w).mean();
        dtw.map(|v| -state.eps * (v + mean))
    } else {
        InterfaceField::zeros(n1, n2)
    };
    let bottom = &(&gu[0].c[2].bottom_trace() * &gp.c[0].bottom_trace())
        + &(&gu[1].c[2].bottom_trace() * &gp.c[1].bottom_trace());
    solve(map, &rhs, &top, BottomBc::Neumann, &bottom)
}
