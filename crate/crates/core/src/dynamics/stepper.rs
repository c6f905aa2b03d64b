use crate::error::{Error, Result};
use crate::geometry::VectorField;
use crate::spectral::InterfaceField;

use super::{
    assemble_pressure, bulk_rhs, divergence_residual, interface_theta_rhs, project_div,
    project_div_normal, BulkRhs, FlowState, Pressure, DRIFT_TOLERANCE,
};

/// Per-step bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub dt_bound: f64,
    pub reprojected: bool,
    /// Largest interior divergence of `u` and of the `F_j` after the step.
    pub div_u: f64,
    pub div_f: f64,
    /// Largest `|F_j . N_f|` on the interface after the step.
    pub normal_f: f64,
}

/// Explicit stability bound for the stiffest interface mode,
///
/// `0.5 min(dx / max|u|, 1 / (k (max|F| + sqrt(eps k)) + sqrt(a k)))`
///
/// with `k` the largest resolved wavenumber, `|F|` the Frobenius norm of the
/// horizontal rows of the interface deformation and `a` the maximum-principle
/// bound of the weight built from `-d_3 p`.
pub fn max_stable_dt(state: &FlowState, pressure: &Pressure) -> f64 {
    let grid = state.grid();
    let kmax = (0.5 * grid.n1 as f64).hypot(0.5 * grid.n2 as f64);
    let umax = state.u.max_abs();
    let adv = if umax > 0.0 {
        grid.dx() / umax
    } else {
        f64::INFINITY
    };
    let fm = state.deformation_traces();
    let fmax = (0..state.f.len())
        .map(|p| {
            let mut s = 0.0;
            for col in &fm {
                s += col[0].values()[p].powi(2) + col[1].values()[p].powi(2);
            }
            s.sqrt()
        })
        .fold(0.0, f64::max);
    let taylor = state.map.derivative(&pressure.p, 2).trace().scale(-1.0);
    let c0 = state.params.c0;
    let c_tilde = (c0 - taylor.min()).max(0.0) + c0;
    let a_max = (c_tilde + taylor.max()).max(c0).max(0.0);
    let omega = kmax * (fmax + (state.eps * kmax).sqrt()) + (a_max * kmax).sqrt();
    let wave = if omega > 0.0 { 1.0 / omega } else { f64::INFINITY };
    0.5 * adv.min(wave)
}

#[derive(Clone)]
struct Fields {
    f: InterfaceField,
    theta: Option<InterfaceField>,
    u: VectorField,
    fm: [VectorField; 3],
}

impl Fields {
    fn of(state: &FlowState, theta: Option<&InterfaceField>) -> Self {
        Self {
            f: state.f.clone(),
            theta: theta.cloned(),
            u: state.u.clone(),
            fm: state.deformation.clone(),
        }
    }

    fn axpy(&mut self, s: f64, k: &Fields) {
        self.f = &self.f + &k.f.scale(s);
        if let (Some(a), Some(b)) = (self.theta.as_mut(), k.theta.as_ref()) {
            *a = &*a + &b.scale(s);
        }
        self.u.axpy(s, &k.u);
        for (a, b) in self.fm.iter_mut().zip(&k.fm) {
            a.axpy(s, b);
        }
    }

    fn into_state(self, base: &FlowState, t: f64) -> Result<(FlowState, Option<InterfaceField>)> {
        let s = FlowState::new(t, self.f, self.u, self.fm, base.eps, base.params.clone())?;
        Ok((s, self.theta))
    }
}

fn derivative(state: &FlowState, theta: Option<&InterfaceField>) -> Result<(Fields, Pressure)> {
    let pressure = assemble_pressure(state)?;
    let (f_t, theta_t) = match theta {
        Some(th) => (th.clone(), Some(interface_theta_rhs(state, &pressure, th))),
        None => (state.kinematic_velocity(), None),
    };
    let BulkRhs { df, du, dfm } = bulk_rhs(state, &pressure, &f_t);
    Ok((
        Fields {
            f: df,
            theta: theta_t,
            u: du,
            fm: dfm,
        },
        pressure,
    ))
}

fn rk4(
    state: &FlowState,
    theta: Option<&InterfaceField>,
    dt: f64,
    check_bound: bool,
) -> Result<(FlowState, Option<InterfaceField>, StepInfo)> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let (k1, p1) = derivative(state, theta)?;
    let bound = max_stable_dt(state, &p1);
    if check_bound && dt > bound {
        return Err(Error::TimeStepTooLarge { dt, bound });
    }
    let base = Fields::of(state, theta);
    let stage = |k: &Fields, h: f64| -> Result<(FlowState, Option<InterfaceField>)> {
        let mut s = base.clone();
        s.axpy(h, k);
        s.into_state(state, state.t + h)
    };
    let (s2, th2) = stage(&k1, 0.5 * dt)?;
    let (k2, _) = derivative(&s2, th2.as_ref())?;
    let (s3, th3) = stage(&k2, 0.5 * dt)?;
    let (k3, _) = derivative(&s3, th3.as_ref())?;
    let (s4, th4) = stage(&k3, dt)?;
    let (k4, _) = derivative(&s4, th4.as_ref())?;
    let mut next = base.clone();
    next.axpy(dt / 6.0, &k1);
    next.axpy(dt / 3.0, &k2);
    next.axpy(dt / 3.0, &k3);
    next.axpy(dt / 6.0, &k4);
    next.f = next.f.without_mean();
    let (mut new_state, new_theta) = next.into_state(state, state.t + dt)?;
    let info = maintain_constraints(&mut new_state, bound)?;
    Ok((new_state, new_theta, info))
}

fn constraint_residuals(state: &FlowState) -> (f64, f64, f64) {
    let map = &state.map;
    let div_u = divergence_residual(&state.u, map);
    let div_f = state
        .deformation
        .iter()
        .map(|c| divergence_residual(c, map))
        .fold(0.0, f64::max);
    let normal_f = state
        .deformation
        .iter()
        .map(|c| map.normal_component(c).max_abs())
        .fold(0.0, f64::max);
    (div_u, div_f, normal_f)
}

fn maintain_constraints(state: &mut FlowState, bound: f64) -> Result<StepInfo> {
    let (mut div_u, mut div_f, mut normal_f) = constraint_residuals(state);
    let drift = div_u.max(div_f).max(normal_f) > DRIFT_TOLERANCE;
    let reprojected = state.params.reproject && drift;
    if reprojected {
        let map = &state.map;
        let (n1, n2) = state.f.dims();
        let zero = InterfaceField::zeros(n1, n2);
        state.u = project_div(&state.u, map)?;
        let cols: Vec<VectorField> = state
            .deformation
            .iter()
            .map(|c| project_div_normal(c, map, &zero))
            .collect::<Result<_>>()?;
        state.deformation = cols.try_into().expect("three columns");
        (div_u, div_f, normal_f) = constraint_residuals(state);
    }
    Ok(StepInfo {
        dt_bound: bound,
        reprojected,
        div_u,
        div_f,
        normal_f,
    })
}

/// One RK4 step of the kinematic formulation (`d_t f = u_bar . N_f`),
/// rebuilding the coordinate map at every stage. Fails with
/// `TimeStepTooLarge` when `dt` exceeds [`max_stable_dt`].
pub fn step(state: &FlowState, dt: f64) -> Result<(FlowState, StepInfo)> {
    rk4(state, None, dt, true).map(|(s, _, i)| (s, i))
}

/// State of the second-order interface formulation: `theta = d_t f` is
/// evolved by its own equation instead of being read off the velocity.
#[derive(Debug, Clone)]
pub struct ThetaState {
    pub state: FlowState,
    pub theta: InterfaceField,
}

impl ThetaState {
    pub fn from_state(state: FlowState) -> Self {
        let theta = state.kinematic_velocity();
        Self { state, theta }
    }
}

/// One RK4 step of the `(theta, f, u, F)` formulation.
pub fn step_theta(ts: &ThetaState, dt: f64) -> Result<(ThetaState, StepInfo)> {
    let (state, theta, info) = rk4(&ts.state, Some(&ts.theta), dt, true)?;
    let theta = theta.expect("theta stage").without_mean();
    Ok((ThetaState { state, theta }, info))
}
