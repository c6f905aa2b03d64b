//! Energy functionals: the regularized boundary/bulk energy, the initial-data
//! sizes before and after regularization, and the difference energy of two
//! solutions compared on the common reference slab.

use serde::Serialize;

use crate::dynamics::{assemble_pressure, FlowState, Pressure};
use crate::elliptic::{harmonic_ext_dirichlet, weight_field};
use crate::error::{Error, Result};
use crate::geometry::{build_map, BulkField, CoordinateMap, SlabGrid, VectorField};
use crate::spectral::{Axis, InterfaceField};
use crate::stability::cutoff;

/// Components of the energy; `capillary` is the `eps`-weighted term.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct EnergyReport {
    /// `sum_i |D_t <grad'>^r d_i f|^2`.
    pub material: f64,
    /// `sum_i sum_k |D_{F_k} <grad'>^r d_i f|^2`.
    pub elastic: f64,
    /// `eps sum_i |d_i f|^2_{H^{s-1/2}}` (zero in the difference energy).
    pub capillary: f64,
    /// `sum_i int a~ |grad H_f <grad'>^r d_i f|^2`.
    pub weighted: f64,
    /// Same integral without the weight.
    pub extension: f64,
    pub weight_min: f64,
    pub weight_max: f64,
    /// `|f|^2`.
    pub height: f64,
    /// `|d_t f|^2`.
    pub rate: f64,
    /// Bulk Sobolev norms squared.
    pub velocity: f64,
    pub deformation: f64,
}

impl EnergyReport {
    /// Column names matching [`EnergyReport::values`].
    pub const COLUMNS: [&'static str; 8] = [
        "e_material",
        "e_elastic",
        "e_capillary",
        "e_weighted",
        "e_height",
        "e_rate",
        "e_velocity",
        "e_deformation",
    ];

    pub fn values(&self) -> [f64; 8] {
        [
            self.material,
            self.elastic,
            self.capillary,
            self.weighted,
            self.height,
            self.rate,
            self.velocity,
            self.deformation,
        ]
    }

    pub fn total(&self) -> f64 {
        self.values().iter().sum()
    }

    /// The energy without the regularization term.
    pub fn total_unregularized(&self) -> f64 {
        self.total() - self.capillary
    }
}

/// `||v||^2_{H^m}` as the sum over all derivative orders `<= m` of the
/// physical-domain `L^2` norms of mapped derivatives, multi-indices weighted
/// by their multinomial counts.
pub fn bulk_sobolev_sq(v: &BulkField, map: &CoordinateMap, m: u32) -> f64 {
    let mut total = map.integrate(&(v * v));
    let mut level: Vec<(usize, [u32; 3], BulkField)> = vec![(0, [0; 3], v.clone())];
    let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
    for order in 1..=m {
        let mut next = Vec::new();
        for (last, counts, field) in &level {
            for i in *last..3 {
                let d = map.derivative(field, i);
                let mut c = *counts;
                c[i] += 1;
                let w = fact(order) / (fact(c[0]) * fact(c[1]) * fact(c[2]));
                total += w * map.integrate(&(&d * &d));
                next.push((i, c, d));
            }
        }
        level = next;
    }
    total
}

pub fn vector_sobolev_sq(v: &VectorField, map: &CoordinateMap, m: u32) -> f64 {
    v.c.iter().map(|c| bulk_sobolev_sq(c, map, m)).sum()
}

fn columns_sobolev_sq(cols: &[VectorField; 3], map: &CoordinateMap, m: u32) -> f64 {
    cols.iter().map(|c| vector_sobolev_sq(c, map, m)).sum()
}

/// Weight `a~` for a state: harmonic, equal to `-d_3 p` on `gamma1` (where
/// the cutoff vanishes), lifted by `cutoff * c~` elsewhere, `c0` at the
/// bottom, with `c~ = max(0, c0 - min(-d_3 p)) + c0`.
pub fn state_weight(state: &FlowState, pressure: &Pressure) -> Result<BulkField> {
    let (n1, n2) = state.f.dims();
    let taylor = state.map.derivative(&pressure.p, 2).trace().scale(-1.0);
    let c0 = state.params.c0;
    let phi = cutoff(&state.params.gamma1, n1, n2);
    let c_tilde = (c0 - taylor.min()).max(0.0) + c0;
    // Inside gamma1 the Taylor coefficient may sit between c0/2 and c0;
    // floor the data there so the weight stays above c0.
    let floored = taylor.zip_map(&phi, |a, p| a.max(c0 - p * c_tilde));
    weight_field(&floored, &phi, c_tilde, c0, &state.map)
}

struct Boundary {
    material: f64,
    elastic: f64,
    weighted: f64,
    extension: f64,
}

/// Boundary part for a profile `h` (either `f` or a difference of heights)
/// with time derivative `h_t`, transported by `state`'s flow.
fn boundary_terms(
    state: &FlowState,
    weight: &BulkField,
    h: &InterfaceField,
    h_t: &InterfaceField,
    order: f64,
) -> Result<Boundary> {
    let ub = state.u.trace();
    let cols = state.deformation_traces();
    let map = &state.map;
    let mut out = Boundary {
        material: 0.0,
        elastic: 0.0,
        weighted: 0.0,
        extension: 0.0,
    };
    for axis in Axis::both() {
        let g = h.horizontal_derivative(axis).bessel_multiplier(order);
        let g_t = h_t.horizontal_derivative(axis).bessel_multiplier(order);
        let [g1, g2] = g.gradient();
        let dtg = &(&g_t + &(&ub[0] * &g1)) + &(&ub[1] * &g2);
        out.material += dtg.inner(&dtg);
        for col in &cols {
            let dg = &(&col[0] * &g1) + &(&col[1] * &g2);
            out.elastic += dg.inner(&dg);
        }
        let ext = harmonic_ext_dirichlet(&g, map)?;
        let grad = map.gradient(&ext);
        let sq = grad.dot(&grad);
        out.weighted += map.integrate(&(weight * &sq));
        out.extension += map.integrate(&sq);
    }
    Ok(out)
}

/// Regularized energy of a state at Sobolev index `s`.
pub fn energy_es_eps(state: &FlowState, s: u32) -> Result<EnergyReport> {
    if s < 4 {
        return Err(Error::InvalidParameter(format!("energy index s = {s} < 4")));
    }
    let pressure = assemble_pressure(state)?;
    let weight = state_weight(state, &pressure)?;
    let theta = state.kinematic_velocity();
    let sf = s as f64;
    let b = boundary_terms(state, &weight, &state.f, &theta, sf - 1.5)?;
    let capillary = if state.eps > 0.0 {
        Axis::both()
            .iter()
            .map(|&a| state.f.horizontal_derivative(a).sobolev_norm(sf - 0.5).powi(2))
            .sum::<f64>()
            * state.eps
    } else {
        0.0
    };
    Ok(EnergyReport {
        material: b.material,
        elastic: b.elastic,
        capillary,
        weighted: b.weighted,
        extension: b.extension,
        weight_min: weight.min(),
        weight_max: weight.max(),
        height: state.f.inner(&state.f),
        rate: theta.inner(&theta),
        velocity: vector_sobolev_sq(&state.u, &state.map, s),
        deformation: columns_sobolev_sq(&state.deformation, &state.map, s),
    })
}

/// `M^s_0 = |f0|^2_{H^s} + sum_k |D_{F0_k} f0|^2_{H^{s-1/2}} + ||u0||^2_{H^s}
/// + ||F0||^2_{H^s}` for raw data on the domain bounded by `f0`.
pub fn initial_size(
    f0: &InterfaceField,
    u0: &VectorField,
    cols: &[VectorField; 3],
    grid: &SlabGrid,
    s: u32,
) -> Result<f64> {
    let map = build_map(f0, grid)?;
    let sf = s as f64;
    let [g1, g2] = f0.gradient();
    let mut total = f0.sobolev_norm(sf).powi(2);
    for col in cols {
        let t = col.trace();
        let dg = &(&t[0] * &g1) + &(&t[1] * &g2);
        total += dg.sobolev_norm(sf - 0.5).powi(2);
    }
    total += vector_sobolev_sq(u0, &map, s);
    total += columns_sobolev_sq(cols, &map, s);
    Ok(total)
}

/// `M^s_eps = eps |f|^2_{H^{s+1/2}} + |f|^2_{H^{s-1/2}} + ||u||^2_{H^s}
/// + ||F||^2_{H^s}` for a (regularized) state.
pub fn regularized_size(state: &FlowState, s: u32) -> f64 {
    let sf = s as f64;
    state.eps * state.f.sobolev_norm(sf + 0.5).powi(2)
        + state.f.sobolev_norm(sf - 0.5).powi(2)
        + vector_sobolev_sq(&state.u, &state.map, s)
        + columns_sobolev_sq(&state.deformation, &state.map, s)
}

/// Difference energy of two states on the same grid. Boundary terms use the
/// flow, deformation and weight of `a` at order `s - 5/2`; bulk terms are
/// `H^{s-1}` norms of the differences of the stored reference arrays (the
/// pullbacks to the common reference slab).
pub fn difference_energy(a: &FlowState, b: &FlowState, s: u32) -> Result<EnergyReport> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch(format!(
            "{:?} vs {:?}",
            a.grid().dims(),
            b.grid().dims()
        )));
    }
    if s < 4 {
        return Err(Error::InvalidParameter(format!("energy index s = {s} < 4")));
    }
    let pressure = assemble_pressure(a)?;
    let weight = state_weight(a, &pressure)?;
    let fd = &a.f - &b.f;
    let fd_t = &a.kinematic_velocity() - &b.kinematic_velocity();
    let bd = boundary_terms(a, &weight, &fd, &fd_t, s as f64 - 2.5)?;
    let reference = CoordinateMap::identity(a.grid());
    let ud = a.u.zip(&b.u, |x, y| x - y);
    let mut deformation = 0.0;
    for (ca, cb) in a.deformation.iter().zip(&b.deformation) {
        deformation += vector_sobolev_sq(&ca.zip(cb, |x, y| x - y), &reference, s - 1);
    }
    Ok(EnergyReport {
        material: bd.material,
        elastic: bd.elastic,
        capillary: 0.0,
        weighted: bd.weighted,
        extension: bd.extension,
        weight_min: weight.min(),
        weight_max: weight.max(),
        height: fd.inner(&fd),
        rate: fd_t.inner(&fd_t),
        velocity: vector_sobolev_sq(&ud, &reference, s - 1),
        deformation,
    })
}
