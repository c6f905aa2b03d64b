//! Boundary-value problems on the physical domain, solved on the reference
//! slab. The interface carries Dirichlet data; the bottom carries either
//! Dirichlet or (physical) Neumann data.
//!
//! Flat-interface problems are diagonal in horizontal frequency and are solved
//! exactly (per mode) by dense Chebyshev collocation. Curved interfaces use
//! GMRES on the mapped operator with the flat solver as right preconditioner.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::{plan, wavenumber};
use crate::geometry::{BulkField, CoordinateMap, SlabGrid, VectorField};
use crate::krylov::{gmres, KrylovOptions, KrylovStats};
use crate::spectral::InterfaceField;
use crate::vertical::DenseLu;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BottomBc {
    /// Prescribed value at `y3 = -1`.
    Dirichlet,
    /// Prescribed `d/dx3` at `y3 = -1`.
    Neumann,
}

fn mode_lu(grid: &SlabGrid, kk: i64, bottom: BottomBc) -> Arc<DenseLu> {
    type Key = (usize, i64, BottomBc);
    static CACHE: OnceLock<Mutex<HashMap<Key, Arc<DenseLu>>>> = OnceLock::new();
    let key = (grid.nz, kk, bottom);
    let mut cache = CACHE
        .get_or_init(|| Mutex::new(HashMap::new()))
        .lock()
        .expect("mode cache poisoned");
    cache
        .entry(key)
        .or_insert_with(|| {
            let col = grid.column();
            let m = col.len();
            let mut a = col.d2.clone();
            for j in 0..m {
                a[j * m + j] -= kk as f64;
            }
            for v in &mut a[(m - 1) * m..] {
                *v = 0.0;
            }
            a[m * m - 1] = 1.0;
            match bottom {
                BottomBc::Dirichlet => {
                    for v in &mut a[..m] {
                        *v = 0.0;
                    }
                    a[0] = 1.0;
                }
                BottomBc::Neumann => a[..m].copy_from_slice(&col.d1[..m]),
            }
            Arc::new(DenseLu::factor(a, m).expect("flat mode operator is nonsingular"))
        })
        .clone()
}

/// Exact discrete solve of the flat problem. Interior layers of `rhs` hold
/// the Laplacian right-hand side; layer `nz` holds the interface value and
/// layer 0 the bottom value or bottom `d/dy3`.
pub fn flat_solve(rhs: &BulkField, bottom: BottomBc) -> BulkField {
    let grid = rhs.grid().clone();
    let (n1, n2) = (grid.n1, grid.n2);
    let m = grid.levels();
    let nh = grid.layer_len();
    let p = plan(n1, n2);
    let mut hat: Vec<Vec<Complex64>> = (0..m).map(|j| p.forward_real(rhs.layer(j))).collect();
    let mut re = vec![0.0; m];
    let mut im = vec![0.0; m];
    for i1 in 0..n1 {
        let k1 = wavenumber(i1, n1);
        for i2 in 0..n2 {
            let k2 = wavenumber(i2, n2);
            let idx = i1 * n2 + i2;
            let lu = mode_lu(&grid, k1 * k1 + k2 * k2, bottom);
            for j in 0..m {
                re[j] = hat[j][idx].re;
                im[j] = hat[j][idx].im;
            }
            lu.solve(&mut re);
            lu.solve(&mut im);
            for j in 0..m {
                hat[j][idx] = Complex64::new(re[j], im[j]);
            }
        }
    }
    let mut data = vec![0.0; grid.len()];
    for (j, h) in hat.iter_mut().enumerate() {
        p.inverse_into(h, &mut data[j * nh..(j + 1) * nh]);
    }
    BulkField::new(&grid, data)
}

/// Interior form of the Laplacian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interior {
    /// Expanded mapped Laplacian with cached metric coefficients.
    Laplacian,
    /// Literal composition `div(grad v)` of the discrete operators; used by
    /// the projections so their output is discretely divergence-free.
    DivGrad,
}

/// Apply the boundary-value operator: mapped Laplacian in the interior,
/// identity on the interface, value or physical `d/dx3` on the bottom.
pub fn apply_operator(map: &CoordinateMap, v: &BulkField, bottom: BottomBc) -> BulkField {
    apply_operator_with(map, v, bottom, Interior::Laplacian)
}

pub fn apply_operator_with(
    map: &CoordinateMap,
    v: &BulkField,
    bottom: BottomBc,
    interior: Interior,
) -> BulkField {
    let grid = map.grid();
    let mut out = match interior {
        Interior::Laplacian => map.laplacian(v),
        Interior::DivGrad => map.divergence(&map.gradient(v)),
    };
    out.layer_mut(grid.nz).copy_from_slice(v.layer(grid.nz));
    match bottom {
        BottomBc::Dirichlet => out.layer_mut(0).copy_from_slice(v.layer(0)),
        BottomBc::Neumann => {
            let d = map.bottom_normal_derivative(v);
            out.layer_mut(0).copy_from_slice(d.values());
        }
    }
    out
}

pub(crate) fn default_options() -> KrylovOptions {
    KrylovOptions::default()
}

/// Solve `Lap u = rhs` in the physical domain with `u = top` on the
/// interface and the given bottom condition.
pub fn solve(
    map: &CoordinateMap,
    rhs: &BulkField,
    top: &InterfaceField,
    bottom_kind: BottomBc,
    bottom: &InterfaceField,
) -> Result<BulkField> {
    solve_with(map, rhs, top, bottom_kind, bottom, default_options()).map(|(u, _)| u)
}

pub fn solve_with(
    map: &CoordinateMap,
    rhs: &BulkField,
    top: &InterfaceField,
    bottom_kind: BottomBc,
    bottom: &InterfaceField,
    opts: KrylovOptions,
) -> Result<(BulkField, KrylovStats)> {
    solve_general(map, rhs, top, bottom_kind, bottom, Interior::Laplacian, opts)
}

pub fn solve_general(
    map: &CoordinateMap,
    rhs: &BulkField,
    top: &InterfaceField,
    bottom_kind: BottomBc,
    bottom: &InterfaceField,
    interior: Interior,
    opts: KrylovOptions,
) -> Result<(BulkField, KrylovStats)> {
    let grid = map.grid();
    if rhs.grid() != grid {
        return Err(Error::GridMismatch("rhs and map grids differ".into()));
    }
    let mut b = rhs.clone();
    b.set_layer(grid.nz, top);
    b.set_layer(0, bottom);
    if map.is_flat() && interior == Interior::Laplacian {
        let u = flat_solve(&b, bottom_kind).with_map_hash(map.hash());
        return Ok((
            u,
            KrylovStats {
                iterations: 0,
                residual: 0.0,
            },
        ));
    }
    let apply = |x: &[f64]| {
        let v = BulkField::new(grid, x.to_vec());
        apply_operator_with(map, &v, bottom_kind, interior).into_data()
    };
    let precond = |r: &[f64]| flat_solve(&BulkField::new(grid, r.to_vec()), bottom_kind).into_data();
    let (x, stats) = gmres(apply, precond, b.data(), None, opts)?;
    Ok((BulkField::new(grid, x).with_map_hash(map.hash()), stats))
}

fn zero_layer(map: &CoordinateMap) -> InterfaceField {
    InterfaceField::zeros(map.grid().n1, map.grid().n2)
}

/// Harmonic extension with zero bottom value (`H_f`).
pub fn harmonic_ext_dirichlet(g: &InterfaceField, map: &CoordinateMap) -> Result<BulkField> {
    let z = zero_layer(map);
    solve(map, &BulkField::zeros(map.grid()), g, BottomBc::Dirichlet, &z)
}

/// Harmonic extension with zero bottom flux (`H-bar_f`).
pub fn harmonic_ext_neumann(g: &InterfaceField, map: &CoordinateMap) -> Result<BulkField> {
    let z = zero_layer(map);
    solve(map, &BulkField::zeros(map.grid()), g, BottomBc::Neumann, &z)
}

/// Inverse Laplacian with zero value on the interface and zero flux at the
/// bottom.
pub fn poisson_dirichlet(rhs: &BulkField, map: &CoordinateMap) -> Result<BulkField> {
    let z = zero_layer(map);
    solve(map, rhs, &z, BottomBc::Neumann, &z)
}

/// Inverse Laplacian with zero value on both boundaries.
pub fn poisson_dirichlet_both(rhs: &BulkField, map: &CoordinateMap) -> Result<BulkField> {
    let z = zero_layer(map);
    solve(map, rhs, &z, BottomBc::Dirichlet, &z)
}

/// `tr(grad v grad w) = sum_ij d_j v_i d_i w_j`.
pub fn trace_product(gv: &[VectorField; 3], gw: &[VectorField; 3]) -> BulkField {
    let mut out = BulkField::zeros(gv[0].grid());
    for i in 0..3 {
        for j in 0..3 {
            out.axpy(1.0, &(&gv[i].c[j] * &gw[j].c[i]));
        }
    }
    out
}

/// Pressure `p_{v,w}`: `Lap p = -tr(grad v grad w)`, `p = 0` on the
/// interface, `d3 p = 0` at the bottom.
pub fn pressure_bilinear(v: &VectorField, w: &VectorField, map: &CoordinateMap) -> Result<BulkField> {
    let gv = map.jacobian_matrix(v);
    let gw = map.jacobian_matrix(w);
    poisson_dirichlet(&trace_product(&gv, &gw).scale(-1.0), map)
}

/// Weight `a~`: harmonic with interface value `taylor + cutoff * c_tilde`
/// and bottom value `c0`.
pub fn weight_field(
    taylor: &InterfaceField,
    cutoff: &InterfaceField,
    c_tilde: f64,
    c0: f64,
    map: &CoordinateMap,
) -> Result<BulkField> {
    let top = taylor.zip_map(cutoff, |a, phi| a + phi * c_tilde);
    let tol = 1e-10 * (1.0 + c0.abs());
    if top.min() < c0 - tol {
        return Err(Error::PreconditionViolated(format!(
            "weight boundary data dips to {:.4e} below c0 = {c0:.4e}",
            top.min()
        )));
    }
    let bottom = InterfaceField::constant(map.grid().n1, map.grid().n2, c0);
    let w = solve(map, &BulkField::zeros(map.grid()), &top, BottomBc::Dirichlet, &bottom)?;
    let hi = (c_tilde + taylor.max()).max(c0).max(top.max());
    let slack = 1e-6 * hi.abs().max(1.0);
    if w.min() < c0 - slack || w.max() > hi + slack {
        return Err(Error::PreconditionViolated(format!(
            "weight outside [{c0:.4e}, {hi:.4e}]: range [{:.4e}, {:.4e}]",
            w.min(),
            w.max()
        )));
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_map;

    fn grid() -> SlabGrid {
        SlabGrid::new(16, 16, 16).unwrap()
    }

    fn cosx(g: &SlabGrid) -> InterfaceField {
        InterfaceField::from_fn(g.n1, g.n2, |x, _| x.cos())
    }

    fn curved(g: &SlabGrid) -> CoordinateMap {
        let f = InterfaceField::from_fn(g.n1, g.n2, |x, y| 0.1 * x.cos() + 0.05 * (x + 2.0 * y).sin());
        build_map(&f, g).unwrap()
    }

    #[test]
    fn flat_dirichlet_extension_matches_sinh() {
        let g = grid();
        let m = CoordinateMap::identity(&g);
        let h = harmonic_ext_dirichlet(&cosx(&g), &m).unwrap();
        let e = BulkField::from_fn(&g, |x, _, y| x.cos() * (y + 1.0).sinh() / 1f64.sinh());
        assert!((&h - &e).max_abs() < 1e-12);
    }

    #[test]
    fn flat_neumann_extension_matches_cosh_and_constants() {
        let g = grid();
        let m = CoordinateMap::identity(&g);
        let h = harmonic_ext_neumann(&cosx(&g), &m).unwrap();
        let e = BulkField::from_fn(&g, |x, _, y| x.cos() * (y + 1.0).cosh() / 1f64.cosh());
        assert!((&h - &e).max_abs() < 1e-12);
        let c = harmonic_ext_neumann(&InterfaceField::constant(16, 16, 2.5), &m).unwrap();
        assert!((&c - &BulkField::constant(&g, 2.5)).max_abs() < 1e-12);
    }

    #[test]
    fn flat_poisson_profiles() {
        let g = grid();
        let m = CoordinateMap::identity(&g);
        let rhs = BulkField::from_fn(&g, |x, _, _| x.cos());
        let w = poisson_dirichlet(&rhs, &m).unwrap();
        let e = BulkField::from_fn(&g, |x, _, y| x.cos() * ((y + 1.0).cosh() / 1f64.cosh() - 1.0));
        assert!((&w - &e).max_abs() < 1e-12);
        let w = poisson_dirichlet(&BulkField::constant(&g, 1.0), &m).unwrap();
        let e = BulkField::from_fn(&g, |_, _, y| 0.5 * y * y + y);
        assert!((&w - &e).max_abs() < 1e-12);
        let w = poisson_dirichlet_both(&BulkField::constant(&g, 1.0), &m).unwrap();
        let e = BulkField::from_fn(&g, |_, _, y| 0.5 * y * (y + 1.0));
        assert!((&w - &e).max_abs() < 1e-12);
        let w = poisson_dirichlet_both(&rhs, &m).unwrap();
        // w'' - w = 1 with w(0)=w(-1)=0: w = -1 + A cosh(y+1/2)
        let e2 = BulkField::from_fn(&g, |x, _, y| x.cos() * ((y + 0.5).cosh() / 0.5f64.cosh() - 1.0));
        assert!((&w - &e2).max_abs() < 1e-12);
    }

    #[test]
    fn curved_solve_satisfies_operator() {
        let g = grid();
        let m = curved(&g);
        let g1 = InterfaceField::from_fn(16, 16, |x, y| (x - y).sin() + 0.3 * (2.0 * y).cos());
        let h = harmonic_ext_dirichlet(&g1, &m).unwrap();
        let lap = m.laplacian(&h);
        let mut interior = 0.0f64;
        for j in 1..g.nz {
            interior = lap.layer(j).iter().fold(interior, |a, v| a.max(v.abs()));
        }
        assert!(interior < 1e-8, "{interior}");
        assert!((&h.trace() - &g1).max_abs() < 1e-12);
        assert!(h.bottom_trace().max_abs() < 1e-12);
        // maximum principle
        assert!(h.max() <= g1.max() + 1e-8 && h.min() >= g1.min() - 1e-8);
    }

    #[test]
    fn curved_harmonic_function_is_reproduced() {
        // exp(x3) cos... : e^{x3} is not harmonic; use a physical harmonic
        // function cosh(x3 + 1) cos(x1) + linear x3 and recover it.
        let g = SlabGrid::new(32, 32, 20).unwrap();
        let m = curved(&g);
        let x3 = m.phi();
        let exact = BulkField::new(
            &g,
            (0..g.len())
                .map(|i| {
                    let x1 = g.x1((i % g.layer_len()) / g.n2);
                    (x3.data()[i] + 1.0).cosh() * x1.cos() + 0.5 * x3.data()[i]
                })
                .collect(),
        );
        let mut bottom = exact.bottom_trace();
        // the bottom is the flat plane x3 = -1, where d3 exact = 0.5 (sinh(0) = 0)
        bottom = bottom.map(|_| 0.5);
        let u = solve(&m, &BulkField::zeros(&g), &exact.trace(), BottomBc::Neumann, &bottom).unwrap();
        assert!((&u - &exact).max_abs() < 1e-9, "{}", (&u - &exact).max_abs());
    }

    #[test]
    fn pressure_of_simple_fields_vanishes() {
        let g = grid();
        let m = CoordinateMap::identity(&g);
        let rigid = VectorField::constant(&g, [1.0, 0.0, 0.0]);
        assert!(pressure_bilinear(&rigid, &rigid, &m).unwrap().max_abs() < 1e-14);
        let shear = VectorField::new(
            BulkField::from_fn(&g, |_, _, y| y.sin()),
            BulkField::zeros(&g),
            BulkField::zeros(&g),
        );
        assert!(pressure_bilinear(&shear, &shear, &m).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn weight_field_cases() {
        let g = grid();
        let m = CoordinateMap::identity(&g);
        let c0 = 0.3;
        let k = |c| InterfaceField::constant(16, 16, c);
        let w = weight_field(&k(c0), &k(0.0), 0.0, c0, &m).unwrap();
        assert!((&w - &BulkField::constant(&g, c0)).max_abs() < 1e-12);
        let w = weight_field(&k(0.0), &k(1.0), 2.0 * c0, c0, &m).unwrap();
        let e = BulkField::from_fn(&g, |_, _, y| c0 * (2.0 + y));
        assert!((&w - &e).max_abs() < 1e-12);
        assert!(weight_field(&k(0.0), &k(0.0), 0.0, c0, &m).is_err());
    }
}
