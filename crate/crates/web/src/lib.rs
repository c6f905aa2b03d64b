//! WebAssembly bindings for the static demo in `www/`.
//!
//! Every export returns a flat `Float64Array` made of equal-length blocks;
//! the layout is documented on each function. The `*_impl` functions hold
//! the logic so it can be tested natively.

use std::f64::consts::PI;

use wasm_bindgen::prelude::*;

use elasto_core::config::Config;
use elasto_core::dn::{apply_dn, flat_dn_symbol};
use elasto_core::dynamics::assemble_pressure;
use elasto_core::dynamics::scenarios::{build, Scenario};
use elasto_core::geometry::build_map;
use elasto_core::stability::{dispersion_omega, lambda_noncollinear, taylor_coefficient};
use elasto_core::{InterfaceField, SlabGrid};

/// Linear frequency `omega(|xi|)` along direction `angle` for the
/// deformation with tangential columns `(s1, shear, 0)` and `(0, s2, 0)`.
///
/// Layout: `[k; samples] ++ [omega; samples]`, `k` from 0 to `kmax`.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn dispersion_curve(
    s1: f64,
    s2: f64,
    shear: f64,
    taylor: f64,
    eps: f64,
    angle: f64,
    kmax: f64,
    samples: usize,
) -> Vec<f64> {
    dispersion_curve_impl(s1, s2, shear, taylor, eps, angle, kmax, samples)
}

#[allow(clippy::too_many_arguments)]
pub fn dispersion_curve_impl(
    s1: f64,
    s2: f64,
    shear: f64,
    taylor: f64,
    eps: f64,
    angle: f64,
    kmax: f64,
    samples: usize,
) -> Vec<f64> {
    let cols = [[s1, shear, 0.0], [0.0, s2, 0.0], [0.0; 3]];
    let n = samples.max(2);
    let ks: Vec<f64> = (0..n).map(|i| kmax * i as f64 / (n - 1) as f64).collect();
    let (sa, ca) = angle.sin_cos();
    let omegas: Vec<f64> = ks
        .iter()
        .map(|&k| dispersion_omega(&cols, taylor, eps, [k * ca, k * sa]))
        .collect();
    [ks, omegas].concat()
}

/// Dirichlet–Neumann operator of the interface `f = amplitude cos(m x1)`
/// applied to `g = cos(j x1)`, sampled along `x2 = 0`.
///
/// Layout: `[x; n1] ++ [f; n1] ++ [g; n1] ++ [G(f) g; n1] ++ [G(0) g; n1]`.
#[wasm_bindgen]
pub fn dn_profile(
    amplitude: f64,
    interface_mode: u32,
    data_mode: u32,
    n1: usize,
    nz: usize,
) -> Result<Vec<f64>, JsError> {
    dn_profile_impl(amplitude, interface_mode, data_mode, n1, nz).map_err(|e| JsError::new(&e))
}

pub fn dn_profile_impl(
    amplitude: f64,
    interface_mode: u32,
    data_mode: u32,
    n1: usize,
    nz: usize,
) -> Result<Vec<f64>, String> {
    let n2 = 4;
    let grid = SlabGrid::new(n1, n2, nz).map_err(|e| e.to_string())?;
    let m = interface_mode as f64;
    let j = data_mode as f64;
    let f = InterfaceField::from_fn(n1, n2, |x, _| amplitude * (m * x).cos());
    let g = InterfaceField::from_fn(n1, n2, |x, _| (j * x).cos());
    let map = build_map(&f, &grid).map_err(|e| e.to_string())?;
    let gf = apply_dn(&g, &map).map_err(|e| e.to_string())?;
    let flat = flat_dn_symbol(j);
    let row = |h: &InterfaceField| -> Vec<f64> { (0..n1).map(|i| h.values()[i * n2]).collect() };
    let x: Vec<f64> = (0..n1).map(|i| 2.0 * PI * i as f64 / n1 as f64).collect();
    let g0: Vec<f64> = row(&g).iter().map(|v| flat * v).collect();
    Ok([x, row(&f), row(&g), row(&gf), g0].concat())
}

/// Stability indicators for the mixed-regions scenario, sampled along `x2 = 0`.
///
/// Layout: `[x; n1] ++ [taylor; n1] ++ [lambda; n1] ++ [in Gamma^1; n1]
/// ++ [in Gamma^2; n1] ++ [threshold]`, region membership as 0/1.
#[wasm_bindgen]
pub fn stability_map(n1: usize, flow: f64, elastic: f64, c0: f64) -> Result<Vec<f64>, JsError> {
    stability_map_impl(n1, flow, elastic, c0).map_err(|e| JsError::new(&e))
}

pub fn stability_map_impl(n1: usize, flow: f64, elastic: f64, c0: f64) -> Result<Vec<f64>, String> {
    let mut cfg = Config::preset(Scenario::MixedRegions);
    cfg.grid.n1 = n1;
    cfg.grid.n2 = 4;
    cfg.grid.nz = 12;
    cfg.physics.c0 = c0;
    cfg.initial.flow = Some(flow);
    cfg.initial.elastic = Some(elastic);
    cfg.validate().map_err(|e| e.to_string())?;
    let grid = cfg.slab_grid().map_err(|e| e.to_string())?;
    let state = build(&cfg.scenario_spec(), &grid, cfg.physics.eps, cfg.params())
        .map_err(|e| e.to_string())?;
    let pressure = assemble_pressure(&state).map_err(|e| e.to_string())?;
    let taylor = taylor_coefficient(&state, &pressure).normal;
    let lambda = lambda_noncollinear(&state.deformation_traces());
    let n2 = grid.n2;
    let row = |h: &InterfaceField| -> Vec<f64> { (0..n1).map(|i| h.values()[i * n2]).collect() };
    let mask = |m: Vec<bool>| -> Vec<f64> { (0..n1).map(|i| f64::from(u8::from(m[i * n2]))).collect() };
    let x: Vec<f64> = (0..n1).map(|i| 2.0 * PI * i as f64 / n1 as f64).collect();
    Ok([
        x,
        row(&taylor),
        row(&lambda),
        mask(state.params.gamma1.mask(n1, n2)),
        mask(state.params.gamma2.mask(n1, n2)),
        vec![0.5 * c0],
    ]
    .concat())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dispersion_layout_and_values() {
        let out = dispersion_curve_impl(1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 4.0, 5);
        assert_eq!(out.len(), 10);
        assert_eq!(&out[..5], &[0.0, 1.0, 2.0, 3.0, 4.0]);
        for (k, w) in out[..5].iter().zip(&out[5..]) {
            assert!((k - w).abs() < 1e-14);
        }
    }

    #[test]
    fn flat_interface_matches_symbol() {
        let out = dn_profile_impl(0.0, 1, 2, 16, 16).unwrap();
        let n = 16;
        let (gf, g0) = (&out[3 * n..4 * n], &out[4 * n..]);
        for (a, b) in gf.iter().zip(g0) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        assert!(dn_profile_impl(0.1, 1, 2, 6, 8).is_ok());
        assert!(dn_profile_impl(0.1, 1, 2, 7, 8).is_err());
    }

    #[test]
    fn stability_map_layout() {
        let n = 16;
        let out = stability_map_impl(n, 0.4, 1.0, 0.1).unwrap();
        assert_eq!(out.len(), 5 * n + 1);
        assert_eq!(out[5 * n], 0.05);
        assert!(out[3 * n..5 * n].iter().all(|&v| v == 0.0 || v == 1.0));
        assert!(out[2 * n..3 * n].iter().all(|&v| v >= 0.0));
    }
}
