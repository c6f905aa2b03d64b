//! Mixed stability diagnostics: the non-collinearity quantity `Lambda(F)`,
//! the Taylor coefficient `-N_f . grad p`, their region-restricted minima,
//! and the linear dispersion relation about a flat elastic rest state.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dn::flat_dn_symbol;
use crate::dynamics::{FlowState, Pressure};
use crate::error::{Error, Result};
use crate::spectral::InterfaceField;

/// Axis-aligned periodic rectangle `[x1_lo, x1_hi] x [x2_lo, x2_hi]` on the
/// torus; bounds may exceed `[0, 2 pi)` and wrap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x1: [f64; 2],
    pub x2: [f64; 2],
}

impl Rect {
    pub fn full() -> Self {
        Self {
            x1: [0.0, 2.0 * PI],
            x2: [0.0, 2.0 * PI],
        }
    }

    fn contains(&self, x1: f64, x2: f64) -> bool {
        let inside = |x: f64, [lo, hi]: [f64; 2]| {
            let w = hi - lo;
            w >= 2.0 * PI || (x - lo).rem_euclid(2.0 * PI) <= w
        };
        inside(x1, self.x1) && inside(x2, self.x2)
    }
}

/// An open subset of the torus given as a union of rectangles. Its smoothed
/// indicator is the raw indicator mollified at spatial scale `sqrt(eps) = 4 dx`; a grid point
/// belongs to the region when the smoothed indicator exceeds 1/2.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub rects: Vec<Rect>,
}

impl Region {
    pub fn empty() -> Self {
        Self { rects: Vec::new() }
    }

    pub fn all() -> Self {
        Self {
            rects: vec![Rect::full()],
        }
    }

    /// Band `|x1 - center| < half_width` (periodically), all `x2`.
    pub fn band_x1(center: f64, half_width: f64) -> Self {
        Self {
            rects: vec![Rect {
                x1: [center - half_width, center + half_width],
                x2: [0.0, 2.0 * PI],
            }],
        }
    }

    pub fn raw_indicator(&self, n1: usize, n2: usize) -> InterfaceField {
        InterfaceField::from_fn(n1, n2, |x1, x2| {
            if self.rects.iter().any(|r| r.contains(x1, x2)) {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Mollification parameter `eps = (4 dx)^2`.
    pub fn smoothing_eps(n1: usize, n2: usize) -> f64 {
        let dx = 2.0 * PI / n1.max(n2) as f64;
        16.0 * dx * dx
    }

    pub fn smoothed_indicator(&self, n1: usize, n2: usize) -> InterfaceField {
        let raw = self.raw_indicator(n1, n2);
        if raw.min() == raw.max() {
            return raw;
        }
        raw.mollify(Self::smoothing_eps(n1, n2))
            .expect("positive smoothing scale")
            .map(|v| v.clamp(0.0, 1.0))
    }

    pub fn mask(&self, n1: usize, n2: usize) -> Vec<bool> {
        self.smoothed_indicator(n1, n2)
            .values()
            .iter()
            .map(|&v| v > 0.5)
            .collect()
    }
}

/// Smooth cutoff equal to 1 away from `gamma1` and 0 deep inside it.
pub fn cutoff(gamma1: &Region, n1: usize, n2: usize) -> InterfaceField {
    let ind = gamma1.smoothed_indicator(n1, n2);
    let comp = ind.map(|v| 1.0 - v);
    if comp.min() == comp.max() {
        return comp;
    }
    comp.mollify(Region::smoothing_eps(n1, n2))
        .expect("positive smoothing scale")
        .map(|v| v.clamp(0.0, 1.0))
}

/// Smallest eigenvalue of the Gram matrix `G_ab = sum_j F_aj F_bj` (a, b in
/// {1, 2}) of the horizontal rows of the boundary deformation.
pub fn lambda_point(rows: [[f64; 3]; 2]) -> f64 {
    let g11: f64 = rows[0].iter().map(|v| v * v).sum();
    let g22: f64 = rows[1].iter().map(|v| v * v).sum();
    let g12: f64 = rows[0].iter().zip(&rows[1]).map(|(a, b)| a * b).sum();
    let tr = g11 + g22;
    let disc = ((g11 - g22).powi(2) + 4.0 * g12 * g12).sqrt();
    (0.5 * (tr - disc)).max(0.0)
}

/// `Lambda(F)(x') = inf_{|phi|=1} sum_j (F_1j phi_1 + F_2j phi_2)^2` where
/// `cols[j][a]` is the trace of `F_aj`.
pub fn lambda_noncollinear(cols: &[[InterfaceField; 3]; 3]) -> InterfaceField {
    let (n1, n2) = cols[0][0].dims();
    let values = (0..n1 * n2)
        .map(|i| {
            let mut rows = [[0.0; 3]; 2];
            for (j, col) in cols.iter().enumerate() {
                rows[0][j] = col[0].values()[i];
                rows[1][j] = col[1].values()[i];
            }
            lambda_point(rows)
        })
        .collect();
    InterfaceField::from_values(n1, n2, values)
}

/// Both forms of the Taylor coefficient on the interface.
#[derive(Debug, Clone)]
pub struct TaylorCoefficient {
    /// `-N_f . grad p`.
    pub normal: InterfaceField,
    /// `-d_3 p`.
    pub vertical: InterfaceField,
    /// `|N_f|^2`; on `p = 0` interfaces `normal = |N_f|^2 * vertical`.
    pub normal_sq: InterfaceField,
}

pub fn taylor_coefficient(state: &FlowState, pressure: &Pressure) -> TaylorCoefficient {
    let map = &state.map;
    let normal = map.normal_flux(&pressure.p).scale(-1.0);
    let vertical = map.derivative(&pressure.p, 2).trace().scale(-1.0);
    let [f1, f2] = state.f.gradient();
    let normal_sq = f1.zip_map(&f2, |a, b| 1.0 + a * a + b * b);
    TaylorCoefficient {
        normal,
        vertical,
        normal_sq,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub t: f64,
    /// Minimum of `-N . grad p` over `Gamma^1` (`+inf` when empty).
    pub taylor_min: f64,
    /// Minimum of `Lambda(F)` over `Gamma^2` (`+inf` when empty).
    pub lambda_min: f64,
    pub threshold: f64,
    pub taylor_ok: bool,
    pub lambda_ok: bool,
}

impl StabilityReport {
    pub fn passed(&self) -> bool {
        self.taylor_ok && self.lambda_ok
    }

    /// Monitor-mode check: error when either condition is lost.
    pub fn check(&self) -> Result<()> {
        if self.passed() {
            Ok(())
        } else {
            Err(Error::StabilityLost {
                t: self.t,
                taylor_min: self.taylor_min,
                lambda_min: self.lambda_min,
            })
        }
    }
}

fn masked_min(field: &InterfaceField, mask: &[bool]) -> f64 {
    field
        .values()
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(v, _)| *v)
        .fold(f64::INFINITY, f64::min)
}

pub fn stability_report(state: &FlowState, pressure: &Pressure) -> StabilityReport {
    let (n1, n2) = state.f.dims();
    let taylor = taylor_coefficient(state, pressure);
    let lambda = lambda_noncollinear(&state.deformation_traces());
    let taylor_min = masked_min(&taylor.normal, &state.params.gamma1.mask(n1, n2));
    let lambda_min = masked_min(&lambda, &state.params.gamma2.mask(n1, n2));
    let threshold = 0.5 * state.params.c0;
    StabilityReport {
        t: state.t,
        taylor_min,
        lambda_min,
        threshold,
        taylor_ok: taylor_min >= threshold,
        lambda_ok: lambda_min >= threshold,
    }
}

/// Linear frequency about a flat state with constant tangential columns
/// `cols[j] = F_j`: `omega^2 = sum_j (F_j . xi)^2 + eps |xi|^2 + a |xi| coth |xi|`.
pub fn dispersion_omega(cols: &[[f64; 3]; 3], a_taylor: f64, eps: f64, xi: [f64; 2]) -> f64 {
    let k = xi[0].hypot(xi[1]);
    if k == 0.0 {
        return 0.0;
    }
    let elastic: f64 = cols
        .iter()
        .map(|c| (c[0] * xi[0] + c[1] * xi[1]).powi(2))
        .sum();
    (elastic + eps * k * k + a_taylor * flat_dn_symbol(k)).max(0.0).sqrt()
}
