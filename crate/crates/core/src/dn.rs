//! Dirichlet–Neumann operators `N_f g = N_f . grad(H_f g)` (zero bottom
//! value) and `N-bar_f g = N_f . grad(H-bar_f g)` (zero bottom flux), their
//! flat symbols, the inverse of `N-bar_f` on mean-zero data, and exact
//! representations of three commutators involving them.

use crate::elliptic::{
    harmonic_ext_dirichlet, harmonic_ext_neumann, poisson_dirichlet_both, solve, BottomBc,
};
use crate::error::{Error, Result};
use crate::geometry::{normal_vector, BulkField, CoordinateMap, VectorField};
use crate::krylov::{pcg, KrylovOptions};
use crate::spectral::{dot, InterfaceField};

/// Flat symbol of `N_0`: `|k| coth |k|`, with limit 1 at `k = 0`.
pub fn flat_dn_symbol(k: f64) -> f64 {
    if k.abs() < 1e-8 {
        1.0 + k * k / 3.0
    } else {
        k / k.tanh()
    }
}

/// Flat symbol of `N-bar_0`: `|k| tanh |k|`.
pub fn flat_dn_neumann_symbol(k: f64) -> f64 {
    k * k.tanh()
}

fn check_dims(g: &InterfaceField, map: &CoordinateMap) -> Result<()> {
    let grid = map.grid();
    if g.dims() != (grid.n1, grid.n2) {
        return Err(Error::GridMismatch(format!(
            "boundary field {:?} vs grid {:?}",
            g.dims(),
            grid.dims()
        )));
    }
    Ok(())
}

/// `N_f g`.
pub fn apply_dn(g: &InterfaceField, map: &CoordinateMap) -> Result<InterfaceField> {
    check_dims(g, map)?;
    Ok(map.normal_flux(&harmonic_ext_dirichlet(g, map)?))
}

/// `N-bar_f g`.
pub fn apply_dn_neumann(g: &InterfaceField, map: &CoordinateMap) -> Result<InterfaceField> {
    check_dims(g, map)?;
    Ok(map.normal_flux(&harmonic_ext_neumann(g, map)?))
}

/// Largest mean magnitude accepted by [`invert_dn_neumann`].
pub const MEAN_TOLERANCE: f64 = 1e-8;

/// `N-bar_f^{-1} h` for mean-zero `h`; the result is mean-zero.
pub fn invert_dn_neumann(h: &InterfaceField, map: &CoordinateMap) -> Result<InterfaceField> {
    check_dims(h, map)?;
    let mean = h.mean();
    if mean.abs() > MEAN_TOLERANCE {
        return Err(Error::NotMeanZero { mean });
    }
    invert_dn_neumann_projected(h, map)
}

/// As [`invert_dn_neumann`] but silently removes the mean of `h` first. Used
/// where the data is mean-zero only up to discretization error.
pub(crate) fn invert_dn_neumann_projected(
    h: &InterfaceField,
    map: &CoordinateMap,
) -> Result<InterfaceField> {
    let (n1, n2) = h.dims();
    let rhs = h.without_mean();
    if rhs.max_abs() == 0.0 {
        return Ok(InterfaceField::zeros(n1, n2));
    }
    let precondition = |r: &InterfaceField| {
        r.radial_multiplier(|k| {
            if k == 0.0 {
                0.0
            } else {
                1.0 / flat_dn_neumann_symbol(k)
            }
        })
    };
    let mut failure = None;
    let apply = |x: &[f64]| {
        let g = InterfaceField::from_values(n1, n2, x.to_vec()).without_mean();
        match apply_dn_neumann(&g, map) {
            Ok(v) => v.without_mean().into_values(),
            Err(e) => {
                failure.get_or_insert(e);
                vec![0.0; x.len()]
            }
        }
    };
    let pre = |r: &[f64]| precondition(&InterfaceField::from_values(n1, n2, r.to_vec())).into_values();
    let ip = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let opts = KrylovOptions {
        tol: 1e-11,
        max_iter: 200,
        restart: 0,
    };
    let result = pcg(apply, pre, ip, rhs.values(), opts);
    if let Some(e) = failure {
        return Err(e);
    }
    let (x, _) = result?;
    Ok(InterfaceField::from_values(n1, n2, x).without_mean())
}

/// Exact material derivative of the normal along a surface velocity `u_bar`
/// (the interface trace of the flow), with `d_t f = u_bar . N_f`.
#[derive(Debug, Clone)]
pub struct NormalDerivative {
    /// `(d_t + u_bar_j d_j) N_f` computed componentwise.
    pub direct: [InterfaceField; 3],
    /// Tangential coefficients `A`, `B` and normal coefficient `C` in
    /// `D_t N = A tau1 + B tau2 + C N`.
    pub a: InterfaceField,
    pub b: InterfaceField,
    pub c: InterfaceField,
    /// `A tau1 + B tau2 + C N` reassembled.
    pub reconstructed: [InterfaceField; 3],
}

/// `D_t N_f` by the direct formula and by its tangential/normal decomposition.
pub fn dt_normal(f: &InterfaceField, u_bar: &[InterfaceField; 3]) -> NormalDerivative {
    let n = normal_vector(f);
    let [f1, f2] = f.gradient();
    let theta = dot(&[&u_bar[0], &u_bar[1], &u_bar[2]], &[&n[0], &n[1], &n[2]]);
    let [t1, t2] = theta.gradient();
    let [f11, f12] = f1.gradient();
    let f22 = f2.horizontal_derivative(crate::Axis::X2);
    let adv1 = &(&u_bar[0] * &f11) + &(&u_bar[1] * &f12);
    let adv2 = &(&u_bar[0] * &f12) + &(&u_bar[1] * &f22);
    let (n1, n2) = f.dims();
    let direct = [
        -&(&t1 + &adv1),
        -&(&t2 + &adv2),
        InterfaceField::zeros(n1, n2),
    ];
    // d_i u_bar . N
    let du_n = |i: usize| {
        let axis = if i == 0 { crate::Axis::X1 } else { crate::Axis::X2 };
        let d: Vec<InterfaceField> = u_bar.iter().map(|c| c.horizontal_derivative(axis)).collect();
        dot(&[&d[0], &d[1], &d[2]], &[&n[0], &n[1], &n[2]])
    };
    let d1n = du_n(0);
    let d2n = du_n(1);
    let norm2 = f1.zip_map(&f2, |a, b| 1.0 + a * a + b * b);
    let c = (&(&f1 * &d1n) + &(&f2 * &d2n)).zip_map(&norm2, |a, q| a / q);
    // Gram system [[1+f1^2, f1 f2], [f1 f2, 1+f2^2]] (A, B) = -(d1n, d2n).
    let len = f.len();
    let mut av = vec![0.0; len];
    let mut bv = vec![0.0; len];
    for i in 0..len {
        let (p, q) = (f1.values()[i], f2.values()[i]);
        let (r1, r2) = (-d1n.values()[i], -d2n.values()[i]);
        let det = 1.0 + p * p + q * q;
        av[i] = ((1.0 + q * q) * r1 - p * q * r2) / det;
        bv[i] = ((1.0 + p * p) * r2 - p * q * r1) / det;
    }
    let a = InterfaceField::from_values(n1, n2, av);
    let b = InterfaceField::from_values(n1, n2, bv);
    let reconstructed = [
        &a + &(&c * &n[0]),
        &b + &(&c * &n[1]),
        &(&(&a * &f1) + &(&b * &f2)) + &c,
    ];
    NormalDerivative {
        direct,
        a,
        b,
        c,
        reconstructed,
    }
}

/// `[D_t, N-bar_f] g` for a bulk velocity `u` (with `u_3 = 0` at the
/// bottom) whose trace drives the interface: `d_t f = u_bar . N_f`.
///
/// Assembled as `N.grad W - N_k d_k u_i d_i H-bar g + A d_1 g + B d_2 g + C N-bar g`
/// where `Lap W = 2 grad u : grad^2 H-bar g + Lap u . grad H-bar g`, `W = 0`
/// on the interface and `d_3 W = d_3 u_1 d_1 H-bar g + d_3 u_2 d_2 H-bar g`
/// at the bottom.
pub fn material_dn_commutator(
    g: &InterfaceField,
    u: &VectorField,
    map: &CoordinateMap,
) -> Result<InterfaceField> {
    check_dims(g, map)?;
    let h = harmonic_ext_neumann(g, map)?;
    let grad_h = map.gradient(&h);
    let hess = map.jacobian_matrix(&grad_h);
    let grad_u = map.jacobian_matrix(u);
    let grid = map.grid();
    let mut rhs = BulkField::zeros(grid);
    for i in 0..3 {
        for j in 0..3 {
            rhs.axpy(2.0, &(&grad_u[i].c[j] * &hess[i].c[j]));
        }
        let lap_ui = map.laplacian(&u.c[i]);
        rhs.axpy(1.0, &(&lap_ui * &grad_h.c[i]));
    }
    let bottom = &(&grad_u[0].c[2].bottom_trace() * &grad_h.c[0].bottom_trace())
        + &(&grad_u[1].c[2].bottom_trace() * &grad_h.c[1].bottom_trace());
    let zero = InterfaceField::zeros(grid.n1, grid.n2);
    let w = solve(map, &rhs, &zero, BottomBc::Neumann, &bottom)?;
    let mut out = map.normal_flux(&w);

    let n = normal_vector(map.interface());
    let gh_top = grad_h.trace();
    for i in 0..3 {
        let du_i = grad_u[i].trace();
        let n_du = dot(&[&n[0], &n[1], &n[2]], &[&du_i[0], &du_i[1], &du_i[2]]);
        out = &out - &(&n_du * &gh_top[i]);
    }
    let nd = dt_normal(map.interface(), &u.trace());
    let [g1, g2] = g.gradient();
    let nbar_g = map.normal_flux(&h);
    out = &out + &(&(&nd.a * &g1) + &(&nd.b * &g2));
    out = &out + &(&nd.c * &nbar_g);
    Ok(out)
}

/// `[N_f, a] g = g N_f a - 2 N_f . grad Lap^{-1}(grad H_f a . grad H_f g)`,
/// the inverse Laplacian taking zero data on both boundaries.
pub fn multiplier_dn_commutator(
    a: &InterfaceField,
    g: &InterfaceField,
    map: &CoordinateMap,
) -> Result<InterfaceField> {
    check_dims(a, map)?;
    check_dims(g, map)?;
    let ha = harmonic_ext_dirichlet(a, map)?;
    let hg = harmonic_ext_dirichlet(g, map)?;
    let cross = map.gradient(&ha).dot(&map.gradient(&hg));
    let w = poisson_dirichlet_both(&cross, map)?;
    let na = map.normal_flux(&ha);
    Ok(&(g * &na) - &map.normal_flux(&w).scale(2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_map, SlabGrid};

    fn grid() -> SlabGrid {
        SlabGrid::new(16, 16, 20).unwrap()
    }

    #[test]
    fn flat_symbols_on_single_modes() {
        let g = grid();
        let m = CoordinateMap::identity(&g);
        let c = InterfaceField::from_fn(16, 16, |x, _| x.cos());
        let n = apply_dn(&c, &m).unwrap();
        assert!((&n - &c.scale(1.0 / 1f64.tanh())).max_abs() < 1e-12);
        let nb = apply_dn_neumann(&c, &m).unwrap();
        assert!((&nb - &c.scale(1f64.tanh())).max_abs() < 1e-12);
        let one = InterfaceField::constant(16, 16, 1.0);
        assert!((&apply_dn(&one, &m).unwrap() - &one).max_abs() < 1e-12);
        assert!(apply_dn_neumann(&one, &m).unwrap().max_abs() < 1e-12);
        assert!((flat_dn_symbol(1.0) - 1.3130352854993312).abs() < 1e-15);
    }

    #[test]
    fn inverse_rejects_mean_and_round_trips() {
        let g = grid();
        let f = InterfaceField::from_fn(16, 16, |x, y| 0.1 * (x + y).cos());
        let m = build_map(&f, &g).unwrap();
        let one = InterfaceField::constant(16, 16, 1.0);
        assert!(matches!(
            invert_dn_neumann(&one, &m),
            Err(Error::NotMeanZero { .. })
        ));
        let h = InterfaceField::from_fn(16, 16, |x, y| x.sin() + 0.5 * (2.0 * y).cos());
        let v = invert_dn_neumann(&h, &m).unwrap();
        let back = apply_dn_neumann(&v, &m).unwrap();
        assert!((&back - &h).max_abs() < 1e-9, "{}", (&back - &h).max_abs());
        let flat = CoordinateMap::identity(&g);
        let c = InterfaceField::from_fn(16, 16, |x, _| x.cos());
        let v = invert_dn_neumann(&c, &flat).unwrap();
        assert!((&v - &c.scale(1.0 / 1f64.tanh())).max_abs() < 1e-10);
    }

    #[test]
    fn normal_derivative_forms_agree() {
        let f = InterfaceField::from_fn(16, 16, |x, y| 0.1 * x.cos() + 0.05 * (x - y).sin());
        let u = [
            InterfaceField::from_fn(16, 16, |x, y| 0.3 * (x + y).sin()),
            InterfaceField::from_fn(16, 16, |x, _| 0.2 * x.cos()),
            InterfaceField::from_fn(16, 16, |_, y| 0.1 * y.sin()),
        ];
        let nd = dt_normal(&f, &u);
        for i in 0..3 {
            assert!((&nd.direct[i] - &nd.reconstructed[i]).max_abs() < 1e-10);
        }
    }

    #[test]
    fn multiplier_commutator_matches_direct_evaluation() {
        let g = SlabGrid::new(32, 32, 20).unwrap();
        let f = InterfaceField::from_fn(32, 32, |x, y| 0.1 * x.sin() + 0.05 * (x + 2.0 * y).cos());
        let m = build_map(&f, &g).unwrap();
        let a = InterfaceField::from_fn(32, 32, |x, y| (x - y).cos());
        let h = InterfaceField::from_fn(32, 32, |_, y| 0.5 + y.sin());
        let formula = multiplier_dn_commutator(&a, &h, &m).unwrap();
        let direct = &apply_dn(&(&a * &h), &m).unwrap() - &(&a * &apply_dn(&h, &m).unwrap());
        let err = (&formula - &direct).max_abs() / direct.max_abs();
        assert!(err < 1e-7, "{err}");
    }

    fn commutator_oracle(
        g: &InterfaceField,
        u: &VectorField,
        f: &InterfaceField,
        grid: &SlabGrid,
        h: f64,
    ) -> InterfaceField {
        let ub = u.trace();
        let n = normal_vector(f);
        let theta = dot(&[&ub[0], &ub[1], &ub[2]], &[&n[0], &n[1], &n[2]]);
        let mp = build_map(&(f + &theta.scale(h)), grid).unwrap();
        let mm = build_map(&(f - &theta.scale(h)), grid).unwrap();
        let m = build_map(f, grid).unwrap();
        let dt = (&apply_dn_neumann(g, &mp).unwrap() - &apply_dn_neumann(g, &mm).unwrap())
            .scale(0.5 / h);
        let adv = |v: &InterfaceField| {
            let [v1, v2] = v.gradient();
            &(&ub[0] * &v1) + &(&ub[1] * &v2)
        };
        let ng = apply_dn_neumann(g, &m).unwrap();
        &(&dt + &adv(&ng)) - &apply_dn_neumann(&adv(g), &m).unwrap()
    }

    #[test]
    fn material_commutator_matches_time_differences() {
        let g = SlabGrid::new(16, 16, 16).unwrap();
        let f = InterfaceField::from_fn(16, 16, |x, y| 0.05 * x.cos() + 0.03 * (x + y).sin());
        let m = build_map(&f, &g).unwrap();
        let u = VectorField::new(
            BulkField::from_fn(&g, |x, y, z| 0.3 * (x + y).sin() * (1.0 + 0.5 * z)),
            BulkField::from_fn(&g, |x, _, z| 0.2 * x.cos() * z.cosh()),
            BulkField::from_fn(&g, |x, y, z| 0.1 * (x - y).sin() * (z + 1.0)),
        );
        let gg = InterfaceField::from_fn(16, 16, |x, y| (x + 2.0 * y).cos() + 0.5 * x.sin());
        let formula = material_dn_commutator(&gg, &u, &m).unwrap();
        let scale = formula.max_abs();
        let e1 = (&formula - &commutator_oracle(&gg, &u, &f, &g, 4e-2)).max_abs() / scale;
        let e2 = (&formula - &commutator_oracle(&gg, &u, &f, &g, 2e-2)).max_abs() / scale;
        assert!(e2 < 1e-5, "{e1} {e2}");
        assert!(e1 / e2 > 3.0, "{e1} {e2}");
    }
}
