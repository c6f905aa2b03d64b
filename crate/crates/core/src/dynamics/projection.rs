use crate::dn::flat_dn_neumann_symbol;
use crate::elliptic::{default_options, solve_general, BottomBc, Interior};
use crate::error::{Error, Result};
use crate::krylov::{gmres, KrylovOptions};
use crate::geometry::{BulkField, CoordinateMap, VectorField};
use crate::spectral::InterfaceField;

/// Largest `|div v|` over the interior nodes of the slab.
pub fn divergence_residual(v: &VectorField, map: &CoordinateMap) -> f64 {
    let div = map.divergence(v);
    let nz = map.grid().nz;
    (1..nz)
        .flat_map(|j| div.layer(j).iter().copied())
        .fold(0.0, |m, x| m.max(x.abs()))
}

fn grad_potential(
    map: &CoordinateMap,
    rhs: &BulkField,
    top: &InterfaceField,
    bottom_flux: &InterfaceField,
) -> Result<VectorField> {
    let (phi, _) = solve_general(
        map,
        rhs,
        top,
        BottomBc::Neumann,
        bottom_flux,
        Interior::DivGrad,
        default_options(),
    )?;
    Ok(map.gradient(&phi))
}

/// `P^div v = v - grad phi` with `Lap phi = div v`, `phi = 0` on the
/// interface, `d3 phi = 0` at the bottom. The interior operator is the
/// composition of the discrete divergence and gradient, so the output is
/// divergence-free at every interior node.
pub fn project_div(v: &VectorField, map: &CoordinateMap) -> Result<VectorField> {
    let (n1, n2) = (map.grid().n1, map.grid().n2);
    let zero = InterfaceField::zeros(n1, n2);
    let g = grad_potential(map, &map.divergence(v), &zero, &zero)?;
    Ok(v.zip(&g, |a, b| a - b))
}

/// Divergence-free projection that also corrects the interface normal
/// trace to `target` (`P-bar^div`). The second potential is harmonic with
/// Neumann data on both boundaries; its compatibility condition is that
/// `v.N - target` integrates to zero after the first projection.
pub fn project_div_normal(
    v: &VectorField,
    map: &CoordinateMap,
    target: &InterfaceField,
) -> Result<VectorField> {
    let v1 = project_div(v, map)?;
    let defect = &map.normal_component(&v1) - target;
    let scale = 1.0 + defect.max_abs() + v.max_abs();
    if defect.mean().abs() > 1e-6 * scale {
        return Err(Error::ProjectionIncompatible {
            defect: defect.mean(),
        });
    }
    // The correction potential is div-grad harmonic with `N . grad phi` equal
    // to the defect; its Dirichlet trace solves a Neumann-to-trace problem
    // for the discrete div-grad operator, done by GMRES with the flat
    // symbol as preconditioner. A second pass mops up solver tolerance.
    let zero = InterfaceField::zeros(map.grid().n1, map.grid().n2);
    let mut out = v1;
    let mut defect = defect;
    for _ in 0..3 {
        if defect.without_nyquist().max_abs() <= 1e-12 * scale {
            break;
        }
        let phi = neumann_potential(&defect, map, &zero)?;
        out = out.zip(&map.gradient(&phi), |a, b| a - b);
        defect = (&map.normal_component(&out) - target).without_mean();
    }
    Ok(out)
}

/// Div-grad harmonic potential with interface flux `N . grad phi = h` and
/// zero bottom flux, solved on the modes the discrete gradient can reach
/// (mean and Nyquist lines excluded).
fn neumann_potential(
    h: &InterfaceField,
    map: &CoordinateMap,
    zero: &InterfaceField,
) -> Result<BulkField> {
    let (n1, n2) = h.dims();
    let extend = |psi: &InterfaceField| -> Result<BulkField> {
        let (phi, _) = solve_general(
            map,
            &BulkField::zeros(map.grid()),
            psi,
            BottomBc::Neumann,
            zero,
            Interior::DivGrad,
            default_options(),
        )?;
        Ok(phi)
    };
    let mut failure = None;
    let apply = |x: &[f64]| {
        let psi = InterfaceField::from_values(n1, n2, x.to_vec())
            .without_mean()
            .without_nyquist();
        match extend(&psi) {
            Ok(phi) => map
                .normal_component(&map.gradient(&phi))
                .without_mean()
                .without_nyquist()
                .into_values(),
            Err(e) => {
                failure.get_or_insert(e);
                vec![0.0; x.len()]
            }
        }
    };
    let precond = |r: &[f64]| {
        InterfaceField::from_values(n1, n2, r.to_vec())
            .radial_multiplier(|k| if k == 0.0 { 0.0 } else { 1.0 / flat_dn_neumann_symbol(k) })
            .without_nyquist()
            .into_values()
    };
    let opts = KrylovOptions {
        tol: 1e-11,
        max_iter: 120,
        restart: 40,
    };
    let rhs = h.without_mean().without_nyquist();
    let result = gmres(apply, precond, rhs.values(), None, opts);
    if let Some(e) = failure {
        return Err(e);
    }
    let (x, _) = result?;
    extend(&InterfaceField::from_values(n1, n2, x).without_mean().without_nyquist())
}
