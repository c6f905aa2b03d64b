//! Matrix-free Krylov solvers: right-preconditioned restarted GMRES for the
//! mapped elliptic problems and preconditioned CG for the boundary operators.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct KrylovOptions {
    /// Relative residual target `|b - A x| <= tol |b|`.
    pub tol: f64,
    pub max_iter: usize,
    pub restart: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            max_iter: 400,
            restart: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovStats {
    pub iterations: usize,
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Residuals within this factor of the target are accepted once GMRES
/// stagnates.
const STAGNATION_SLACK: f64 = 100.0;

/// Solve `A x = b` with GMRES(m), right preconditioner `M^{-1}`.
pub fn gmres(
    mut apply: impl FnMut(&[f64]) -> Vec<f64>,
    mut precond: impl FnMut(&[f64]) -> Vec<f64>,
    b: &[f64],
    x0: Option<Vec<f64>>,
    opts: KrylovOptions,
) -> Result<(Vec<f64>, KrylovStats)> {
    let n = b.len();
    let bnorm = norm(b);
    let mut x = x0.unwrap_or_else(|| vec![0.0; n]);
    if bnorm == 0.0 {
        return Ok((
            vec![0.0; n],
            KrylovStats {
                iterations: 0,
                residual: 0.0,
            },
        ));
    }
    let target = opts.tol * bnorm;
    let m = opts.restart.max(1);
    let mut total = 0;
    let mut resid;
    let mut previous = f64::INFINITY;
    loop {
        let ax = apply(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let beta = norm(&r);
        resid = beta;
        // A restart cycle that no longer reduces the residual near the
        // target has hit the round-off floor of the operator.
        let stalled = beta > 0.5 * previous && beta <= STAGNATION_SLACK * target;
        if beta <= target || total >= opts.max_iter || stalled {
            break;
        }
        previous = beta;
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|x| x / beta).collect()];
        let mut z: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut h = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            let zk = precond(&v[k]);
            let mut w = apply(&zk);
            z.push(zk);
            // Modified Gram-Schmidt with one reorthogonalization pass.
            for _ in 0..2 {
                for (i, vi) in v.iter().enumerate() {
                    let hik = dot(&w, vi);
                    h[i][k] += hik;
                    for (wj, vj) in w.iter_mut().zip(vi) {
                        *wj -= hik * vj;
                    }
                }
            }
            let hn = norm(&w);
            h[k + 1][k] = hn;
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let denom = h[k][k].hypot(h[k + 1][k]);
            cs[k] = if denom == 0.0 { 1.0 } else { h[k][k] / denom };
            sn[k] = if denom == 0.0 { 0.0 } else { h[k + 1][k] / denom };
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k_used = k + 1;
            if g[k + 1].abs() <= 0.5 * target || hn == 0.0 || total >= opts.max_iter {
                break;
            }
            v.push(w.iter().map(|x| x / hn).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for (zj, yj) in z.iter().zip(&y) {
            for (xi, zi) in x.iter_mut().zip(zj) {
                *xi += yj * zi;
            }
        }
    }
    let stats = KrylovStats {
        iterations: total,
        residual: resid / bnorm,
    };
    if resid > STAGNATION_SLACK * target {
        return Err(Error::SolverDiverged {
            tol: opts.tol,
            iterations: total,
            residual: stats.residual,
        });
    }
    Ok((x, stats))
}

/// Preconditioned conjugate gradients for a symmetric positive operator
/// under the inner product `ip`.
pub fn pcg(
    mut apply: impl FnMut(&[f64]) -> Vec<f64>,
    mut precond: impl FnMut(&[f64]) -> Vec<f64>,
    ip: impl Fn(&[f64], &[f64]) -> f64,
    b: &[f64],
    opts: KrylovOptions,
) -> Result<(Vec<f64>, KrylovStats)> {
    let n = b.len();
    let bnorm = ip(b, b).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((
            x,
            KrylovStats {
                iterations: 0,
                residual: 0.0,
            },
        ));
    }
    let mut r = b.to_vec();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = ip(&r, &z);
    let mut it = 0;
    let mut res = 1.0;
    while it < opts.max_iter {
        let ap = apply(&p);
        let pap = ip(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        it += 1;
        res = ip(&r, &r).sqrt() / bnorm;
        if res <= opts.tol {
            break;
        }
        z = precond(&r);
        let rz_new = ip(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    // Guard against recurrence drift: report the true residual.
    let ax = apply(&x);
    let rtrue: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    res = res.max(ip(&rtrue, &rtrue).sqrt() / bnorm);
    let stats = KrylovStats {
        iterations: it,
        residual: res,
    };
    if res > opts.tol * 10.0 {
        return Err(Error::SolverDiverged {
            tol: opts.tol,
            iterations: it,
            residual: res,
        });
    }
    Ok((x, stats))
}
