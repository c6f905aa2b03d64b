//! Chebyshev–Gauss–Lobatto discretization of the vertical interval `[-1, 0]`
//! and the small dense factorizations used by the per-mode solves.

use std::f64::consts::PI;

/// Nodes ordered from the bottom (`y3 = -1`, index 0) to the top (`y3 = 0`,
/// index `nz`), with collocation derivative matrices and quadrature weights.
#[derive(Debug, Clone)]
pub struct ChebyshevColumn {
    pub nz: usize,
    pub nodes: Vec<f64>,
    /// First derivative, row-major `(nz+1) x (nz+1)`.
    pub d1: Vec<f64>,
    /// Second derivative `d1 * d1`.
    pub d2: Vec<f64>,
    /// Clenshaw–Curtis weights for `int_{-1}^{0}`.
    pub weights: Vec<f64>,
}

impl ChebyshevColumn {
    pub fn new(nz: usize) -> Self {
        assert!(nz >= 2, "need at least two vertical intervals");
        let n = nz;
        let m = n + 1;
        // x_j = cos(pi j / n) descends from 1 to -1; we store ascending order.
        let xdesc: Vec<f64> = (0..m).map(|j| (PI * j as f64 / n as f64).cos()).collect();
        let c = |j: usize| -> f64 {
            let base = if j == 0 || j == n { 2.0 } else { 1.0 };
            if j % 2 == 0 {
                base
            } else {
                -base
            }
        };
        let mut ddesc = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    ddesc[i * m + j] = c(i) / c(j) / (xdesc[i] - xdesc[j]);
                }
            }
        }
        for i in 0..m {
            let s: f64 = (0..m).filter(|&j| j != i).map(|j| ddesc[i * m + j]).sum();
            ddesc[i * m + i] = -s;
        }
        // Ascending reorder and the affine map y = (x - 1)/2, dy/dx = 1/2.
        let nodes: Vec<f64> = (0..m).map(|j| 0.5 * (xdesc[n - j] - 1.0)).collect();
        let mut d1 = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                d1[i * m + j] = 2.0 * ddesc[(n - i) * m + (n - j)];
            }
        }
        let d2 = matmul(&d1, &d1, m);
        let weights = clenshaw_curtis(n).into_iter().rev().map(|w| 0.5 * w).collect();
        let mut nodes = nodes;
        nodes[0] = -1.0;
        nodes[n] = 0.0;
        Self {
            nz,
            nodes,
            d1,
            d2,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.nz + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row `i` of the first-derivative matrix applied to a column.
    pub fn d1_row(&self, i: usize, column: &[f64]) -> f64 {
        let m = self.len();
        self.d1[i * m..(i + 1) * m]
            .iter()
            .zip(column)
            .map(|(a, b)| a * b)
            .sum()
    }
}

fn matmul(a: &[f64], b: &[f64], m: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * m];
    for i in 0..m {
        for k in 0..m {
            let aik = a[i * m + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..m {
                c[i * m + j] += aik * b[k * m + j];
            }
        }
    }
    c
}

/// Clenshaw–Curtis weights on `[-1, 1]` for nodes `cos(pi j / n)`.
fn clenshaw_curtis(n: usize) -> Vec<f64> {
    let m = n + 1;
    let mut w = vec![0.0; m];
    let theta: Vec<f64> = (0..m).map(|j| PI * j as f64 / n as f64).collect();
    let interior: Vec<usize> = (1..n).collect();
    let mut v = vec![1.0; interior.len()];
    if n % 2 == 0 {
        let w0 = 1.0 / (n * n - 1) as f64;
        w[0] = w0;
        w[n] = w0;
        for k in 1..n / 2 {
            for (vi, &j) in v.iter_mut().zip(&interior) {
                *vi -= 2.0 * (2.0 * k as f64 * theta[j]).cos() / (4 * k * k - 1) as f64;
            }
        }
        for (vi, &j) in v.iter_mut().zip(&interior) {
            *vi -= (n as f64 * theta[j]).cos() / (n * n - 1) as f64;
        }
    } else {
        let w0 = 1.0 / (n * n) as f64;
        w[0] = w0;
        w[n] = w0;
        for k in 1..=(n - 1) / 2 {
            for (vi, &j) in v.iter_mut().zip(&interior) {
                *vi -= 2.0 * (2.0 * k as f64 * theta[j]).cos() / (4 * k * k - 1) as f64;
            }
        }
    }
    for (vi, &j) in v.iter().zip(&interior) {
        w[j] = 2.0 * vi / n as f64;
    }
    w
}

/// LU factorization with partial pivoting of a small dense matrix.
#[derive(Debug, Clone)]
pub struct DenseLu {
    m: usize,
    lu: Vec<f64>,
    piv: Vec<usize>,
}

impl DenseLu {
    pub fn factor(mut a: Vec<f64>, m: usize) -> Option<Self> {
        let mut piv: Vec<usize> = (0..m).collect();
        for k in 0..m {
            let (p, pmax) = (k..m)
                .map(|i| (i, a[i * m + k].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax < 1e-300 {
                return None;
            }
            if p != k {
                for j in 0..m {
                    a.swap(k * m + j, p * m + j);
                }
                piv.swap(k, p);
            }
            let pivot = a[k * m + k];
            for i in k + 1..m {
                let l = a[i * m + k] / pivot;
                a[i * m + k] = l;
                if l != 0.0 {
                    for j in k + 1..m {
                        a[i * m + j] -= l * a[k * m + j];
                    }
                }
            }
        }
        Some(Self { m, lu: a, piv })
    }

    /// Solve in place for one right-hand side.
    pub fn solve(&self, b: &mut [f64]) {
        let m = self.m;
        let permuted: Vec<f64> = self.piv.iter().map(|&p| b[p]).collect();
        b.copy_from_slice(&permuted);
        for i in 0..m {
            let mut s = b[i];
            for j in 0..i {
                s -= self.lu[i * m + j] * b[j];
            }
            b[i] = s;
        }
        for i in (0..m).rev() {
            let mut s = b[i];
            for j in i + 1..m {
                s -= self.lu[i * m + j] * b[j];
            }
            b[i] = s / self.lu[i * m + i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_span_the_interval() {
        let c = ChebyshevColumn::new(12);
        assert_eq!(c.nodes[0], -1.0);
        assert_eq!(c.nodes[12], 0.0);
        assert!(c.nodes.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn differentiates_polynomials_exactly() {
        let c = ChebyshevColumn::new(10);
        let v: Vec<f64> = c.nodes.iter().map(|y| y.powi(5) - 2.0 * y * y).collect();
        for i in 0..=10 {
            let y = c.nodes[i];
            let d = c.d1_row(i, &v);
            assert!((d - (5.0 * y.powi(4) - 4.0 * y)).abs() < 1e-11);
        }
    }

    #[test]
    fn quadrature_integrates_exponentials() {
        for n in [8, 9, 16] {
            let c = ChebyshevColumn::new(n);
            let q: f64 = c
                .nodes
                .iter()
                .zip(&c.weights)
                .map(|(y, w)| w * (2.0 * y).exp())
                .sum();
            let exact = 0.5 * (1.0 - (-2.0f64).exp());
            assert!((q - exact).abs() < 1e-9, "n = {n}: {q} vs {exact}");
        }
    }

    #[test]
    fn lu_solves_small_system() {
        let a = vec![0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0];
        let lu = DenseLu::factor(a.clone(), 3).unwrap();
        let x = [1.0, -2.0, 0.5];
        let mut b: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|j| a[i * 3 + j] * x[j]).sum())
            .collect();
        lu.solve(&mut b);
        for (p, q) in b.iter().zip(x) {
            assert!((p - q).abs() < 1e-14);
        }
    }
}
