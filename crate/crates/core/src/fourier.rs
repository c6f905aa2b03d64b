//! Cached 2-D FFT plans on the horizontal torus and the wavenumber
//! conventions used by every spectral operator.
//!
//! Layout is row-major `i1 * n2 + i2`. Forward transforms are normalized so
//! that the coefficient array holds the Fourier series of the grid values:
//! `v(x) = sum_k c_k exp(i k.x)`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub(crate) struct Plan2 {
    pub n1: usize,
    pub n2: usize,
    fwd1: Arc<dyn Fft<f64>>,
    inv1: Arc<dyn Fft<f64>>,
    fwd2: Arc<dyn Fft<f64>>,
    inv2: Arc<dyn Fft<f64>>,
}

fn cache() -> &'static Mutex<HashMap<(usize, usize), Arc<Plan2>>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Plan2>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

pub(crate) fn plan(n1: usize, n2: usize) -> Arc<Plan2> {
    let mut map = cache().lock().expect("fft plan cache poisoned");
    map.entry((n1, n2))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plan2 {
                n1,
                n2,
                fwd1: planner.plan_fft_forward(n1),
                inv1: planner.plan_fft_inverse(n1),
                fwd2: planner.plan_fft_forward(n2),
                inv2: planner.plan_fft_inverse(n2),
            })
        })
        .clone()
}

impl Plan2 {
    fn transform(&self, data: &mut [Complex64], forward: bool) {
        let (n1, n2) = (self.n1, self.n2);
        debug_assert_eq!(data.len(), n1 * n2);
        let (rows, cols) = if forward {
            (&self.fwd2, &self.fwd1)
        } else {
            (&self.inv2, &self.inv1)
        };
        for row in data.chunks_exact_mut(n2) {
            rows.process(row);
        }
        let mut column = vec![Complex64::new(0.0, 0.0); n1];
        for i2 in 0..n2 {
            for i1 in 0..n1 {
                column[i1] = data[i1 * n2 + i2];
            }
            cols.process(&mut column);
            for i1 in 0..n1 {
                data[i1 * n2 + i2] = column[i1];
            }
        }
    }

    /// Grid values to normalized Fourier coefficients.
    pub fn forward_real(&self, values: &[f64]) -> Vec<Complex64> {
        let scale = 1.0 / (self.n1 * self.n2) as f64;
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, true);
        for c in &mut data {
            *c *= scale;
        }
        data
    }

    /// Fourier coefficients to grid values (imaginary round-off dropped).
    pub fn inverse_real(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut data = coeffs.to_vec();
        self.transform(&mut data, false);
        data.into_iter().map(|c| c.re).collect()
    }

    pub fn inverse_into(&self, coeffs: &mut [Complex64], out: &mut [f64]) {
        self.transform(coeffs, false);
        for (o, c) in out.iter_mut().zip(coeffs.iter()) {
            *o = c.re;
        }
    }
}

/// Signed integer wavenumber of grid index `i` on an `n`-point periodic grid.
/// The Nyquist index maps to `+n/2`.
pub fn wavenumber(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Wavenumber used by odd-order derivatives: the Nyquist mode is dropped so
/// that differentiation maps real fields to real fields.
pub fn derivative_wavenumber(i: usize, n: usize) -> f64 {
    if n % 2 == 0 && i == n / 2 {
        0.0
    } else {
        wavenumber(i, n) as f64
    }
}

/// Apply a diagonal Fourier multiplier to real grid values.
pub(crate) fn apply_multiplier<M>(n1: usize, n2: usize, values: &[f64], multiplier: M) -> Vec<f64>
where
    M: Fn(usize, usize) -> Complex64,
{
    let p = plan(n1, n2);
    let mut coeffs = p.forward_real(values);
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            coeffs[i1 * n2 + i2] *= multiplier(i1, i2);
        }
    }
    p.inverse_real(&coeffs)
}

/// First derivative along axis 1 (`x1`) or 2 (`x2`) of one horizontal layer.
pub(crate) fn derivative_layer(n1: usize, n2: usize, values: &[f64], axis: usize) -> Vec<f64> {
    apply_multiplier(n1, n2, values, |i1, i2| {
        let k = if axis == 1 {
            derivative_wavenumber(i1, n1)
        } else {
            derivative_wavenumber(i2, n2)
        };
        Complex64::new(0.0, k)
    })
}

/// Both horizontal first derivatives of a layer from one forward transform.
pub(crate) fn gradient_layer(n1: usize, n2: usize, values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let p = plan(n1, n2);
    let coeffs = p.forward_real(values);
    let mut c1 = coeffs.clone();
    let mut c2 = coeffs;
    for i1 in 0..n1 {
        let k1 = derivative_wavenumber(i1, n1);
        for i2 in 0..n2 {
            let k2 = derivative_wavenumber(i2, n2);
            let idx = i1 * n2 + i2;
            c1[idx] *= Complex64::new(0.0, k1);
            c2[idx] *= Complex64::new(0.0, k2);
        }
    }
    let mut d1 = vec![0.0; n1 * n2];
    let mut d2 = vec![0.0; n1 * n2];
    p.inverse_into(&mut c1, &mut d1);
    p.inverse_into(&mut c2, &mut d2);
    (d1, d2)
}
