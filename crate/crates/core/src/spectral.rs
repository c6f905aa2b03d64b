//! Fourier toolkit on the horizontal torus `[0, 2pi)^2`.
//!
//! [`InterfaceField`] carries both grid values and normalized Fourier
//! coefficients. Every multiplier here is diagonal in Fourier space, so the
//! operators commute with one another exactly.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{derivative_wavenumber, plan, wavenumber};

/// Horizontal axis of the torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X1,
    X2,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X1 => 1,
            Axis::X2 => 2,
        }
    }

    pub fn both() -> [Axis; 2] {
        [Axis::X1, Axis::X2]
    }
}

/// A real scalar field on the torus sampled on an `n1 x n2` uniform grid.
#[derive(Debug, Clone)]
pub struct InterfaceField {
    n1: usize,
    n2: usize,
    values: Vec<f64>,
    coeffs: Vec<Complex64>,
}

impl PartialEq for InterfaceField {
    fn eq(&self, other: &Self) -> bool {
        self.n1 == other.n1 && self.n2 == other.n2 && self.values == other.values
    }
}

impl InterfaceField {
    pub fn from_values(n1: usize, n2: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), n1 * n2, "value count does not match grid");
        let coeffs = plan(n1, n2).forward_real(&values);
        Self {
            n1,
            n2,
            values,
            coeffs,
        }
    }

    /// Build from coefficients; the imaginary part of the synthesized values
    /// is discarded, so non-Hermitian input is projected onto real fields.
    pub fn from_coeffs(n1: usize, n2: usize, coeffs: Vec<Complex64>) -> Self {
        assert_eq!(coeffs.len(), n1 * n2, "coefficient count does not match grid");
        let values = plan(n1, n2).inverse_real(&coeffs);
        Self::from_values(n1, n2, values)
    }

    pub fn from_fn(n1: usize, n2: usize, f: impl Fn(f64, f64) -> f64) -> Self {
        let (h1, h2) = (2.0 * PI / n1 as f64, 2.0 * PI / n2 as f64);
        let mut values = Vec::with_capacity(n1 * n2);
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                values.push(f(i1 as f64 * h1, i2 as f64 * h2));
            }
        }
        Self::from_values(n1, n2, values)
    }

    pub fn zeros(n1: usize, n2: usize) -> Self {
        Self::constant(n1, n2, 0.0)
    }

    pub fn constant(n1: usize, n2: usize, c: f64) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n1 * n2];
        coeffs[0] = Complex64::new(c, 0.0);
        Self {
            n1,
            n2,
            values: vec![c; n1 * n2],
            coeffs,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of the mode `exp(i (k1 x1 + k2 x2))`.
    pub fn coeff(&self, k1: i64, k2: i64) -> Complex64 {
        let i1 = k1.rem_euclid(self.n1 as i64) as usize;
        let i2 = k2.rem_euclid(self.n2 as i64) as usize;
        self.coeffs[i1 * self.n2 + i2]
    }

    /// Grid coordinates `(x1, x2)` of flat index `idx`.
    pub fn point(&self, idx: usize) -> (f64, f64) {
        let (i1, i2) = (idx / self.n2, idx % self.n2);
        (
            2.0 * PI * i1 as f64 / self.n1 as f64,
            2.0 * PI * i2 as f64 / self.n2 as f64,
        )
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    pub fn is_mean_zero(&self) -> bool {
        let max = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        self.coeffs[0].norm() <= 1e-12 * max.max(f64::MIN_POSITIVE)
    }

    pub fn without_mean(&self) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs[0] = Complex64::new(0.0, 0.0);
        let values = self.values.iter().map(|v| v - self.mean()).collect();
        Self {
            n1: self.n1,
            n2: self.n2,
            values,
            coeffs,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `L^2(T^2)` inner product by the (spectrally exact) grid quadrature.
    pub fn inner(&self, other: &Self) -> f64 {
        self.check_same_grid(other).expect("inner product across grids");
        let w = 4.0 * PI * PI / self.len() as f64;
        w * self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_values(self.n1, self.n2, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        self.check_same_grid(other).expect("pointwise op across grids");
        Self::from_values(
            self.n1,
            self.n2,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            n1: self.n1,
            n2: self.n2,
            values: self.values.iter().map(|v| v * s).collect(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                self.dims(),
                other.dims()
            )));
        }
        Ok(())
    }

    fn with_multiplier(&self, m: impl Fn(i64, i64, f64, f64) -> Complex64) -> Self {
        let (n1, n2) = (self.n1, self.n2);
        let mut coeffs = self.coeffs.clone();
        for i1 in 0..n1 {
            let k1 = wavenumber(i1, n1);
            let d1 = derivative_wavenumber(i1, n1);
            for i2 in 0..n2 {
                let k2 = wavenumber(i2, n2);
                let d2 = derivative_wavenumber(i2, n2);
                coeffs[i1 * n2 + i2] *= m(k1, k2, d1, d2);
            }
        }
        Self::from_coeffs(n1, n2, coeffs)
    }

    /// Apply a real radial multiplier `m(|k|)` (Nyquist treated with its true
    /// wavenumber, so even multipliers keep that mode).
    pub fn radial_multiplier(&self, m: impl Fn(f64) -> f64) -> Self {
        self.with_multiplier(|k1, k2, _, _| {
            let k = ((k1 * k1 + k2 * k2) as f64).sqrt();
            Complex64::new(m(k), 0.0)
        })
    }

    /// Exact spectral derivative `d/dx_i` (multiplier `i k_i`).
    pub fn horizontal_derivative(&self, axis: Axis) -> Self {
        self.with_multiplier(|_, _, d1, d2| match axis {
            Axis::X1 => Complex64::new(0.0, d1),
            Axis::X2 => Complex64::new(0.0, d2),
        })
    }

    pub fn gradient(&self) -> [Self; 2] {
        [
            self.horizontal_derivative(Axis::X1),
            self.horizontal_derivative(Axis::X2),
        ]
    }

    /// Horizontal Laplacian, realized as the sum of two squared first
    /// derivatives so it agrees with `d1(d1 g) + d2(d2 g)` exactly.
    pub fn laplacian(&self) -> Self {
        self.with_multiplier(|_, _, d1, d2| Complex64::new(-(d1 * d1 + d2 * d2), 0.0))
    }

    /// Bessel potential `<grad'>^s`: coefficient `k` scaled by `(1+|k|^2)^{s/2}`.
    pub fn bessel_multiplier(&self, s: f64) -> Self {
        self.with_multiplier(|k1, k2, _, _| {
            let k2sum = (k1 * k1 + k2 * k2) as f64;
            Complex64::new((1.0 + k2sum).powf(0.5 * s), 0.0)
        })
    }

    /// Convolution with the Gaussian mollifier of symbol `exp(-eps |k|^2 / 4)`.
    pub fn mollify(&self, eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "mollifier scale must be positive, got {eps}"
            )));
        }
        Ok(self.with_multiplier(|k1, k2, _, _| {
            let k2sum = (k1 * k1 + k2 * k2) as f64;
            Complex64::new((-0.25 * eps * k2sum).exp(), 0.0)
        }))
    }

    /// `|g|_{H^s} = 2 pi (sum_k (1+|k|^2)^s |c_k|^2)^{1/2}`; at `s = 0` this
    /// is the `L^2(T^2)` norm of the grid function.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let (n1, n2) = (self.n1, self.n2);
        let mut acc = 0.0;
        for i1 in 0..n1 {
            let k1 = wavenumber(i1, n1);
            for i2 in 0..n2 {
                let k2 = wavenumber(i2, n2);
                let w = (1.0 + (k1 * k1 + k2 * k2) as f64).powf(s);
                acc += w * self.coeffs[i1 * n2 + i2].norm_sqr();
            }
        }
        2.0 * PI * acc.sqrt()
    }

    /// Pointwise product with 3/2-rule zero padding; the result keeps modes
    /// strictly inside the original band (Nyquist dropped).
    pub fn dealiased_product(&self, other: &Self) -> Result<Self> {
        self.check_same_grid(other)?;
        let (n1, n2) = (self.n1, self.n2);
        let (m1, m2) = (padded_size(n1), padded_size(n2));
        let pa = pad(self, m1, m2);
        let pb = pad(other, m1, m2);
        let big = plan(m1, m2);
        let va = big.inverse_real(&pa);
        let vb = big.inverse_real(&pb);
        let prod: Vec<f64> = va.iter().zip(&vb).map(|(a, b)| a * b).collect();
        let pc = big.forward_real(&prod);
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n1 * n2];
        for i1 in 0..n1 {
            let k1 = wavenumber(i1, n1);
            if 2 * k1.unsigned_abs() as usize >= n1 {
                continue;
            }
            for i2 in 0..n2 {
                let k2 = wavenumber(i2, n2);
                if 2 * k2.unsigned_abs() as usize >= n2 {
                    continue;
                }
                let j1 = k1.rem_euclid(m1 as i64) as usize;
                let j2 = k2.rem_euclid(m2 as i64) as usize;
                coeffs[i1 * n2 + i2] = pc[j1 * m2 + j2];
            }
        }
        Ok(Self::from_coeffs(n1, n2, coeffs))
    }

    /// Zero every mode on a Nyquist line (`k1 = n1/2` or `k2 = n2/2`), where
    /// odd derivatives vanish.
    pub fn without_nyquist(&self) -> Self {
        let (h1, h2) = ((self.n1 / 2) as i64, (self.n2 / 2) as i64);
        self.with_multiplier(|k1, k2, _, _| {
            if k1 == h1 || k2 == h2 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(1.0, 0.0)
            }
        })
    }

    /// Keep only modes with `|k1|, |k2| <= kmax`.
    pub fn band_limit(&self, kmax: i64) -> Self {
        self.with_multiplier(|k1, k2, _, _| {
            if k1.abs() <= kmax && k2.abs() <= kmax {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }
}

fn padded_size(n: usize) -> usize {
    let m = (3 * n).div_ceil(2);
    m + m % 2
}

fn pad(g: &InterfaceField, m1: usize, m2: usize) -> Vec<Complex64> {
    let (n1, n2) = g.dims();
    let mut out = vec![Complex64::new(0.0, 0.0); m1 * m2];
    for i1 in 0..n1 {
        let k1 = wavenumber(i1, n1);
        if 2 * k1.unsigned_abs() as usize >= n1 {
            continue;
        }
        for i2 in 0..n2 {
            let k2 = wavenumber(i2, n2);
            if 2 * k2.unsigned_abs() as usize >= n2 {
                continue;
            }
            let j1 = k1.rem_euclid(m1 as i64) as usize;
            let j2 = k2.rem_euclid(m2 as i64) as usize;
            out[j1 * m2 + j2] = g.coeffs[i1 * n2 + i2];
        }
    }
    out
}

impl Add for &InterfaceField {
    type Output = InterfaceField;
    fn add(self, rhs: Self) -> InterfaceField {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &InterfaceField {
    type Output = InterfaceField;
    fn sub(self, rhs: Self) -> InterfaceField {
        self.zip_map(rhs, |a, b| a - b)
    }
}

/// Pointwise (aliased) product on the grid.
impl Mul for &InterfaceField {
    type Output = InterfaceField;
    fn mul(self, rhs: Self) -> InterfaceField {
        self.zip_map(rhs, |a, b| a * b)
    }
}

impl Mul<f64> for &InterfaceField {
    type Output = InterfaceField;
    fn mul(self, rhs: f64) -> InterfaceField {
        self.scale(rhs)
    }
}

impl Neg for &InterfaceField {
    type Output = InterfaceField;
    fn neg(self) -> InterfaceField {
        self.scale(-1.0)
    }
}

/// Sum of pointwise products `sum_i a_i * b_i`.
pub fn dot(a: &[&InterfaceField], b: &[&InterfaceField]) -> InterfaceField {
    assert_eq!(a.len(), b.len());
    let (n1, n2) = a[0].dims();
    let mut values = vec![0.0; n1 * n2];
    for (x, y) in a.iter().zip(b) {
        for (v, (p, q)) in values.iter_mut().zip(x.values().iter().zip(y.values())) {
            *v += p * q;
        }
    }
    InterfaceField::from_values(n1, n2, values)
}

/// Linear combination `sum_i c_i * g_i` over a common grid.
pub fn combine(terms: &[(f64, &InterfaceField)]) -> InterfaceField {
    let (n1, n2) = terms[0].1.dims();
    let mut values = vec![0.0; n1 * n2];
    for (c, g) in terms {
        for (v, x) in values.iter_mut().zip(g.values()) {
            *v += c * x;
        }
    }
    InterfaceField::from_values(n1, n2, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn max_diff(a: &InterfaceField, b: &InterfaceField) -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn derivative_of_cosines() {
        let g = InterfaceField::from_fn(16, 16, |x, _| x.cos());
        let d = g.horizontal_derivative(Axis::X1);
        let expect = InterfaceField::from_fn(16, 16, |x, _| -x.sin());
        assert!(max_diff(&d, &expect) < 1e-13);

        let g = InterfaceField::from_fn(16, 16, |x, y| (2.0 * x + y).cos());
        let d = g.horizontal_derivative(Axis::X2);
        let expect = InterfaceField::from_fn(16, 16, |x, y| -(2.0 * x + y).sin());
        assert!(max_diff(&d, &expect) < 1e-13);

        let c = InterfaceField::constant(8, 8, 3.5);
        assert!(c.horizontal_derivative(Axis::X1).max_abs() < 1e-15);
    }

    #[test]
    fn bessel_multiplier_examples() {
        let g = InterfaceField::from_fn(16, 16, |x, y| (x + 2.0 * y).sin() + 0.3);
        assert!(max_diff(&g.bessel_multiplier(0.0), &g) < 1e-14);
        let c = InterfaceField::constant(16, 16, 2.0);
        assert!(max_diff(&c.bessel_multiplier(3.7), &c) < 1e-14);

        // (1+1)^{2/2} = 2, cross-checked by a direct DFT of the output.
        let g = InterfaceField::from_fn(16, 16, |x, _| x.cos());
        let out = g.bessel_multiplier(2.0);
        let direct: f64 = out
            .values()
            .iter()
            .enumerate()
            .map(|(i, v)| v * g.point(i).0.cos())
            .sum::<f64>()
            * 2.0
            / 256.0;
        assert_relative_eq!(direct, 2.0, epsilon = 1e-13);
        let expect = g.scale(2.0);
        assert!(max_diff(&out, &expect) < 1e-13);
    }

    #[test]
    fn mollify_examples() {
        let g = InterfaceField::from_fn(32, 32, |x, _| (8.0 * x).cos());
        let out = g.mollify(0.1).unwrap();
        let expect = g.scale((-1.6f64).exp());
        assert!(max_diff(&out, &expect) < 1e-13);

        let c = InterfaceField::constant(16, 16, -1.25);
        for eps in [1e-1, 1e-2, 1e-3] {
            assert!(max_diff(&c.mollify(eps).unwrap(), &c) < 1e-14);
        }
        assert!(g.mollify(0.0).is_err());
        assert!(g.mollify(-1.0).is_err());
    }

    #[test]
    fn mollify_approximate_identity_is_monotone() {
        let g = InterfaceField::from_fn(32, 32, |x, y| {
            (x + y).sin() + 0.4 * (3.0 * x).cos() + 0.2 * (5.0 * y - x).sin()
        });
        let dists: Vec<f64> = [1e-1, 1e-2, 1e-3]
            .iter()
            .map(|&e| (&g.mollify(e).unwrap() - &g).l2_norm() / g.l2_norm())
            .collect();
        assert!(dists[0] > dists[1] && dists[1] > dists[2]);
        assert!(dists[2] < 1e-2);
    }

    #[test]
    fn sobolev_norm_examples() {
        let z = InterfaceField::zeros(16, 16);
        assert_eq!(z.sobolev_norm(2.5), 0.0);
        let g = InterfaceField::from_fn(16, 16, |x, _| x.cos());
        let l2 = (2.0 * PI * PI).sqrt();
        assert_relative_eq!(g.sobolev_norm(0.0), l2, max_relative = 1e-13);
        assert_relative_eq!(g.sobolev_norm(1.0), 2f64.sqrt() * l2, max_relative = 1e-13);
        assert_relative_eq!(g.sobolev_norm(0.0), g.l2_norm(), max_relative = 1e-12);
    }

    #[test]
    fn dealiased_product_examples() {
        let one = InterfaceField::constant(16, 16, 1.0);
        let b = InterfaceField::from_fn(16, 16, |x, y| (x - 2.0 * y).sin());
        assert!(max_diff(&one.dealiased_product(&b).unwrap(), &b) < 1e-13);

        let c = InterfaceField::from_fn(16, 16, |x, _| x.cos());
        let sq = c.dealiased_product(&c).unwrap();
        let expect = InterfaceField::from_fn(16, 16, |x, _| 0.5 + 0.5 * (2.0 * x).cos());
        assert!(max_diff(&sq, &expect) < 1e-13);

        let other = InterfaceField::zeros(8, 8);
        assert!(matches!(
            c.dealiased_product(&other),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn mean_zero_projection() {
        let g = InterfaceField::from_fn(8, 8, |x, y| 1.5 + x.sin() * y.cos());
        assert!(!g.is_mean_zero());
        let z = g.without_mean();
        assert!(z.is_mean_zero());
        assert_relative_eq!(z.mean(), 0.0, epsilon = 1e-15);
    }
}
