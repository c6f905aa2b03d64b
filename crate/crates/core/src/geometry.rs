//! Reference slab `T^2 x [-1, 0]`, bulk fields sampled on it, and the
//! harmonic coordinate map onto the physical domain below the interface.
//!
//! Bulk storage is layer-major: `data[j * n1 * n2 + i1 * n2 + i2]`, with
//! layer `j = 0` at the bottom and `j = nz` at the interface.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use crate::elliptic::{flat_solve, BottomBc};
use crate::error::{Error, Result};
use crate::fourier::{derivative_layer, gradient_layer};
use crate::spectral::{Axis, InterfaceField};
use crate::vertical::ChebyshevColumn;

fn column_cache(nz: usize) -> Arc<ChebyshevColumn> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<ChebyshevColumn>>>> = OnceLock::new();
    let mut map = CACHE
        .get_or_init(|| Mutex::new(HashMap::new()))
        .lock()
        .expect("column cache poisoned");
    map.entry(nz)
        .or_insert_with(|| Arc::new(ChebyshevColumn::new(nz)))
        .clone()
}

/// Horizontal `n1 x n2` Fourier grid times `nz + 1` vertical
/// Chebyshev–Lobatto levels on `[-1, 0]`.
#[derive(Debug, Clone)]
pub struct SlabGrid {
    pub n1: usize,
    pub n2: usize,
    pub nz: usize,
    column: Arc<ChebyshevColumn>,
}

impl PartialEq for SlabGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dims() == other.dims()
    }
}

impl SlabGrid {
    pub fn new(n1: usize, n2: usize, nz: usize) -> Result<Self> {
        if n1 < 4 || n2 < 4 || n1 % 2 != 0 || n2 % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "horizontal dims must be even and >= 4, got {n1}x{n2}"
            )));
        }
        if nz < 4 {
            return Err(Error::InvalidParameter(format!(
                "need nz >= 4 vertical intervals, got {nz}"
            )));
        }
        Ok(Self {
            n1,
            n2,
            nz,
            column: column_cache(nz),
        })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n1, self.n2, self.nz)
    }

    /// Points per horizontal layer.
    pub fn layer_len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn levels(&self) -> usize {
        self.nz + 1
    }

    pub fn len(&self) -> usize {
        self.layer_len() * self.levels()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn column(&self) -> &ChebyshevColumn {
        &self.column
    }

    pub fn y3(&self) -> &[f64] {
        &self.column.nodes
    }

    /// Horizontal grid spacing (the smaller of the two).
    pub fn dx(&self) -> f64 {
        2.0 * PI / self.n1.max(self.n2) as f64
    }

    pub fn x1(&self, i1: usize) -> f64 {
        2.0 * PI * i1 as f64 / self.n1 as f64
    }

    pub fn x2(&self, i2: usize) -> f64 {
        2.0 * PI * i2 as f64 / self.n2 as f64
    }

    fn check(&self, other: &SlabGrid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                self.dims(),
                other.dims()
            )));
        }
        Ok(())
    }
}

/// A real scalar field on the reference slab. `map_hash` identifies the
/// coordinate map the values were produced under (0 for map-independent data).
#[derive(Debug, Clone, PartialEq)]
pub struct BulkField {
    grid: SlabGrid,
    data: Vec<f64>,
    pub map_hash: u64,
}

impl BulkField {
    pub fn new(grid: &SlabGrid, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), grid.len(), "bulk data does not match grid");
        Self {
            grid: grid.clone(),
            data,
            map_hash: 0,
        }
    }

    pub fn zeros(grid: &SlabGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &SlabGrid, c: f64) -> Self {
        Self::new(grid, vec![c; grid.len()])
    }

    /// Sample `f(x1, x2, y3)` at the reference nodes.
    pub fn from_fn(grid: &SlabGrid, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for &y in grid.y3() {
            for i1 in 0..grid.n1 {
                for i2 in 0..grid.n2 {
                    data.push(f(grid.x1(i1), grid.x2(i2), y));
                }
            }
        }
        Self::new(grid, data)
    }

    /// Vertically constant extension of an interface field.
    pub fn from_layer(grid: &SlabGrid, g: &InterfaceField) -> Self {
        assert_eq!(g.dims(), (grid.n1, grid.n2));
        let mut data = Vec::with_capacity(grid.len());
        for _ in 0..grid.levels() {
            data.extend_from_slice(g.values());
        }
        Self::new(grid, data)
    }

    /// Product `g(x') * w(y3)` of a horizontal field and a vertical profile.
    pub fn separable(grid: &SlabGrid, g: &InterfaceField, w: impl Fn(f64) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for &y in grid.y3() {
            let wy = w(y);
            data.extend(g.values().iter().map(|v| v * wy));
        }
        Self::new(grid, data)
    }

    pub fn with_map_hash(mut self, hash: u64) -> Self {
        self.map_hash = hash;
        self
    }

    pub fn grid(&self) -> &SlabGrid {
        &self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn layer(&self, j: usize) -> &[f64] {
        let n = self.grid.layer_len();
        &self.data[j * n..(j + 1) * n]
    }

    pub fn layer_mut(&mut self, j: usize) -> &mut [f64] {
        let n = self.grid.layer_len();
        &mut self.data[j * n..(j + 1) * n]
    }

    pub fn layer_field(&self, j: usize) -> InterfaceField {
        InterfaceField::from_values(self.grid.n1, self.grid.n2, self.layer(j).to_vec())
    }

    pub fn set_layer(&mut self, j: usize, g: &InterfaceField) {
        self.layer_mut(j).copy_from_slice(g.values());
    }

    /// Restriction to the interface level `y3 = 0`.
    pub fn trace(&self) -> InterfaceField {
        self.layer_field(self.grid.nz)
    }

    /// Restriction to the bottom `y3 = -1`.
    pub fn bottom_trace(&self) -> InterfaceField {
        self.layer_field(0)
    }

    fn map_layers(&self, op: impl Fn(&[f64]) -> Vec<f64>) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.grid.levels() {
            data.extend(op(self.layer(j)));
        }
        Self::new(&self.grid, data).with_map_hash(self.map_hash)
    }

    /// Reference-coordinate derivative along a horizontal axis.
    pub fn d_horizontal(&self, axis: Axis) -> Self {
        let (n1, n2) = (self.grid.n1, self.grid.n2);
        self.map_layers(|l| derivative_layer(n1, n2, l, axis.index()))
    }

    /// Both reference horizontal derivatives.
    pub fn grad_horizontal(&self) -> [Self; 2] {
        let (n1, n2) = (self.grid.n1, self.grid.n2);
        let mut d1 = Vec::with_capacity(self.data.len());
        let mut d2 = Vec::with_capacity(self.data.len());
        for j in 0..self.grid.levels() {
            let (a, b) = gradient_layer(n1, n2, self.layer(j));
            d1.extend(a);
            d2.extend(b);
        }
        [
            Self::new(&self.grid, d1).with_map_hash(self.map_hash),
            Self::new(&self.grid, d2).with_map_hash(self.map_hash),
        ]
    }

    /// Reference derivative in `y3` (Chebyshev collocation).
    pub fn d_y3(&self) -> Self {
        self.apply_vertical(&self.grid.column().d1)
    }

    pub fn d2_y3(&self) -> Self {
        self.apply_vertical(&self.grid.column().d2)
    }

    fn apply_vertical(&self, mat: &[f64]) -> Self {
        let m = self.grid.levels();
        let n = self.grid.layer_len();
        let mut out = vec![0.0; self.data.len()];
        for i in 0..m {
            let row = &mat[i * m..(i + 1) * m];
            let dst = &mut out[i * n..(i + 1) * n];
            for (k, &a) in row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let src = &self.data[k * n..(k + 1) * n];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        Self::new(&self.grid, out).with_map_hash(self.map_hash)
    }

    /// `y3` derivative restricted to one level.
    pub fn d_y3_at(&self, j: usize) -> InterfaceField {
        let m = self.grid.levels();
        let n = self.grid.layer_len();
        let row = &self.grid.column().d1[j * m..(j + 1) * m];
        let mut out = vec![0.0; n];
        for (k, &a) in row.iter().enumerate() {
            for (d, s) in out.iter_mut().zip(self.layer(k)) {
                *d += a * s;
            }
        }
        InterfaceField::from_values(self.grid.n1, self.grid.n2, out)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::new(&self.grid, self.data.iter().map(|&v| f(v)).collect()).with_map_hash(self.map_hash)
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        self.grid.check(&other.grid).expect("bulk op across grids");
        Self::new(
            &self.grid,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
        .with_map_hash(self.map_hash.max(other.map_hash))
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &Self) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    /// Multiply every layer pointwise by a horizontal field.
    pub fn mul_layer(&self, g: &InterfaceField) -> Self {
        let n = self.grid.layer_len();
        let gv = g.values();
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(idx, v)| v * gv[idx % n])
            .collect();
        Self::new(&self.grid, data).with_map_hash(self.map_hash)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Integral over the reference slab (spectral in `x'`, Clenshaw–Curtis in `y3`).
    pub fn integrate_reference(&self) -> f64 {
        let n = self.grid.layer_len();
        let area = 4.0 * PI * PI / n as f64;
        self.grid
            .column()
            .weights
            .iter()
            .enumerate()
            .map(|(j, w)| w * self.layer(j).iter().sum::<f64>())
            .sum::<f64>()
            * area
    }

    /// Reference-slab `L^2` norm.
    pub fn l2_reference(&self) -> f64 {
        (self * self).integrate_reference().max(0.0).sqrt()
    }
}

impl Add for &BulkField {
    type Output = BulkField;
    fn add(self, rhs: Self) -> BulkField {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &BulkField {
    type Output = BulkField;
    fn sub(self, rhs: Self) -> BulkField {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul for &BulkField {
    type Output = BulkField;
    fn mul(self, rhs: Self) -> BulkField {
        self.zip_map(rhs, |a, b| a * b)
    }
}

impl Mul<f64> for &BulkField {
    type Output = BulkField;
    fn mul(self, rhs: f64) -> BulkField {
        self.scale(rhs)
    }
}

impl Neg for &BulkField {
    type Output = BulkField;
    fn neg(self) -> BulkField {
        self.scale(-1.0)
    }
}

/// Three scalar components on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub c: [BulkField; 3],
}

impl VectorField {
    pub fn new(c0: BulkField, c1: BulkField, c2: BulkField) -> Self {
        Self { c: [c0, c1, c2] }
    }

    pub fn zeros(grid: &SlabGrid) -> Self {
        Self::new(BulkField::zeros(grid), BulkField::zeros(grid), BulkField::zeros(grid))
    }

    pub fn constant(grid: &SlabGrid, v: [f64; 3]) -> Self {
        Self::new(
            BulkField::constant(grid, v[0]),
            BulkField::constant(grid, v[1]),
            BulkField::constant(grid, v[2]),
        )
    }

    pub fn grid(&self) -> &SlabGrid {
        self.c[0].grid()
    }

    pub fn trace(&self) -> [InterfaceField; 3] {
        [self.c[0].trace(), self.c[1].trace(), self.c[2].trace()]
    }

    pub fn bottom_trace(&self) -> [InterfaceField; 3] {
        [
            self.c[0].bottom_trace(),
            self.c[1].bottom_trace(),
            self.c[2].bottom_trace(),
        ]
    }

    pub fn map(&self, f: impl Fn(&BulkField) -> BulkField) -> Self {
        Self::new(f(&self.c[0]), f(&self.c[1]), f(&self.c[2]))
    }

    pub fn zip(&self, other: &Self, f: impl Fn(&BulkField, &BulkField) -> BulkField) -> Self {
        Self::new(
            f(&self.c[0], &other.c[0]),
            f(&self.c[1], &other.c[1]),
            f(&self.c[2], &other.c[2]),
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|c| c.scale(s))
    }

    pub fn axpy(&mut self, s: f64, other: &Self) {
        for (a, b) in self.c.iter_mut().zip(&other.c) {
            a.axpy(s, b);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().map(BulkField::max_abs).fold(0.0, f64::max)
    }

    /// Pointwise Euclidean dot product.
    pub fn dot(&self, other: &Self) -> BulkField {
        let mut out = &self.c[0] * &other.c[0];
        out.axpy(1.0, &(&self.c[1] * &other.c[1]));
        out.axpy(1.0, &(&self.c[2] * &other.c[2]));
        out
    }
}

/// The outward (unnormalized) normal `N_f = (-d1 f, -d2 f, 1)`.
pub fn normal_vector(f: &InterfaceField) -> [InterfaceField; 3] {
    let [f1, f2] = f.gradient();
    let (n1, n2) = f.dims();
    [f1.scale(-1.0), f2.scale(-1.0), InterfaceField::constant(n1, n2, 1.0)]
}

/// Tangents `tau1 = (1, 0, d1 f)` and `tau2 = (0, 1, d2 f)`.
pub fn tangent_vectors(f: &InterfaceField) -> [[InterfaceField; 3]; 2] {
    let [f1, f2] = f.gradient();
    let (n1, n2) = f.dims();
    let one = InterfaceField::constant(n1, n2, 1.0);
    let zero = InterfaceField::zeros(n1, n2);
    [
        [one.clone(), zero.clone(), f1],
        [zero, one, f2],
    ]
}

/// 64-bit FNV-1a over the grid dims and interface values: a stable identifier
/// for a coordinate map.
pub fn fnv1a(dims: (usize, usize, usize), values: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    eat(&(dims.0 as u64).to_le_bytes());
    eat(&(dims.1 as u64).to_le_bytes());
    eat(&(dims.2 as u64).to_le_bytes());
    for v in values {
        eat(&v.to_bits().to_le_bytes());
    }
    h
}

/// Harmonic coordinate `Phi_f(y) = (y', phi(y))` with the reference surface
/// flat: `phi = y3 + E f`, `E` the discrete harmonic extension with zero
/// bottom data. Caches the metric coefficients of the mapped Laplacian
///
/// `Lap v = v_11 + v_22 - 2 a1 v_13 - 2 a2 v_23 + c33 v_33 + b v_3`
///
/// (subscripts are reference derivatives, `a_i = phi_i / phi_3`).
#[derive(Debug, Clone)]
pub struct CoordinateMap {
    grid: SlabGrid,
    f: InterfaceField,
    phi: BulkField,
    phi_grad: [BulkField; 3],
    a: [BulkField; 2],
    c33: BulkField,
    b: BulkField,
    hash: u64,
    flat: bool,
}

impl CoordinateMap {
    pub fn build(f: &InterfaceField, grid: &SlabGrid) -> Result<Self> {
        if f.dims() != (grid.n1, grid.n2) {
            return Err(Error::GridMismatch(format!(
                "interface {:?} vs grid {:?}",
                f.dims(),
                grid.dims()
            )));
        }
        let max = f.max_abs();
        if !(max < 1.0) {
            return Err(Error::CeilingViolated {
                max_abs: max,
                limit: 1.0,
            });
        }
        let flat = f.values().iter().all(|&v| v == 0.0);
        let hash = fnv1a(grid.dims(), f.values());
        let mut phi = flat_extension(f, grid);
        let y3 = grid.y3();
        let n = grid.layer_len();
        for (j, &y) in y3.iter().enumerate() {
            for v in &mut phi.data[j * n..(j + 1) * n] {
                *v += y;
            }
        }
        // The extension reproduces the boundary data exactly at the nodes.
        phi.set_layer(grid.nz, f);
        for v in phi.layer_mut(0) {
            *v = -1.0;
        }
        let [p1, p2] = phi.grad_horizontal();
        let p3 = phi.d_y3();
        let min_jac = p3.min();
        if !(min_jac > 0.0) {
            return Err(Error::DegenerateMap {
                min_jacobian: min_jac,
            });
        }
        let a1 = &p1 / &p3;
        let a2 = &p2 / &p3;
        let c33 = BulkField::new(
            grid,
            (0..grid.len())
                .map(|i| {
                    let (x, y, z) = (p1.data[i], p2.data[i], p3.data[i]);
                    (1.0 + x * x + y * y) / (z * z)
                })
                .collect(),
        );
        let [a11, _] = a1.grad_horizontal();
        let [_, a22] = a2.grad_horizontal();
        let a13 = a1.d_y3();
        let a23 = a2.d_y3();
        let p33 = p3.d_y3();
        let b = BulkField::new(
            grid,
            (0..grid.len())
                .map(|i| {
                    let j = p3.data[i];
                    -a11.data[i] - a22.data[i]
                        + a1.data[i] * a13.data[i]
                        + a2.data[i] * a23.data[i]
                        - p33.data[i] / (j * j * j)
                })
                .collect(),
        );
        let tag = |v: BulkField| v.with_map_hash(hash);
        Ok(Self {
            grid: grid.clone(),
            f: f.clone(),
            phi: tag(phi),
            phi_grad: [tag(p1), tag(p2), tag(p3)],
            a: [tag(a1), tag(a2)],
            c33: tag(c33),
            b: tag(b),
            hash,
            flat,
        })
    }

    pub fn identity(grid: &SlabGrid) -> Self {
        Self::build(&InterfaceField::zeros(grid.n1, grid.n2), grid).expect("flat map")
    }

    pub fn grid(&self) -> &SlabGrid {
        &self.grid
    }

    pub fn interface(&self) -> &InterfaceField {
        &self.f
    }

    /// Vertical component `phi` of the map.
    pub fn phi(&self) -> &BulkField {
        &self.phi
    }

    /// Reference gradient of `phi`.
    pub fn phi_gradient(&self) -> &[BulkField; 3] {
        &self.phi_grad
    }

    /// `d phi / d y3`, the Jacobian determinant of the map.
    pub fn jacobian(&self) -> &BulkField {
        &self.phi_grad[2]
    }

    pub fn hash(&self) -> u64 {
        self.hash
    }

    pub fn is_flat(&self) -> bool {
        self.flat
    }

    /// Physical derivative `d/dx_i` (i = 0, 1, 2) of a field stored on the
    /// reference grid.
    pub fn derivative(&self, v: &BulkField, i: usize) -> BulkField {
        match i {
            0 | 1 => {
                let axis = if i == 0 { Axis::X1 } else { Axis::X2 };
                let vi = v.d_horizontal(axis);
                if self.flat {
                    return vi;
                }
                let v3 = v.d_y3();
                &vi - &(&self.a[i] * &v3)
            }
            _ => {
                let v3 = v.d_y3();
                (&v3 / self.jacobian()).with_map_hash(self.hash)
            }
        }
    }

    /// Physical gradient of a scalar, expressed on the reference grid.
    pub fn gradient(&self, v: &BulkField) -> VectorField {
        let [v1, v2] = v.grad_horizontal();
        let v3 = v.d_y3();
        if self.flat {
            return VectorField::new(v1, v2, v3);
        }
        let d1 = &v1 - &(&self.a[0] * &v3);
        let d2 = &v2 - &(&self.a[1] * &v3);
        let d3 = &v3 / self.jacobian();
        VectorField::new(d1, d2, d3)
    }

    /// `grad[i][j] = d v_i / d x_j`.
    pub fn jacobian_matrix(&self, v: &VectorField) -> [VectorField; 3] {
        [
            self.gradient(&v.c[0]),
            self.gradient(&v.c[1]),
            self.gradient(&v.c[2]),
        ]
    }

    pub fn divergence(&self, v: &VectorField) -> BulkField {
        let mut out = self.derivative(&v.c[0], 0);
        out.axpy(1.0, &self.derivative(&v.c[1], 1));
        out.axpy(1.0, &self.derivative(&v.c[2], 2));
        out
    }

    /// Physical Laplacian evaluated at every node (boundary rows included).
    pub fn laplacian(&self, v: &BulkField) -> BulkField {
        let grid = &self.grid;
        let (n1, n2) = (grid.n1, grid.n2);
        let mut h = Vec::with_capacity(grid.len());
        for j in 0..grid.levels() {
            let lap = crate::fourier::apply_multiplier(n1, n2, v.layer(j), |i1, i2| {
                // Second derivatives keep the Nyquist mode (true wavenumber).
                let k1 = crate::fourier::wavenumber(i1, n1);
                let k2 = crate::fourier::wavenumber(i2, n2);
                num_complex::Complex64::new(-((k1 * k1 + k2 * k2) as f64), 0.0)
            });
            h.extend(lap);
        }
        let horiz = BulkField::new(grid, h);
        let v33 = v.d2_y3();
        if self.flat {
            return &horiz + &v33;
        }
        let v3 = v.d_y3();
        let [v13, v23] = v3.grad_horizontal();
        let data = (0..grid.len())
            .map(|i| {
                horiz.data[i] - 2.0 * self.a[0].data[i] * v13.data[i]
                    - 2.0 * self.a[1].data[i] * v23.data[i]
                    + self.c33.data[i] * v33.data[i]
                    + self.b.data[i] * v3.data[i]
            })
            .collect();
        BulkField::new(grid, data).with_map_hash(self.hash)
    }

    /// `N_f . grad v` on the interface, `N_f = (-f_1, -f_2, 1)`.
    pub fn normal_flux(&self, v: &BulkField) -> InterfaceField {
        let top = v.trace();
        let v3 = v.d_y3_at(self.grid.nz);
        if self.flat {
            return v3;
        }
        let [f1, f2] = self.f.gradient();
        let [t1, t2] = top.gradient();
        let jac = self.jacobian().trace();
        let vals = (0..top.len())
            .map(|i| {
                let (a, b) = (f1.values()[i], f2.values()[i]);
                -a * t1.values()[i] - b * t2.values()[i]
                    + (1.0 + a * a + b * b) / jac.values()[i] * v3.values()[i]
            })
            .collect();
        InterfaceField::from_values(self.grid.n1, self.grid.n2, vals)
    }

    /// `N_f . V` on the interface for a vector field given on the grid.
    pub fn normal_component(&self, v: &VectorField) -> InterfaceField {
        let n = normal_vector(&self.f);
        let t = v.trace();
        &(&(&n[0] * &t[0]) + &(&n[1] * &t[1])) + &t[2]
    }

    /// Physical `d/dx3` on the bottom (where `d phi / d y_i = 0`).
    pub fn bottom_normal_derivative(&self, v: &BulkField) -> InterfaceField {
        let v3 = v.d_y3_at(0);
        if self.flat {
            return v3;
        }
        v3.zip_map(&self.jacobian().bottom_trace(), |a, j| a / j)
    }

    /// Integral over the physical domain.
    pub fn integrate(&self, v: &BulkField) -> f64 {
        (v * self.jacobian()).integrate_reference()
    }

    pub fn physical_x3(&self) -> &BulkField {
        &self.phi
    }
}

impl std::ops::Div for &BulkField {
    type Output = BulkField;
    fn div(self, rhs: Self) -> BulkField {
        self.zip_map(rhs, |a, b| a / b)
    }
}

/// Discrete harmonic extension on the flat slab with top data `g` and zero
/// bottom value (per horizontal mode).
pub fn flat_extension(g: &InterfaceField, grid: &SlabGrid) -> BulkField {
    let mut rhs = BulkField::zeros(grid);
    rhs.set_layer(grid.nz, g);
    flat_solve(&rhs, BottomBc::Dirichlet)
}

/// Free-function form of [`CoordinateMap::build`].
pub fn build_map(f: &InterfaceField, grid: &SlabGrid) -> Result<CoordinateMap> {
    CoordinateMap::build(f, grid)
}

/// Physical gradient of `v` under `map`.
pub fn mapped_gradient(v: &BulkField, map: &CoordinateMap) -> Result<VectorField> {
    if v.grid() != map.grid() {
        return Err(Error::GridMismatch("field and map grids differ".into()));
    }
    Ok(map.gradient(v))
}

const SNAPSHOT_MAGIC: &[u8; 8] = b"ELSNAP01";

/// Header of a binary bulk snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotHeader {
    pub n1: u32,
    pub n2: u32,
    pub levels: u32,
    pub components: u32,
    pub map_hash: u64,
    pub time: f64,
}

/// Write components as: magic `ELSNAP01`, `u32` n1, n2, levels, components,
/// `u64` map hash, `f64` time, then little-endian `f64` data ordered
/// `[component][level][i1][i2]`.
pub fn write_snapshot<W: Write>(out: &mut W, fields: &[&BulkField], time: f64) -> Result<()> {
    let first = fields
        .first()
        .ok_or_else(|| Error::InvalidParameter("snapshot needs at least one field".into()))?;
    let g = first.grid();
    for f in fields {
        g.check(f.grid())?;
    }
    out.write_all(SNAPSHOT_MAGIC)?;
    for d in [g.n1, g.n2, g.levels(), fields.len()] {
        out.write_all(&(d as u32).to_le_bytes())?;
    }
    out.write_all(&first.map_hash.to_le_bytes())?;
    out.write_all(&time.to_le_bytes())?;
    for f in fields {
        for v in f.data() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_snapshot<R: Read>(input: &mut R) -> Result<(SnapshotHeader, Vec<Vec<f64>>)> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::Io("not a bulk snapshot".into()));
    }
    let mut u32s = [0u32; 4];
    for d in &mut u32s {
        let mut b = [0u8; 4];
        input.read_exact(&mut b)?;
        *d = u32::from_le_bytes(b);
    }
    let mut b8 = [0u8; 8];
    input.read_exact(&mut b8)?;
    let map_hash = u64::from_le_bytes(b8);
    input.read_exact(&mut b8)?;
    let time = f64::from_le_bytes(b8);
    let header = SnapshotHeader {
        n1: u32s[0],
        n2: u32s[1],
        levels: u32s[2],
        components: u32s[3],
        map_hash,
        time,
    };
    let per = (header.n1 * header.n2 * header.levels) as usize;
    let mut comps = Vec::with_capacity(header.components as usize);
    for _ in 0..header.components {
        let mut data = Vec::with_capacity(per);
        for _ in 0..per {
            input.read_exact(&mut b8)?;
            data.push(f64::from_le_bytes(b8));
        }
        comps.push(data);
    }
    Ok((header, comps))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(nz: usize) -> SlabGrid {
        SlabGrid::new(16, 8, nz).unwrap()
    }

    #[test]
    fn flat_map_is_identity() {
        let g = grid(12);
        let m = CoordinateMap::identity(&g);
        for (j, &y) in g.y3().iter().enumerate() {
            for v in m.phi().layer(j) {
                assert!((v - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_mode_map_matches_sinh_profile() {
        let g = grid(16);
        let f = InterfaceField::from_fn(16, 8, |x, _| 0.1 * x.cos());
        let m = build_map(&f, &g).unwrap();
        let exact = BulkField::from_fn(&g, |x, _, y| {
            y + 0.1 * x.cos() * (y + 1.0).sinh() / 1f64.sinh()
        });
        assert!((m.phi() - &exact).max_abs() < 1e-12);
        assert!((m.phi().trace().values()[3] - f.values()[3]).abs() == 0.0);
    }

    #[test]
    fn large_interface_is_rejected() {
        let g = grid(8);
        let f = InterfaceField::from_fn(16, 8, |x, _| 1.2 * x.cos());
        assert!(build_map(&f, &g).is_err());
    }

    #[test]
    fn traces() {
        let g = grid(8);
        let v = BulkField::from_fn(&g, |_, _, y| y);
        assert!(v.trace().max_abs() == 0.0);
        assert!(v.bottom_trace().values().iter().all(|&x| x == -1.0));
    }

    #[test]
    fn gradient_of_physical_height_is_vertical_unit() {
        let g = grid(16);
        let f = InterfaceField::from_fn(16, 8, |x, _| 0.1 * x.cos());
        let m = build_map(&f, &g).unwrap();
        let grad = m.gradient(m.phi());
        assert!(grad.c[0].max_abs() < 1e-11);
        assert!(grad.c[1].max_abs() < 1e-11);
        assert!((&grad.c[2] - &BulkField::constant(&g, 1.0)).max_abs() < 1e-11);
    }

    #[test]
    fn flat_gradients() {
        let g = grid(8);
        let m = CoordinateMap::identity(&g);
        let v = BulkField::from_fn(&g, |x, _, _| x.sin());
        let grad = m.gradient(&v);
        let c = BulkField::from_fn(&g, |x, _, _| x.cos());
        assert!((&grad.c[0] - &c).max_abs() < 1e-12);
        assert!(grad.c[2].max_abs() < 1e-12);
        let y = BulkField::from_fn(&g, |_, _, y| y);
        let gy = m.gradient(&y);
        assert!((&gy.c[2] - &BulkField::constant(&g, 1.0)).max_abs() < 1e-12);
    }

    #[test]
    fn mapped_laplacian_of_physical_quadratic() {
        // x3^2 + x1-periodic parts: Lap(x3^2) = 2 in physical space.
        let g = SlabGrid::new(32, 32, 16).unwrap();
        let f = InterfaceField::from_fn(32, 32, |x, y| 0.1 * x.cos() + 0.05 * (x + y).sin());
        let m = build_map(&f, &g).unwrap();
        let x3sq = m.phi() * m.phi();
        let lap = m.laplacian(&x3sq);
        let err = (&lap - &BulkField::constant(&g, 2.0)).max_abs();
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn normals_and_tangents_are_orthogonal() {
        let f = InterfaceField::from_fn(16, 8, |x, y| 0.1 * x.cos() + 0.2 * (x - 2.0 * y).sin());
        let n = normal_vector(&f);
        for t in tangent_vectors(&f) {
            let d = &(&(&n[0] * &t[0]) + &(&n[1] * &t[1])) + &(&n[2] * &t[2]);
            assert!(d.max_abs() < 1e-14);
        }
        let f = InterfaceField::from_fn(16, 8, |x, _| 0.1 * x.cos());
        let n = normal_vector(&f);
        let expect = InterfaceField::from_fn(16, 8, |x, _| 0.1 * x.sin());
        assert!((&n[0] - &expect).max_abs() < 1e-14);
    }

    #[test]
    fn snapshot_round_trip() {
        let g = grid(4);
        let v = BulkField::from_fn(&g, |x, y, z| x + 2.0 * y + z).with_map_hash(42);
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &[&v, &v.scale(2.0)], 0.5).unwrap();
        let (h, data) = read_snapshot(&mut buf.as_slice()).unwrap();
        assert_eq!((h.n1, h.n2, h.levels, h.components), (16, 8, 5, 2));
        assert_eq!(h.map_hash, 42);
        assert_eq!(h.time, 0.5);
        assert_eq!(data[0], v.data());
    }
}
