//! Dense N-way tensors and their structural algebra.
//!
//! Storage is row-major with the last index fastest. Modes are numbered
//! from 1 in every public function, element indices from 0. The unfolding
//! maps below are written as explicit index arithmetic, so they do not
//! depend on the storage order.

use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Real N-way array with an explicit shape.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

fn check_shape(shape: &[usize]) -> Result<()> {
    if shape.is_empty() {
        return Err(Error::InvalidShape {
            shape: shape.to_vec(),
            reason: "a tensor needs at least one mode".into(),
        });
    }
    if shape.iter().any(|&e| e == 0) {
        return Err(Error::InvalidShape {
            shape: shape.to_vec(),
            reason: "every extent must be at least 1".into(),
        });
    }
    Ok(())
}

/// Visits every multi-index of `shape` in canonical (row-major) order.
fn for_each_index(shape: &[usize], mut f: impl FnMut(usize, &[usize])) {
    let total: usize = shape.iter().product();
    let mut idx = vec![0usize; shape.len()];
    for lin in 0..total {
        f(lin, &idx);
        for d in (0..shape.len()).rev() {
            idx[d] += 1;
            if idx[d] < shape[d] {
                break;
            }
            idx[d] = 0;
        }
    }
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        check_shape(&shape)?;
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(Error::DataLength {
                shape,
                len: data.len(),
            });
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        check_shape(shape)?;
        let numel = shape.iter().product();
        Ok(Self {
            shape: shape.to_vec(),
            data: vec![0.0; numel],
        })
    }

    /// Builds a tensor by evaluating `f` at every multi-index.
    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let mut t = Self::zeros(shape)?;
        let data = &mut t.data;
        for_each_index(shape, |lin, idx| data[lin] = f(idx));
        Ok(t)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Number of modes N.
    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
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

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        let mut off = 0;
        for (d, &i) in idx.iter().enumerate() {
            debug_assert!(i < self.shape[d]);
            off = off * self.shape[d] + i;
        }
        off
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let off = self.offset(idx);
        self.data[off] = value;
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise combination of two equally shaped tensors.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.expect_shape(other.shape())?;
        Ok(Self {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn expect_shape(&self, shape: &[usize]) -> Result<()> {
        if self.shape != shape {
            return Err(Error::ShapeMismatch {
                expected: shape.to_vec(),
                actual: self.shape.clone(),
            });
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Frontal slices `J1 x J2` of the tensor, one per combination of the
    /// trailing indices (modes 3..N) in canonical order. A matrix-shaped
    /// tensor yields a single slice and a vector a single column.
    pub fn matrix_slices(&self) -> Vec<DMatrix<f64>> {
        let rows = self.shape[0];
        let cols = self.shape.get(1).copied().unwrap_or(1);
        let depth: usize = self.shape.iter().skip(2).product();
        (0..depth)
            .map(|s| {
                DMatrix::from_fn(rows, cols, |i, k| self.data[(i * cols + k) * depth + s])
            })
            .collect()
    }

    /// Inverse of [`DenseTensor::matrix_slices`].
    pub fn from_matrix_slices(shape: &[usize], slices: &[DMatrix<f64>]) -> Result<Self> {
        let mut t = Self::zeros(shape)?;
        let rows = shape[0];
        let cols = shape.get(1).copied().unwrap_or(1);
        let depth: usize = shape.iter().skip(2).product();
        if slices.len() != depth || slices.iter().any(|m| m.shape() != (rows, cols)) {
            return Err(Error::DimensionMismatch(format!(
                "{} slices do not assemble into shape {:?}",
                slices.len(),
                shape
            )));
        }
        for (s, m) in slices.iter().enumerate() {
            for i in 0..rows {
                for k in 0..cols {
                    t.data[(i * cols + k) * depth + s] = m[(i, k)];
                }
            }
        }
        Ok(t)
    }
}

impl Add for &DenseTensor {
    type Output = DenseTensor;

    /// Panics on shape mismatch; use [`DenseTensor::zip_map`] for a checked version.
    fn add(self, rhs: &DenseTensor) -> DenseTensor {
        self.zip_map(rhs, |a, b| a + b).expect("tensor shapes differ")
    }
}

impl Sub for &DenseTensor {
    type Output = DenseTensor;

    fn sub(self, rhs: &DenseTensor) -> DenseTensor {
        self.zip_map(rhs, |a, b| a - b).expect("tensor shapes differ")
    }
}

impl Mul<f64> for &DenseTensor {
    type Output = DenseTensor;

    fn mul(self, rhs: f64) -> DenseTensor {
        self.map(|v| v * rhs)
    }
}

fn check_mode(n: usize, order: usize) -> Result<()> {
    if n == 0 || n > order {
        return Err(Error::ModeOutOfRange { mode: n, order });
    }
    Ok(())
}

/// Column multipliers of the mode-n unfolding: `L_i = prod_{k<i, k!=n} J_k`,
/// and 0 for the unfolded mode itself.
fn unfold_multipliers(shape: &[usize], n: usize) -> Vec<usize> {
    let mut mult = vec![0; shape.len()];
    let mut acc = 1;
    for (i, &extent) in shape.iter().enumerate() {
        if i + 1 == n {
            continue;
        }
        mult[i] = acc;
        acc *= extent;
    }
    mult
}

/// Mode-n unfolding: element `(j_1..j_N)` goes to row `j_n` and column
/// `sum_{i!=n} j_i L_i`, with the earliest remaining mode varying fastest.
pub fn unfold_n(t: &DenseTensor, n: usize) -> Result<DMatrix<f64>> {
    check_mode(n, t.order())?;
    let rows = t.shape[n - 1];
    let cols = t.len() / rows;
    let mult = unfold_multipliers(&t.shape, n);
    let mut m = DMatrix::zeros(rows, cols);
    for_each_index(&t.shape, |lin, idx| {
        let col: usize = idx.iter().zip(&mult).map(|(j, l)| j * l).sum();
        m[(idx[n - 1], col)] = t.data[lin];
    });
    Ok(m)
}

/// Inverse of [`unfold_n`] for a tensor of the given shape.
pub fn fold_n(m: &DMatrix<f64>, n: usize, shape: &[usize]) -> Result<DenseTensor> {
    check_shape(shape)?;
    check_mode(n, shape.len())?;
    let rows = shape[n - 1];
    let numel: usize = shape.iter().product();
    if m.nrows() != rows || m.ncols() * rows != numel {
        return Err(Error::DimensionMismatch(format!(
            "a {}x{} matrix cannot fold along mode {} into {:?}",
            m.nrows(),
            m.ncols(),
            n,
            shape
        )));
    }
    let mult = unfold_multipliers(shape, n);
    let mut t = DenseTensor::zeros(shape)?;
    let data = &mut t.data;
    for_each_index(shape, |lin, idx| {
        let col: usize = idx.iter().zip(&mult).map(|(j, l)| j * l).sum();
        data[lin] = m[(idx[n - 1], col)];
    });
    Ok(t)
}

/// Mode-n product `t x_n m`, defined by `unfold_n(result) = m * unfold_n(t)`.
pub fn mode_n_product(t: &DenseTensor, m: &DMatrix<f64>, n: usize) -> Result<DenseTensor> {
    check_mode(n, t.order())?;
    if m.ncols() != t.shape[n - 1] {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} columns but mode {} has extent {}",
            m.ncols(),
            n,
            t.shape[n - 1]
        )));
    }
    let product = m * unfold_n(t, n)?;
    let mut shape = t.shape.clone();
    shape[n - 1] = m.nrows();
    fold_n(&product, n, &shape)
}

/// A mode pair `(q1, q2)`, `1 <= q1 < q2 <= N`, together with its linear
/// number `q = (q1-1)(N - q1/2) + q2 - q1` in `1..=N(N-1)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeQIndex {
    pub q: usize,
    pub q1: usize,
    pub q2: usize,
}

impl ModeQIndex {
    /// Number of mode pairs of an order-`n` tensor.
    pub fn count(order: usize) -> usize {
        order * order.saturating_sub(1) / 2
    }

    pub fn from_pair(q1: usize, q2: usize, order: usize) -> Result<Self> {
        if !(1 <= q1 && q1 < q2 && q2 <= order) {
            return Err(Error::InvalidParameter(format!(
                "mode pair ({q1}, {q2}) is not valid for order {order}"
            )));
        }
        // (q1-1)(2N-q1) is a product of an odd and an even factor's sum, hence even.
        let q = (q1 - 1) * (2 * order - q1) / 2 + q2 - q1;
        Ok(Self { q, q1, q2 })
    }

    pub fn from_q(q: usize, order: usize) -> Result<Self> {
        let max = Self::count(order);
        if q == 0 || q > max {
            return Err(Error::PairOutOfRange { q, max, order });
        }
        let mut start = 0;
        for q1 in 1..order {
            let span = order - q1;
            if q <= start + span {
                return Self::from_pair(q1, q1 + q - start, order);
            }
            start += span;
        }
        unreachable!("q within range always maps to a pair")
    }

    /// All pairs of an order-`n` tensor in ascending `q`.
    pub fn all(order: usize) -> Vec<Self> {
        (1..=Self::count(order))
            .map(|q| Self::from_q(q, order).expect("q in range"))
            .collect()
    }
}

/// Extent `J_q1 x J_q2 x prod_{s!=q1,q2} J_s` and the multipliers of the
/// third index `k = sum_{s!=q1,q2} j_s prod_{m<s, m!=q1,q2} J_m`.
fn unfold_q_layout(shape: &[usize], pair: ModeQIndex) -> ([usize; 3], Vec<usize>) {
    let (a, b) = (pair.q1 - 1, pair.q2 - 1);
    let mut mult = vec![0; shape.len()];
    let mut acc = 1;
    for (s, &extent) in shape.iter().enumerate() {
        if s == a || s == b {
            continue;
        }
        mult[s] = acc;
        acc *= extent;
    }
    ([shape[a], shape[b], acc], mult)
}

fn pair_for(order: usize, q: usize) -> Result<ModeQIndex> {
    if order < 3 {
        return Err(Error::InvalidShape {
            shape: vec![],
            reason: format!("mode-q unfolding needs order >= 3, got {order}"),
        });
    }
    ModeQIndex::from_q(q, order)
}

/// Mode-q unfolding into a third-order tensor.
pub fn unfold_q(t: &DenseTensor, q: usize) -> Result<DenseTensor> {
    let pair = pair_for(t.order(), q)?;
    let (out_shape, mult) = unfold_q_layout(&t.shape, pair);
    let mut out = DenseTensor::zeros(&out_shape)?;
    let (a, b) = (pair.q1 - 1, pair.q2 - 1);
    let [_, n2, n3] = out_shape;
    let data = &mut out.data;
    for_each_index(&t.shape, |lin, idx| {
        let k: usize = idx.iter().zip(&mult).map(|(j, m)| j * m).sum();
        data[(idx[a] * n2 + idx[b]) * n3 + k] = t.data[lin];
    });
    Ok(out)
}

/// Inverse of [`unfold_q`].
pub fn fold_q(u: &DenseTensor, q: usize, shape: &[usize]) -> Result<DenseTensor> {
    check_shape(shape)?;
    let pair = pair_for(shape.len(), q)?;
    let (out_shape, mult) = unfold_q_layout(shape, pair);
    u.expect_shape(&out_shape)?;
    let (a, b) = (pair.q1 - 1, pair.q2 - 1);
    let [_, n2, n3] = out_shape;
    let mut t = DenseTensor::zeros(shape)?;
    let data = &mut t.data;
    for_each_index(shape, |lin, idx| {
        let k: usize = idx.iter().zip(&mult).map(|(j, m)| j * m).sum();
        data[lin] = u.data[(idx[a] * n2 + idx[b]) * n3 + k];
    });
    Ok(t)
}
