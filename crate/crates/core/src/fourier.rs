//! DFT along the third mode and per-frontal-slice processing in the
//! Fourier domain.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

/// Options for slice-wise work in the Fourier domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FourierOptions {
    /// Only process slices `0..=J3/2` of a real tensor's transform and fill the
    /// rest by conjugation, `slice(J3 - j) = conj(slice(j))`.
    pub conjugate_symmetry: bool,
}

impl Default for FourierOptions {
    fn default() -> Self {
        Self {
            conjugate_symmetry: true,
        }
    }
}

/// Third-order complex array, canonical row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTensor3 {
    shape: [usize; 3],
    data: Vec<Complex64>,
}

impl ComplexTensor3 {
    pub fn new(shape: [usize; 3], data: Vec<Complex64>) -> Result<Self> {
        if shape.iter().any(|&e| e == 0) {
            return Err(Error::InvalidShape {
                shape: shape.to_vec(),
                reason: "every extent must be at least 1".into(),
            });
        }
        if shape.iter().product::<usize>() != data.len() {
            return Err(Error::DataLength {
                shape: shape.to_vec(),
                len: data.len(),
            });
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: [usize; 3]) -> Self {
        Self {
            shape,
            data: vec![Complex64::new(0.0, 0.0); shape.iter().product()],
        }
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn get(&self, i: usize, k: usize, j: usize) -> Complex64 {
        let [_, n2, n3] = self.shape;
        self.data[(i * n2 + k) * n3 + j]
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Frontal slice `j` (0-based) as a `J1 x J2` matrix.
    pub fn frontal_slice(&self, j: usize) -> DMatrix<Complex64> {
        let [n1, n2, n3] = self.shape;
        DMatrix::from_fn(n1, n2, |i, k| self.data[(i * n2 + k) * n3 + j])
    }

    pub fn set_frontal_slice(&mut self, j: usize, m: &DMatrix<Complex64>) {
        let [n1, n2, n3] = self.shape;
        debug_assert_eq!(m.shape(), (n1, n2));
        for i in 0..n1 {
            for k in 0..n2 {
                self.data[(i * n2 + k) * n3 + j] = m[(i, k)];
            }
        }
    }

    /// Assembles a tensor from `J3` frontal slices of equal shape.
    pub fn from_frontal_slices(slices: &[DMatrix<Complex64>]) -> Result<Self> {
        let n3 = slices.len();
        let (n1, n2) = slices.first().map(|m| m.shape()).ok_or_else(|| {
            Error::DimensionMismatch("cannot assemble a tensor from zero slices".into())
        })?;
        if slices.iter().any(|m| m.shape() != (n1, n2)) {
            return Err(Error::DimensionMismatch(
                "frontal slices have different shapes".into(),
            ));
        }
        let mut c = Self::zeros([n1, n2, n3]);
        for (j, m) in slices.iter().enumerate() {
            c.set_frontal_slice(j, m);
        }
        Ok(c)
    }

    /// Largest absolute imaginary part over all entries.
    pub fn max_imag(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, c| acc.max(c.im.abs()))
    }

    /// Real parts, discarding the imaginary component.
    pub fn real_part(&self) -> DenseTensor {
        DenseTensor::new(self.shape.to_vec(), self.data.iter().map(|c| c.re).collect())
            .expect("shape already validated")
    }
}

fn third_order_shape(t: &DenseTensor) -> Result<[usize; 3]> {
    match *t.shape() {
        [a, b, c] => Ok([a, b, c]),
        _ => Err(Error::InvalidShape {
            shape: t.shape().to_vec(),
            reason: "expected a third-order tensor".into(),
        }),
    }
}

/// Tube-wise unnormalized forward DFT, `X_k = sum_t x_t exp(-2 pi i t k / J3)`.
pub fn dft3(t: &DenseTensor) -> Result<ComplexTensor3> {
    let shape = third_order_shape(t)?;
    let n3 = shape[2];
    let mut data: Vec<Complex64> = t.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    if n3 > 1 {
        let fft = FftPlanner::new().plan_fft_forward(n3);
        fft.process(&mut data);
    }
    Ok(ComplexTensor3 { shape, data })
}

/// Inverse of [`dft3`] in the complex domain, scaled by `1/J3`.
pub fn idft3_complex(c: &ComplexTensor3) -> ComplexTensor3 {
    let n3 = c.shape[2];
    let mut data = c.data.clone();
    if n3 > 1 {
        let fft = FftPlanner::new().plan_fft_inverse(n3);
        fft.process(&mut data);
        let scale = 1.0 / n3 as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }
    ComplexTensor3 {
        shape: c.shape,
        data,
    }
}

/// Inverse DFT followed by truncation to the real part.
pub fn idft3(c: &ComplexTensor3) -> DenseTensor {
    idft3_complex(c).real_part()
}

/// Indices of the slices that are actually computed.
pub(crate) fn computed_slices(n3: usize, opts: FourierOptions) -> usize {
    if opts.conjugate_symmetry {
        n3 / 2 + 1
    } else {
        n3
    }
}

/// Applies `f` to every frontal slice of `c` and assembles the results.
///
/// With conjugate symmetry enabled only slices `0..=J3/2` are passed to `f`;
/// the rest are conjugates of their mirror. Slices run in parallel, the
/// output is assembled in slice order.
pub(crate) fn map_slices<T, F>(
    c: &ComplexTensor3,
    opts: FourierOptions,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, DMatrix<Complex64>) -> Result<T> + Sync,
{
    let count = computed_slices(c.shape[2], opts);
    (0..count)
        .into_par_iter()
        .map(|j| f(j, c.frontal_slice(j)))
        .collect()
}

/// Expands half-spectrum slice results to all `J3` slices by conjugation.
pub(crate) fn expand_conjugate(
    mut half: Vec<DMatrix<Complex64>>,
    n3: usize,
    opts: FourierOptions,
) -> Vec<DMatrix<Complex64>> {
    if !opts.conjugate_symmetry {
        return half;
    }
    for j in half.len()..n3 {
        let mirrored = half[n3 - j].map(|v| v.conj());
        half.push(mirrored);
    }
    half
}
