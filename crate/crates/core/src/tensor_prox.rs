//! The tensor p-th order tau norm and its proximal operator.
//!
//! Both act on the singular values of the Fourier-domain frontal slices.
//! The proximal operator keeps each slice's singular vectors and replaces
//! every singular value by its scalar proximal value.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::{dft3, expand_conjugate, idft3_complex, map_slices, ComplexTensor3, FourierOptions};
use crate::penalty::PenaltySpec;
use crate::tensor::DenseTensor;
use crate::tsvd::{fourier_singular_values, slice_svd};

/// Largest imaginary residual tolerated after the inverse transform,
/// relative to the output's largest magnitude.
const IMAG_TOL: f64 = 1e-10;

/// `(1/J3) sum_j sum_i penalty(sigma_i(slice_j))`.
pub fn tensor_ptau_norm(t: &DenseTensor, spec: &PenaltySpec) -> Result<f64> {
    tensor_ptau_norm_with(t, spec, FourierOptions::default())
}

pub fn tensor_ptau_norm_with(
    t: &DenseTensor,
    spec: &PenaltySpec,
    opts: FourierOptions,
) -> Result<f64> {
    let sv = fourier_singular_values(t, opts)?;
    Ok(norm_from_singular_values(&sv, spec))
}

fn norm_from_singular_values(sv: &[Vec<f64>], spec: &PenaltySpec) -> f64 {
    let total: f64 = sv
        .iter()
        .map(|s| s.iter().map(|&x| spec.value(x)).sum::<f64>())
        .sum();
    total / sv.len() as f64
}

/// Result of [`tensor_ptau_prox_with`].
#[derive(Debug, Clone)]
pub struct TensorProx {
    pub tensor: DenseTensor,
    /// Norm of `tensor`, read off the shrunk singular values.
    pub norm: f64,
    /// Shrunk singular values of every Fourier slice.
    pub singular_values: Vec<Vec<f64>>,
}

/// Proximal operator `argmin_B 0.5 ||B - Y||_F^2 + rho ||B||_tau_p`.
pub fn tensor_ptau_prox(y: &DenseTensor, rho: f64, spec: &PenaltySpec) -> Result<DenseTensor> {
    Ok(tensor_ptau_prox_with(y, rho, spec, FourierOptions::default())?.tensor)
}

pub fn tensor_ptau_prox_with(
    y: &DenseTensor,
    rho: f64,
    spec: &PenaltySpec,
    opts: FourierOptions,
) -> Result<TensorProx> {
    let n3 = match *y.shape() {
        [_, _, n3] => n3,
        _ => {
            return Err(Error::InvalidShape {
                shape: y.shape().to_vec(),
                reason: "expected a third-order tensor".into(),
            })
        }
    };
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "prox weight must be finite and non-negative, got {rho}"
        )));
    }
    let fy = dft3(y)?;
    let half = map_slices(&fy, opts, |j, m| shrink_slice(j, m, rho, spec))?;

    let (slices, mut shrunk): (Vec<_>, Vec<_>) = half.into_iter().unzip();
    let slices = expand_conjugate(slices, n3, opts);
    if opts.conjugate_symmetry {
        for j in shrunk.len()..n3 {
            let mirrored = shrunk[n3 - j].clone();
            shrunk.push(mirrored);
        }
    }
    let out = idft3_complex(&ComplexTensor3::from_frontal_slices(&slices)?);
    let scale = out.data().iter().fold(1.0f64, |acc, c| acc.max(c.re.abs()));
    debug_assert!(
        out.max_imag() <= IMAG_TOL * scale,
        "imaginary residual {} after inverse transform",
        out.max_imag()
    );
    Ok(TensorProx {
        tensor: out.real_part(),
        norm: norm_from_singular_values(&shrunk, spec),
        singular_values: shrunk,
    })
}

fn shrink_slice(
    j: usize,
    m: DMatrix<Complex64>,
    rho: f64,
    spec: &PenaltySpec,
) -> Result<(DMatrix<Complex64>, Vec<f64>)> {
    let (n1, n2) = m.shape();
    let (u, sigma, v_t) = slice_svd(j, m)?;
    let shrunk = sigma
        .iter()
        .map(|&s| spec.prox(s, rho))
        .collect::<Result<Vec<f64>>>()?;
    let keep = shrunk.iter().take_while(|&&s| s > 0.0).count();
    // Scalar prox is monotone, so the nonzero outputs form a prefix.
    debug_assert!(shrunk[keep..].iter().all(|&s| s == 0.0));
    if keep == 0 {
        return Ok((DMatrix::zeros(n1, n2), shrunk));
    }
    let mut left = u.columns(0, keep).into_owned();
    for (c, &s) in shrunk.iter().take(keep).enumerate() {
        left.column_mut(c).scale_mut(s);
    }
    Ok((left * v_t.rows(0, keep), shrunk))
}

/// Matrix case of [`tensor_ptau_prox`] (a single frontal slice).
pub fn matrix_ptau_prox(y: &DMatrix<f64>, rho: f64, spec: &PenaltySpec) -> Result<DMatrix<f64>> {
    let (r, c) = y.shape();
    let t = DenseTensor::new(vec![r, c, 1], y.transpose().as_slice().to_vec())?;
    let out = tensor_ptau_prox(&t, rho, spec)?;
    Ok(out.matrix_slices().remove(0))
}
