//! t-product, t-SVD and the rank measures built on them.

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::{dft3, expand_conjugate, idft3, map_slices, ComplexTensor3, FourierOptions};
use crate::tensor::{unfold_q, DenseTensor, ModeQIndex};

/// Default relative threshold for deciding that a singular tube is nonzero.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

const SVD_MAX_SWEEPS: usize = 10_000;

/// Thin SVD of one Fourier slice: `(U, sigma, V^H)`, sigma descending.
pub(crate) type SliceSvd<T> = (DMatrix<T>, DVector<f64>, DMatrix<T>);

pub(crate) fn slice_svd<T>(slice: usize, m: DMatrix<T>) -> Result<SliceSvd<T>>
where
    T: ComplexField<RealField = f64>,
{
    if m.iter().any(|v| !v.clone().is_finite()) {
        return Err(Error::SvdFailed { slice });
    }
    let svd = m
        .try_svd(true, true, f64::EPSILON, SVD_MAX_SWEEPS)
        .ok_or(Error::SvdFailed { slice })?;
    let u = svd.u.ok_or(Error::SvdFailed { slice })?;
    let v_t = svd.v_t.ok_or(Error::SvdFailed { slice })?;
    Ok((u, svd.singular_values, v_t))
}

pub(crate) fn slice_singular_values(slice: usize, m: DMatrix<Complex64>) -> Result<Vec<f64>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::SvdFailed { slice });
    }
    let sv = m
        .try_svd(false, false, f64::EPSILON, SVD_MAX_SWEEPS)
        .ok_or(Error::SvdFailed { slice })?
        .singular_values;
    Ok(sv.iter().copied().collect())
}

/// Extends an `m x k` matrix with orthonormal columns to an `m x m` unitary one.
fn complete_basis<T>(thin: DMatrix<T>) -> DMatrix<T>
where
    T: ComplexField<RealField = f64>,
{
    let (m, k) = thin.shape();
    if k >= m {
        return thin;
    }
    let mut aug = DMatrix::<T>::zeros(m, k + m);
    aug.columns_mut(0, k).copy_from(&thin);
    aug.columns_mut(k, m).fill_with_identity();
    let q = aug.qr().q();
    let mut full = DMatrix::<T>::zeros(m, m);
    full.columns_mut(0, k).copy_from(&thin);
    full.columns_mut(k, m - k).copy_from(&q.columns(k, m - k));
    full
}

fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}

/// Factors `(U, S, V)` of the t-SVD `t = U * S * V^H`.
#[derive(Debug, Clone)]
pub struct TSvdFactors {
    /// Orthogonal, `J1 x J1 x J3`.
    pub u: DenseTensor,
    /// f-diagonal, `J1 x J2 x J3`.
    pub s: DenseTensor,
    /// Orthogonal, `J2 x J2 x J3`.
    pub v: DenseTensor,
    /// Singular values of every Fourier slice, descending, `min(J1, J2)` each.
    pub singular_values: Vec<Vec<f64>>,
}

fn expect_third_order(t: &DenseTensor) -> Result<[usize; 3]> {
    match *t.shape() {
        [a, b, c] => Ok([a, b, c]),
        _ => Err(Error::InvalidShape {
            shape: t.shape().to_vec(),
            reason: "expected a third-order tensor".into(),
        }),
    }
}

/// Identity tensor: first frontal slice is `I_n`, the others are zero.
pub fn identity(n: usize, n3: usize) -> Result<DenseTensor> {
    DenseTensor::from_fn(&[n, n, n3], |i| {
        if i[0] == i[1] && i[2] == 0 {
            1.0
        } else {
            0.0
        }
    })
}

/// Conjugate transpose: transpose every frontal slice and reverse the order
/// of slices 2 through J3.
pub fn t_transpose(t: &DenseTensor) -> Result<DenseTensor> {
    let [n1, n2, n3] = expect_third_order(t)?;
    DenseTensor::from_fn(&[n2, n1, n3], |i| {
        t.get(&[i[1], i[0], (n3 - i[2]) % n3])
    })
}

/// t-product of `a` (`J1 x J2 x J3`) and `b` (`J2 x I x J3`), computed as
/// slice-wise products in the Fourier domain.
pub fn t_product(a: &DenseTensor, b: &DenseTensor) -> Result<DenseTensor> {
    t_product_with(a, b, FourierOptions::default())
}

pub fn t_product_with(
    a: &DenseTensor,
    b: &DenseTensor,
    opts: FourierOptions,
) -> Result<DenseTensor> {
    let [a1, a2, a3] = expect_third_order(a)?;
    let [b1, _, b3] = expect_third_order(b)?;
    if a2 != b1 || a3 != b3 {
        return Err(Error::DimensionMismatch(format!(
            "t-product of {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let fa = dft3(a)?;
    let fb = dft3(b)?;
    let half = map_slices(&fa, opts, |j, sa| Ok(sa * fb.frontal_slice(j)))?;
    let slices = expand_conjugate(half, a3, opts);
    debug_assert_eq!(slices[0].nrows(), a1);
    Ok(idft3(&ComplexTensor3::from_frontal_slices(&slices)?))
}

/// Full factors of one Fourier slice. Self-conjugate slices (the DC slice
/// and, for even J3, the Nyquist slice) are real and get a real SVD so that
/// the inverse transform of the stacked factors is real.
fn slice_full_svd(
    j: usize,
    n3: usize,
    m: DMatrix<Complex64>,
) -> Result<(DMatrix<Complex64>, Vec<f64>, DMatrix<Complex64>)> {
    if j == 0 || 2 * j == n3 {
        let re = m.map(|v| v.re);
        let (u, s, v_t) = slice_svd(j, re)?;
        let u = complete_basis(u);
        let v = complete_basis(v_t.transpose());
        Ok((to_complex(&u), s.iter().copied().collect(), to_complex(&v)))
    } else {
        let (u, s, v_t) = slice_svd(j, m)?;
        let u = complete_basis(u);
        let v = complete_basis(v_t.adjoint());
        Ok((u, s.iter().copied().collect(), v))
    }
}

/// t-SVD. Factors are always built from conjugate-paired slices; this is
/// what makes `U` and `V` real.
pub fn t_svd(t: &DenseTensor) -> Result<TSvdFactors> {
    let [n1, n2, n3] = expect_third_order(t)?;
    let ft = dft3(t)?;
    let paired = FourierOptions {
        conjugate_symmetry: true,
    };
    let half = map_slices(&ft, paired, |j, m| slice_full_svd(j, n3, m))?;

    let mut u_half = Vec::with_capacity(half.len());
    let mut s_half = Vec::with_capacity(half.len());
    let mut v_half = Vec::with_capacity(half.len());
    let mut sv_half = Vec::with_capacity(half.len());
    for (u, sv, v) in half {
        let mut s = DMatrix::<Complex64>::zeros(n1, n2);
        for (i, &x) in sv.iter().enumerate() {
            s[(i, i)] = Complex64::new(x, 0.0);
        }
        u_half.push(u);
        s_half.push(s);
        v_half.push(v);
        sv_half.push(sv);
    }
    let singular_values: Vec<Vec<f64>> = (0..n3)
        .map(|j| sv_half[j.min(n3 - j)].clone())
        .collect();
    let build = |half: Vec<DMatrix<Complex64>>| -> Result<DenseTensor> {
        let slices = expand_conjugate(half, n3, paired);
        Ok(idft3(&ComplexTensor3::from_frontal_slices(&slices)?))
    };
    Ok(TSvdFactors {
        u: build(u_half)?,
        s: build(s_half)?,
        v: build(v_half)?,
        singular_values,
    })
}

/// Singular values of every Fourier slice of `t` (all `J3` slices, each
/// descending).
pub fn fourier_singular_values(t: &DenseTensor, opts: FourierOptions) -> Result<Vec<Vec<f64>>> {
    let [_, _, n3] = expect_third_order(t)?;
    let ft = dft3(t)?;
    let mut sv = map_slices(&ft, opts, slice_singular_values)?;
    if opts.conjugate_symmetry {
        for j in sv.len()..n3 {
            let mirrored = sv[n3 - j].clone();
            sv.push(mirrored);
        }
    }
    Ok(sv)
}

/// Number of singular tubes whose largest Fourier-domain entry exceeds
/// `rel_tol` times the largest singular value overall.
pub fn tubal_rank(t: &DenseTensor, rel_tol: f64) -> Result<usize> {
    tubal_rank_with(t, rel_tol, FourierOptions::default())
}

pub fn tubal_rank_with(t: &DenseTensor, rel_tol: f64, opts: FourierOptions) -> Result<usize> {
    if rel_tol < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "rank tolerance must be non-negative, got {rel_tol}"
        )));
    }
    let sv = fourier_singular_values(t, opts)?;
    let r = sv.first().map_or(0, Vec::len);
    let tube_max: Vec<f64> = (0..r)
        .map(|i| sv.iter().fold(0.0, |acc: f64, s| acc.max(s[i])))
        .collect();
    let global = tube_max.iter().copied().fold(0.0, f64::max);
    Ok(tube_max.iter().filter(|&&m| m > rel_tol * global).count())
}

/// Tensor nuclear norm, `(1/J3) sum_j sum_i sigma_i(slice_j)`.
pub fn tnn(t: &DenseTensor) -> Result<f64> {
    tnn_with(t, FourierOptions::default())
}

pub fn tnn_with(t: &DenseTensor, opts: FourierOptions) -> Result<f64> {
    let sv = fourier_singular_values(t, opts)?;
    let total: f64 = sv.iter().map(|s| s.iter().sum::<f64>()).sum();
    Ok(total / sv.len() as f64)
}

/// Tubal ranks of every mode-q unfolding, in ascending `q`.
pub fn n_tubal_rank(t: &DenseTensor, rel_tol: f64) -> Result<Vec<usize>> {
    if t.order() < 3 {
        return Err(Error::InvalidShape {
            shape: t.shape().to_vec(),
            reason: "N-tubal rank needs order >= 3".into(),
        });
    }
    ModeQIndex::all(t.order())
        .into_iter()
        .map(|p| tubal_rank(&unfold_q(t, p.q)?, rel_tol))
        .collect()
}
