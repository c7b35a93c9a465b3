//! Image quality metrics for recovered slices.
//!
//! Images are assumed to lie in `[0, 255]`. Tensor-level PSNR and SSIM are
//! averages of the per-slice values over the `J1 x J2` slices of the tensor
//! (all trailing modes flattened).
//!
//! [`ssim`] uses global whole-image statistics (one window covering the
//! entire slice), not the usual sliding Gaussian window, and population
//! (1/n) variances.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

pub const PEAK: f64 = 255.0;
pub const SSIM_C1: f64 = (0.01 * PEAK) * (0.01 * PEAK);
pub const SSIM_C2: f64 = (0.03 * PEAK) * (0.03 * PEAK);

fn same_shape(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            expected: vec![a.nrows(), a.ncols()],
            actual: vec![b.nrows(), b.ncols()],
        });
    }
    Ok(())
}

/// `10 log10(255^2 J1 J2 / ||ref - test||_F^2)`; `+inf` for identical images.
pub fn psnr(reference: &DMatrix<f64>, test: &DMatrix<f64>) -> Result<f64> {
    same_shape(reference, test)?;
    let err: f64 = reference
        .iter()
        .zip(test.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (PEAK * PEAK * reference.len() as f64 / err).log10())
}

/// Single-window SSIM over the whole image.
pub fn ssim(reference: &DMatrix<f64>, test: &DMatrix<f64>) -> Result<f64> {
    same_shape(reference, test)?;
    let n = reference.len() as f64;
    let mu_r = reference.sum() / n;
    let mu_t = test.sum() / n;
    let (mut var_r, mut var_t, mut cov) = (0.0, 0.0, 0.0);
    for (r, t) in reference.iter().zip(test.iter()) {
        let (dr, dt) = (r - mu_r, t - mu_t);
        var_r += dr * dr;
        var_t += dt * dt;
        cov += dr * dt;
    }
    let (var_r, var_t, cov) = (var_r / n, var_t / n, cov / n);
    Ok(((2.0 * mu_t * mu_r + SSIM_C1) * (2.0 * cov + SSIM_C2))
        / ((mu_t * mu_t + mu_r * mu_r + SSIM_C1) * (var_t + var_r + SSIM_C2)))
}

/// `100 sqrt(mean_j mse(a_j - b_j) / mean(a_j)^2)` over the slices of the
/// reference `a`.
pub fn ergas(a: &DenseTensor, b: &DenseTensor) -> Result<f64> {
    a.expect_shape(b.shape())?;
    let ra = a.matrix_slices();
    let rb = b.matrix_slices();
    let mut acc = 0.0;
    for (j, (sa, sb)) in ra.iter().zip(&rb).enumerate() {
        let n = sa.len() as f64;
        let mean = sa.sum() / n;
        if mean == 0.0 {
            return Err(Error::ZeroMeanSlice { slice: j });
        }
        let mse: f64 = sa.iter().zip(sb.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / n;
        acc += mse / (mean * mean);
    }
    Ok(100.0 * (acc / ra.len() as f64).sqrt())
}

fn slice_average(
    reference: &DenseTensor,
    test: &DenseTensor,
    metric: fn(&DMatrix<f64>, &DMatrix<f64>) -> Result<f64>,
) -> Result<f64> {
    reference.expect_shape(test.shape())?;
    let rs = reference.matrix_slices();
    let ts = test.matrix_slices();
    let mut total = 0.0;
    for (r, t) in rs.iter().zip(&ts) {
        total += metric(r, t)?;
    }
    Ok(total / rs.len() as f64)
}

/// Mean slice PSNR. Infinite if any slice is reproduced exactly.
pub fn tensor_psnr(reference: &DenseTensor, test: &DenseTensor) -> Result<f64> {
    slice_average(reference, test, psnr)
}

pub fn tensor_ssim(reference: &DenseTensor, test: &DenseTensor) -> Result<f64> {
    slice_average(reference, test, ssim)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn image(r: usize, c: usize, seed: u64) -> DMatrix<f64> {
        let mut s = seed;
        DMatrix::from_fn(r, c, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 255.0
        })
    }

    #[test]
    fn psnr_cases() {
        let a = DMatrix::from_element(4, 5, 255.0);
        let b = DMatrix::from_element(4, 5, 254.0);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        assert!((psnr(&a, &b).unwrap() - 20.0 * 255f64.log10()).abs() < 1e-12);
        assert!((psnr(&a, &b).unwrap() - 48.1308).abs() < 1e-4);
        assert!(psnr(&a, &DMatrix::zeros(5, 4)).is_err());
    }

    #[test]
    fn psnr_decreases_with_noise() {
        let a = image(8, 8, 1);
        let noise = image(8, 8, 2).map(|v| v / 255.0 - 0.5);
        let mut last = f64::INFINITY;
        for amp in [0.5, 1.0, 2.0, 4.0, 8.0] {
            let v = psnr(&a, &(&a + &noise * amp)).unwrap();
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn ssim_cases() {
        let a = image(6, 7, 3);
        assert_eq!(ssim(&a, &a).unwrap(), 1.0);
        let shifted = a.add_scalar(10.0);
        let s = ssim(&a, &shifted).unwrap();
        let mu = a.mean();
        let lum = (2.0 * mu * (mu + 10.0) + SSIM_C1) / (mu * mu + (mu + 10.0).powi(2) + SSIM_C1);
        assert!((s - lum).abs() < 1e-12);
        assert!(s < 1.0);
        let anti = a.map(|v| 2.0 * mu - v);
        assert!(ssim(&a, &anti).unwrap() < 0.0);
        let b = image(6, 7, 4);
        assert!((ssim(&a, &b).unwrap() - ssim(&b, &a).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn ergas_cases() {
        let a = DenseTensor::new(vec![2, 2, 1], vec![100.0; 4]).unwrap();
        let b = DenseTensor::new(vec![2, 2, 1], vec![90.0; 4]).unwrap();
        assert_eq!(ergas(&a, &a).unwrap(), 0.0);
        assert!((ergas(&a, &b).unwrap() - 10.0).abs() < 1e-12);
        let z = DenseTensor::zeros(&[2, 2, 1]).unwrap();
        assert!(matches!(ergas(&z, &a), Err(Error::ZeroMeanSlice { slice: 0 })));
    }

    #[test]
    fn ergas_is_scale_invariant() {
        let a = DenseTensor::from_fn(&[3, 4, 2], |i| 10.0 + (i[0] * 3 + i[1] + 5 * i[2]) as f64).unwrap();
        let d = DenseTensor::from_fn(&[3, 4, 2], |i| ((i[0] + i[1] * i[2]) % 3) as f64 - 1.0).unwrap();
        let e1 = ergas(&a, &(&a + &d)).unwrap();
        let e2 = ergas(&(&a * 3.5), &(&(&a * 3.5) + &(&d * 3.5))).unwrap();
        assert!((e1 - e2).abs() < 1e-10 * e1);
    }

    #[test]
    fn tensor_metrics_average_slices() {
        let s1 = image(4, 4, 5);
        let s2 = image(4, 4, 6);
        let t1 = image(4, 4, 7);
        let t2 = image(4, 4, 8);
        let r = DenseTensor::from_matrix_slices(&[4, 4, 2], &[s1.clone(), s2.clone()]).unwrap();
        let t = DenseTensor::from_matrix_slices(&[4, 4, 2], &[t1.clone(), t2.clone()]).unwrap();
        let p = (psnr(&s1, &t1).unwrap() + psnr(&s2, &t2).unwrap()) / 2.0;
        assert!((tensor_psnr(&r, &t).unwrap() - p).abs() < 1e-12);
        let s = (ssim(&s1, &t1).unwrap() + ssim(&s2, &t2).unwrap()) / 2.0;
        assert!((tensor_ssim(&r, &t).unwrap() - s).abs() < 1e-12);
        assert_eq!(tensor_ssim(&r, &r).unwrap(), 1.0);
        assert_eq!(tensor_psnr(&r, &r).unwrap(), f64::INFINITY);
    }
}
