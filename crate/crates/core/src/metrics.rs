//! Image quality metrics. Both inputs are quantized to 8 bits first, so the
//! numbers match what a viewer of the saved PNGs would measure.

use crate::error::Result;
use crate::image::Image;
use crate::loss::ssim_value;

pub const PSNR_CAP: f64 = 100.0;

pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    a.same_size(b)?;
    let n = (a.data.len() * 3) as f64;
    let sum: f64 = a
        .data
        .iter()
        .zip(&b.data)
        .flat_map(|(p, q)| (0..3).map(move |c| (p[c] - q[c]) * (p[c] - q[c])))
        .sum();
    Ok(if n == 0.0 { 0.0 } else { sum / n })
}

/// `-10 log10(MSE)` on quantized images, capped at 100 dB.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    let m = mse(&a.quantized(), &b.quantized())?;
    Ok(psnr_from_mse(m))
}

pub fn psnr_from_mse(m: f64) -> f64 {
    if m <= 0.0 {
        return PSNR_CAP;
    }
    (-10.0 * m.log10()).min(PSNR_CAP)
}

/// PSNR restricted to pixels where `mask` is set.
pub fn psnr_masked(a: &Image, b: &Image, mask: &[bool]) -> Result<f64> {
    a.same_size(b)?;
    let (qa, qb) = (a.quantized(), b.quantized());
    let mut sum = 0.0;
    let mut n = 0usize;
    for ((p, q), &m) in qa.data.iter().zip(&qb.data).zip(mask) {
        if m {
            for c in 0..3 {
                sum += (p[c] - q[c]) * (p[c] - q[c]);
            }
            n += 3;
        }
    }
    Ok(if n == 0 { PSNR_CAP } else { psnr_from_mse(sum / n as f64) })
}

pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    ssim_value(&a.quantized(), &b.quantized())
}
