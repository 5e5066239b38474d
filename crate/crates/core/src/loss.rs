//! Photometric loss: `(1 - lambda) * L1 + lambda * D-SSIM` with
//! `D-SSIM = (1 - SSIM) / 2`.
//!
//! SSIM uses an 11x11 Gaussian window (sigma 1.5) applied separably with
//! zero padding, `C1 = 0.01^2`, `C2 = 0.03^2`, and is averaged over every
//! pixel and channel. The window is linear and symmetric, so its adjoint is
//! the same blur; [`loss_with_grad`] uses that to return exact pixel gradients.

use crate::error::Result;
use crate::image::Image;

pub const LAMBDA_DSSIM: f64 = 0.2;
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_C1: f64 = 0.01 * 0.01;
pub const SSIM_C2: f64 = 0.03 * 0.03;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossReport {
    pub l1: f64,
    pub dssim: f64,
    pub total: f64,
}

pub fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let half = (SSIM_WINDOW / 2) as f64;
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - half;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = w.iter().sum();
    w.map(|v| v / s)
}

/// Separable same-size blur with zero padding.
pub(crate) fn blur(plane: &[f64], width: usize, height: usize, window: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let r = SSIM_WINDOW / 2;
    let mut tmp = vec![0.0; plane.len()];
    for y in 0..height {
        let row = &plane[y * width..(y + 1) * width];
        let out = &mut tmp[y * width..(y + 1) * width];
        for (x, o) in out.iter_mut().enumerate() {
            let lo = x.saturating_sub(r);
            let hi = (x + r + 1).min(width);
            let taps = &window[lo + r - x..hi + r - x];
            *o = row[lo..hi].iter().zip(taps).map(|(p, w)| p * w).sum();
        }
    }
    let mut out = vec![0.0; plane.len()];
    for y in 0..height {
        let lo = y.saturating_sub(r);
        let hi = (y + r + 1).min(height);
        let dst = &mut out[y * width..(y + 1) * width];
        for sy in lo..hi {
            let wk = window[sy + r - y];
            let src = &tmp[sy * width..(sy + 1) * width];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += wk * s;
            }
        }
    }
    out
}

struct SsimPlane {
    mean: f64,
    /// d(mean SSIM of this plane * count) / d x, unnormalized.
    grad: Option<Vec<f64>>,
}

fn ssim_plane(x: &[f64], y: &[f64], width: usize, height: usize, want_grad: bool) -> SsimPlane {
    let window = gaussian_window();
    let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).collect::<Vec<_>>();
    let mu_x = blur(x, width, height, &window);
    let mu_y = blur(y, width, height, &window);
    let s_xx = blur(&sq(x, x), width, height, &window);
    let s_yy = blur(&sq(y, y), width, height, &window);
    let s_xy = blur(&sq(x, y), width, height, &window);

    let n = x.len();
    let mut total = 0.0;
    let (mut d_mu, mut d_xx, mut d_xy) = if want_grad {
        (vec![0.0; n], vec![0.0; n], vec![0.0; n])
    } else {
        (Vec::new(), Vec::new(), Vec::new())
    };
    for p in 0..n {
        let (a, b) = (mu_x[p], mu_y[p]);
        let var_x = s_xx[p] - a * a;
        let var_y = s_yy[p] - b * b;
        let cov = s_xy[p] - a * b;
        let num1 = 2.0 * a * b + SSIM_C1;
        let num2 = 2.0 * cov + SSIM_C2;
        let den1 = a * a + b * b + SSIM_C1;
        let den2 = var_x + var_y + SSIM_C2;
        let s = num1 * num2 / (den1 * den2);
        total += s;
        if want_grad {
            d_mu[p] = s * (2.0 * b / num1 - 2.0 * b / num2 - 2.0 * a / den1 + 2.0 * a / den2);
            d_xx[p] = -s / den2;
            d_xy[p] = 2.0 * s / num2;
        }
    }
    let grad = want_grad.then(|| {
        let g_mu = blur(&d_mu, width, height, &window);
        let g_xx = blur(&d_xx, width, height, &window);
        let g_xy = blur(&d_xy, width, height, &window);
        (0..n).map(|q| g_mu[q] + 2.0 * x[q] * g_xx[q] + y[q] * g_xy[q]).collect()
    });
    SsimPlane { mean: total / n as f64, grad }
}

/// Mean SSIM over all pixels and channels.
pub fn ssim_value(a: &Image, b: &Image) -> Result<f64> {
    a.same_size(b)?;
    let mut s = 0.0;
    for c in 0..3 {
        s += ssim_plane(&a.channel(c), &b.channel(c), a.width, a.height, false).mean;
    }
    Ok(s / 3.0)
}

pub fn loss(rendered: &Image, target: &Image) -> Result<LossReport> {
    loss_weighted(rendered, target, LAMBDA_DSSIM)
}

pub fn loss_weighted(rendered: &Image, target: &Image, lambda: f64) -> Result<LossReport> {
    rendered.same_size(target)?;
    let n = (rendered.data.len() * 3) as f64;
    let l1 = rendered
        .data
        .iter()
        .zip(&target.data)
        .flat_map(|(a, b)| (0..3).map(move |c| (a[c] - b[c]).abs()))
        .sum::<f64>()
        / n;
    let dssim = if lambda == 0.0 {
        0.0
    } else {
        (1.0 - ssim_value(rendered, target)?) / 2.0
    };
    Ok(LossReport {
        l1,
        dssim,
        total: (1.0 - lambda) * l1 + lambda * dssim,
    })
}

/// Loss and its gradient with respect to every rendered pixel channel.
pub fn loss_with_grad(rendered: &Image, target: &Image, lambda: f64) -> Result<(LossReport, Vec<[f64; 3]>)> {
    rendered.same_size(target)?;
    let count = rendered.data.len();
    let n = (count * 3) as f64;
    let mut grad = vec![[0.0; 3]; count];
    let mut l1 = 0.0;
    for (g, (a, b)) in grad.iter_mut().zip(rendered.data.iter().zip(&target.data)) {
        for c in 0..3 {
            let d = a[c] - b[c];
            l1 += d.abs();
            let sign = if d > 0.0 {
                1.0
            } else if d < 0.0 {
                -1.0
            } else {
                0.0
            };
            g[c] = (1.0 - lambda) * sign / n;
        }
    }
    l1 /= n;
    let mut dssim = 0.0;
    if lambda != 0.0 {
        let mut ssim = 0.0;
        for c in 0..3 {
            let plane = ssim_plane(&rendered.channel(c), &target.channel(c), rendered.width, rendered.height, true);
            ssim += plane.mean;
            // d dssim / d x = -(1/2) * (1/n) * d(sum S)/dx
            for (g, d) in grad.iter_mut().zip(plane.grad.expect("requested")) {
                g[c] += lambda * (-0.5 / n) * d;
            }
        }
        dssim = (1.0 - ssim / 3.0) / 2.0;
    }
    Ok((
        LossReport {
            l1,
            dssim,
            total: (1.0 - lambda) * l1 + lambda * dssim,
        },
        grad,
    ))
}
