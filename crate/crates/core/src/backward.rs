//! Reverse-mode gradients of the photometric loss with respect to texels,
//! SH residuals and opacity logits. Geometry is held fixed.
//!
//! For a ray with accepted hits `i = 1..k` (front to back),
//!
//! ```text
//! C = sum_i T_i a_i c_i + T_{k+1} bg,      T_i = prod_{j<i} (1 - a_j)
//! dC/dc_i = T_i a_i
//! dC/da_i = T_i (c_i - B_i),  B_k = bg,  B_{i-1} = a_i c_i + (1 - a_i) B_i
//! ```
//!
//! where `B_i` is the color composited behind hit `i`, normalized by the
//! transmittance just after it. This avoids dividing by `1 - a_i`.

use rayon::prelude::*;

use crate::camera::Camera;
use crate::error::Result;
use crate::image::Image;
use crate::loss::{loss_with_grad, LossReport, LAMBDA_DSSIM};
use crate::atlas::Footprint;
use crate::render::{sh_basis_for, BaseColor, Hit, View};
use crate::scene::Scene;

/// Gradient accumulators laid out like the optimizable parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBuffer {
    pub d_texels: Vec<[f64; 3]>,
    pub d_sh: Vec<Vec<f64>>,
    pub d_opacity: Vec<f64>,
}

impl GradientBuffer {
    pub fn for_scene(scene: &Scene) -> Self {
        GradientBuffer {
            d_texels: vec![[0.0; 3]; scene.atlas.len()],
            d_sh: scene.primitives.iter().map(|g| vec![0.0; g.sh_residual.len()]).collect(),
            d_opacity: vec![0.0; scene.primitives.len()],
        }
    }

    pub fn zero(&mut self) {
        self.d_texels.iter_mut().for_each(|t| *t = [0.0; 3]);
        self.d_sh.iter_mut().for_each(|v| v.iter_mut().for_each(|x| *x = 0.0));
        self.d_opacity.iter_mut().for_each(|x| *x = 0.0);
    }

    pub fn matches(&self, scene: &Scene) -> bool {
        self.d_texels.len() == scene.atlas.len()
            && self.d_opacity.len() == scene.primitives.len()
            && self
                .d_sh
                .iter()
                .zip(&scene.primitives)
                .all(|(d, g)| d.len() == g.sh_residual.len())
    }
}

/// Gradient of one accepted hit, before expansion into parameter slots.
struct HitGrad {
    prim: usize,
    /// Index into the row's per-pixel SH basis list.
    basis: usize,
    texture: Option<(usize, Footprint)>,
    dl_dcolor: [f64; 3],
    dl_dlogit: f64,
}

#[derive(Default)]
struct RowGrads {
    hits: Vec<HitGrad>,
    bases: Vec<[f64; 15]>,
}

/// Rows traced in parallel per band before the in-order merge; bounds the
/// memory held by per-hit records.
const BAND_ROWS: usize = 32;

/// Renders `camera`, evaluates the loss against `target` and accumulates the
/// gradient into `grads`.
pub fn backward(scene: &Scene, camera: &Camera, target: &Image, grads: &mut GradientBuffer) -> Result<LossReport> {
    backward_weighted(scene, camera, target, LAMBDA_DSSIM, grads)
}

pub fn backward_weighted(
    scene: &Scene,
    camera: &Camera,
    target: &Image,
    lambda: f64,
    grads: &mut GradientBuffer,
) -> Result<LossReport> {
    let view = View::new(scene, camera);
    let (w, h) = (camera.width, camera.height);
    let cache = w * h <= CACHE_MAX_PIXELS;
    let rows: Vec<(Vec<[f64; 3]>, Option<RowHits>)> = (0..h)
        .into_par_iter()
        .map(|py| {
            let mut colors = Vec::with_capacity(w);
            let mut hits = cache.then(|| RowHits {
                hits: Vec::new(),
                ends: Vec::with_capacity(w),
            });
            for px in 0..w {
                let sample = match hits.as_mut() {
                    Some(rh) => {
                        let s = view.trace_pixel(px, py, |hit| rh.hits.push(*hit));
                        rh.ends.push(rh.hits.len());
                        s
                    }
                    None => view.trace_pixel(px, py, |_| {}),
                };
                colors.push(sample.color);
            }
            (colors, hits)
        })
        .collect();
    let mut rendered = Image::new(w, h);
    let mut cached = Vec::with_capacity(if cache { h } else { 0 });
    for (py, (colors, hits)) in rows.into_iter().enumerate() {
        rendered.data[py * w..(py + 1) * w].copy_from_slice(&colors);
        cached.extend(hits);
    }
    let (report, pixel_grads) = loss_with_grad(&rendered, target, lambda)?;
    accumulate(&view, &pixel_grads, cache.then_some(&cached[..]), grads);
    Ok(report)
}

/// Hits of every pixel in one row; pixel `x` owns `hits[ends[x - 1]..ends[x]]`.
struct RowHits {
    hits: Vec<Hit>,
    ends: Vec<usize>,
}

/// Images up to this many pixels keep their forward hit lists for the
/// reverse pass instead of tracing again.
const CACHE_MAX_PIXELS: usize = 512 * 512;

/// Back-propagates `dL/dC` for every pixel of `view` into `grads`.
#[allow(dead_code)]
pub(crate) fn accumulate_pixel_grads(view: &View, pixel_grads: &[[f64; 3]], grads: &mut GradientBuffer) {
    accumulate(view, pixel_grads, None, grads);
}

/// Rows are processed in parallel per band and merged in row order, so the
/// summation order does not depend on thread scheduling.
fn accumulate(view: &View, pixel_grads: &[[f64; 3]], cached: Option<&[RowHits]>, grads: &mut GradientBuffer) {
    let h = view.camera.height;
    let mut band = 0;
    while band < h {
        let end = (band + BAND_ROWS).min(h);
        let rows: Vec<RowGrads> = (band..end)
            .into_par_iter()
            .map(|py| row_grads(view, pixel_grads, py, cached.map(|c| &c[py])))
            .collect();
        for row in rows {
            merge_row(view.scene, &row, grads);
        }
        band = end;
    }
}

fn row_grads(view: &View, pixel_grads: &[[f64; 3]], py: usize, cached: Option<&RowHits>) -> RowGrads {
    let scene = view.scene;
    let w = view.camera.width;
    let mut out = RowGrads::default();
    let mut traced: Vec<Hit> = Vec::new();
    for px in 0..w {
        let dl_dc = pixel_grads[py * w + px];
        if dl_dc == [0.0; 3] {
            continue;
        }
        let hits: &[Hit] = match cached {
            Some(rh) => &rh.hits[if px == 0 { 0 } else { rh.ends[px - 1] }..rh.ends[px]],
            None => {
                traced.clear();
                view.trace_pixel(px, py, |hit| traced.push(*hit));
                &traced
            }
        };
        if hits.is_empty() {
            continue;
        }
        let ray = view.camera.pixel_ray(px, py);
        out.bases.push(sh_basis_for(scene, &ray.direction).0);
        let basis = out.bases.len() - 1;
        let mut behind = scene.background;
        for hit in hits.iter().rev() {
            let p = &view.prepared[hit.slot];
            let wgt = hit.transmittance * hit.alpha;
            let mut dl_dalpha = 0.0;
            for c in 0..3 {
                dl_dalpha += dl_dc[c] * hit.transmittance * (hit.color[c] - behind[c]);
                behind[c] = hit.alpha * hit.color[c] + (1.0 - hit.alpha) * behind[c];
            }
            let texture = match (hit.footprint, p.base) {
                (Some(fp), BaseColor::Texture { offset, .. }) => Some((offset, fp)),
                _ => None,
            };
            out.hits.push(HitGrad {
                prim: p.index,
                basis,
                texture,
                dl_dcolor: dl_dc.map(|g| g * wgt),
                // alpha = o * G with o = sigmoid(logit)
                dl_dlogit: dl_dalpha * hit.alpha * (1.0 - p.opacity),
            });
        }
    }
    out
}

fn merge_row(scene: &Scene, row: &RowGrads, grads: &mut GradientBuffer) {
    let nb = crate::sh::basis_count(scene.sh_degree) - 1;
    for hg in &row.hits {
        let g = hg.dl_dcolor;
        if let Some((offset, fp)) = hg.texture {
            for k in 0..4 {
                let wk = fp.weight[k];
                if wk != 0.0 {
                    let t = &mut grads.d_texels[offset + fp.index[k]];
                    for c in 0..3 {
                        t[c] += wk * g[c];
                    }
                }
            }
        }
        let basis = &row.bases[hg.basis];
        let d_sh = &mut grads.d_sh[hg.prim];
        for k in 0..nb {
            for c in 0..3 {
                d_sh[3 * k + c] += basis[k] * g[c];
            }
        }
        grads.d_opacity[hg.prim] += hg.dl_dlogit;
    }
}
