//! Texture painting from an edited view and procedural re-texturing.

use rayon::prelude::*;

use crate::atlas::uv_to_world_frame;
use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::geometry::{Appearance, Vec3};
use crate::image::RgbaImage;
use crate::render::{BaseColor, View};
use crate::scene::Scene;

pub const DEFAULT_DEPTH_TOLERANCE: f64 = 1e-2;

/// An RGBA image painted over the view of `camera`.
#[derive(Debug, Clone, PartialEq)]
pub struct EditImage {
    pub rgba: RgbaImage,
    pub camera: Camera,
}

impl EditImage {
    pub fn new(rgba: RgbaImage, camera: Camera) -> Result<Self> {
        if rgba.width != camera.width || rgba.height != camera.height {
            return Err(Error::DimensionMismatch(rgba.width, rgba.height, camera.width, camera.height));
        }
        if rgba.data.iter().any(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::InvalidArgument("edit image has non-finite values".into()));
        }
        Ok(EditImage { rgba, camera })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PaintReport {
    /// Texels that received any weight.
    pub texels_touched: usize,
    /// Rays whose median surface was found.
    pub rays_used: usize,
}

/// Per-texel accumulators: `w0`, `w1` and the alpha-weighted color sum.
#[derive(Debug, Clone, Copy, Default)]
struct Accum {
    w0: f64,
    w1: f64,
    color: [f64; 3],
}

/// Casts every edit pixel into the scene and blends it into the texels near
/// the median surface:
///
/// ```text
/// w0 = sum a_i w_i        w1 = sum (1 - a_i) w_i
/// tau_edit = sum c_i a_i w_i / w0
/// tau_new = (w0 tau_edit + w1 tau_orig) / (w0 + w1)
/// ```
///
/// where `w_i` is the bilinear weight times the transmittance in front of the
/// hit. Hits count only when their normalized depth is within `depth_tol` of
/// the pixel's median depth. Only texels change.
pub fn paint(scene: &mut Scene, edit: &EditImage, depth_tol: f64) -> Result<PaintReport> {
    if edit.rgba.width != edit.camera.width || edit.rgba.height != edit.camera.height {
        return Err(Error::DimensionMismatch(
            edit.rgba.width,
            edit.rgba.height,
            edit.camera.width,
            edit.camera.height,
        ));
    }
    if !(depth_tol >= 0.0) {
        return Err(Error::InvalidArgument(format!("depth tolerance {depth_tol}")));
    }
    edit.camera.validate()?;
    if !scene.is_textured() {
        return Err(Error::InvalidArgument("paint needs a textured scene".into()));
    }
    let cam = &edit.camera;
    let (w, h) = (cam.width, cam.height);
    let rows: Vec<(Vec<(usize, Accum)>, usize)> = {
        let view = View::new(scene, cam);
        (0..h)
            .into_par_iter()
            .map(|py| {
                let mut out = Vec::new();
                let mut used = 0;
                let mut hits = Vec::new();
                for px in 0..w {
                    let [r, g, b, a] = edit.rgba.get(px, py);
                    hits.clear();
                    let sample = view.trace_pixel(px, py, |hit| hits.push(*hit));
                    if !sample.median_depth.is_finite() {
                        continue;
                    }
                    used += 1;
                    let median = cam.normalize_depth(sample.median_depth);
                    for hit in &hits {
                        if (cam.normalize_depth(hit.t) - median).abs() > depth_tol {
                            continue;
                        }
                        let (Some(fp), BaseColor::Texture { offset, .. }) = (hit.footprint, view.prepared[hit.slot].base)
                        else {
                            continue;
                        };
                        for k in 0..4 {
                            let omega = fp.weight[k] * hit.transmittance;
                            if omega == 0.0 {
                                continue;
                            }
                            out.push((
                                offset + fp.index[k],
                                Accum {
                                    w0: a * omega,
                                    w1: (1.0 - a) * omega,
                                    color: [r * a * omega, g * a * omega, b * a * omega],
                                },
                            ));
                        }
                    }
                }
                (out, used)
            })
            .collect()
    };

    let mut acc = vec![Accum::default(); scene.atlas.len()];
    let mut report = PaintReport::default();
    for (row, used) in rows {
        report.rays_used += used;
        for (i, x) in row {
            let t = &mut acc[i];
            t.w0 += x.w0;
            t.w1 += x.w1;
            for c in 0..3 {
                t.color[c] += x.color[c];
            }
        }
    }
    for (texel, a) in scene.atlas.texels.iter_mut().zip(&acc) {
        let total = a.w0 + a.w1;
        if total == 0.0 {
            continue;
        }
        report.texels_touched += 1;
        if a.w0 == 0.0 {
            continue;
        }
        for c in 0..3 {
            let tau_edit = a.color[c] / a.w0;
            texel[c] = (a.w0 * tau_edit + a.w1 * texel[c]) / total;
        }
    }
    Ok(report)
}

/// Sets every texel to `f` evaluated at the texel's world-space center.
pub fn retexture<F>(scene: &mut Scene, f: F, zero_sh: bool) -> Result<()>
where
    F: Fn(&Vec3) -> [f64; 3] + Sync,
{
    if !scene.is_textured() {
        return Err(Error::InvalidArgument("retexture needs a textured scene".into()));
    }
    scene.atlas.check(&scene.primitives)?;
    let rho = scene.atlas.texel_size;
    let textures: Vec<Vec<[f64; 3]>> = scene
        .primitives
        .par_iter()
        .map(|g| {
            let Appearance::Textured { width, height } = g.appearance else {
                unreachable!("checked textured");
            };
            let frame = g.frame();
            let mut out = Vec::with_capacity(width as usize * height as usize);
            for v in 0..height {
                for u in 0..width {
                    out.push(f(&uv_to_world_frame(&frame, &g.position, width, height, u, v, rho)));
                }
            }
            out
        })
        .collect();
    for (i, t) in textures.into_iter().enumerate() {
        scene.atlas.texture_mut(i).copy_from_slice(&t);
    }
    if zero_sh {
        for g in &mut scene.primitives {
            g.sh_residual.iter_mut().for_each(|c| *c = 0.0);
        }
    }
    Ok(())
}

/// Red/blue rings around the integer lattice: `d = |p - round(p)|`,
/// `rgb = (0.5 (sin d + 1), 0, 0.5 (1 - sin d))`.
pub fn builtin_circles(p: &Vec3) -> [f64; 3] {
    let r = p.map(f64::round);
    let d = (p - r).norm();
    let s = d.sin();
    [0.5 * (s + 1.0), 0.0, 0.5 * (1.0 - s)]
}

/// Axis-aligned stripes: `0.5 (sin x_k + 1)` per channel.
pub fn builtin_stripes(p: &Vec3) -> [f64; 3] {
    [0.5 * (p.x.sin() + 1.0), 0.5 * (p.y.sin() + 1.0), 0.5 * (p.z.sin() + 1.0)]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pattern {
    Circles,
    Stripes,
}

impl Pattern {
    pub fn eval(self, p: &Vec3) -> [f64; 3] {
        match self {
            Pattern::Circles => builtin_circles(p),
            Pattern::Stripes => builtin_stripes(p),
        }
    }
}

impl std::str::FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circles" => Ok(Pattern::Circles),
            "stripes" => Ok(Pattern::Stripes),
            other => Err(Error::InvalidArgument(format!("unknown pattern {other:?}"))),
        }
    }
}
