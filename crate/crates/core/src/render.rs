//! Ray-cast renderer.
//!
//! Primitives are depth-sorted once per view by the camera-space depth of
//! their means, then every pixel casts one ray through its center and
//! composites the hits front to back. Hits with `alpha < 1/255` are skipped
//! and the walk stops once transmittance falls below `1e-4`.
//!
//! For speed, [`View`] bins primitives into screen tiles using the projected
//! rectangle where `alpha >= 1/255` can occur. Binning only drops hits that
//! would be skipped anyway, so tiled rendering is bit-identical to walking
//! the full ordering with [`composite_ray`].

use rayon::prelude::*;

use crate::atlas::{bilinear_footprint, sample_texture, Footprint, Uv};
use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::geometry::{Appearance, Frame, Ray, Vec3, PARALLEL_EPS, T_NEAR};
use crate::image::Image;
use crate::scene::Scene;
use crate::sh::{self, SH_C0};

pub const ALPHA_MIN: f64 = 1.0 / 255.0;
pub const TRANSMITTANCE_MIN: f64 = 1e-4;
pub const MEDIAN_OPACITY: f64 = 0.5;
const TILE: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutput {
    pub color: Image,
    pub alpha: Vec<f64>,
    /// Ray distance of the median surface, `+inf` where opacity never passes 0.5.
    pub median_depth: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaySample {
    pub color: [f64; 3],
    pub alpha: f64,
    pub median_depth: f64,
}

/// Global front-to-back order for a view: ascending camera-space depth of the
/// means, ties by index, means in front of the near plane only.
pub fn sort_primitives(scene: &Scene, camera: &Camera) -> Vec<usize> {
    let mut keyed: Vec<(f64, usize)> = scene
        .primitives
        .iter()
        .enumerate()
        .map(|(i, g)| (camera.to_camera(&g.position).z, i))
        .filter(|&(z, _)| z >= camera.near)
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().map(|(_, i)| i).collect()
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum BaseColor {
    Texture { offset: usize, width: u32, height: u32 },
    Constant([f64; 3]),
}

/// Per-view cached quantities for one primitive.
#[derive(Debug, Clone)]
pub(crate) struct Prepared {
    pub index: usize,
    pub frame: Frame,
    pub position: Vec3,
    pub inv_scale: [f64; 2],
    pub opacity: f64,
    /// Quadratic forms above this cannot reach `alpha >= 1/255`; slightly
    /// loose so the exact alpha test stays authoritative.
    pub q_reject: f64,
    pub base: BaseColor,
}

impl Prepared {
    pub fn new(scene: &Scene, index: usize) -> Self {
        let g = &scene.primitives[index];
        let base = match g.appearance {
            Appearance::Untextured { dc } => BaseColor::Constant(dc.map(|c| c * SH_C0 + 0.5)),
            Appearance::Textured { width, height } => BaseColor::Texture {
                offset: scene.atlas.offset(index),
                width,
                height,
            },
        };
        Prepared {
            index,
            frame: g.frame(),
            position: g.position,
            inv_scale: [1.0 / g.scale[0], 1.0 / g.scale[1]],
            opacity: g.opacity(),
            q_reject: {
                let q = 2.0 * (255.0 * g.opacity()).ln();
                if q.is_nan() { f64::INFINITY } else { q * (1.0 + 1e-9) + 1e-9 }
            },
            base,
        }
    }
}

/// One accepted ray-primitive hit.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Hit {
    /// Index into the view's prepared list.
    pub slot: usize,
    pub t: f64,
    pub alpha: f64,
    pub color: [f64; 3],
    pub footprint: Option<Footprint>,
    /// Transmittance in front of this hit.
    pub transmittance: f64,
}

/// Ray-origin dependent terms of one primitive, shared by all rays from the
/// same origin: `n . (mu - o)`, `r1 . (o - mu)`, `r2 . (o - mu)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct OriginTerms {
    normal_offset: f64,
    a_offset: f64,
    b_offset: f64,
}

impl OriginTerms {
    pub fn new(p: &Prepared, origin: &Vec3) -> Self {
        let rel = origin - p.position;
        OriginTerms {
            normal_offset: p.frame.normal.dot(&(p.position - origin)),
            a_offset: p.frame.r1.dot(&rel),
            b_offset: p.frame.r2.dot(&rel),
        }
    }
}

/// Evaluates the hit of a ray (origin folded into `terms`) with a prepared
/// primitive; `None` when the ray misses or `alpha < 1/255`.
#[inline]
pub(crate) fn hit_primitive(
    scene: &Scene,
    p: &Prepared,
    terms: &OriginTerms,
    dir: &Vec3,
    sh_basis: &[f64],
) -> Option<(f64, f64, [f64; 3], Option<Footprint>)> {
    let denom = p.frame.normal.dot(dir);
    if denom.abs() < PARALLEL_EPS {
        return None;
    }
    let t = terms.normal_offset / denom;
    if !(t > T_NEAR) {
        return None;
    }
    let a = terms.a_offset + t * p.frame.r1.dot(dir);
    let b = terms.b_offset + t * p.frame.r2.dot(dir);
    let qa = a * p.inv_scale[0];
    let qb = b * p.inv_scale[1];
    let q = qa * qa + qb * qb;
    if q > p.q_reject {
        return None;
    }
    let alpha = p.opacity * (-0.5 * q).exp();
    if !(alpha >= ALPHA_MIN) {
        return None;
    }
    let (mut color, footprint) = match p.base {
        BaseColor::Constant(c) => (c, None),
        BaseColor::Texture { offset, width, height } => {
            let rho = scene.atlas.texel_size;
            let uv = Uv {
                u: a / rho + (width as f64 - 1.0) * 0.5,
                v: b / rho + (height as f64 - 1.0) * 0.5,
            };
            let fp = bilinear_footprint(width, height, uv);
            let tex = &scene.atlas.texels[offset..offset + width as usize * height as usize];
            (sample_texture(tex, &fp), Some(fp))
        }
    };
    let coeffs = &scene.primitives[p.index].sh_residual;
    for (k, bk) in sh_basis.iter().enumerate() {
        for c in 0..3 {
            color[c] += bk * coeffs[3 * k + c];
        }
    }
    Some((t, alpha, color, footprint))
}

pub(crate) fn sh_basis_for(scene: &Scene, dir: &Vec3) -> ([f64; 15], usize) {
    let mut basis = [0.0; 15];
    let n = sh::basis_count(scene.sh_degree) - 1;
    sh::residual_basis(scene.sh_degree, [dir.x, dir.y, dir.z], &mut basis);
    (basis, n)
}

/// Front-to-back compositing over `slots` (indices into `prepared`). Calls
/// `on_hit` for every accepted hit.
pub(crate) fn trace(
    scene: &Scene,
    prepared: &[Prepared],
    terms: &[OriginTerms],
    slots: impl IntoIterator<Item = usize>,
    ray: &Ray,
    background: [f64; 3],
    mut on_hit: impl FnMut(&Hit),
) -> RaySample {
    let (basis, nb) = sh_basis_for(scene, &ray.direction);
    let mut transmittance = 1.0;
    let mut color = [0.0; 3];
    let mut median_depth = f64::INFINITY;
    for slot in slots {
        let p = &prepared[slot];
        let Some((t, alpha, c, footprint)) = hit_primitive(scene, p, &terms[slot], &ray.direction, &basis[..nb]) else {
            continue;
        };
        on_hit(&Hit {
            slot,
            t,
            alpha,
            color: c,
            footprint,
            transmittance,
        });
        let w = transmittance * alpha;
        for k in 0..3 {
            color[k] += w * c[k];
        }
        transmittance *= 1.0 - alpha;
        if median_depth == f64::INFINITY && 1.0 - transmittance > MEDIAN_OPACITY {
            median_depth = t;
        }
        if transmittance < TRANSMITTANCE_MIN {
            break;
        }
    }
    for k in 0..3 {
        color[k] += transmittance * background[k];
    }
    RaySample {
        color,
        alpha: 1.0 - transmittance,
        median_depth,
    }
}

/// Radiance of primitive `index` at plane point `x` seen along `dir`:
/// bilinear texture (or degree-0 color) plus the SH residual.
pub fn shade(scene: &Scene, index: usize, x: &Vec3, dir: &Vec3) -> Result<[f64; 3]> {
    let g = scene
        .primitives
        .get(index)
        .ok_or_else(|| Error::InvalidArgument(format!("no primitive {index}")))?;
    let base = match g.appearance {
        Appearance::Untextured { dc } => dc.map(|c| c * SH_C0 + 0.5),
        Appearance::Textured { .. } => {
            let uv = crate::atlas::world_to_uv(g, x, scene.atlas.texel_size);
            crate::atlas::sample_bilinear(&scene.atlas, &scene.primitives, index, uv)?
        }
    };
    let residual = sh::eval_sh(&g.sh_residual, [dir.x, dir.y, dir.z])?;
    Ok([base[0] + residual[0], base[1] + residual[1], base[2] + residual[2]])
}

/// Composites one ray over a full primitive ordering.
pub fn composite_ray(scene: &Scene, ordering: &[usize], ray: &Ray, background: [f64; 3]) -> RaySample {
    let prepared: Vec<Prepared> = ordering.iter().map(|&i| Prepared::new(scene, i)).collect();
    let terms: Vec<OriginTerms> = prepared.iter().map(|p| OriginTerms::new(p, &ray.origin)).collect();
    trace(scene, &prepared, &terms, 0..prepared.len(), ray, background, |_| {})
}

/// Sorted, tile-binned primitives for one camera.
pub(crate) struct View<'a> {
    pub scene: &'a Scene,
    pub camera: &'a Camera,
    pub prepared: Vec<Prepared>,
    terms: Vec<OriginTerms>,
    tiles_x: usize,
    tiles: Vec<Vec<u32>>,
}

impl<'a> View<'a> {
    pub fn new(scene: &'a Scene, camera: &'a Camera) -> Self {
        let order = sort_primitives(scene, camera);
        let prepared: Vec<Prepared> = order.iter().map(|&i| Prepared::new(scene, i)).collect();
        let tiles_x = camera.width.div_ceil(TILE);
        let tiles_y = camera.height.div_ceil(TILE);
        let mut tiles = vec![Vec::new(); tiles_x * tiles_y];
        for (slot, p) in prepared.iter().enumerate() {
            let Some((x0, y0, x1, y1)) = screen_bounds(p, scene, camera) else {
                continue;
            };
            let (tx0, tx1) = (x0 / TILE, x1 / TILE);
            let (ty0, ty1) = (y0 / TILE, y1 / TILE);
            for ty in ty0..=ty1 {
                for tx in tx0..=tx1 {
                    tiles[ty * tiles_x + tx].push(slot as u32);
                }
            }
        }
        let center = camera.center();
        let terms = prepared.iter().map(|p| OriginTerms::new(p, &center)).collect();
        View {
            scene,
            camera,
            prepared,
            terms,
            tiles_x,
            tiles,
        }
    }

    pub fn slots_for_pixel(&self, px: usize, py: usize) -> &[u32] {
        &self.tiles[(py / TILE) * self.tiles_x + px / TILE]
    }

    pub fn trace_pixel(&self, px: usize, py: usize, on_hit: impl FnMut(&Hit)) -> RaySample {
        let ray = self.camera.pixel_ray(px, py);
        let slots = self.slots_for_pixel(px, py).iter().map(|&s| s as usize);
        trace(self.scene, &self.prepared, &self.terms, slots, &ray, self.scene.background, on_hit)
    }
}

/// Inclusive pixel bounds that contain every pixel center where the primitive
/// can reach `alpha >= 1/255`; `None` if it never can.
fn screen_bounds(p: &Prepared, scene: &Scene, camera: &Camera) -> Option<(usize, usize, usize, usize)> {
    let reach = 255.0 * p.opacity;
    if !(reach >= 1.0) {
        return None;
    }
    let full = Some((0, 0, camera.width - 1, camera.height - 1));
    // alpha >= 1/255 inside the ellipse q <= 2 ln(255 o)
    let r = (2.0 * reach.ln()).sqrt() * 1.0001;
    let g = &scene.primitives[p.index];
    let e1 = p.frame.r1 * (r * g.scale[0]);
    let e2 = p.frame.r2 * (r * g.scale[1]);
    let (mut xmin, mut ymin) = (f64::INFINITY, f64::INFINITY);
    let (mut xmax, mut ymax) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (s1, s2) in [(-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0), (1.0, 1.0)] {
        let corner = p.position + e1 * s1 + e2 * s2;
        let c = camera.to_camera(&corner);
        if c.z <= 1e-6 {
            // the rectangle crosses the camera plane; projection is not convex-safe
            return full;
        }
        let (u, v) = camera.project_camera(&c);
        xmin = xmin.min(u);
        xmax = xmax.max(u);
        ymin = ymin.min(v);
        ymax = ymax.max(v);
    }
    if !(xmin.is_finite() && ymin.is_finite() && xmax.is_finite() && ymax.is_finite()) {
        return full;
    }
    // pixel centers sit at +0.5; pad one pixel
    let x0 = (xmin - 1.5).floor();
    let y0 = (ymin - 1.5).floor();
    let x1 = (xmax + 0.5).ceil();
    let y1 = (ymax + 0.5).ceil();
    let (w, h) = (camera.width as f64, camera.height as f64);
    if x1 < 0.0 || y1 < 0.0 || x0 > w - 1.0 || y0 > h - 1.0 {
        return None;
    }
    Some((
        x0.max(0.0) as usize,
        y0.max(0.0) as usize,
        x1.min(w - 1.0) as usize,
        y1.min(h - 1.0) as usize,
    ))
}

/// Renders color, accumulated opacity and median depth for every pixel.
pub fn render(scene: &Scene, camera: &Camera) -> RenderOutput {
    let view = View::new(scene, camera);
    let (w, h) = (camera.width, camera.height);
    let rows: Vec<Vec<RaySample>> = (0..h)
        .into_par_iter()
        .map(|py| (0..w).map(|px| view.trace_pixel(px, py, |_| {})).collect())
        .collect();
    let mut color = Image::new(w, h);
    let mut alpha = Vec::with_capacity(w * h);
    let mut median_depth = Vec::with_capacity(w * h);
    for (py, row) in rows.into_iter().enumerate() {
        for (px, s) in row.into_iter().enumerate() {
            color.set(px, py, s.color);
            alpha.push(s.alpha);
            median_depth.push(s.median_depth);
        }
    }
    RenderOutput {
        color,
        alpha,
        median_depth,
    }
}

/// Color-only convenience wrapper.
pub fn render_color(scene: &Scene, camera: &Camera) -> Image {
    render(scene, camera).color
}
