//! Jagged per-primitive texel storage.
//!
//! Every primitive owns a `U x V` texture laid out row-major (`v * U + u`)
//! and all textures are concatenated into one flat RGB array. `prefix[i]` is
//! the offset of primitive `i`'s first texel, so `prefix[i + 1] - prefix[i]`
//! is its texel count and `prefix[n]` is the atlas length.
//!
//! Texture coordinates are displacements from the primitive mean along the
//! tangent axes, measured in texels and shifted so the mean lands on the
//! texture center:
//!
//! ```text
//! u = r1 . (x - mu) / rho + (U - 1) / 2
//! v = r2 . (x - mu) / rho + (V - 1) / 2
//! ```
//!
//! Lookups outside `[0, U - 1] x [0, V - 1]` are clamped (constant extrapolation).

use crate::error::{Error, Result};
use crate::geometry::{Appearance, Frame, TexturedGaussian, Vec3};
use crate::scene::Scene;
use crate::sh::SH_C0;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TextureAtlas {
    pub texels: Vec<[f64; 3]>,
    pub prefix: Vec<usize>,
    /// World-space edge length of one texel.
    pub texel_size: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uv {
    pub u: f64,
    pub v: f64,
}

/// The four texels touched by a bilinear lookup and their weights.
/// Indices are local to the primitive's texture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Footprint {
    pub index: [usize; 4],
    pub weight: [f64; 4],
    /// Fractional offsets `(fu, fv)` inside the cell.
    pub frac: [f64; 2],
}

impl TextureAtlas {
    pub fn empty() -> Self {
        TextureAtlas {
            texels: Vec::new(),
            prefix: vec![0],
            texel_size: 0.0,
        }
    }

    /// Zero-filled atlas sized for the primitives' current texture dims.
    pub fn for_primitives(primitives: &[TexturedGaussian], texel_size: f64) -> Self {
        let mut prefix = Vec::with_capacity(primitives.len() + 1);
        let mut total = 0usize;
        prefix.push(0);
        for g in primitives {
            total += g.appearance.texel_count();
            prefix.push(total);
        }
        TextureAtlas {
            texels: vec![[0.0; 3]; total],
            prefix,
            texel_size,
        }
    }

    pub fn len(&self) -> usize {
        self.texels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.texels.is_empty()
    }

    pub fn offset(&self, i: usize) -> usize {
        self.prefix[i]
    }

    pub fn texture(&self, i: usize) -> &[[f64; 3]] {
        &self.texels[self.prefix[i]..self.prefix[i + 1]]
    }

    pub fn texture_mut(&mut self, i: usize) -> &mut [[f64; 3]] {
        let (a, b) = (self.prefix[i], self.prefix[i + 1]);
        &mut self.texels[a..b]
    }

    /// Verifies the prefix sums against the primitives' texture dims.
    pub fn check(&self, primitives: &[TexturedGaussian]) -> Result<()> {
        if self.prefix.len() != primitives.len() + 1 {
            return Err(Error::AtlasInconsistent(format!(
                "prefix has {} entries for {} primitives",
                self.prefix.len(),
                primitives.len()
            )));
        }
        if self.prefix[0] != 0 {
            return Err(Error::AtlasInconsistent("prefix[0] != 0".into()));
        }
        for (i, g) in primitives.iter().enumerate() {
            let n = self.prefix[i + 1].checked_sub(self.prefix[i]);
            if n != Some(g.appearance.texel_count()) {
                return Err(Error::AtlasInconsistent(format!(
                    "primitive {i}: prefix span does not match its texture dims"
                )));
            }
        }
        if self.prefix[primitives.len()] != self.texels.len() {
            return Err(Error::AtlasInconsistent(format!(
                "prefix total {} != texel count {}",
                self.prefix[primitives.len()],
                self.texels.len()
            )));
        }
        Ok(())
    }
}

/// Maps a point on the primitive plane to continuous texel coordinates.
pub fn world_to_uv(g: &TexturedGaussian, x: &Vec3, texel_size: f64) -> Uv {
    let (w, h) = g.appearance.dims().unwrap_or((1, 1));
    world_to_uv_frame(&g.frame(), &g.position, w, h, x, texel_size)
}

pub(crate) fn world_to_uv_frame(frame: &Frame, position: &Vec3, width: u32, height: u32, x: &Vec3, texel_size: f64) -> Uv {
    let d = x - position;
    Uv {
        u: frame.r1.dot(&d) / texel_size + (width as f64 - 1.0) * 0.5,
        v: frame.r2.dot(&d) / texel_size + (height as f64 - 1.0) * 0.5,
    }
}

/// World-space center of texel `(u, v)`.
pub fn uv_to_world(g: &TexturedGaussian, u: u32, v: u32, texel_size: f64) -> Result<Vec3> {
    let (w, h) = g.appearance.dims().unwrap_or((1, 1));
    if u >= w || v >= h {
        return Err(Error::TexelOutOfRange { u, v, width: w, height: h });
    }
    Ok(uv_to_world_frame(&g.frame(), &g.position, w, h, u, v, texel_size))
}

pub(crate) fn uv_to_world_frame(frame: &Frame, position: &Vec3, width: u32, height: u32, u: u32, v: u32, texel_size: f64) -> Vec3 {
    let du = texel_size * (u as f64 - (width as f64 - 1.0) * 0.5);
    let dv = texel_size * (v as f64 - (height as f64 - 1.0) * 0.5);
    position + frame.r1 * du + frame.r2 * dv
}

/// Bilinear footprint with coordinates clamped to the texel centers.
pub fn bilinear_footprint(width: u32, height: u32, uv: Uv) -> Footprint {
    let umax = (width - 1) as f64;
    let vmax = (height - 1) as f64;
    let uc = uv.u.clamp(0.0, umax);
    let vc = uv.v.clamp(0.0, vmax);
    // uc, vc >= 0 here, so truncation is floor
    let u0 = (uc as u32).min(width - 1);
    let v0 = (vc as u32).min(height - 1);
    let u1 = (u0 + 1).min(width - 1);
    let v1 = (v0 + 1).min(height - 1);
    let fu = uc - u0 as f64;
    let fv = vc - v0 as f64;
    let w = width as usize;
    Footprint {
        index: [
            v0 as usize * w + u0 as usize,
            v0 as usize * w + u1 as usize,
            v1 as usize * w + u0 as usize,
            v1 as usize * w + u1 as usize,
        ],
        weight: [
            (1.0 - fu) * (1.0 - fv),
            fu * (1.0 - fv),
            (1.0 - fu) * fv,
            fu * fv,
        ],
        frac: [fu, fv],
    }
}

/// Nested lerps: equal to the weighted sum, but exact on constant cells and
/// at texel centers.
pub(crate) fn sample_texture(texture: &[[f64; 3]], fp: &Footprint) -> [f64; 3] {
    let [fu, fv] = fp.frac;
    let t = [texture[fp.index[0]], texture[fp.index[1]], texture[fp.index[2]], texture[fp.index[3]]];
    let mut rgb = [0.0; 3];
    for c in 0..3 {
        let top = t[0][c] + fu * (t[1][c] - t[0][c]);
        let bottom = t[2][c] + fu * (t[3][c] - t[2][c]);
        rgb[c] = top + fv * (bottom - top);
    }
    rgb
}

/// Bilinear texture value of primitive `index` at `uv`.
pub fn sample_bilinear(atlas: &TextureAtlas, primitives: &[TexturedGaussian], index: usize, uv: Uv) -> Result<[f64; 3]> {
    let (w, h) = primitives[index]
        .appearance
        .dims()
        .ok_or_else(|| Error::InvalidArgument(format!("primitive {index} has no texture")))?;
    let texture = atlas.texture(index);
    if texture.len() != w as usize * h as usize {
        return Err(Error::AtlasInconsistent(format!("primitive {index}")));
    }
    Ok(sample_texture(texture, &bilinear_footprint(w, h, uv)))
}

fn ceil_dim(extent: f64) -> Result<u32> {
    let n = extent.ceil().max(1.0);
    if !n.is_finite() || n > u32::MAX as f64 {
        return Err(Error::InvalidArgument(format!("texture dimension {extent} too large")));
    }
    Ok(n as u32)
}

/// Texture dims covering +-3 standard deviations: `ceil(6 s / rho)`, at least 1.
pub fn allocate_dims(s1: f64, s2: f64, texel_size: f64) -> Result<(u32, u32)> {
    if !(s1 > 0.0 && s2 > 0.0 && texel_size > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "allocate_dims needs positive inputs, got s1={s1} s2={s2} rho={texel_size}"
        )));
    }
    Ok((ceil_dim(6.0 * s1 / texel_size)?, ceil_dim(6.0 * s2 / texel_size)?))
}

/// Relative tolerance on the achieved texel total.
pub const BUDGET_TOLERANCE: f64 = 1e-3;
pub const BUDGET_MAX_STEPS: usize = 200;
/// The search bracket is `[rho0 / 16, 16 rho0]`.
pub const BUDGET_BRACKET: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TexelSizeSolution {
    pub texel_size: f64,
    pub total: usize,
    pub steps: usize,
}

fn total_texels(scales: &[[f64; 2]], texel_size: f64) -> usize {
    scales
        .iter()
        .map(|s| {
            let u = (6.0 * s[0] / texel_size).ceil().max(1.0);
            let v = (6.0 * s[1] / texel_size).ceil().max(1.0);
            // saturate so absurd brackets cannot overflow
            (u * v).min(usize::MAX as f64 / 2.0) as usize
        })
        .fold(0usize, |a, b| a.saturating_add(b))
}

/// Finds a texel size whose allocation totals within 0.1% of `budget`.
///
/// Candidate sizes are rounded to `f32` so the value persisted in a scene
/// file reproduces the same dims.
pub fn solve_texel_size(scales: &[[f64; 2]], budget: usize) -> Result<TexelSizeSolution> {
    if scales.is_empty() {
        return Err(Error::InvalidArgument("no primitives to allocate texels for".into()));
    }
    if budget < scales.len() {
        return Err(Error::InvalidArgument(format!(
            "texel budget {budget} is smaller than the primitive count {}",
            scales.len()
        )));
    }
    if let Some(s) = scales.iter().find(|s| !(s[0] > 0.0 && s[1] > 0.0 && s[0].is_finite() && s[1].is_finite())) {
        return Err(Error::InvalidArgument(format!("non-positive scale {s:?}")));
    }
    let area: f64 = scales.iter().map(|s| 36.0 * s[0] * s[1]).sum();
    let rho0 = (area / budget as f64).sqrt();
    let tol = BUDGET_TOLERANCE * budget as f64;
    let within = |total: usize| (total as f64 - budget as f64).abs() <= tol;
    let eval = |rho: f64| {
        let r = rho as f32 as f64;
        (r, total_texels(scales, r))
    };

    let mut best = eval(rho0);
    let consider = |cand: (f64, usize), best: &mut (f64, usize)| {
        let d = |t: usize| (t as f64 - budget as f64).abs();
        if d(cand.1) < d(best.1) {
            *best = cand;
        }
    };
    if within(best.1) {
        return Ok(TexelSizeSolution {
            texel_size: best.0,
            total: best.1,
            steps: 0,
        });
    }

    // total is non-increasing in rho: lo gives too many texels, hi too few
    let mut lo = rho0 / BUDGET_BRACKET;
    let mut hi = rho0 * BUDGET_BRACKET;
    for step in 1..=BUDGET_MAX_STEPS {
        let mid = 0.5 * (lo + hi);
        let cand = eval(mid);
        consider(cand, &mut best);
        if within(cand.1) {
            return Ok(TexelSizeSolution {
                texel_size: cand.0,
                total: cand.1,
                steps: step,
            });
        }
        if cand.1 > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    for edge in [lo, hi] {
        consider(eval(edge), &mut best);
    }
    Err(Error::BudgetUnattainable {
        budget,
        nearest_total: best.1,
        nearest_texel_size: best.0,
    })
}

/// Target texture layout for a scene.
#[derive(Debug, Clone, PartialEq)]
pub struct TexturePlan {
    pub texel_size: f64,
    pub dims: Vec<(u32, u32)>,
}

impl TexturePlan {
    pub fn total(&self) -> usize {
        self.dims.iter().map(|&(w, h)| w as usize * h as usize).sum()
    }
}

/// Plans texture dims for a texel budget. A budget of zero disables texturing:
/// every primitive gets a single texel, which then plays the role of the
/// degree-0 SH color.
pub fn plan_textures(scales: &[[f64; 2]], budget: usize) -> Result<TexturePlan> {
    if budget == 0 {
        let smax = scales.iter().flat_map(|s| s.iter().copied()).fold(0.0f64, f64::max);
        let mut rho = (6.0 * smax) as f32;
        if ((6.0 * smax) as f32 as f64) < 6.0 * smax {
            rho = f32::from_bits(rho.to_bits() + 1);
        }
        let rho = if smax > 0.0 { rho as f64 } else { 1.0 };
        return Ok(TexturePlan {
            texel_size: rho,
            dims: vec![(1, 1); scales.len()],
        });
    }
    let sol = solve_texel_size(scales, budget)?;
    plan_for_texel_size(scales, sol.texel_size)
}

/// Like [`plan_textures`], but when no texel size lands within tolerance of
/// the budget the closest achievable allocation is used instead. The second
/// value carries the miss so callers can report it.
pub fn plan_textures_nearest(scales: &[[f64; 2]], budget: usize) -> Result<(TexturePlan, Option<Error>)> {
    match plan_textures(scales, budget) {
        Ok(p) => Ok((p, None)),
        Err(e @ Error::BudgetUnattainable { nearest_texel_size, .. }) => {
            Ok((plan_for_texel_size(scales, nearest_texel_size)?, Some(e)))
        }
        Err(e) => Err(e),
    }
}

pub fn plan_for_texel_size(scales: &[[f64; 2]], texel_size: f64) -> Result<TexturePlan> {
    let dims = scales
        .iter()
        .map(|s| allocate_dims(s[0], s[1], texel_size))
        .collect::<Result<Vec<_>>>()?;
    Ok(TexturePlan { texel_size, dims })
}

/// Converts an untextured scene into a textured one laid out per `plan`,
/// filling every texel with the primitive's degree-0 SH color
/// (`dc * C0 + 0.5`). The degree-0 coefficient is dropped afterwards.
pub fn init_from_sh0(scene: &mut Scene, plan: &TexturePlan) -> Result<()> {
    if plan.dims.len() != scene.primitives.len() {
        return Err(Error::InvalidArgument("plan does not match scene".into()));
    }
    let mut colors = Vec::with_capacity(scene.primitives.len());
    for (i, g) in scene.primitives.iter().enumerate() {
        match g.appearance {
            Appearance::Untextured { dc } => colors.push(dc.map(|c| c * SH_C0 + 0.5)),
            Appearance::Textured { .. } => {
                return Err(Error::InvalidArgument(format!(
                    "primitive {i} is already textured; no degree-0 coefficient to initialize from"
                )))
            }
        }
    }
    for (g, &(width, height)) in scene.primitives.iter_mut().zip(&plan.dims) {
        g.appearance = Appearance::Textured { width, height };
    }
    let mut atlas = TextureAtlas::for_primitives(&scene.primitives, plan.texel_size);
    for (i, color) in colors.into_iter().enumerate() {
        atlas.texture_mut(i).fill(color);
    }
    scene.atlas = atlas;
    Ok(())
}

/// Re-lays out a textured scene per `plan`, filling each new texel by
/// bilinearly sampling the old texture at the new texel center. Returns
/// whether the layout changed; an unchanged layout leaves texels untouched.
pub fn reinit_resample(scene: &mut Scene, plan: &TexturePlan) -> Result<bool> {
    if plan.dims.len() != scene.primitives.len() {
        return Err(Error::InvalidArgument("plan does not match scene".into()));
    }
    if !scene.is_textured() {
        return Err(Error::InvalidArgument("reinit_resample needs a textured scene".into()));
    }
    scene.atlas.check(&scene.primitives)?;
    let old_rho = scene.atlas.texel_size;
    let unchanged = old_rho == plan.texel_size
        && scene
            .primitives
            .iter()
            .zip(&plan.dims)
            .all(|(g, &d)| g.appearance.dims() == Some(d));
    if unchanged {
        return Ok(false);
    }

    let old_atlas = std::mem::take(&mut scene.atlas);
    let old_dims: Vec<(u32, u32)> = scene
        .primitives
        .iter()
        .map(|g| g.appearance.dims().expect("textured"))
        .collect();
    for (g, &(width, height)) in scene.primitives.iter_mut().zip(&plan.dims) {
        g.appearance = Appearance::Textured { width, height };
    }
    let mut atlas = TextureAtlas::for_primitives(&scene.primitives, plan.texel_size);
    let ratio = plan.texel_size / old_rho;
    for i in 0..scene.primitives.len() {
        let (ow, oh) = old_dims[i];
        let (nw, nh) = plan.dims[i];
        let old = old_atlas.texture(i);
        let new = atlas.texture_mut(i);
        if (ow, oh) == (nw, nh) && ratio == 1.0 {
            new.copy_from_slice(old);
            continue;
        }
        let (oc_u, oc_v) = ((ow as f64 - 1.0) * 0.5, (oh as f64 - 1.0) * 0.5);
        let (nc_u, nc_v) = ((nw as f64 - 1.0) * 0.5, (nh as f64 - 1.0) * 0.5);
        for v in 0..nh {
            for u in 0..nw {
                // same tangent frame, so world centers map linearly between grids
                let uv = Uv {
                    u: (u as f64 - nc_u) * ratio + oc_u,
                    v: (v as f64 - nc_v) * ratio + oc_v,
                };
                new[(v * nw + u) as usize] = sample_texture(old, &bilinear_footprint(ow, oh, uv));
            }
        }
    }
    scene.atlas = atlas;
    Ok(true)
}
