//! Synthetic ground-truth scenes and their rendered datasets.
//!
//! All kinds live on (or around) the plane `z = 0` and are textured from one
//! world-space pattern: a soft checkerboard with a ring-and-bar glyph, defined
//! over the square `[-3, 3]^2`. Cameras sit on an arc at distance
//! [`SyntheticParams::distance`] looking at the origin.

use nalgebra::{Quaternion, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::atlas::{init_from_sh0, plan_textures_nearest};
use crate::camera::Camera;
use crate::dataset::{Dataset, PosedImage};
use crate::error::{Error, Result};
use crate::geometry::{logit, Appearance, TexturedGaussian, Vec3};
use crate::image::Image;
use crate::render::render_color;
use crate::scene::Scene;
use crate::scene_file::round_to_f32;
use crate::sh::{self, SH_C0};

/// Half-width of the world square covered by the pattern.
pub const PATTERN_EXTENT: f64 = 3.0;
/// Opacity of ground-truth and grid primitives.
pub const SURFACE_OPACITY: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticKind {
    /// One large textured primitive.
    Plane,
    /// `n x n` primitives tiling the plane.
    Grid,
    /// Randomly posed primitives around the origin.
    Random,
}

impl std::str::FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plane" => Ok(SyntheticKind::Plane),
            "grid" => Ok(SyntheticKind::Grid),
            "random" => Ok(SyntheticKind::Random),
            other => Err(Error::InvalidArgument(format!("unknown synthetic kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticParams {
    pub kind: SyntheticKind,
    pub primitive_count: usize,
    /// Ground-truth texel budget; the plane kind with 65536 gets a 256x256 map.
    pub texels: usize,
    pub sh_degree: u32,
    pub view_count: usize,
    /// Every view with `index % heldout_every == heldout_every / 2` is held out.
    pub heldout_every: usize,
    pub width: usize,
    pub height: usize,
    pub fov_x: f64,
    pub distance: f64,
    /// Azimuth range of the camera arc, radians either side of the plane normal.
    pub arc: f64,
    pub background: [f64; 3],
}

impl SyntheticParams {
    pub fn plane() -> Self {
        SyntheticParams {
            kind: SyntheticKind::Plane,
            primitive_count: 1,
            texels: 256 * 256,
            sh_degree: 1,
            view_count: 10,
            heldout_every: 5,
            width: 128,
            height: 128,
            fov_x: 2.0 * (1.2f64 / 4.0).atan(),
            distance: 4.0,
            arc: 35f64.to_radians(),
            background: [1.0; 3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.primitive_count == 0 {
            return bad("primitive count must be positive");
        }
        if self.kind == SyntheticKind::Plane && self.primitive_count != 1 {
            return bad("the plane kind has exactly one primitive");
        }
        if self.kind == SyntheticKind::Grid && grid_side(self.primitive_count).is_none() {
            return bad("grid primitive count must be a perfect square");
        }
        if self.texels < self.primitive_count {
            return bad("texel budget must be at least the primitive count");
        }
        if self.sh_degree > sh::MAX_DEGREE {
            return bad("sh degree must be at most 3");
        }
        if self.view_count == 0 || self.width == 0 || self.height == 0 {
            return bad("need at least one view of non-empty size");
        }
        if !(self.fov_x > 0.0 && self.fov_x < std::f64::consts::PI) {
            return bad("field of view must be in (0, pi)");
        }
        if !(self.distance > 0.0 && self.arc >= 0.0 && self.arc < 1.5) {
            return bad("camera distance must be positive and arc below 1.5 rad");
        }
        Ok(())
    }
}

fn grid_side(count: usize) -> Option<usize> {
    let n = (count as f64).sqrt().round() as usize;
    (n * n == count).then_some(n)
}

fn soft_step(x: f64, width: f64) -> f64 {
    0.5 + 0.5 * (x / width).tanh()
}

/// Ground-truth color at a world point on the plane (`z` ignored).
pub fn pattern(p: &Vec3) -> [f64; 3] {
    const A: [f64; 3] = [0.78, 0.38, 0.30];
    const B: [f64; 3] = [0.28, 0.52, 0.78];
    const GLYPH: [f64; 3] = [0.90, 0.84, 0.36];
    // normalized coordinates over the pattern square
    let x = (p.x + PATTERN_EXTENT) / (2.0 * PATTERN_EXTENT);
    let y = (p.y + PATTERN_EXTENT) / (2.0 * PATTERN_EXTENT);
    let s = 0.5 + 0.5 * (6.0 * (8.0 * std::f64::consts::PI * x).sin() * (8.0 * std::f64::consts::PI * y).sin()).tanh();
    let edge = 1.5 / 256.0;
    let r = ((x - 0.5).powi(2) + (y - 0.5).powi(2)).sqrt();
    let ring = soft_step(0.035 - (r - 0.2).abs(), edge);
    let bar = soft_step(0.03 - (x - y).abs(), edge) * soft_step(0.3 - (x + y - 1.0).abs(), edge);
    let g = ring.max(bar);
    std::array::from_fn(|c| {
        let base = A[c] + s * (B[c] - A[c]);
        base + g * (GLYPH[c] - base)
    })
}

fn facing(position: Vec3, scale: f64, opacity: f64, sh_degree: u32) -> TexturedGaussian {
    TexturedGaussian {
        position,
        rotation: Quaternion::identity(),
        scale: [scale, scale],
        opacity_logit: logit(opacity),
        sh_residual: vec![0.0; sh::residual_len(sh_degree)],
        appearance: Appearance::Untextured { dc: [0.0; 3] },
    }
}

/// Grid layout covering `[-half, half]^2`: centers and a scale that keeps the
/// union opacity near one inside the square.
pub fn grid_layout(count: usize, half: f64) -> Result<(Vec<Vec3>, f64)> {
    let n = grid_side(count).ok_or_else(|| Error::InvalidArgument("grid count must be a perfect square".into()))?;
    let step = 2.0 * half / n as f64;
    let mut centers = Vec::with_capacity(count);
    for j in 0..n {
        for i in 0..n {
            centers.push(Vec3::new(-half + step * (i as f64 + 0.5), -half + step * (j as f64 + 0.5), 0.0));
        }
    }
    Ok((centers, 0.8 * step))
}

/// Textures `scene` from [`pattern`] at every texel center.
fn texture_from_pattern(scene: &mut Scene, budget: usize) -> Result<()> {
    let (plan, _) = plan_textures_nearest(&scene.scales(), budget)?;
    init_from_sh0(scene, &plan)?;
    crate::editing::retexture(scene, pattern, false)
}

/// Cameras on an arc around the plane normal, jittered by `seed`.
pub fn arc_cameras(params: &SyntheticParams, seed: u64) -> Vec<Camera> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_ca3e);
    let n = params.view_count;
    (0..n)
        .map(|i| {
            let f = if n == 1 { 0.5 } else { i as f64 / (n - 1) as f64 };
            let azimuth = params.arc * (2.0 * f - 1.0) + rng.random_range(-0.02..0.02);
            let elevation = 0.25 * params.arc * (std::f64::consts::PI * 2.0 * f).sin() + rng.random_range(-0.02..0.02);
            let d = params.distance;
            let eye = Vec3::new(
                (d * azimuth.sin() * elevation.cos()) as f32 as f64,
                (d * elevation.sin()) as f32 as f64,
                (d * azimuth.cos() * elevation.cos()) as f32 as f64,
            );
            let mut cam = Camera::look_at(eye, Vec3::zeros(), Vec3::new(0.0, -1.0, 0.0), params.fov_x, params.width, params.height);
            cam.near = 0.01;
            cam.far = 2.0 * d;
            cam
        })
        .collect()
}

/// Builds the ground-truth scene for `params`, renders every camera and
/// splits the views into training and held-out sets.
pub fn make_synthetic(params: &SyntheticParams, seed: u64) -> Result<(Scene, Dataset)> {
    params.validate()?;
    let deg = params.sh_degree;
    let prims = match params.kind {
        SyntheticKind::Plane => vec![facing(Vec3::zeros(), 1.0, SURFACE_OPACITY, deg)],
        SyntheticKind::Grid => {
            let (centers, s) = grid_layout(params.primitive_count, 0.8 * PATTERN_EXTENT)?;
            centers.into_iter().map(|c| facing(c, s, SURFACE_OPACITY, deg)).collect()
        }
        SyntheticKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..params.primitive_count)
                .map(|_| {
                    let mut g = facing(
                        Vec3::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5), rng.random_range(-0.5..0.5)),
                        1.0,
                        rng.random_range(0.2..0.95),
                        deg,
                    );
                    g.scale = [rng.random_range(0.1..0.5), rng.random_range(0.1..0.5)];
                    let axis = nalgebra::Unit::new_normalize(Vec3::new(
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0) + 3.0,
                    ));
                    g.rotation = *UnitQuaternion::from_axis_angle(&axis, rng.random_range(-0.8..0.8)).quaternion();
                    g.sh_residual.iter_mut().for_each(|c| *c = rng.random_range(-0.1..0.1));
                    g
                })
                .collect()
        }
    };
    let mut scene = Scene::untextured(prims, deg, params.background)?;
    round_to_f32(&mut scene);
    texture_from_pattern(&mut scene, params.texels)?;
    round_to_f32(&mut scene);
    scene.validate()?;

    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, camera) in arc_cameras(params, seed).into_iter().enumerate() {
        let image = render_color(&scene, &camera);
        let view = PosedImage {
            name: format!("r_{i}"),
            camera,
            image,
        };
        if params.heldout_every > 0 && i % params.heldout_every == params.heldout_every / 2 {
            test.push(view);
        } else {
            train.push(view);
        }
    }
    Ok((
        scene,
        Dataset {
            camera_angle_x: params.fov_x,
            train,
            test,
        },
    ))
}

/// Untextured copy of a scene: same geometry and opacity, zero SH residual,
/// degree-0 color equal to each primitive's mean texel.
pub fn untextured_copy(scene: &Scene) -> Result<Scene> {
    let prims = scene
        .primitives
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let dc = match g.appearance {
                Appearance::Untextured { dc } => dc,
                Appearance::Textured { .. } => {
                    let tex = scene.atlas.texture(i);
                    let mut mean = [0.0; 3];
                    for t in tex {
                        for c in 0..3 {
                            mean[c] += t[c];
                        }
                    }
                    mean.map(|m| ((m / tex.len() as f64 - 0.5) / SH_C0) as f32 as f64)
                }
            };
            TexturedGaussian {
                sh_residual: vec![0.0; g.sh_residual.len()],
                appearance: Appearance::Untextured { dc },
                ..g.clone()
            }
        })
        .collect();
    Scene::untextured(prims, scene.sh_degree, scene.background)
}

/// Untextured `n x n` grid over `[-half, half]^2` on `z = 0`, colored from
/// the pixel each center projects to in the first view that sees it.
pub fn coarse_init(views: &[PosedImage], count: usize, half: f64, sh_degree: u32, background: [f64; 3]) -> Result<Scene> {
    if views.is_empty() {
        return Err(Error::InvalidArgument("coarse init needs at least one view".into()));
    }
    let (centers, s) = grid_layout(count, half)?;
    let prims = centers
        .into_iter()
        .map(|c| {
            let color = views
                .iter()
                .find_map(|v| pixel_at(&v.camera, &v.image, &c))
                .unwrap_or([0.5; 3]);
            let mut g = facing(c, s, SURFACE_OPACITY, sh_degree);
            g.opacity_logit = g.opacity_logit as f32 as f64;
            g.scale = g.scale.map(|x| x as f32 as f64);
            g.appearance = Appearance::Untextured {
                dc: color.map(|v| ((v - 0.5) / SH_C0) as f32 as f64),
            };
            g
        })
        .collect();
    Scene::untextured(prims, sh_degree, background)
}

fn pixel_at(camera: &Camera, image: &Image, p: &Vec3) -> Option<[f64; 3]> {
    let c = camera.to_camera(p);
    if c.z <= camera.near {
        return None;
    }
    let (u, v) = camera.project_camera(&c);
    if !(u >= 0.0 && v >= 0.0 && u < image.width as f64 && v < image.height as f64) {
        return None;
    }
    Some(image.get(u as usize, v as usize))
}
