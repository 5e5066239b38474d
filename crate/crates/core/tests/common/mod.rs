#![allow(dead_code)]

use nalgebra::{Matrix4, Quaternion, Unit, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use texsplat::atlas::{init_from_sh0, plan_textures_nearest};
use texsplat::camera::Camera;
use texsplat::geometry::{logit, Appearance, TexturedGaussian, Vec3};
use texsplat::image::Image;
use texsplat::scene::Scene;
use texsplat::sh;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Camera at the origin looking down +z.
pub fn front_camera(size: usize, fov: f64) -> Camera {
    Camera::from_fov(Matrix4::identity(), fov, size, size)
}

pub fn random_rotation(rng: &mut ChaCha8Rng, max_tilt: f64) -> Quaternion<f64> {
    let axis = Unit::new_normalize(Vec3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    ));
    let tilt = UnitQuaternion::from_axis_angle(&axis, rng.random_range(-max_tilt..max_tilt));
    let spin = UnitQuaternion::from_axis_angle(&Vec3::z_axis(), rng.random_range(-3.0..3.0));
    *(tilt * spin).quaternion()
}

pub struct RandomSceneSpec {
    pub count: usize,
    pub sh_degree: u32,
    pub opacity: (f64, f64),
    pub scale: (f64, f64),
    pub depth: (f64, f64),
    pub spread: f64,
    /// Approximate texel budget; 0 keeps the scene untextured.
    pub texels: usize,
}

/// Random primitives in front of [`front_camera`], roughly facing it.
pub fn random_scene(rng: &mut ChaCha8Rng, spec: &RandomSceneSpec) -> Scene {
    let prims = (0..spec.count)
        .map(|_| {
            let z = rng.random_range(spec.depth.0..spec.depth.1);
            TexturedGaussian {
                position: Vec3::new(
                    rng.random_range(-spec.spread..spec.spread) * z,
                    rng.random_range(-spec.spread..spec.spread) * z,
                    z,
                ),
                rotation: random_rotation(rng, 0.9),
                scale: [rng.random_range(spec.scale.0..spec.scale.1), rng.random_range(spec.scale.0..spec.scale.1)],
                opacity_logit: logit(rng.random_range(spec.opacity.0..spec.opacity.1)),
                sh_residual: (0..sh::residual_len(spec.sh_degree)).map(|_| rng.random_range(-0.15..0.15)).collect(),
                appearance: Appearance::Untextured {
                    dc: [rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)],
                },
            }
        })
        .collect();
    let bg = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
    let mut scene = Scene::untextured(prims, spec.sh_degree, bg).unwrap();
    if spec.texels > 0 {
        let (plan, _) = plan_textures_nearest(&scene.scales(), spec.texels).unwrap();
        init_from_sh0(&mut scene, &plan).unwrap();
        for t in &mut scene.atlas.texels {
            *t = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
        }
    }
    scene
}

pub fn max_abs_diff(a: &Image, b: &Image) -> f64 {
    a.data
        .iter()
        .zip(&b.data)
        .flat_map(|(p, q)| (0..3).map(move |c| (p[c] - q[c]).abs()))
        .fold(0.0, f64::max)
}
