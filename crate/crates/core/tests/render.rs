use texsplat::camera::Camera;
use texsplat::geometry::{Appearance, Ray, Vec3};
use texsplat::scene::Scene;
use texsplat::sh::{self, SH_C0};
use texsplat::render::*;
use texsplat::atlas::{init_from_sh0, plan_textures};
use texsplat::geometry::{logit, TexturedGaussian};
use nalgebra::{Matrix4, Quaternion};

pub(crate) fn facing_prim(z: f64, dc: [f64; 3], opacity: f64, scale: f64) -> TexturedGaussian {
    TexturedGaussian {
        position: Vec3::new(0.0, 0.0, z),
        rotation: Quaternion::identity(),
        scale: [scale, scale],
        opacity_logit: logit(opacity),
        sh_residual: vec![],
        appearance: Appearance::Untextured { dc },
    }
}

fn dc_for(rgb: [f64; 3]) -> [f64; 3] {
    rgb.map(|c| (c - 0.5) / SH_C0)
}

fn camera(w: usize) -> Camera {
    Camera::from_fov(Matrix4::identity(), 0.5, w, w)
}

#[test]
fn sort_by_depth_then_index() {
    let prims = vec![
        facing_prim(2.0, [0.0; 3], 0.5, 1.0),
        facing_prim(1.0, [0.0; 3], 0.5, 1.0),
        facing_prim(1.0, [0.0; 3], 0.5, 1.0),
        facing_prim(-1.0, [0.0; 3], 0.5, 1.0),
    ];
    let scene = Scene::untextured(prims, 0, [0.0; 3]).unwrap();
    assert_eq!(sort_primitives(&scene, &camera(4)), vec![1, 2, 0]);
}

#[test]
fn opaque_red_front_surface() {
    let mut g = facing_prim(2.0, dc_for([1.0, 0.0, 0.0]), 0.5, 1.0);
    g.opacity_logit = 800.0; // sigmoid saturates to exactly 1
    let scene = Scene::untextured(vec![g], 0, [0.0; 3]).unwrap();
    let ray = Ray::new(Vec3::zeros(), Vec3::z());
    let s = composite_ray(&scene, &[0], &ray, [0.0; 3]);
    assert!((s.color[0] - 1.0).abs() < 1e-12 && s.color[1].abs() < 1e-12);
    assert_eq!(s.alpha, 1.0);
    assert_eq!(s.median_depth, 2.0);
}

#[test]
fn two_layer_composite() {
    let mut red = facing_prim(1.0, dc_for([1.0, 0.0, 0.0]), 0.5, 1.0);
    red.opacity_logit = 0.0;
    let mut blue = facing_prim(2.0, dc_for([0.0, 0.0, 1.0]), 0.5, 1.0);
    blue.opacity_logit = 800.0;
    let scene = Scene::untextured(vec![blue, red], 0, [0.0; 3]).unwrap();
    let order = sort_primitives(&scene, &camera(4));
    assert_eq!(order, vec![1, 0]);
    let s = composite_ray(&scene, &order, &Ray::new(Vec3::zeros(), Vec3::z()), [0.0; 3]);
    assert!((s.color[0] - 0.5).abs() < 1e-12);
    assert!(s.color[1].abs() < 1e-12);
    assert!((s.color[2] - 0.5).abs() < 1e-12);
}

#[test]
fn no_hits_shows_background() {
    let scene = Scene::untextured(vec![], 0, [1.0; 3]).unwrap();
    let s = composite_ray(&scene, &[], &Ray::new(Vec3::zeros(), Vec3::z()), [1.0; 3]);
    assert_eq!(s.color, [1.0; 3]);
    assert_eq!(s.alpha, 0.0);
    assert_eq!(s.median_depth, f64::INFINITY);
    let out = render(&scene, &camera(5));
    assert!(out.color.data.iter().all(|p| *p == [1.0; 3]));
}

#[test]
fn shade_texel_center_and_constant() {
    let mut g = facing_prim(1.0, [0.0; 3], 0.9, 0.5);
    g.sh_residual = vec![0.0; 9];
    let mut scene = Scene::untextured(vec![g], 1, [0.0; 3]).unwrap();
    let plan = plan_textures(&scene.scales(), 36).unwrap();
    init_from_sh0(&mut scene, &plan).unwrap();
    for (k, t) in scene.atlas.texture_mut(0).iter_mut().enumerate() {
        *t = [k as f64, 0.5, -1.0];
    }
    let g = scene.primitives[0].clone();
    let x = texsplat::atlas::uv_to_world(&g, 2, 3, scene.atlas.texel_size).unwrap();
    let (w, _) = g.appearance.dims().unwrap();
    let c = shade(&scene, 0, &x, &Vec3::z()).unwrap();
    assert_eq!(c, scene.atlas.texture(0)[(3 * w + 2) as usize]);

    scene.atlas.texels.iter_mut().for_each(|t| *t = [0.25, 0.5, 0.75]);
    scene.primitives[0].sh_residual[0] = 0.4;
    let dir = Vec3::new(0.0, 0.6, 0.8);
    let c = shade(&scene, 0, &(g.position + Vec3::new(0.1, 0.2, 0.0)), &dir).unwrap();
    let r = sh::eval_sh(&scene.primitives[0].sh_residual, [0.0, 0.6, 0.8]).unwrap();
    assert!((c[0] - (0.25 + r[0])).abs() < 1e-15);
}

#[test]
fn render_twice_is_bit_identical() {
    let prims = (0..6)
        .map(|i| {
            let mut g = facing_prim(1.0 + 0.3 * i as f64, [0.1 * i as f64, -0.2, 0.3], 0.6, 0.2);
            g.position.x = 0.05 * i as f64 - 0.1;
            g
        })
        .collect();
    let scene = Scene::untextured(prims, 0, [0.2, 0.3, 0.4]).unwrap();
    let a = render(&scene, &camera(37));
    let b = render(&scene, &camera(37));
    assert_eq!(a, b);
}

#[test]
fn tiled_render_matches_full_walk() {
    let prims = (0..12)
        .map(|i| {
            let mut g = facing_prim(1.5 + 0.1 * i as f64, [0.3 * (i % 3) as f64, 0.1, -0.4], 0.8, 0.05 + 0.01 * i as f64);
            g.position.x = 0.04 * (i as f64 - 6.0);
            g.position.y = 0.03 * ((i * 7 % 5) as f64 - 2.0);
            g
        })
        .collect();
    let scene = Scene::untextured(prims, 0, [0.0, 0.5, 1.0]).unwrap();
    let cam = camera(70);
    let out = render(&scene, &cam);
    let order = sort_primitives(&scene, &cam);
    for py in 0..cam.height {
        for px in 0..cam.width {
            let s = composite_ray(&scene, &order, &cam.pixel_ray(px, py), scene.background);
            assert_eq!(s.color, out.color.get(px, py));
            assert_eq!(s.median_depth, out.median_depth[py * cam.width + px]);
        }
    }
}
