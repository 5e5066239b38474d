mod common;

use common::{front_camera, random_scene, rng, RandomSceneSpec};
use nalgebra::Quaternion;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use texsplat::camera::Camera;
use texsplat::geometry::{logit, Appearance, TexturedGaussian, Vec3};
use texsplat::image::Image;
use texsplat::loss::{gaussian_window, ssim_value, SSIM_C1, SSIM_C2, SSIM_WINDOW};
use texsplat::render::render;
use texsplat::scene::Scene;
use texsplat::synthetic::grid_layout;

fn spec(texels: usize, sh_degree: u32) -> RandomSceneSpec {
    RandomSceneSpec {
        count: 12,
        sh_degree,
        opacity: (0.02, 0.99),
        scale: (0.1, 0.6),
        depth: (1.5, 5.0),
        spread: 0.3,
        texels,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn colors_stay_in_the_hull_of_texels_and_background(seed in 0u64..10_000) {
        // degree 0 and texels in [0, 1]: every pixel is a convex combination
        let scene = random_scene(&mut rng(seed), &spec(800, 0));
        let out = render(&scene, &front_camera(20, 1.0));
        for (c, a) in out.color.data.iter().zip(&out.alpha) {
            prop_assert!((0.0..=1.0).contains(a));
            for k in 0..3 {
                prop_assert!(c[k] >= -1e-12 && c[k] <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn primitive_order_in_memory_does_not_matter(seed in 0u64..10_000) {
        let scene = random_scene(&mut rng(seed), &spec(0, 1));
        let mut shuffled = scene.clone();
        shuffled.primitives.shuffle(&mut rng(seed + 1));
        let cam = front_camera(16, 1.0);
        prop_assert_eq!(render(&scene, &cam).color, render(&shuffled, &cam).color);
    }

    #[test]
    fn median_depth_exists_only_past_half_opacity(seed in 0u64..10_000) {
        let scene = random_scene(&mut rng(seed), &spec(0, 0));
        let out = render(&scene, &front_camera(16, 1.0));
        for (d, a) in out.median_depth.iter().zip(&out.alpha) {
            if d.is_finite() {
                prop_assert!(*a >= 0.5);
            } else {
                prop_assert!(*a < 0.5 + 1e-12);
            }
        }
    }
}

#[test]
fn grid_layout_is_nearly_opaque_inside_its_square() {
    let (centers, s) = grid_layout(64, 1.2).unwrap();
    let prims = centers
        .into_iter()
        .map(|position| TexturedGaussian {
            position,
            rotation: Quaternion::identity(),
            scale: [s, s],
            opacity_logit: logit(0.99),
            sh_residual: vec![],
            appearance: Appearance::Untextured { dc: [0.0; 3] },
        })
        .collect();
    let scene = Scene::untextured(prims, 0, [0.0; 3]).unwrap();
    let cam = Camera::look_at(Vec3::new(0.0, 0.0, 4.0), Vec3::zeros(), Vec3::y(), 2.0 * 0.25f64.atan(), 64, 64);
    // the view spans [-1, 1]^2 on the grid plane, inside [-1.2, 1.2]^2
    let out = render(&scene, &cam);
    let worst = out.alpha.iter().copied().fold(1.0, f64::min);
    assert!(worst >= 0.99, "{worst}");
}

/// Direct windowed SSIM with zero padding, one pixel at a time.
fn ssim_oracle(a: &Image, b: &Image) -> f64 {
    let w = gaussian_window();
    let r = (SSIM_WINDOW / 2) as isize;
    let (width, height) = (a.width as isize, a.height as isize);
    let mut total = 0.0;
    for c in 0..3 {
        for y in 0..height {
            for x in 0..width {
                let (mut mx, mut my, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for dy in -r..=r {
                    for dx in -r..=r {
                        let (sx, sy) = (x + dx, y + dy);
                        if sx < 0 || sy < 0 || sx >= width || sy >= height {
                            continue;
                        }
                        let k = w[(dx + r) as usize] * w[(dy + r) as usize];
                        let p = a.get(sx as usize, sy as usize)[c];
                        let q = b.get(sx as usize, sy as usize)[c];
                        mx += k * p;
                        my += k * q;
                        sxx += k * p * p;
                        syy += k * q * q;
                        sxy += k * p * q;
                    }
                }
                let (vx, vy, cov) = (sxx - mx * mx, syy - my * my, sxy - mx * my);
                total += (2.0 * mx * my + SSIM_C1) * (2.0 * cov + SSIM_C2)
                    / ((mx * mx + my * my + SSIM_C1) * (vx + vy + SSIM_C2));
            }
        }
    }
    total / (3 * a.width * a.height) as f64
}

#[test]
fn ssim_matches_direct_evaluation() {
    let mut g = rng(12);
    use rand::Rng;
    for (w, h) in [(5, 7), (23, 17), (40, 3)] {
        let a = Image::from_fn(w, h, |_, _| [g.random(), g.random(), g.random()]);
        let b = Image::from_fn(w, h, |x, y| {
            let p = a.get(x, y);
            [p[0] * 0.7 + 0.1, g.random(), p[2]]
        });
        let (got, want) = (ssim_value(&a, &b).unwrap(), ssim_oracle(&a, &b));
        assert!((got - want).abs() < 1e-12, "{w}x{h}: {got} vs {want}");
    }
    let a = Image::filled(9, 9, [0.3; 3]);
    assert!((ssim_value(&a, &a).unwrap() - 1.0).abs() < 1e-12);
}
