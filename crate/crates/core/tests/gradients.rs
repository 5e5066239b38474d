mod common;

use common::{front_camera, random_scene, rng, RandomSceneSpec};
use texsplat::atlas::{init_from_sh0, plan_for_texel_size};
use texsplat::backward::{backward, backward_weighted, GradientBuffer};
use texsplat::dataset::PosedImage;
use texsplat::error::Error;
use texsplat::geometry::{logit, Appearance, TexturedGaussian, Vec3};
use texsplat::image::Image;
use texsplat::optimize::{optimize, OptimizeConfig};
use texsplat::render::render;
use texsplat::scene::Scene;

/// One primitive facing the camera with a single texel.
fn one_texel_scene(texel: [f64; 3], opacity: f64) -> Scene {
    let g = TexturedGaussian {
        position: Vec3::new(0.0, 0.0, 3.0),
        rotation: nalgebra::Quaternion::identity(),
        scale: [0.4, 0.4],
        opacity_logit: logit(opacity),
        sh_residual: Vec::new(),
        appearance: Appearance::Untextured { dc: [0.0; 3] },
    };
    let mut scene = Scene::untextured(vec![g], 0, [0.2, 0.3, 0.4]).unwrap();
    // a texel wider than the whole footprint leaves a 1x1 map
    let plan = plan_for_texel_size(&scene.scales(), 10.0).unwrap();
    init_from_sh0(&mut scene, &plan).unwrap();
    scene.atlas.texels[0] = texel;
    scene
}

#[test]
fn pure_l1_texel_gradient_is_alpha_weighted_sign() {
    let scene = one_texel_scene([0.7, 0.1, 0.5], 0.8);
    let cam = front_camera(12, 0.6);
    let out = render(&scene, &cam);
    let target = Image::from_fn(12, 12, |x, y| if (x + y) % 2 == 0 { [0.0; 3] } else { [1.0; 3] });
    let mut grads = GradientBuffer::for_scene(&scene);
    backward_weighted(&scene, &cam, &target, 0.0, &mut grads).unwrap();

    // a 1x1 texture has bilinear weight 1 everywhere, so dC/dtexel = alpha
    let n = (3 * 12 * 12) as f64;
    let mut expected = [0.0; 3];
    for (i, (c, t)) in out.color.data.iter().zip(&target.data).enumerate() {
        for k in 0..3 {
            let sign = (c[k] - t[k]).signum();
            expected[k] += out.alpha[i] * sign / n;
        }
    }
    for k in 0..3 {
        assert!((grads.d_texels[0][k] - expected[k]).abs() < 1e-12, "{k}: {:?} vs {expected:?}", grads.d_texels[0]);
    }
}

#[test]
fn gradients_accumulate_across_calls() {
    let scene = random_scene(
        &mut rng(1),
        &RandomSceneSpec {
            count: 5,
            sh_degree: 1,
            opacity: (0.1, 0.9),
            scale: (0.2, 0.5),
            depth: (2.5, 4.0),
            spread: 0.2,
            texels: 400,
        },
    );
    let cam = front_camera(16, 0.9);
    let target = Image::filled(16, 16, [0.5; 3]);
    let mut once = GradientBuffer::for_scene(&scene);
    backward(&scene, &cam, &target, &mut once).unwrap();
    let mut twice = GradientBuffer::for_scene(&scene);
    backward(&scene, &cam, &target, &mut twice).unwrap();
    backward(&scene, &cam, &target, &mut twice).unwrap();
    for (a, b) in once.d_texels.iter().zip(&twice.d_texels) {
        for k in 0..3 {
            assert!((2.0 * a[k] - b[k]).abs() <= 1e-12 * (1.0 + b[k].abs()));
        }
    }
    assert!(once.d_opacity.iter().any(|&d| d != 0.0));
}

#[test]
fn primitive_out_of_view_gets_no_gradient() {
    let mut scene = one_texel_scene([0.3; 3], 0.9);
    scene.primitives[0].position = Vec3::new(0.0, 0.0, -3.0);
    let cam = front_camera(8, 0.6);
    let mut grads = GradientBuffer::for_scene(&scene);
    let report = backward(&scene, &cam, &Image::filled(8, 8, [0.0; 3]), &mut grads).unwrap();
    assert!(report.total > 0.0);
    assert_eq!(grads.d_texels[0], [0.0; 3]);
    assert_eq!(grads.d_opacity[0], 0.0);
}

#[test]
fn nan_target_aborts_and_restores_the_scene() {
    let mut scene = one_texel_scene([0.3, 0.6, 0.9], 0.7);
    let before = scene.clone();
    let cam = front_camera(8, 0.6);
    let mut image = Image::filled(8, 8, [0.5; 3]);
    image.data[10] = [f64::NAN; 3];
    let train = vec![PosedImage { name: "nan".into(), camera: cam, image }];
    let failure = optimize(&mut scene, &train, &[], &OptimizeConfig::new(5, 0, 0)).unwrap_err();
    assert!(matches!(failure.error, Error::NonFiniteLoss { iteration: 1 }));
    assert!(failure.log.rows.is_empty());
    assert_eq!(scene, before);
}

#[test]
fn optimizing_towards_a_solid_color_converges() {
    let mut scene = one_texel_scene([0.5; 3], 0.99);
    // narrow enough that every pixel sees nearly the peak alpha
    let cam = front_camera(8, 0.05);
    let want = [0.9, 0.2, 0.4];
    let train = vec![PosedImage { name: "v".into(), camera: cam.clone(), image: Image::filled(8, 8, want) }];
    let mut config = OptimizeConfig::new(300, 0, 0);
    config.reinit_every = 0;
    // Adam moves a parameter by at most lr per step
    config.learning_rates.texels = 1e-2;
    let log = optimize(&mut scene, &train, &[], &config).unwrap();
    assert_eq!(log.rows.len(), 300);
    assert!(log.rows.last().unwrap().total < log.rows[0].total);
    let center = render(&scene, &cam).color.get(4, 4);
    for k in 0..3 {
        assert!((center[k] - want[k]).abs() < 0.02, "{center:?}");
    }
}
