use nalgebra::Matrix4;
use texsplat::geometry::Vec3;
use texsplat::camera::*;

#[test]
fn fov_intrinsics() {
    let cam = Camera::from_fov(Matrix4::identity(), std::f64::consts::FRAC_PI_2, 800, 800);
    assert!((cam.fx - 400.0).abs() < 1e-9);
    assert_eq!(cam.cx, 400.0);
}

#[test]
fn center_pixel_looks_forward() {
    let cam = Camera::from_fov(Matrix4::identity(), 1.0, 3, 3);
    let ray = cam.pixel_ray(1, 1);
    assert_eq!(ray.direction, Vec3::new(0.0, 0.0, 1.0));
    let blender = flip_yz(&Matrix4::identity());
    let cam = Camera::from_fov(blender, 1.0, 3, 3);
    assert_eq!(cam.pixel_ray(1, 1).direction, Vec3::new(0.0, 0.0, -1.0));
}

#[test]
fn look_at_points_at_target() {
    let cam = Camera::look_at(Vec3::new(1.0, 2.0, 3.0), Vec3::zeros(), Vec3::z(), 0.8, 5, 5);
    let ray = cam.pixel_ray(2, 2);
    assert!((ray.direction + Vec3::new(1.0, 2.0, 3.0).normalize()).norm() < 1e-12);
    let p = cam.to_camera(&Vec3::zeros());
    let (u, v) = cam.project_camera(&p);
    assert!((u - 2.5).abs() < 1e-9 && (v - 2.5).abs() < 1e-9);
}
