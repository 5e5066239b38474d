use texsplat::geometry::Vec3;
use texsplat::editing::*;

#[test]
fn circles_values() {
    assert_eq!(builtin_circles(&Vec3::new(3.0, -2.0, 7.0)), [0.5, 0.0, 0.5]);
    let c = builtin_circles(&Vec3::new(0.5, 0.0, 0.0));
    assert!((c[0] - 0.5 * (0.5f64.sin() + 1.0)).abs() < 1e-15);
    assert!((c[0] - 0.7397127693021015).abs() < 1e-12);
    assert!((c[2] - 0.2602872306978985).abs() < 1e-12);
}

#[test]
fn stripes_values() {
    assert_eq!(builtin_stripes(&Vec3::zeros()), [0.5, 0.5, 0.5]);
    assert_eq!(builtin_stripes(&Vec3::new(std::f64::consts::FRAC_PI_2, 0.0, 0.0)), [1.0, 0.5, 0.5]);
}

#[test]
fn pattern_parsing() {
    assert_eq!("circles".parse::<Pattern>().unwrap(), Pattern::Circles);
    assert!("dots".parse::<Pattern>().is_err());
}
