use texsplat::image::Image;
use texsplat::loss::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Image {
    Image::from_fn(w, h, |_, _| [rng.random(), rng.random(), rng.random()])
}

#[test]
fn identical_images_have_zero_loss() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = random_image(&mut rng, 13, 9);
    let r = loss(&a, &a).unwrap();
    assert_eq!(r.l1, 0.0);
    assert!(r.dssim.abs() < 1e-15);
    assert!(r.total.abs() < 1e-15);
}

#[test]
fn constant_offset_l1() {
    let a = Image::filled(8, 8, [0.3, 0.4, 0.5]);
    let b = Image::filled(8, 8, [0.4, 0.5, 0.6]);
    let r = loss(&a, &b).unwrap();
    assert!((r.l1 - 0.1).abs() < 1e-12);
    assert!((r.total - (0.8 * r.l1 + 0.2 * r.dssim)).abs() < 1e-12);
}

#[test]
fn dimension_mismatch() {
    assert!(loss(&Image::new(3, 3), &Image::new(3, 4)).is_err());
}

#[test]
fn window_is_normalized_and_symmetric() {
    let w = gaussian_window();
    assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    for i in 0..5 {
        assert_eq!(w[i], w[10 - i]);
    }
}

#[test]
fn pixel_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let a = random_image(&mut rng, 12, 10);
    let b = random_image(&mut rng, 12, 10);
    let (_, grad) = loss_with_grad(&a, &b, LAMBDA_DSSIM).unwrap();
    let h = 1e-6;
    for &(p, c) in &[(0usize, 0usize), (17, 1), (55, 2), (119, 0), (64, 1)] {
        let mut plus = a.clone();
        plus.data[p][c] += h;
        let mut minus = a.clone();
        minus.data[p][c] -= h;
        let fd = (loss(&plus, &b).unwrap().total - loss(&minus, &b).unwrap().total) / (2.0 * h);
        assert!((fd - grad[p][c]).abs() < 1e-7 * fd.abs().max(1e-3), "{fd} vs {}", grad[p][c]);
    }
}
