use texsplat::image::Image;
use texsplat::metrics::*;

#[test]
fn identical_images_cap() {
    let a = Image::filled(5, 4, [0.3, 0.2, 0.9]);
    assert_eq!(psnr(&a, &a).unwrap(), PSNR_CAP);
    assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn twenty_db_at_mse_one_hundredth() {
    // 0.1 offset is not 8-bit exact, so use values that are
    let a = Image::filled(4, 4, [0.0; 3]);
    let b = Image::filled(4, 4, [51.0 / 255.0; 3]);
    let m = mse(&a.quantized(), &b.quantized()).unwrap();
    assert!((m - 0.04).abs() < 1e-15);
    assert!((psnr(&a, &b).unwrap() - 13.979400086720377).abs() < 1e-9);
    assert!((psnr_from_mse(0.01) - 20.0).abs() < 1e-12);
}

#[test]
fn size_mismatch() {
    assert!(psnr(&Image::new(2, 2), &Image::new(2, 3)).is_err());
}
