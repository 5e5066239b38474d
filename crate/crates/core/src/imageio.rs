//! PNG reading and writing. Colors are linear values in `[0, 1]`; output is
//! clamped and rounded to 8 bits.

use std::path::Path;

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::image::{quantize, Image, RgbaImage};

fn image_err(path: &Path, source: image::ImageError) -> Error {
    Error::Image {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_rgba(path: impl AsRef<Path>) -> Result<RgbaImage> {
    let path = path.as_ref();
    let img = image::open(path).map_err(|e| image_err(path, e))?.to_rgba8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let px = img.into_raw();
    Ok(RgbaImage::from_fn(w, h, |x, y| {
        let i = 4 * (y * w + x);
        [0, 1, 2, 3].map(|c| px[i + c] as f64 / 255.0)
    }))
}

pub fn write_png(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    let path = path.as_ref();
    let raw: Vec<u8> = img.data.iter().flat_map(|p| p.map(quantize)).collect();
    image::save_buffer(path, &raw, img.width as u32, img.height as u32, image::ExtendedColorType::Rgb8)
        .map_err(|e| image_err(path, e))
}

pub fn write_rgba_png(path: impl AsRef<Path>, img: &RgbaImage) -> Result<()> {
    let path = path.as_ref();
    let raw: Vec<u8> = img.data.iter().flat_map(|p| p.map(quantize)).collect();
    image::save_buffer(path, &raw, img.width as u32, img.height as u32, image::ExtendedColorType::Rgba8)
        .map_err(|e| image_err(path, e))
}

/// 16-bit grayscale depth: `near` maps to 0 and `far` (or no surface) to 65535.
pub fn write_depth_png(path: impl AsRef<Path>, depth: &[f64], camera: &Camera) -> Result<()> {
    let path = path.as_ref();
    let buf: image::ImageBuffer<image::Luma<u16>, Vec<u16>> = image::ImageBuffer::from_fn(
        camera.width as u32,
        camera.height as u32,
        |x, y| {
            let t = depth[y as usize * camera.width + x as usize];
            let n = if t.is_finite() { camera.normalize_depth(t).clamp(0.0, 1.0) } else { 1.0 };
            image::Luma([(n * 65535.0).round() as u16])
        },
    );
    buf.save(path).map_err(|e| image_err(path, e))
}
