//! Posed image sets in the Blender-synthetic layout: a directory with
//! `transforms_train.json` and `transforms_test.json`, each holding
//! `camera_angle_x` and `frames[].{file_path, transform_matrix}`.
//!
//! Manifest transforms use the "looks down -z, y up" camera convention and
//! are flipped once at load time.

use std::path::{Path, PathBuf};

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::camera::{flip_yz, Camera, DEFAULT_FAR, DEFAULT_NEAR};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::imageio::{read_rgba, write_png};

/// How image alpha is resolved into the RGB targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackgroundPolicy {
    /// Composite over white.
    White,
    /// Composite over black.
    Black,
    /// Keep the stored RGB and ignore alpha.
    FromAlpha,
}

impl BackgroundPolicy {
    pub fn color(self) -> Option<[f64; 3]> {
        match self {
            BackgroundPolicy::White => Some([1.0; 3]),
            BackgroundPolicy::Black => Some([0.0; 3]),
            BackgroundPolicy::FromAlpha => None,
        }
    }
}

impl std::str::FromStr for BackgroundPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "white" => Ok(BackgroundPolicy::White),
            "black" => Ok(BackgroundPolicy::Black),
            "from-alpha" => Ok(BackgroundPolicy::FromAlpha),
            other => Err(Error::InvalidArgument(format!("unknown background policy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFrame {
    pub file_path: String,
    pub transform_matrix: [[f64; 4]; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub camera_angle_x: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub near: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub far: Option<f64>,
    pub frames: Vec<ManifestFrame>,
}

impl ManifestFrame {
    /// Camera-to-world in the internal convention.
    pub fn camera_to_world(&self) -> Matrix4<f64> {
        let rows: Vec<f64> = self.transform_matrix.iter().flatten().copied().collect();
        flip_yz(&Matrix4::from_row_slice(&rows))
    }
}

pub fn parse_manifest(json: &str) -> Result<Manifest> {
    let m: Manifest = serde_json::from_str(json)?;
    let fov = m.camera_angle_x;
    if !(fov > 0.0 && fov < std::f64::consts::PI) {
        return Err(Error::Dataset(format!("camera_angle_x {fov} outside (0, pi)")));
    }
    let near = m.near.unwrap_or(DEFAULT_NEAR);
    let far = m.far.unwrap_or(DEFAULT_FAR);
    if !(near > 0.0 && near < far && far.is_finite()) {
        return Err(Error::Dataset(format!("need 0 < near < far, got {near}, {far}")));
    }
    if m.frames.is_empty() {
        return Err(Error::Dataset("manifest has no frames".into()));
    }
    for (i, f) in m.frames.iter().enumerate() {
        if f.transform_matrix.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Dataset(format!("frame {i}: non-finite transform")));
        }
        let rot = f.camera_to_world().fixed_view::<3, 3>(0, 0).into_owned();
        if ((rot.transpose() * rot) - nalgebra::Matrix3::identity()).abs().max() > 1e-4 {
            return Err(Error::Dataset(format!("frame {i}: transform rotation is not orthonormal")));
        }
    }
    Ok(m)
}

impl Manifest {
    /// Camera for frame `i` given the image size.
    pub fn camera(&self, i: usize, width: usize, height: usize) -> Camera {
        let mut cam = Camera::from_fov(self.frames[i].camera_to_world(), self.camera_angle_x, width, height);
        cam.near = self.near.unwrap_or(DEFAULT_NEAR);
        cam.far = self.far.unwrap_or(DEFAULT_FAR);
        cam
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosedImage {
    pub name: String,
    pub camera: Camera,
    pub image: Image,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub camera_angle_x: f64,
    pub train: Vec<PosedImage>,
    pub test: Vec<PosedImage>,
}

fn image_path(base: &Path, file_path: &str) -> PathBuf {
    let mut p = base.join(file_path);
    if p.extension().is_none() {
        p.set_extension("png");
    }
    p
}

/// Loads one manifest and its images, in manifest order.
pub fn load_split(json_path: impl AsRef<Path>, policy: BackgroundPolicy) -> Result<(Manifest, Vec<PosedImage>)> {
    let json_path = json_path.as_ref();
    let manifest = parse_manifest(&std::fs::read_to_string(json_path)?)?;
    let base = json_path.parent().unwrap_or(Path::new("."));
    let mut views = Vec::with_capacity(manifest.frames.len());
    let mut size = None;
    for (i, f) in manifest.frames.iter().enumerate() {
        let rgba = read_rgba(image_path(base, &f.file_path))?;
        let dims = (rgba.width, rgba.height);
        if *size.get_or_insert(dims) != dims {
            return Err(Error::Dataset(format!(
                "frame {i} ({}) is {}x{}, earlier frames are {}x{}",
                f.file_path,
                dims.0,
                dims.1,
                size.unwrap().0,
                size.unwrap().1
            )));
        }
        let image = Image {
            width: rgba.width,
            height: rgba.height,
            data: rgba
                .data
                .iter()
                .map(|&[r, g, b, a]| match policy.color() {
                    Some(bg) => [r * a + bg[0] * (1.0 - a), g * a + bg[1] * (1.0 - a), b * a + bg[2] * (1.0 - a)],
                    None => [r, g, b],
                })
                .collect(),
        };
        views.push(PosedImage {
            name: f.file_path.clone(),
            camera: manifest.camera(i, rgba.width, rgba.height),
            image,
        });
    }
    Ok((manifest, views))
}

/// Loads `transforms_train.json` and, if present, `transforms_test.json`.
pub fn load_dataset(dir: impl AsRef<Path>, policy: BackgroundPolicy) -> Result<Dataset> {
    let dir = dir.as_ref();
    let train_path = dir.join("transforms_train.json");
    if !train_path.exists() {
        return Err(Error::Dataset(format!("{} not found", train_path.display())));
    }
    let (manifest, train) = load_split(&train_path, policy)?;
    let test_path = dir.join("transforms_test.json");
    let test = if test_path.exists() {
        let (tm, test) = load_split(&test_path, policy)?;
        if tm.camera_angle_x != manifest.camera_angle_x {
            return Err(Error::Dataset("train and test field of view differ".into()));
        }
        test
    } else {
        Vec::new()
    };
    Ok(Dataset {
        camera_angle_x: manifest.camera_angle_x,
        train,
        test,
    })
}

fn manifest_for(views: &[PosedImage], split: &str, camera_angle_x: f64) -> Manifest {
    Manifest {
        camera_angle_x,
        near: views.first().map(|v| v.camera.near),
        far: views.first().map(|v| v.camera.far),
        frames: views
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let m = flip_yz(&v.camera.camera_to_world);
                ManifestFrame {
                    file_path: format!("./{split}/r_{i}"),
                    transform_matrix: std::array::from_fn(|r| std::array::from_fn(|c| m[(r, c)])),
                }
            })
            .collect(),
    }
}

/// Writes a dataset as 8-bit PNGs plus manifests.
pub fn save_dataset(dir: impl AsRef<Path>, ds: &Dataset) -> Result<()> {
    let dir = dir.as_ref();
    for (split, views) in [("train", &ds.train), ("test", &ds.test)] {
        if views.is_empty() {
            continue;
        }
        std::fs::create_dir_all(dir.join(split))?;
        let manifest = manifest_for(views, split, ds.camera_angle_x);
        for (f, v) in manifest.frames.iter().zip(views) {
            write_png(image_path(dir, &f.file_path), &v.image)?;
        }
        std::fs::write(
            dir.join(format!("transforms_{split}.json")),
            serde_json::to_string_pretty(&manifest)?,
        )?;
    }
    Ok(())
}

/// A single camera stored as JSON, transform in the manifest convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraFile {
    pub transform_matrix: [[f64; 4]; 4],
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    pub near: f64,
    pub far: f64,
}

impl CameraFile {
    pub fn from_camera(c: &Camera) -> Self {
        let m = flip_yz(&c.camera_to_world);
        CameraFile {
            transform_matrix: std::array::from_fn(|r| std::array::from_fn(|k| m[(r, k)])),
            fx: c.fx,
            fy: c.fy,
            cx: c.cx,
            cy: c.cy,
            width: c.width,
            height: c.height,
            near: c.near,
            far: c.far,
        }
    }

    pub fn to_camera(&self) -> Result<Camera> {
        let rows: Vec<f64> = self.transform_matrix.iter().flatten().copied().collect();
        let cam = Camera {
            camera_to_world: flip_yz(&Matrix4::from_row_slice(&rows)),
            fx: self.fx,
            fy: self.fy,
            cx: self.cx,
            cy: self.cy,
            width: self.width,
            height: self.height,
            near: self.near,
            far: self.far,
        };
        cam.validate()?;
        Ok(cam)
    }
}

pub fn load_camera(path: impl AsRef<Path>) -> Result<Camera> {
    let f: CameraFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    f.to_camera()
}

pub fn save_camera(path: impl AsRef<Path>, camera: &Camera) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(&CameraFile::from_camera(camera))?)?;
    Ok(())
}
