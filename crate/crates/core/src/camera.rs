use nalgebra::{Matrix3, Matrix4};

use crate::error::{Error, Result};
use crate::geometry::{Ray, Vec3};

/// Pinhole camera. Camera space looks down `+z` with `+y` pointing down the
/// image; `camera_to_world` maps camera space to world space.
#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    pub camera_to_world: Matrix4<f64>,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    pub near: f64,
    pub far: f64,
}

pub const DEFAULT_NEAR: f64 = 0.01;
pub const DEFAULT_FAR: f64 = 100.0;

/// Flips a camera-to-world matrix between the "looks down -z, y up" and the
/// "looks down +z, y down" conventions (the flip is its own inverse).
pub fn flip_yz(m: &Matrix4<f64>) -> Matrix4<f64> {
    m * Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, -1.0, -1.0, 1.0))
}

impl Camera {
    /// Camera from a horizontal field of view, centered principal point.
    pub fn from_fov(camera_to_world: Matrix4<f64>, fov_x: f64, width: usize, height: usize) -> Self {
        let f = 0.5 * width as f64 / (0.5 * fov_x).tan();
        Camera {
            camera_to_world,
            fx: f,
            fy: f,
            cx: 0.5 * width as f64,
            cy: 0.5 * height as f64,
            width,
            height,
            near: DEFAULT_NEAR,
            far: DEFAULT_FAR,
        }
    }

    /// Camera at `eye` looking at `target`, with `up` roughly the image up direction.
    pub fn look_at(eye: Vec3, target: Vec3, up: Vec3, fov_x: f64, width: usize, height: usize) -> Self {
        let forward = (target - eye).normalize();
        let right = forward.cross(&up).normalize();
        let down = forward.cross(&right);
        let r = Matrix3::from_columns(&[right, down, forward]);
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&eye);
        Camera::from_fov(m, fov_x, width, height)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(Error::InvalidArgument("camera focal lengths must be positive".into()));
        }
        if !(self.near > 0.0 && self.near < self.far) {
            return Err(Error::InvalidArgument("camera needs 0 < near < far".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidArgument("camera image size is empty".into()));
        }
        Ok(())
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        self.camera_to_world.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn center(&self) -> Vec3 {
        self.camera_to_world.fixed_view::<3, 1>(0, 3).into_owned()
    }

    /// Camera-space coordinates of a world point.
    pub fn to_camera(&self, x: &Vec3) -> Vec3 {
        self.rotation().transpose() * (x - self.center())
    }

    /// Ray through the center of pixel `(px, py)`.
    pub fn pixel_ray(&self, px: usize, py: usize) -> Ray {
        let d = Vec3::new(
            (px as f64 + 0.5 - self.cx) / self.fx,
            (py as f64 + 0.5 - self.cy) / self.fy,
            1.0,
        );
        Ray::new(self.center(), self.rotation() * d)
    }

    /// Pixel coordinates of a camera-space point in front of the camera.
    pub fn project_camera(&self, p: &Vec3) -> (f64, f64) {
        (self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy)
    }

    /// Depth normalized to `[0, 1]` over `[near, far]`.
    pub fn normalize_depth(&self, t: f64) -> f64 {
        (t - self.near) / (self.far - self.near)
    }
}
