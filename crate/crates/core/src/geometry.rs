//! Surfel primitives, rays and the ray-plane intersection that drives both
//! rendering and texture lookup.

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};

pub type Vec3 = Vector3<f64>;

/// Rays whose direction is this close to the surfel plane are treated as misses.
pub const PARALLEL_EPS: f64 = 1e-9;
/// Hits closer than this along the ray are discarded.
pub const T_NEAR: f64 = 1e-4;

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// How a primitive gets its base (view-independent) color.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Appearance {
    /// Imported splat that still carries its degree-0 SH coefficient per channel.
    Untextured { dc: [f64; 3] },
    /// Texture map of `width x height` texels stored in the scene atlas.
    Textured { width: u32, height: u32 },
}

impl Appearance {
    pub fn texel_count(&self) -> usize {
        match *self {
            Appearance::Untextured { .. } => 0,
            Appearance::Textured { width, height } => width as usize * height as usize,
        }
    }

    pub fn dims(&self) -> Option<(u32, u32)> {
        match *self {
            Appearance::Untextured { .. } => None,
            Appearance::Textured { width, height } => Some((width, height)),
        }
    }
}

/// One 2D Gaussian surfel with its own texture map.
///
/// The rotation is kept as the quaternion it was created or loaded from so
/// that scenes persist bit-exactly; [`TexturedGaussian::frame`] derives the
/// orthonormal tangent frame used by intersection and UV mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct TexturedGaussian {
    pub position: Vec3,
    /// `(w, x, y, z)`, unit norm within 1e-6.
    pub rotation: Quaternion<f64>,
    pub scale: [f64; 2],
    pub opacity_logit: f64,
    /// Coefficient-major SH residual, degrees `1..=L` (see [`crate::sh`]).
    pub sh_residual: Vec<f64>,
    pub appearance: Appearance,
}

/// Tangent axes `r1`, `r2` and normal `n = r3` of a primitive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub r1: Vec3,
    pub r2: Vec3,
    pub normal: Vec3,
}

impl Frame {
    pub fn from_matrix(m: &Matrix3<f64>) -> Self {
        Frame {
            r1: m.column(0).into_owned(),
            r2: m.column(1).into_owned(),
            normal: m.column(2).into_owned(),
        }
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::from_columns(&[self.r1, self.r2, self.normal])
    }
}

impl TexturedGaussian {
    pub fn frame(&self) -> Frame {
        let m = UnitQuaternion::from_quaternion(self.rotation).to_rotation_matrix();
        Frame::from_matrix(m.matrix())
    }

    pub fn opacity(&self) -> f64 {
        sigmoid(self.opacity_logit)
    }

    pub fn set_rotation_matrix(&mut self, m: &Matrix3<f64>) {
        let r = nalgebra::Rotation3::from_matrix_unchecked(*m);
        self.rotation = *UnitQuaternion::from_rotation_matrix(&r).quaternion();
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
}

impl Ray {
    /// Normalizes `direction`.
    pub fn new(origin: Vec3, direction: Vec3) -> Self {
        Ray {
            origin,
            direction: direction.normalize(),
        }
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intersection {
    pub t: f64,
    pub point: Vec3,
    pub alpha: f64,
}

/// Ray parameter of the hit with the plane through `position` with `normal`,
/// or `None` for grazing rays and hits at or behind [`T_NEAR`].
pub fn intersect_plane(ray: &Ray, position: &Vec3, normal: &Vec3) -> Option<f64> {
    let denom = normal.dot(&ray.direction);
    if denom.abs() < PARALLEL_EPS {
        return None;
    }
    let t = normal.dot(&(position - ray.origin)) / denom;
    (t > T_NEAR).then_some(t)
}

/// Gaussian falloff `exp(-q/2)` at a point on the plane, without opacity.
pub fn gaussian_weight(frame: &Frame, position: &Vec3, scale: [f64; 2], x: &Vec3) -> f64 {
    let d = x - position;
    let a = frame.r1.dot(&d) / scale[0];
    let b = frame.r2.dot(&d) / scale[1];
    (-0.5 * (a * a + b * b)).exp()
}

pub fn eval_alpha(g: &TexturedGaussian, x: &Vec3) -> f64 {
    g.opacity() * gaussian_weight(&g.frame(), &g.position, g.scale, x)
}

pub fn intersect(ray: &Ray, g: &TexturedGaussian) -> Option<Intersection> {
    let frame = g.frame();
    let t = intersect_plane(ray, &g.position, &frame.normal)?;
    let point = ray.at(t);
    let alpha = g.opacity() * gaussian_weight(&frame, &g.position, g.scale, &point);
    Some(Intersection { t, point, alpha })
}
