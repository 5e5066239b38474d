//! Real spherical harmonics in the splatting convention.
//!
//! Coefficients are ordered by degree and then by order `m = -l..=l`, with
//! the Condon-Shortley phase folded into the constants. The residual form
//! used by textured primitives drops the degree-0 term; the texture takes
//! its place.

use crate::error::{Error, Result};

/// Degree-0 basis constant, `1 / (2 sqrt(pi))`.
pub const SH_C0: f64 = 0.282_094_791_773_878_14;
const SH_C1: f64 = 0.488_602_511_902_919_9;
const SH_C2: [f64; 5] = [
    1.092_548_430_592_079_2,
    -1.092_548_430_592_079_2,
    0.315_391_565_252_520_05,
    -1.092_548_430_592_079_2,
    0.546_274_215_296_039_6,
];
const SH_C3: [f64; 7] = [
    -0.590_043_589_926_643_5,
    2.890_611_442_640_554,
    -0.457_045_799_464_465_8,
    0.373_176_332_590_115_4,
    -0.457_045_799_464_465_8,
    1.445_305_721_320_277,
    -0.590_043_589_926_643_5,
];

pub const MAX_DEGREE: u32 = 3;

/// Number of basis functions `(L + 1)^2` for degree `L`.
pub fn basis_count(degree: u32) -> usize {
    ((degree + 1) * (degree + 1)) as usize
}

/// Length of a residual coefficient vector (three channels, no degree-0 term).
pub fn residual_len(degree: u32) -> usize {
    3 * (basis_count(degree) - 1)
}

/// Recovers the degree from a residual vector length.
pub fn degree_for_residual_len(len: usize) -> Result<u32> {
    (0..=MAX_DEGREE)
        .find(|&d| residual_len(d) == len)
        .ok_or(Error::ShLength(len))
}

/// Evaluates the basis functions of degrees `1..=degree` at a unit direction,
/// writing `(degree + 1)^2 - 1` values into `out`.
pub fn residual_basis(degree: u32, dir: [f64; 3], out: &mut [f64]) {
    let [x, y, z] = dir;
    if degree >= 1 {
        out[0] = -SH_C1 * y;
        out[1] = SH_C1 * z;
        out[2] = -SH_C1 * x;
    }
    if degree >= 2 {
        let (xx, yy, zz) = (x * x, y * y, z * z);
        let (xy, yz, xz) = (x * y, y * z, x * z);
        out[3] = SH_C2[0] * xy;
        out[4] = SH_C2[1] * yz;
        out[5] = SH_C2[2] * (2.0 * zz - xx - yy);
        out[6] = SH_C2[3] * xz;
        out[7] = SH_C2[4] * (xx - yy);
        if degree >= 3 {
            out[8] = SH_C3[0] * y * (3.0 * xx - yy);
            out[9] = SH_C3[1] * xy * z;
            out[10] = SH_C3[2] * y * (4.0 * zz - xx - yy);
            out[11] = SH_C3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy);
            out[12] = SH_C3[4] * x * (4.0 * zz - xx - yy);
            out[13] = SH_C3[5] * z * (xx - yy);
            out[14] = SH_C3[6] * x * (xx - 3.0 * yy);
        }
    }
}

/// View-dependent residual radiance. `coeffs` is coefficient-major: entry
/// `3 * k + c` is basis function `k + 1` for channel `c`.
pub fn eval_sh(coeffs: &[f64], dir: [f64; 3]) -> Result<[f64; 3]> {
    let degree = degree_for_residual_len(coeffs.len())?;
    Ok(eval_sh_unchecked(degree, coeffs, dir))
}

pub(crate) fn eval_sh_unchecked(degree: u32, coeffs: &[f64], dir: [f64; 3]) -> [f64; 3] {
    if degree == 0 {
        return [0.0; 3];
    }
    let mut basis = [0.0; 15];
    let n = basis_count(degree) - 1;
    residual_basis(degree, dir, &mut basis);
    let mut rgb = [0.0; 3];
    for (k, b) in basis[..n].iter().enumerate() {
        for (c, v) in rgb.iter_mut().enumerate() {
            *v += b * coeffs[3 * k + c];
        }
    }
    rgb
}
