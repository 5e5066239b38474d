//! Native scene format, little-endian throughout:
//!
//! ```text
//! magic      b"GSTX"
//! version    u32 (= 1)
//! n          u32   primitive count
//! sh_degree  u32   0..=3
//! texel_size f32
//! background f32 x 3
//! texels     u64   T_n, total texel count
//! n records:
//!   position f32 x 3, rotation f32 x 4 (w, x, y, z), scale f32 x 2,
//!   opacity_logit f32, sh_residual f32 x 3((L+1)^2 - 1),
//!   width u32, height u32, tex_offset u64,
//!   dc f32 x 3            only when width = height = 0 (untextured)
//! texel block f32 x 3 x T_n, row-major per primitive
//! ```
//!
//! Values are stored as `f32`, so a scene whose values are all exactly
//! representable in `f32` round-trips bit-exactly.

use std::path::Path;

use nalgebra::Quaternion;

use crate::atlas::TextureAtlas;
use crate::error::{Error, Result};
use crate::geometry::{Appearance, TexturedGaussian, Vec3};
use crate::scene::Scene;
use crate::sh;

pub const MAGIC: &[u8; 4] = b"GSTX";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 * 3 + 4 * 4 + 8;

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f32(&mut self, v: f64) {
        self.0.extend_from_slice(&(v as f32).to_le_bytes());
    }
}

pub fn encode_scene(scene: &Scene) -> Vec<u8> {
    let mut w = Writer(Vec::with_capacity(HEADER_LEN + scene.atlas.len() * 12 + scene.len() * 64));
    w.0.extend_from_slice(MAGIC);
    w.u32(VERSION);
    w.u32(scene.len() as u32);
    w.u32(scene.sh_degree);
    w.f32(scene.atlas.texel_size);
    scene.background.iter().for_each(|&c| w.f32(c));
    w.u64(scene.atlas.len() as u64);
    let mut offset = 0u64;
    for g in &scene.primitives {
        g.position.iter().for_each(|&c| w.f32(c));
        let q = &g.rotation;
        [q.w, q.i, q.j, q.k].iter().for_each(|&c| w.f32(c));
        g.scale.iter().for_each(|&c| w.f32(c));
        w.f32(g.opacity_logit);
        g.sh_residual.iter().for_each(|&c| w.f32(c));
        match g.appearance {
            Appearance::Textured { width, height } => {
                w.u32(width);
                w.u32(height);
                w.u64(offset);
                offset += width as u64 * height as u64;
            }
            Appearance::Untextured { dc } => {
                w.u32(0);
                w.u32(0);
                w.u64(offset);
                dc.iter().for_each(|&c| w.f32(c));
            }
        }
    }
    for t in &scene.atlas.texels {
        t.iter().for_each(|&c| w.f32(c));
    }
    w.0
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Truncated(format!("{what} at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }
    fn f32(&mut self, what: &str) -> Result<f64> {
        let v = f32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")) as f64;
        if !v.is_finite() {
            return Err(Error::MalformedScene(format!("non-finite {what}")));
        }
        Ok(v)
    }
    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}

pub fn decode_scene(bytes: &[u8]) -> Result<Scene> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4, "magic").map_err(|_| Error::BadMagic)? != MAGIC {
        return Err(Error::BadMagic);
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let n = r.u32("primitive count")? as usize;
    let sh_degree = r.u32("sh degree")?;
    if sh_degree > sh::MAX_DEGREE {
        return Err(Error::MalformedScene(format!("sh degree {sh_degree} > {}", sh::MAX_DEGREE)));
    }
    let texel_size = r.f32("texel size")?;
    let background = [r.f32("background")?, r.f32("background")?, r.f32("background")?];
    let declared = r.u64("texel count")?;

    let sh_len = sh::residual_len(sh_degree);
    let min_record = 4 * (3 + 4 + 2 + 1 + sh_len) + 4 + 4 + 8;
    if n.checked_mul(min_record).is_none_or(|b| b > r.remaining()) {
        return Err(Error::Truncated(format!("{n} primitive records")));
    }
    let mut primitives = Vec::with_capacity(n);
    let mut expected = 0u64;
    for index in 0..n {
        let position = Vec3::new(r.f32("position")?, r.f32("position")?, r.f32("position")?);
        let rotation = Quaternion::new(r.f32("rotation")?, r.f32("rotation")?, r.f32("rotation")?, r.f32("rotation")?);
        if (rotation.norm() - 1.0).abs() > 1e-6 {
            return Err(Error::MalformedScene(format!("primitive {index}: rotation quaternion not unit")));
        }
        let scale = [r.f32("scale")?, r.f32("scale")?];
        if !(scale[0] > 0.0 && scale[1] > 0.0) {
            return Err(Error::MalformedScene(format!("primitive {index}: non-positive scale")));
        }
        let opacity_logit = r.f32("opacity")?;
        let mut sh_residual = Vec::with_capacity(sh_len);
        for _ in 0..sh_len {
            sh_residual.push(r.f32("sh residual")?);
        }
        let width = r.u32("texture width")?;
        let height = r.u32("texture height")?;
        let found = r.u64("texture offset")?;
        if found != expected {
            return Err(Error::InconsistentPrefix { index, found, expected });
        }
        let appearance = match (width, height) {
            (0, 0) => Appearance::Untextured {
                dc: [r.f32("dc")?, r.f32("dc")?, r.f32("dc")?],
            },
            (0, _) | (_, 0) => {
                return Err(Error::MalformedScene(format!("primitive {index}: empty texture {width}x{height}")));
            }
            _ => {
                expected = expected
                    .checked_add(width as u64 * height as u64)
                    .ok_or_else(|| Error::MalformedScene("texel count overflow".into()))?;
                Appearance::Textured { width, height }
            }
        };
        primitives.push(TexturedGaussian {
            position,
            rotation,
            scale,
            opacity_logit,
            sh_residual,
            appearance,
        });
    }
    if declared != expected {
        return Err(Error::TexelCountMismatch { declared, expected });
    }
    if declared.checked_mul(12).is_none_or(|b| b > r.remaining() as u64) {
        return Err(Error::Truncated(format!("texel block of {declared} texels")));
    }
    let mut atlas = TextureAtlas::for_primitives(&primitives, texel_size);
    for t in &mut atlas.texels {
        *t = [r.f32("texel")?, r.f32("texel")?, r.f32("texel")?];
    }
    if r.remaining() != 0 {
        return Err(Error::MalformedScene(format!("{} trailing bytes", r.remaining())));
    }
    if expected > 0 && !(texel_size > 0.0) {
        return Err(Error::MalformedScene("textured scene needs a positive texel size".into()));
    }
    let scene = Scene {
        primitives,
        atlas,
        sh_degree,
        background,
    };
    scene.validate()?;
    Ok(scene)
}

pub fn save_scene(scene: &Scene, path: impl AsRef<Path>) -> Result<()> {
    scene.validate()?;
    std::fs::write(path, encode_scene(scene))?;
    Ok(())
}

pub fn load_scene(path: impl AsRef<Path>) -> Result<Scene> {
    decode_scene(&std::fs::read(path)?)
}

/// Rounds every stored value to `f32` so the scene survives a save/load
/// round-trip unchanged. Quaternions are kept as stored.
pub fn round_to_f32(scene: &mut Scene) {
    let r = |x: &mut f64| *x = *x as f32 as f64;
    r(&mut scene.atlas.texel_size);
    scene.background.iter_mut().for_each(r);
    for g in &mut scene.primitives {
        g.position.iter_mut().for_each(r);
        r(&mut g.rotation.w);
        g.rotation.coords.iter_mut().for_each(r);
        g.scale.iter_mut().for_each(r);
        r(&mut g.opacity_logit);
        g.sh_residual.iter_mut().for_each(r);
        if let Appearance::Untextured { dc } = &mut g.appearance {
            dc.iter_mut().for_each(r);
        }
    }
    for t in &mut scene.atlas.texels {
        t.iter_mut().for_each(r);
    }
}
