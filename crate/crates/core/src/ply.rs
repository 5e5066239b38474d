//! Binary little-endian PLY import/export in the common splat convention:
//! `x y z`, log scales `scale_0 scale_1` (an optional `scale_2` is ignored),
//! quaternion `rot_0..rot_3` as `(w, x, y, z)`, `opacity` as a logit,
//! `f_dc_0..2` and the channel-major `f_rest_*` block.

use std::path::Path;

use nalgebra::Quaternion;

use crate::error::{Error, Result};
use crate::geometry::{Appearance, TexturedGaussian, Vec3};
use crate::scene::Scene;
use crate::sh::{self, SH_C0};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(s: &str) -> Option<Scalar> {
        Some(match s {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn read(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().expect("8 bytes")),
        }
    }
}

struct Property {
    name: String,
    ty: Scalar,
    offset: usize,
}

struct Header {
    count: usize,
    stride: usize,
    properties: Vec<Property>,
    body: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    const END: &[u8] = b"end_header\n";
    let end = bytes
        .windows(END.len())
        .position(|w| w == END)
        .ok_or_else(|| Error::Ply("no end_header".into()))?;
    let text = std::str::from_utf8(&bytes[..end]).map_err(|_| Error::Ply("header is not utf-8".into()))?;
    let mut lines = text.lines().map(str::trim_end);
    if lines.next() != Some("ply") {
        return Err(Error::Ply("missing `ply` magic".into()));
    }
    let mut format_ok = false;
    let mut count = None;
    let mut properties: Vec<Property> = Vec::new();
    let mut stride = 0usize;
    let mut in_vertex = false;
    for line in lines {
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            [] | ["comment", ..] | ["obj_info", ..] => {}
            ["format", "binary_little_endian", "1.0"] => format_ok = true,
            ["format", other, ..] => return Err(Error::Ply(format!("unsupported format {other}"))),
            ["element", "vertex", n] => {
                if count.is_some() {
                    return Err(Error::Ply("duplicate vertex element".into()));
                }
                count = Some(n.parse::<usize>().map_err(|_| Error::Ply(format!("bad vertex count {n}")))?);
                in_vertex = true;
            }
            ["element", name, ..] => return Err(Error::Ply(format!("unsupported element {name}"))),
            ["property", "list", ..] => return Err(Error::Ply("list properties are not supported".into())),
            ["property", ty, name] if in_vertex => {
                let ty = Scalar::parse(ty).ok_or_else(|| Error::Ply(format!("unknown type {ty}")))?;
                if properties.iter().any(|p| p.name == *name) {
                    return Err(Error::Ply(format!("duplicate property {name}")));
                }
                properties.push(Property {
                    name: name.to_string(),
                    ty,
                    offset: stride,
                });
                stride += ty.size();
            }
            _ => return Err(Error::Ply(format!("unexpected header line {line:?}"))),
        }
    }
    if !format_ok {
        return Err(Error::Ply("expected format binary_little_endian 1.0".into()));
    }
    Ok(Header {
        count: count.ok_or_else(|| Error::Ply("no vertex element".into()))?,
        stride,
        properties,
        body: end + END.len(),
    })
}

/// Parses a splat PLY into an untextured scene with a black background.
pub fn parse_splat_ply(bytes: &[u8]) -> Result<Scene> {
    let h = parse_header(bytes)?;
    let find = |name: &str| -> Result<&Property> {
        h.properties
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| Error::PlyMissingProperty(name.to_string()))
    };
    let named = |names: &[&str]| -> Result<Vec<&Property>> { names.iter().map(|n| find(n)).collect() };
    let pos = named(&["x", "y", "z"])?;
    let scale = named(&["scale_0", "scale_1"])?;
    let rot = named(&["rot_0", "rot_1", "rot_2", "rot_3"])?;
    let opacity = find("opacity")?;
    let dc = named(&["f_dc_0", "f_dc_1", "f_dc_2"])?;
    let rest_len = (0..)
        .take_while(|k| h.properties.iter().any(|p| p.name == format!("f_rest_{k}")))
        .count();
    let sh_degree = sh::degree_for_residual_len(rest_len)
        .map_err(|_| Error::Ply(format!("{rest_len} f_rest properties is not 3((L+1)^2 - 1)")))?;
    let rest: Vec<&Property> = (0..rest_len)
        .map(|k| find(&format!("f_rest_{k}")))
        .collect::<Result<_>>()?;
    let per_channel = rest_len / 3;

    let body = &bytes[h.body..];
    let needed = h.count.checked_mul(h.stride);
    if needed.is_none_or(|n| n > body.len()) {
        return Err(Error::Ply(format!("truncated: {} vertices of {} bytes", h.count, h.stride)));
    }
    let mut primitives = Vec::with_capacity(h.count);
    for i in 0..h.count {
        let rec = &body[i * h.stride..(i + 1) * h.stride];
        let get = |p: &Property| -> Result<f64> {
            let v = p.ty.read(&rec[p.offset..]);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::PlyNonFinite(p.name.clone()))
            }
        };
        let position = Vec3::new(get(pos[0])?, get(pos[1])?, get(pos[2])?);
        let s = [get(scale[0])?.exp(), get(scale[1])?.exp()];
        if !(s[0] > 0.0 && s[1] > 0.0 && s[0].is_finite() && s[1].is_finite()) {
            return Err(Error::Ply(format!("vertex {i}: scale out of range")));
        }
        let mut q = Quaternion::new(get(rot[0])?, get(rot[1])?, get(rot[2])?, get(rot[3])?);
        let norm = q.norm();
        if !(norm > 1e-12 && norm.is_finite()) {
            return Err(Error::Ply(format!("vertex {i}: degenerate rotation")));
        }
        if (norm - 1.0).abs() > 1e-6 {
            q /= norm;
            q.coords.iter_mut().for_each(|c| *c = *c as f32 as f64);
        }
        let mut sh_residual = vec![0.0; rest_len];
        for c in 0..3 {
            for k in 0..per_channel {
                sh_residual[3 * k + c] = get(rest[c * per_channel + k])?;
            }
        }
        primitives.push(TexturedGaussian {
            position,
            rotation: q,
            scale: s,
            opacity_logit: get(opacity)?,
            sh_residual,
            appearance: Appearance::Untextured {
                dc: [get(dc[0])?, get(dc[1])?, get(dc[2])?],
            },
        });
    }
    Scene::untextured(primitives, sh_degree, [0.0; 3])
}

pub fn import_splat_ply(path: impl AsRef<Path>) -> Result<Scene> {
    parse_splat_ply(&std::fs::read(path)?)
}

/// Encodes a scene as a float32 splat PLY. Textured primitives export the
/// degree-0 coefficient of their mean texel color.
pub fn encode_splat_ply(scene: &Scene) -> Result<Vec<u8>> {
    scene.validate()?;
    let rest_len = sh::residual_len(scene.sh_degree);
    let per_channel = rest_len / 3;
    let mut header = String::from("ply\nformat binary_little_endian 1.0\n");
    header.push_str(&format!("element vertex {}\n", scene.len()));
    let mut names: Vec<String> = ["x", "y", "z", "scale_0", "scale_1", "rot_0", "rot_1", "rot_2", "rot_3", "opacity"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    names.extend((0..3).map(|c| format!("f_dc_{c}")));
    names.extend((0..rest_len).map(|k| format!("f_rest_{k}")));
    for n in &names {
        header.push_str(&format!("property float {n}\n"));
    }
    header.push_str("end_header\n");
    let mut out = header.into_bytes();
    let mut put = |v: f64| out.extend_from_slice(&(v as f32).to_le_bytes());
    for (i, g) in scene.primitives.iter().enumerate() {
        g.position.iter().for_each(|&c| put(c));
        put(g.scale[0].ln());
        put(g.scale[1].ln());
        let q = &g.rotation;
        [q.w, q.i, q.j, q.k].iter().for_each(|&c| put(c));
        put(g.opacity_logit);
        let dc = match g.appearance {
            Appearance::Untextured { dc } => dc,
            Appearance::Textured { .. } => {
                let tex = scene.atlas.texture(i);
                let mut mean = [0.0; 3];
                for t in tex {
                    for c in 0..3 {
                        mean[c] += t[c] / tex.len() as f64;
                    }
                }
                mean.map(|m| (m - 0.5) / SH_C0)
            }
        };
        dc.iter().for_each(|&c| put(c));
        for c in 0..3 {
            for k in 0..per_channel {
                put(g.sh_residual[3 * k + c]);
            }
        }
    }
    Ok(out)
}

pub fn export_splat_ply(scene: &Scene, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_splat_ply(scene)?)?;
    Ok(())
}
