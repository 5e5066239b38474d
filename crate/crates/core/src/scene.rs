use crate::atlas::TextureAtlas;
use crate::error::{Error, Result};
use crate::geometry::{Appearance, TexturedGaussian};
use crate::sh;

/// A set of textured surfels sharing one texel atlas.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub primitives: Vec<TexturedGaussian>,
    pub atlas: TextureAtlas,
    /// SH degree of every primitive's residual.
    pub sh_degree: u32,
    pub background: [f64; 3],
}

impl Scene {
    pub fn empty(sh_degree: u32, background: [f64; 3]) -> Self {
        Scene {
            primitives: Vec::new(),
            atlas: TextureAtlas::empty(),
            sh_degree,
            background,
        }
    }

    /// Builds an untextured scene; the atlas is empty until texels are allocated.
    pub fn untextured(primitives: Vec<TexturedGaussian>, sh_degree: u32, background: [f64; 3]) -> Result<Self> {
        let atlas = TextureAtlas::for_primitives(&primitives, 0.0);
        let scene = Scene {
            primitives,
            atlas,
            sh_degree,
            background,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn len(&self) -> usize {
        self.primitives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primitives.is_empty()
    }

    pub fn is_textured(&self) -> bool {
        self.primitives
            .iter()
            .all(|g| matches!(g.appearance, Appearance::Textured { .. }))
    }

    pub fn scales(&self) -> Vec<[f64; 2]> {
        self.primitives.iter().map(|g| g.scale).collect()
    }

    /// Checks SH lengths, scales, rotations and atlas consistency.
    pub fn validate(&self) -> Result<()> {
        if self.sh_degree > sh::MAX_DEGREE {
            return Err(Error::InvalidArgument(format!("sh degree {} > 3", self.sh_degree)));
        }
        let sh_len = sh::residual_len(self.sh_degree);
        for (i, g) in self.primitives.iter().enumerate() {
            if g.sh_residual.len() != sh_len {
                return Err(Error::InvalidArgument(format!(
                    "primitive {i}: sh residual length {} != {sh_len}",
                    g.sh_residual.len()
                )));
            }
            if !(g.scale[0] > 0.0 && g.scale[1] > 0.0) {
                return Err(Error::InvalidArgument(format!("primitive {i}: non-positive scale")));
            }
            if (g.rotation.norm() - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidArgument(format!("primitive {i}: rotation quaternion not unit")));
            }
            if let Appearance::Textured { width, height } = g.appearance {
                if width == 0 || height == 0 {
                    return Err(Error::InvalidArgument(format!("primitive {i}: empty texture")));
                }
            }
        }
        self.atlas.check(&self.primitives)
    }
}
