//! Textured 2D Gaussian splatting: planar Gaussian primitives that each carry
//! their own texture map, rendered by exact ray-plane intersection and
//! front-to-back alpha compositing.
//!
//! The crate covers the forward renderer, analytic gradients and an Adam
//! loop for texture and appearance optimization, texture painting and
//! procedural re-texturing, plus persistence (native scene files, splat PLY
//! import/export, Blender-style datasets) and synthetic test scenes.

pub mod adam;
pub mod atlas;
pub mod backward;
pub mod camera;
pub mod dataset;
pub mod editing;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod image;
pub mod imageio;
pub mod loss;
pub mod metrics;
pub mod optimize;
pub mod ply;
pub mod render;
pub mod scene;
pub mod scene_file;
pub mod sh;
pub mod synthetic;

pub use error::{Error, Result};
