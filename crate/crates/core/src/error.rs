use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("spherical harmonic coefficient vector has length {0}, expected 3*(S-1) for S in {{1, 4, 9, 16}}")]
    ShLength(usize),

    #[error("texel index ({u}, {v}) outside a {width}x{height} texture")]
    TexelOutOfRange { u: u32, v: u32, width: u32, height: u32 },

    #[error(
        "texel budget {budget} unattainable within 0.1%: nearest achievable total {nearest_total} at texel size {nearest_texel_size}"
    )]
    BudgetUnattainable {
        budget: usize,
        nearest_total: usize,
        nearest_texel_size: f64,
    },

    #[error("atlas inconsistent with scene: {0}")]
    AtlasInconsistent(String),

    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("non-finite loss at iteration {iteration}")]
    NonFiniteLoss { iteration: u64 },

    #[error("not a scene file (bad magic)")]
    BadMagic,

    #[error("unsupported scene file version {0}")]
    UnsupportedVersion(u32),

    #[error("truncated file: {0}")]
    Truncated(String),

    #[error("texel count mismatch: header declares {declared}, primitives need {expected}")]
    TexelCountMismatch { declared: u64, expected: u64 },

    #[error("inconsistent prefix sums at primitive {index}: offset {found}, expected {expected}")]
    InconsistentPrefix {
        index: usize,
        found: u64,
        expected: u64,
    },

    #[error("malformed scene file: {0}")]
    MalformedScene(String),

    #[error("ply: {0}")]
    Ply(String),

    #[error("ply: missing property `{0}`")]
    PlyMissingProperty(String),

    #[error("ply: non-finite value in property `{0}`")]
    PlyNonFinite(String),

    #[error("dataset: {0}")]
    Dataset(String),

    #[error("image {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
