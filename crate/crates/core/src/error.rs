use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Problems found while reading a PLY stream.
#[derive(Debug, Error)]
pub enum PlyError {
    #[error("malformed PLY header: {0}")]
    Header(String),
    #[error("unsupported PLY format `{0}` (expected ascii or binary_little_endian)")]
    Format(String),
    #[error("vertex element lacks required property `{0}`")]
    MissingProperty(&'static str),
    #[error("property `{name}` has unsupported type `{ty}`")]
    UnsupportedType { name: String, ty: String },
    #[error("truncated body: expected {expected} vertices, read {read}")]
    Truncated { expected: usize, read: usize },
    #[error("bad value on line {line}: {msg}")]
    Value { line: usize, msg: String },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Ply(#[from] PlyError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("bit depth {0} out of range [1, 21]")]
    BitDepth(u32),
    #[error("cloud has floating-point coordinates; quantize before building a graph")]
    Unquantized,
    #[error("point count mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("graph has no edges")]
    EmptyGraph,
    #[error("patch size {patch_size} exceeds 1 + max degree ({max_degree})")]
    PatchTooLarge { patch_size: usize, max_degree: usize },
    #[error("need at least {needed} patches, found {found}")]
    TooFewPatches { needed: usize, found: usize },
    #[error("matrix is not symmetric (|a_ij - a_ji| = {0:e})")]
    NotSymmetric(f64),
    #[error("Jacobi iteration did not converge within {0} sweeps")]
    NoConvergence(usize),
    #[error("FSLR excluded every point; retry filter selection without the mask")]
    EmptyMask,
}

impl Error {
    /// True for errors caused by unreadable input rather than by the pipeline.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Ply(_) | Error::Io(_))
    }
}
