use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("vector ({x}, {y}, {z}) is not unit length (norm {norm})")]
    NotUnit { x: f64, y: f64, z: f64, norm: f64 },

    #[error("cannot normalize a zero or non-finite vector")]
    ZeroVector,

    #[error("rotation is not orthonormal with determinant +1 (defect {defect:e}, det {det})")]
    InvalidRotation { defect: f64, det: f64 },

    #[error("index {index} out of range for {len} lights")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Configuration(String),

    #[error("degenerate light configuration (condition number {condition:e})")]
    DegenerateLights { condition: f64 },

    #[error("dark pixel: albedo {albedo:e} below floor")]
    DarkPixel { albedo: f64 },

    #[error("dimension mismatch: {0}")]
    Dimensions(String),

    #[error("stack has no ambient frame")]
    MissingAmbient,

    #[error("no pixels are valid in both maps")]
    NoCommonPixels,

    #[error("gradient field has no valid pixels")]
    EmptyDomain,

    #[error("config {path}: {message}")]
    Config { path: String, message: String },

    #[error("`{key}`: {message}")]
    ConfigKey { key: String, message: String },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
