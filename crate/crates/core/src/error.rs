use std::io;

use thiserror::Error;

use crate::features::FmapError;
use crate::image::PpmError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("value {value} outside the domain [{min}, {max}]")]
    Domain { value: f64, min: f64, max: f64 },

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("invalid cover vector: {0}")]
    InvalidCover(crate::cover::CoverViolations),

    #[error("scene has no relevant (non-wall) pixels")]
    DegenerateScene,

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("degenerate cover denominator: A_bio + A_bg = {0:e}")]
    DegenerateDenominator(f64),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(&'static str),

    #[error("unknown unit id {0}")]
    UnknownUnit(u32),

    #[error("registry mismatch: expected [{expected}], found [{found}]")]
    RegistryMismatch { expected: String, found: String },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Fmap(#[from] FmapError),

    #[error(transparent)]
    Ppm(#[from] PpmError),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
