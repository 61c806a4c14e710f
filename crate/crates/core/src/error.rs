use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("user location ({x:.3}, {y:.3}) lies inside building {building}")]
    UserInsideBuilding { x: f64, y: f64, building: usize },

    #[error("scene has no free area to place users")]
    SceneFull,

    #[error("format error: {0}")]
    Format(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("row count mismatch: {channels} channel rows vs {locations} location rows")]
    RowCountMismatch { channels: usize, locations: usize },

    #[error("channel {index} has zero norm")]
    ZeroNormChannel { index: usize },

    #[error("training set is empty after excluding zero-norm channels")]
    EmptyTrainingSet,

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// True for errors caused by malformed or inconsistent data content,
    /// as opposed to configuration or I/O problems.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Format(_)
                | Error::DimensionMismatch(_)
                | Error::RowCountMismatch { .. }
                | Error::ZeroNormChannel { .. }
                | Error::EmptyTrainingSet
        )
    }
}
