use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpticsError {
    #[error("beam under-resolved: waist {waist:e} m needs pitch <= {required_pitch:e} m, got {pitch:e} m")]
    UnderResolved {
        waist: f64,
        pitch: f64,
        required_pitch: f64,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("detector array exceeds the grid: {0}")]
    DetectorOutsideGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("count distribution needs {states} states, limit {limit}")]
    TooLarge { states: usize, limit: usize },

    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, OpticsError>;

impl From<std::io::Error> for OpticsError {
    fn from(e: std::io::Error) -> Self {
        OpticsError::Io(e.to_string())
    }
}
