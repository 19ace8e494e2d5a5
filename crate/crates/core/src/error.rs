use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("correlation undefined: all four projection probabilities vanish at ({a_deg}°, {b_deg}°)")]
    DegenerateSetting { a_deg: f64, b_deg: f64 },

    #[error("visibility undefined: c_max + c_min = 0")]
    ZeroTotal,

    #[error("no physical signal/idler pair for pump {pump_nm} nm and split {split_nm} nm")]
    NoWavelengthSolution { pump_nm: f64, split_nm: f64 },

    #[error("point ({current_ma} mA, {temperature_c} °C) lies outside the map grid")]
    OutOfGrid { current_ma: f64, temperature_c: f64 },

    #[error("curve fit did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("missing setting: {0}")]
    MissingSetting(String),

    #[error("experiment not operable at {temperature_c} °C ({reason})")]
    NotOperable { temperature_c: f64, reason: String },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
