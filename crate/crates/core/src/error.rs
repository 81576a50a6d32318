use std::path::PathBuf;

use crate::fields::ScalarField;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("node ({i}, {j}) out of range for {nx}x{ny} grid")]
    IndexOutOfRange {
        i: usize,
        j: usize,
        nx: usize,
        ny: usize,
    },

    #[error("invalid boundary data: {0}")]
    InvalidBoundary(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("outside reaper strip: |y - y_center| = {offset} >= {half_width}")]
    OutsideReaperStrip { offset: f64, half_width: f64 },

    #[error("outside domain: {0}")]
    OutsideDomain(String),

    #[error("polar chart undefined: grid reaches x = {x_min} <= 0")]
    PolarChartUndefined { x_min: f64 },

    #[error("arc exits domain before reaching the target level")]
    ArcExitsDomain,

    #[error("not monotone on arc")]
    NotMonotoneOnArc,

    #[error("window empty: {0}")]
    WindowEmpty(String),

    #[error("Newton iteration stalled at cap {cap} (residual {residual:e})")]
    Stalled {
        cap: f64,
        residual: f64,
        last_iterate: Box<ScalarField>,
    },

    #[error("Newton iteration diverged at cap {cap}")]
    Diverged { cap: f64 },

    #[error("singular linear system at unknown {0}")]
    SingularMatrix(usize),

    #[error("seam mismatch: max gap {max_gap:e}")]
    SeamMismatch { max_gap: f64 },

    #[error("parse error in {path}: {msg}")]
    Parse { path: PathBuf, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Stalled { .. } | Error::Diverged { .. } | Error::SingularMatrix(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
