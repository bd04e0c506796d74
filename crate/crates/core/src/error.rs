use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter fell outside the valid window of a knot vector.
    #[error("parameter {value} outside domain [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },

    #[error("invalid argument: {0}")]
    Argument(String),

    /// Tangent vectors are (near) parallel or vanish at this site.
    #[error("degenerate tangents at (u, v) = ({u}, {v})")]
    Degenerate { u: f64, v: f64 },

    #[error("all {count} sample sites have degenerate tangents")]
    AllDegenerate { count: usize },

    #[error("non-finite loss value ({0})")]
    NonFinite(String),

    /// Malformed input; `origin` names the file (or `<input>`).
    #[error("{origin}:{line}: {message}")]
    Parse { origin: String, line: usize, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("alignment failed: {0}")]
    Alignment(String),

    #[error("fit failed after {iterations} iterations: {reason}")]
    FitFailure {
        iterations: usize,
        reason: String,
        /// Control grid from the last iteration that evaluated cleanly.
        last_good: Box<crate::spline::SplineSurface>,
    },
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
