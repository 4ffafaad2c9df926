use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("accuracy error: {0}")]
    Accuracy(String),

    #[error("invalid seed/spec for sampling: {0}")]
    Seed(String),

    #[error("support error: {outside:.3e} of the l1 mass lies outside the safe half-box")]
    Support { outside: f64 },

    #[error("no convergence at kappa = {kappa}: residual {residual:.3e} after {iterations} iterations")]
    NonConvergence {
        kappa: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("band coverage: {0}")]
    BandCoverage(String),

    #[error("missing orientation: {0}")]
    OrientationMissing(String),

    #[error("spectral coverage: {0}")]
    Coverage(String),

    #[error("size guard: {0}")]
    SizeGuard(String),

    #[error("radius guard: |z| = {0} is outside the series regime")]
    RadiusGuard(f64),

    #[error("validation failed:\n{}", .0.join("\n"))]
    Validation(Vec<String>),

    #[error("format error: {0}")]
    Format(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Domain(_) | Error::Seed(_) => 2,
            Error::NonConvergence { .. } => 3,
            Error::Io(_) | Error::Format(_) | Error::Json(_) => 4,
            Error::Stage { source, .. } => source.exit_code(),
            _ => 1,
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
