use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::expr::{EvalError, ParseError};
use crate::grid::GridError;
use crate::linalg::LinalgError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A point in `C^n` as `(re, im)` pairs, for error messages and reports.
#[derive(Debug, Clone, PartialEq)]
pub struct PointLabel(pub Vec<[f64; 2]>);

impl From<&[C64]> for PointLabel {
    fn from(z: &[C64]) -> Self {
        Self(z.iter().map(|c| [c.re, c.im]).collect())
    }
}

impl std::fmt::Display for PointLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, [re, im]) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{re}{im:+}i")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("evaluation failed at {point}: {source}")]
    Eval { point: PointLabel, source: EvalError },
    #[error("singular sample at {0}")]
    SingularSample(PointLabel),
    #[error("metric is not positive definite at {point}: {detail}")]
    NotPositiveDefinite { point: PointLabel, detail: String },
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("map component {0} is not holomorphic")]
    NonHolomorphicMap(usize),
    #[error("section component {0} is not holomorphic")]
    NonHolomorphicSection(usize),
    #[error("frame is rank deficient at {0}")]
    RankDeficientFrame(PointLabel),
    #[error("stencil leaves the sampled domain at {0}")]
    StencilOutOfDomain(PointLabel),
    #[error("insufficient margin: {0}")]
    InsufficientMargin(String),
    #[error("mollifier radius {eps} is below the accuracy floor {min}")]
    EpsilonTooSmall { eps: f64, min: f64 },
    #[error("slope requirement {index} is negative or non-finite ({value})")]
    NegativeSlopeInput { index: usize, value: f64 },
    #[error("invalid majorant knots: {0}")]
    BadKnots(String),
    #[error("cutoff radii must satisfy 0 <= inner < outer (got {inner}, {outer})")]
    BadRadii { inner: f64, outer: f64 },
    #[error("weight search failed at {point}: {detail}")]
    WeightSearchFailed { point: PointLabel, detail: String },
    #[error("invalid targets: {0}")]
    InvalidTargets(String),
    #[error("invalid schedule: {0}")]
    BadSchedule(String),
    #[error("input metric is not negatively curved: {0}")]
    InputNotNegative(String),
    #[error("geometry inconsistent: {0}")]
    GeometryInconsistent(String),
    #[error("exception set has interior: {0} singular points with a full singular neighbourhood")]
    ExceptionSetHasInterior(usize),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    pub fn eval(z: &[C64], source: EvalError) -> Self {
        Error::Eval { point: z.into(), source }
    }

    /// Errors that mark a point of the (allowed) exception set rather than a
    /// failure of the computation.
    pub fn is_singular_sample(&self) -> bool {
        matches!(self, Error::SingularSample(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
