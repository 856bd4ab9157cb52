use thiserror::Error;

use crate::exprlang::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("unbound parameter `{0}`")]
    UnboundParameter(String),

    /// Evaluation left the real domain of some subexpression.
    #[error("domain error in `{expr}`: {reason} (argument {value})")]
    Domain {
        expr: String,
        value: f64,
        reason: &'static str,
    },

    #[error("seed is not a solution: max relative residual {max_rel:.3e} exceeds {tol:.1e}")]
    SeedNotSolution { max_rel: f64, tol: f64 },

    #[error("degenerate seed: Y_h vanishes identically on the region")]
    DegenerateSeed,

    #[error("empty verification domain: every grid point is singular")]
    EmptyDomain,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("no singularity-free path from ({:.6}, {:.6}) to ({:.6}, {:.6})", base.0, base.1, target.0, target.1)]
    NoPath { base: (f64, f64), target: (f64, f64) },

    #[error("quadrature did not converge on [{a}, {b}] (error estimate {estimate:.3e})")]
    Quadrature { a: f64, b: f64, estimate: f64 },

    #[error("point ({:.6}, {:.6}) is singular: {what}", at.0, at.1)]
    SingularPoint { at: (f64, f64), what: &'static str },

    #[error("stage {stage}: {source}")]
    Stage {
        stage: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),

    #[error("gauge fit is degenerate at the chosen sample points")]
    DegenerateFit,
}

impl Error {
    pub fn at_stage(self, stage: usize) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True for errors caused by the numerics (singular points, quadrature,
    /// path planning) rather than by the inputs or a failed verification.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Domain { .. }
            | Error::NoPath { .. }
            | Error::Quadrature { .. }
            | Error::SingularPoint { .. }
            | Error::EmptyDomain
            | Error::DegenerateFit => true,
            Error::Stage { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
