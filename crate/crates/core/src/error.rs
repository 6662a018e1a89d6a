use std::fmt;

use thiserror::Error;

/// One schema violation found while validating a run configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaViolation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for SchemaViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum TogeError {
    #[error("polytope is not Delzant at vertex {vertex:?}: {reason}")]
    NotDelzant { vertex: Vec<f64>, reason: String },
    #[error("polytope is unbounded")]
    Unbounded,
    #[error("polytope has empty interior")]
    EmptyInterior,
    #[error("facet {0} does not support a facet of the polytope")]
    RedundantFacet(usize),
    #[error("facet {facet} has a non-primitive normal {normal:?}")]
    NonPrimitiveNormal { facet: usize, normal: Vec<i64> },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("lattice point count exceeds cap {cap}")]
    Overflow { cap: usize },
    #[error("point {0:?} lies outside the polytope")]
    OutsidePolytope(Vec<f64>),
    #[error("point {x:?} is within {eps:e} of facet {facet}")]
    TooCloseToBoundary { x: Vec<f64>, facet: usize, eps: f64 },
    #[error("potential is not convex at {0:?}")]
    NonConvexAt(Vec<f64>),
    #[error("Newton iteration diverged at rho={rho:?} after {iterations} iterations (residual {residual:e})")]
    NewtonDivergence {
        rho: Vec<f64>,
        iterations: usize,
        residual: f64,
    },
    #[error("quadrature not converged for k={k}, alpha={alpha:?}: relative change {rel_change:e}")]
    QuadratureNotConverged {
        k: u32,
        alpha: Vec<i64>,
        rel_change: f64,
    },
    #[error("alpha={alpha:?} is not a lattice point of {k}P")]
    OutsideLattice { k: u32, alpha: Vec<i64> },
    #[error("no norming table for k={0}")]
    MissingNormingTable(u32),
    #[error("evaluation grid is empty")]
    EmptyGrid,
    #[error("rate fit is degenerate: {0}")]
    DegenerateFit(String),
    #[error("oracle breach: {0}")]
    ToleranceBreach(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("schema error:\n{}", .0.iter().map(|v| format!("  {v}")).collect::<Vec<_>>().join("\n"))]
    Schema(Vec<SchemaViolation>),
    #[error("{context}: {source}")]
    At {
        context: String,
        #[source]
        source: Box<TogeError>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl TogeError {
    pub fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        TogeError::Schema(vec![SchemaViolation {
            path: path.into(),
            message: message.into(),
        }])
    }

    /// Wraps the error with a location such as `k=32 alpha=[3] t=0.5`.
    pub fn at(self, context: impl Into<String>) -> Self {
        TogeError::At {
            context: context.into(),
            source: Box::new(self),
        }
    }

    pub fn root(&self) -> &TogeError {
        match self {
            TogeError::At { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_schema(&self) -> bool {
        matches!(self.root(), TogeError::Schema(_))
    }
}

pub type Result<T> = std::result::Result<T, TogeError>;
