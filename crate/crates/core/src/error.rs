use thiserror::Error;

/// Failures raised while building, importing or validating a mesh.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: element {element} references undefined node {node}")]
    UndefinedNode { line: usize, element: usize, node: usize },
    #[error("element {element}: non-positive reference Jacobian {det_j:e}")]
    NegativeJacobian { element: usize, det_j: f64 },
    #[error("unknown preset '{0}'")]
    UnknownPreset(String),
    #[error("preset parameter '{name}': {message}")]
    BadParameter { name: String, message: String },
    #[error("mesh is empty")]
    Empty,
    #[error("invalid mesh: {0}")]
    Invalid(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("element inversion: det F = {j:e}")]
    Inversion { j: f64 },
    #[error("degenerate distortion: rotation proxy {index} has denominator {denominator:e}")]
    DegenerateProxy { index: usize, denominator: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ElementError {
    #[error("quadrature point {qp}: {source}")]
    Kinematics {
        qp: usize,
        #[source]
        source: KinematicsError,
    },
    #[error("singular parent Jacobian (det = {0:e})")]
    SingularJacobian(f64),
    #[error("field vector has length {got}, layout expects {expected}")]
    Layout { expected: usize, got: usize },
    #[error("non-positive domain scale d = {0}")]
    DomainScale(f64),
}

impl ElementError {
    /// Inversion and degenerate proxies are recoverable by cutting the load step.
    pub fn is_retryable(&self) -> bool {
        matches!(self, ElementError::Kinematics { .. })
    }
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("element {element}: {source}")]
    Element {
        element: usize,
        #[source]
        source: ElementError,
    },
    #[error("load program: {0}")]
    Program(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("singular tangent: {0}")]
    Singular(String),
    #[error("non-finite residual")]
    NonFinite,
    #[error("load stepping aborted at lambda = {last_lambda} (step size below minimum)")]
    Aborted { last_lambda: f64 },
}

impl SolverError {
    /// Whether the stepping controller may retry with a smaller increment.
    pub fn is_retryable(&self) -> bool {
        match self {
            SolverError::Element { source, .. } => source.is_retryable(),
            SolverError::NoConvergence { .. } | SolverError::Singular(_) | SolverError::NonFinite => true,
            SolverError::Program(_) | SolverError::Aborted { .. } => false,
        }
    }
}
