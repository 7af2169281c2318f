use thiserror::Error;

/// Errors produced by the surface Navier-Stokes pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh level {level} requests {tets} tetrahedra and {vertices} vertices, which exceeds the supported size")]
    MeshTooLarge {
        level: u32,
        tets: u64,
        vertices: u64,
    },

    #[error("level-set gradient magnitude {magnitude:e} below threshold in tetrahedron {tet}")]
    DegenerateGradient { tet: usize, magnitude: f64 },

    #[error("degenerate tetrahedron {tet} (volume {volume:e})")]
    DegenerateTet { tet: usize, volume: f64 },

    #[error("no background element is cut by the surface")]
    EmptyActiveSet,

    #[error("unsupported {kind} quadrature degree {degree}")]
    UnsupportedQuadrature { kind: &'static str, degree: usize },

    #[error("function undefined at vertex {vertex} ({x}, {y}, {z})")]
    UndefinedAtVertex {
        vertex: usize,
        x: f64,
        y: f64,
        z: f64,
    },

    #[error("manufactured solution undefined at the origin")]
    UndefinedAtOrigin,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown {kind} '{value}'")]
    UnknownName { kind: &'static str, value: String },

    #[error("sparse factorization failed: {0}")]
    Factorization(String),

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("solve residual {residual:e} exceeds tolerance {tolerance:e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },

    #[error("time step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("level {level}: {source}")]
    Level {
        level: u32,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
