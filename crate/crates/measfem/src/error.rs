//! Crate-wide error type. Geometry, assembly and solver failures are hard
//! errors: the experiment harness never silently substitutes values.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FemError {
    #[error("unsupported polynomial degree {0} (supported: 1, 2, 3)")]
    InvalidDegree(usize),

    #[error("quadrature exactness degree {0} exceeds the supported maximum 6")]
    QuadratureDegree(usize),

    #[error("cell {cell} is degenerate (volume {volume:.3e})")]
    DegenerateCell { cell: usize, volume: f64 },

    #[error("mesh is not conforming: a facet is shared by {count} cells")]
    NonConforming { count: usize },

    #[error("atom '{label}' at {position:?} lies outside the domain")]
    AtomOutsideDomain { label: String, position: Vec<f64> },

    #[error(
        "atom '{label}' at {position:?} is {distance:.3e} from the boundary \
         (closer than the 1e-8 minimum)"
    )]
    AtomNearBoundary { label: String, position: Vec<f64>, distance: f64 },

    #[error("quadrature point {position:?} of atom '{label}' not found in any cell")]
    QuadraturePointNotFound { label: String, position: Vec<f64> },

    #[error(
        "{stage} solve did not converge: {iterations} iterations, \
         relative residual {residual:.3e} (tolerance {tol:.3e})"
    )]
    SolverStalled { stage: &'static str, iterations: usize, residual: f64, tol: f64 },

    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),

    #[error("region '{0}' selects no cells")]
    EmptyRegion(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("mesh file format error at line {line}: {message}")]
    MeshFormat { line: usize, message: String },

    #[error("function file format error at line {line}: {message}")]
    FunctionFormat { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
