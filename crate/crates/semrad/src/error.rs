use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter {name}: {message}")]
    InvalidParameter { name: &'static str, message: String },

    #[error("mesh generation failed: {0}")]
    MeshGeneration(String),

    #[error("mesh file parse error at line {line}: {message}")]
    MeshParse { line: usize, message: String },

    #[error("mesh validation failed: {0}")]
    MeshInvalid(String),

    #[error("element {element} could not be curved: {message}")]
    Curving { element: usize, message: String },

    #[error("invalid geometry in element {element}: {message}")]
    InvalidGeometry { element: usize, message: String },

    #[error("reference element construction failed for order {order}: {message}")]
    RefElem { order: usize, message: String },

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("conflicting Dirichlet values at node {node}: {a} vs {b}")]
    ConflictingDirichlet { node: usize, a: f64, b: f64 },

    #[error("simulation diverged at step {step} (max |state| = {magnitude:e}); \
             run the stability analyzer on this mesh/order combination")]
    Diverged { step: usize, magnitude: f64 },

    #[error("eigenvalue problem of dimension {dim} exceeds the dense budget {budget}; \
             use a coarser free-surface mesh")]
    EigenBudget { dim: usize, budget: usize },

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
