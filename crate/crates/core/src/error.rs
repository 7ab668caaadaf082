use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },

    #[error("matrix is not symmetric at ({i}, {j}): {a} != {b}")]
    NotSymmetric { i: usize, j: usize, a: f64, b: f64 },

    #[error("nonzero diagonal entry at ({i}, {i}): {value}")]
    NonzeroDiagonal { i: usize, value: f64 },

    #[error("distance ({i}, {j}) is negative or not finite: {value}")]
    BadDistance { i: usize, j: usize, value: f64 },

    #[error("distinct points {i} and {j} are at distance zero")]
    ZeroDistance { i: usize, j: usize },

    #[error("triangle inequality violated on ({i}, {j}, {k}): d({i},{k}) = {long} > {short_sum}")]
    TriangleViolation {
        i: usize,
        j: usize,
        k: usize,
        long: f64,
        short_sum: f64,
    },

    #[error("not an ultrametric: triple ({i}, {j}, {k}) exceeds the strong inequality by {slack}")]
    NotUltrametric { i: usize, j: usize, k: usize, slack: f64 },

    #[error("map is not injective: sources {a} and {b} both map to {target}")]
    NonInjective { a: usize, b: usize, target: usize },

    #[error("index {index} out of range for a space of {len} points")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("block image diameter {diameter} exceeds apex radius {radius}")]
    DiameterExceedsRadius { diameter: f64, radius: f64 },

    #[error("product needs at least one factor")]
    EmptyFactors,

    #[error("exhaustive search over {n} points exceeds cap {cap}")]
    CapExceeded { n: usize, cap: usize },

    #[error("cannot form {k} nonempty disjoint blocks from {n} points")]
    InfeasibleBlocks { k: usize, n: usize },

    #[error("certificate is missing or does not hold: {0}")]
    MissingCertificate(String),

    #[error("distortion {distortion} exceeds the certified bound {bound}")]
    BoundViolation { distortion: f64, bound: f64 },

    #[error("Gram matrix is not positive semidefinite: eigenvalue {eigenvalue} below {threshold}")]
    NotPsd { eigenvalue: f64, threshold: f64 },

    #[error("coordinates reproduce distance ({i}, {j}) with relative error {error}")]
    Reconstruction { i: usize, j: usize, error: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
