use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("degenerate domain: {0}")]
    DegenerateDomain(String),

    #[error("grid needs at least 3 nodes per axis, got {0}")]
    TooFewNodes(usize),

    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("expression evaluation failed: {0}")]
    Eval(String),

    #[error("non-finite value at node {node} (x = {x}, y = {y})")]
    NonFinite { node: usize, x: f64, y: f64 },

    #[error("variable `y` used on a one-dimensional grid")]
    NoYOnInterval,

    #[error("weight exponent infimum {0} is not above -1 (non-integrable singularity)")]
    NonIntegrable(f64),

    #[error("field has {found} values but the grid has {expected} nodes")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("exponent out of range: {0}")]
    ExponentRange(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("solver did not converge after {iterations} iterations (gradient sup {grad_sup:e}, energy {energy})")]
    NotConverged {
        iterations: usize,
        grad_sup: f64,
        energy: f64,
    },

    #[error("inner iteration did not converge after {iterations} iterations (last change {last_change:e})")]
    InnerIteration { iterations: usize, last_change: f64 },

    #[error("hypothesis {name} violated: {detail}")]
    Hypothesis { name: String, detail: String },

    #[error("mixed structure: exponents are neither cooperative nor competitive")]
    MixedStructure,

    #[error("requested mode {requested} but exponents have {detected} structure")]
    ModeMismatch {
        requested: &'static str,
        detected: &'static str,
    },

    #[error("ordering violated at node {node}: lower {lower} > upper {upper}")]
    Ordering { node: usize, lower: f64, upper: f64 },

    #[error("no passing lambda within {doublings} doublings; persistent failure: {certificate}")]
    LambdaBudget {
        doublings: usize,
        certificate: String,
    },

    #[error("fixed-point iteration failed: {0}")]
    FixedPoint(String),

    #[error("bracket containment violated at node {node} ({component})")]
    Containment {
        node: usize,
        component: &'static str,
    },
}
