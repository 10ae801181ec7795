use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("non-manifold edge ({0}, {1}) is used by {2} faces")]
    NonManifoldEdge(usize, usize, usize),
    #[error("inconsistent orientation across edge ({0}, {1})")]
    InconsistentOrientation(usize, usize),
    #[error("open mesh: boundary edge ({0}, {1})")]
    BoundaryEdge(usize, usize),
    #[error("face {face} is degenerate")]
    DegenerateFace { face: usize },
    #[error("face {face} references invalid vertex {vertex}")]
    InvalidIndex { face: usize, vertex: usize },
    #[error("vertex patch around {center} cannot reach {wanted} vertices (mesh exhausted at {found})")]
    PatchTooSmall {
        center: usize,
        wanted: usize,
        found: usize,
    },
    #[error("unknown surface `{0}`")]
    UnknownSurface(String),
    #[error("projection did not converge from {point:?} (|phi| = {residual:e})")]
    ProjectionFailed { point: [f64; 3], residual: f64 },
    #[error("gradient of the level set vanishes near {0:?}")]
    VanishingGradient([f64; 3]),
    #[error("perturbation degenerates face {face}")]
    PerturbationTooLarge { face: usize },
    #[error("meshes do not share connectivity: {0}")]
    ConnectivityMismatch(String),
    #[error("rank-deficient least-squares fit at vertex {vertex}")]
    RankDeficient { vertex: usize },
    #[error("two patch vertices project onto the same parameter point around vertex {vertex}")]
    FoldOver { vertex: usize },
    #[error("averaged normal vanishes at vertex {vertex}")]
    ZeroNormal { vertex: usize },
    #[error("conjugate gradient stalled after {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
