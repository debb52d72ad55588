use thiserror::Error;

use crate::solver::SweepState;

/// Broad classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad file, unreadable input, malformed document.
    Input,
    /// Network data is well formed but not a valid radial feeder.
    Validation,
    /// The iteration failed to produce a usable operating point.
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("physical units require per-unit bases")]
    MissingBases,

    #[error("invalid per-unit bases: s_base={s_base}, v_base={v_base}")]
    InvalidBases { s_base: f64, v_base: f64 },

    #[error("network has no buses")]
    NoBuses,

    #[error("network has no branches")]
    NoBranches,

    #[error("duplicate bus id `{0}`")]
    DuplicateBusId(String),

    #[error("no bus is marked as root")]
    NoRoot,

    #[error("more than one root bus: {0:?}")]
    MultipleRoots(Vec<String>),

    #[error("non-finite value in field `{field}` of {item}")]
    NonFinite { item: String, field: &'static str },

    #[error("branch {index} references unknown bus `{id}`")]
    UnknownBus { index: usize, id: String },

    #[error("branch {index} connects bus `{id}` to itself")]
    SelfLoop { index: usize, id: String },

    #[error("branch {index} has negative resistance {r}")]
    NegativeResistance { index: usize, r: f64 },

    #[error("branch {index} has zero impedance")]
    ZeroImpedance { index: usize },

    #[error("buses not reachable from the root: {0:?}")]
    NotConnected(Vec<String>),

    #[error("cycle detected: branch {index} closes a loop at bus `{id}`")]
    CycleDetected { index: usize, id: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid option: {0}")]
    InvalidOption(String),

    #[error("voltage collapse at node {node}: |V| = {magnitude:.6} below limit {limit}")]
    VoltageCollapse {
        node: usize,
        magnitude: f64,
        limit: f64,
    },

    #[error("no convergence after {} iterations (last delta {:e})", .history.len(), .history.last().copied().unwrap_or(f64::NAN))]
    MaxIterationsExceeded {
        last_state: Box<SweepState>,
        history: Vec<f64>,
    },

    #[error("reference solver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            Io { .. } | Parse { .. } | Schema(_) => ErrorKind::Input,
            VoltageCollapse { .. } | MaxIterationsExceeded { .. } | NoConvergence { .. } => {
                ErrorKind::Numerical
            }
            _ => ErrorKind::Validation,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
