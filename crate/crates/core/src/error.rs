//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violated a documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The network graph has no path between the named pair of nodes.
    #[error("graph is disconnected: no path from node {from} to node {to}")]
    Disconnected { from: usize, to: usize },

    /// Position regeneration never produced a connected network.
    #[error("no connected network after {attempts} regeneration attempts")]
    ConnectivityRetriesExhausted { attempts: usize },

    /// The Jacobi eigensolver exceeded its sweep budget.
    #[error("eigendecomposition did not converge within {sweeps} sweeps")]
    EigenNoConvergence { sweeps: usize },

    /// Absolute-map alignment needs at least three anchors.
    #[error("need at least 3 anchors, got {got}")]
    TooFewAnchors { got: usize },

    /// Anchor geometry is collinear or coincident; the similarity transform
    /// is not determined.
    #[error("degenerate anchor configuration (collinear or coincident)")]
    DegenerateAnchors,

    /// The error metric divides by the non-anchor count.
    #[error("every node is an anchor; localization error is undefined")]
    NoNonAnchorNodes,

    /// Two inputs that must describe the same network do not.
    #[error("mismatched inputs: {0}")]
    Mismatch(String),

    /// A figure was requested from a suite that lacks the cells it needs.
    #[error("missing cells for figure: {0}")]
    MissingCells(String),

    /// Malformed CSV or config input.
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
