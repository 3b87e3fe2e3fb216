//! Percolation geometry on the triangular lattice.
//!
//! Supercritical Bernoulli site percolation, studied through the objects
//! that control its isoperimetry: right-most paths and their hexagonal
//! interfaces, Bernoulli first-passage times, the boundary norm and the
//! time-constant norm, the Wulff construction, Cheeger constants of
//! sampled clusters, and near-critical roundness diagnostics.
//!
//! The crate is organized bottom-up:
//!
//! * [`lattice`] — axial coordinates, the six-direction order, the
//!   hexagonal dual, tilted boxes.
//! * [`percolation`] — seeded configurations, cluster labeling, crossing
//!   predicates, chemical distance.
//! * [`rightmost`] — the right-most path calculus and the path/interface
//!   bijection.
//! * [`fpp`] — passage times, geodesics, growth balls, disjoint
//!   crossings, separating circuits.
//! * [`boundary_norm`] — the right-boundary distance `b(x,y)`, its exact
//!   small-scale search, the bypass upper bound and the `β` estimator.
//! * [`wulff`] — ρ-lengths, Wulff crystals, Hausdorff distance,
//!   roundness metrics.
//! * [`cheeger`] — exact, enumerated and annealed isoperimetric minima
//!   on sampled clusters.
//! * [`nearcrit`] — correlation length and the near-critical roundness
//!   program.
//! * [`cli`] — the command-line front end and record formats.
//!
//! A narrative guide with runnable snippets lives in `book/`; the
//! snippets are compiled and run as doc-tests via the [`guide`] module.

pub mod lattice;
pub mod percolation;
pub mod rightmost;
pub mod fpp;
pub mod boundary_norm;
pub mod wulff;
pub mod cheeger;
pub mod nearcrit;
pub mod cli;
pub mod svg;

mod maxflow;
mod pool;

pub mod guide;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty window")]
    EmptyWindow,
    #[error("vertex {0:?} outside the configuration window")]
    OutOfWindow(crate::lattice::Axial),
    #[error("empty cluster")]
    EmptyCluster,
    #[error("proxy undefined: {0}")]
    ProxyUndefined(&'static str),
    #[error("box does not fit the window with the required margin")]
    InsufficientMargin,
    #[error("invalid path at index {index}: {reason}")]
    InvalidPath { index: usize, reason: String },
    #[error("interface precondition violated near hexagon {0:?}")]
    BadInterface(crate::lattice::Axial),
    #[error("disconnected input")]
    Disconnected,
    #[error("endpoints not connected by an open path")]
    NotConnected,
    #[error("search budget exceeded")]
    BudgetExceeded,
    #[error("event failure: {0}")]
    EventFailure(&'static str),
    #[error("conditioning failed: origin not in the cluster proxy")]
    ConditioningFailed,
    #[error("instance too large for exact enumeration (limit {0})")]
    ExactLimit(usize),
    #[error("unbounded half-plane intersection: directions do not span the plane")]
    Unbounded,
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
