//! Stable graphs, residue assignments and Möbius gluing data.

pub mod graph;
pub mod moebius;
pub mod multiseries;
pub mod random;
pub mod residues;

use thiserror::Error;

use crate::ncalg::NcError;

pub use graph::{Branch, GraphDoc, GraphReport, Modulus, StableGraph};
pub use moebius::{
    closed_fiber_nodes, compose_path, contraction_parameter_check, fixed_points_multiplier, phi_matrix,
    verify_fixed_points, ContractionReport, FixedPoints, MoebiusMap,
};
pub use multiseries::{variables, MultiSeries, EXACT};
pub use residues::{apply_move, available_moves, residue_assignment, GraphMove, ResidueAssignment};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CurveError {
    #[error("graph is disconnected")]
    Disconnected,
    #[error("unstable vertices: {0:?}")]
    Unstable(Vec<String>),
    #[error("unknown vertex {0}")]
    UnknownVertex(String),
    #[error("unknown branch {0}")]
    UnknownBranch(String),
    #[error("invalid graph: {0}")]
    Invalid(String),
    #[error("invalid move: {0}")]
    InvalidMove(String),
    #[error("contracting {0} would shrink the loop")]
    ShrinksLoop(String),
    #[error("path is not reduced at step {0}")]
    NotReduced(usize),
    #[error("path is not continuous at step {0}")]
    Discontinuous(usize),
    #[error("no modulus for branch {0}")]
    MissingModulus(String),
    #[error("degenerate moduli: {0}")]
    Degenerate(String),
    #[error("fixed-point lifting failed: {0}")]
    LiftingFailed(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error(transparent)]
    Series(#[from] NcError),
    #[error("document error: {0}")]
    Document(String),
}
