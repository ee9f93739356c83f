use thiserror::Error;

use crate::tree::VertexId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("vertex budget of {budget} exceeded (needed {needed})")]
    Capacity { budget: usize, needed: usize },
    #[error("edge list contains a cycle through vertex {0}")]
    CycleDetected(usize),
    #[error("vertex {0} has more than one parent")]
    MultipleParents(usize),
    #[error("vertex {0} is not reachable from the root")]
    NotConnected(usize),
    #[error("vertex {0} lies below the horizon but has no child")]
    InteriorLeaf(usize),
    #[error("invalid tree description: {0}")]
    InvalidTree(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("invalid symbol: {0}")]
    InvalidSymbol(String),
    #[error("{0} is not an ancestor of {1}")]
    NotAnAncestor(VertexId, VertexId),
    #[error("weight at vertex {0} is zero")]
    ZeroWeight(VertexId),
    #[error("weights do not satisfy the child-sum normalization (first violation at vertex {0})")]
    NotNormalized(VertexId),
    #[error("weights must be positive reals for this operation (vertex {0})")]
    NotPositive(VertexId),
    #[error("no vertex has {needed} fully stored levels below it")]
    HorizonTooShallow { needed: usize },
    #[error("computation would read vertices beyond the stored horizon")]
    TruncationLoss,
    #[error("depth slices are incomplete (vertex {0} has unstored children)")]
    IncompleteSlices(VertexId),
    #[error("dense budget of {budget} vertices exceeded ({n} vertices)")]
    BudgetExceeded { budget: usize, n: usize },
    #[error("power iteration did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error("series does not converge at radius {radius}: {reason}")]
    DivergentSeries { radius: f64, reason: String },
    #[error("vertex {0} is not in the tree")]
    UnknownVertex(usize),
}
