//! Weighted shifts on truncated rooted directed trees.
//!
//! A [`DirectedTree`] is stored up to a depth horizon; a [`WeightSystem`]
//! attaches vertex weights `beta` (defining the Hilbert space norm) and edge
//! weights `lambda` (defining the shift). On top of that the crate provides:
//!
//! * the shift and its adjoint, with the per-vertex supremum formula for
//!   `‖Sᵏ‖` ([`shift`]),
//! * the multiplier algebra of coefficient sequences under Cauchy
//!   convolution ([`multiplier`]),
//! * bounded point evaluations, evaluation kernels and path radii
//!   ([`analysis`]),
//! * a dense brute-force oracle for cross-checking ([`oracle`]),
//! * a battery of named property checks ([`checks`]).
//!
//! Every quantity that depends on the infinite tree is computed on the
//! stored truncation and carries a [`TruncationDiagnostic`].

pub mod analysis;
pub mod checks;
mod error;
mod json;
pub mod multiplier;
pub mod oracle;
pub mod shift;
mod sum;
pub mod tree;
pub mod weights;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use sum::NeumaierSum;
pub use tree::{DirectedTree, Path, VertexId};
pub use weights::{WeightSystem, WeightedTree};

use serde::Serialize;

/// Horizon sensitivity of a truncated computation: the value at the full
/// horizon `N`, the same quantity computed as if the horizon were `N/2`, and
/// their absolute gap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TruncationDiagnostic {
    pub at_horizon: f64,
    pub at_half_horizon: f64,
    pub gap: f64,
}

impl TruncationDiagnostic {
    pub fn new(at_horizon: f64, at_half_horizon: f64) -> Self {
        Self {
            at_horizon,
            at_half_horizon,
            gap: (at_horizon - at_half_horizon).abs(),
        }
    }
}

/// A value together with a flag raised when part of the computation would
/// have needed vertices beyond the stored horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct Flagged<T> {
    pub value: T,
    pub truncation_loss: bool,
}
