//! Symmetric exclusion dynamics, conservative and boundary-driven.
//!
//! A swap across `xy` fires at rate `c_xy` when exactly one endpoint is
//! occupied; a reservoir at `a` creates a particle at rate `lambda_plus(a)`
//! and removes one at rate `lambda_minus(a)`.

mod boundary;
mod config;
mod generator;
mod measure;
mod sim;
mod system;

use thiserror::Error;

use crate::graph::Vertex;

pub use boundary::BoundarySpec;
pub use config::Configuration;
pub use generator::{
    generator_matrix, hyperplane_generator, marginals, stationary_distribution, stationary_residual,
    transient_distribution, Generator, DEFAULT_STATE_CAP, DENSE_STATE_LIMIT,
};
pub use measure::{detailed_balance_check, radon_nikodym_ratio, MeasureSpec};
pub use sim::{simulate, Event, Integral, Observer, RateTree, SimOptions, Snapshots, Trajectory};
pub use system::{ExclusionSystem, Transition};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExclusionError {
    #[error("boundary set is empty")]
    EmptyBoundary,
    #[error("vertex {0} listed twice in the boundary")]
    DuplicateBoundaryVertex(Vertex),
    #[error("unknown vertex {0}")]
    UnknownVertex(Vertex),
    #[error("reservoir rates at vertex {vertex} must be positive and finite")]
    RateNonpositive { vertex: Vertex },
    #[error("boundary vertices {0} and {1} are adjacent")]
    BoundaryEdgePresent(Vertex, Vertex),
    #[error("state space of {sites} sites exceeds the cap of {cap}")]
    StateSpaceTooLarge { sites: usize, cap: usize },
    #[error("generator is not irreducible; restrict a conservative system to a particle-number hyperplane")]
    NotIrreducible,
    #[error("operation needs a conservative system")]
    NotConservative,
    #[error("particle number {k} out of range for {n} sites")]
    KOutOfRange { k: usize, n: usize },
    #[error("marginal at vertex {0} is 0 or 1")]
    DegenerateMarginal(Vertex),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
