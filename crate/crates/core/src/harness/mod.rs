//! Local observables, block partitions, and numerical checks of the
//! inequalities behind local ergodicity.
//!
//! Exact checks enumerate `{0,1}^V` on small graphs; the density-based
//! checks sample densities; [`ergodicity_experiment`] estimates exceedance
//! probabilities of time-integrated local fields by simulation.

mod averaging;
mod boundary;
mod bundle;
mod ensembles;
mod experiment;
mod forms;
mod partition;
mod spectral;
mod stats;
pub mod suites;

use thiserror::Error;

use crate::exclusion::ExclusionError;
use crate::graph::GraphError;
use crate::potential::PotentialError;

pub use averaging::{averaging_decomposition, averaging_identity};
pub use boundary::{verify_boundary_lemmas, BoundaryLemmaReport, LemmaCheck, DEFAULT_DENSITY_SAMPLES};
pub use bundle::{u_tilde, Anchor, Bundle, GlobalAverage, UContext, UFields, MAX_BALL};
pub use ensembles::{
    block_average_gap, canonical_expectation, hypergeometric_pmf, two_block_comparison, two_block_sup_by_enumeration,
    verify_equivalence_of_ensembles, verify_two_block_bound, EnsembleRow, EnsembleTable, TwoBlockComparison,
    TwoBlockRow, TwoBlockTable, ENUMERATION_LIMIT, TWO_BLOCK_LIMIT,
};
pub use experiment::{
    boundary_experiment, ergodicity_experiment, select_probes, BoundaryExperimentConfig, BoundaryReport,
    BoundaryRow, ExhaustionFamily, ExperimentConfig, ExperimentReport, ExperimentRow, InitialState, ProbeRow, TimeWeight,
};
pub use forms::{
    dirichlet_comparison, min_eigenvalue_by_count, mpl_psd_check, swap_form, MplCheck, FORM_STATE_CAP,
};
pub use partition::{build_partition, Partition};
pub use spectral::{spectral_estimate, spectral_trend, SpectralEstimate, SpectralRow, SpectralTrend};
pub use stats::{clopper_pearson_zero, wilson_interval, ExceedanceEstimate};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("ball of {size} vertices exceeds the enumeration cap of {cap}")]
    BallTooLarge { size: usize, cap: usize },
    #[error("ball of {ball} vertices holds fewer than two blocks of size {block}")]
    BallTooSmall { ball: usize, block: usize },
    #[error("inconsistent partition: {0}")]
    InconsistentPartition(String),
    #[error("not a partition: {0}")]
    NotAPartition(String),
    #[error("particle number {k} out of range for {n} sites")]
    KOutOfRange { k: usize, n: usize },
    #[error("blocks have sizes {0} and {1}")]
    UnequalSizes(usize, usize),
    #[error("state space of {sites} sites exceeds the cap of {cap}")]
    StateSpaceTooLarge { sites: usize, cap: usize },
    #[error("measure has a zero weight; the generator cannot be symmetrized")]
    NonSymmetrizable,
    #[error("at least one trajectory is required")]
    InsufficientTrajectories,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Exclusion(#[from] ExclusionError),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
