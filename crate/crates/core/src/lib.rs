//! Potential theory and exclusion processes on finite weighted graphs.
//!
//! * [`graph`]: weighted graphs, example families, open balls and exhaustions.
//! * [`potential`]: harmonic solves, effective resistance, exit times, trace
//!   networks and stationary density profiles.
//! * [`exclusion`]: configurations, generators, stationary and transient laws,
//!   exact event-driven simulation.
//! * [`harness`]: local observables, block partitions and numerical checks of
//!   the ergodicity inequalities, plus the Monte Carlo decay experiment.

pub mod exclusion;
pub mod graph;
pub mod harness;
pub mod linalg;
pub mod potential;
pub mod rng;

pub use exclusion::{BoundarySpec, Configuration, ExclusionSystem, MeasureSpec, Transition};
pub use graph::{Family, GraphExhaustion, Vertex, WeightedGraph};
pub use potential::{DensityProfile, HarmonicField, ScalingReport, TraceNetwork};
