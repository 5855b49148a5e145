//! ε-consensus-halving for a constant number of agents: valuation oracles,
//! solvers, and the Tucker / Borsuk-Ulam / consensus-halving reductions.

pub mod borsuk_ulam;
pub mod grw;
pub mod harness;
pub mod intervals;
pub mod kuhn;
pub mod lp;
pub mod reductions;
pub mod solvers;
pub mod tucker;
pub mod valuations;

pub use borsuk_ulam::{BuFlags, BuFunction};
pub use grw::{GrwSession, PlStructure, QueryModel};
pub use intervals::{partition_pieces, CutPartition, IntervalError, IntervalSet, Sign, Q};
pub use kuhn::{Barycentric, KuhnSimplex};
pub use reductions::ChInstance;
pub use solvers::SolveReport;
pub use tucker::{TuckerInstance, TuckerSolution};
pub use valuations::{PiecewiseConstantValuation, Valuation, ValuationError, ValuationFlags};
