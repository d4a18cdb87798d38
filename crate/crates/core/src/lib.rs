//! Learning a planner's hidden cost direction from the transport plans they
//! choose, and reusing it to plan new situations.
//!
//! The pipeline: a balanced transportation problem is reduced to an LP over
//! the interior plan cells ([`reduction`]); each observed plan is a vertex of
//! that LP's feasible region ([`lp`]); the pair of constraints meeting at the
//! vertex yields a weighted observation vector from the fixed constraint
//! spectrum ([`spectrum`]); observation vectors are accumulated into a unit
//! estimate of the objective direction ([`estimator`]), which then proposes
//! plans for fresh situations. [`simulation`] replays the whole loop against a
//! simulated planner.

pub mod error;
pub mod estimator;
pub mod fixtures;
pub mod io;
pub mod lp;
pub mod model;
pub mod reduction;
pub mod simulation;
pub mod spectrum;

pub use error::{Error, Result};
pub use lp::{ConstraintPair, Solution, Vertex};
pub use model::{Dms, PlanCost, TransportInstance, TransportPlan};
pub use reduction::{ReducedLpp, ReducedObjective, Unlv};
pub use estimator::{EstimateState, Observation};
pub use simulation::{ExperimentConfig, ExperimentResult};
