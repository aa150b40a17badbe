//! Decomposition of the exceptional-edge part of a dense regular graph,
//! split near two cliques, into edge-disjoint localized exceptional path
//! systems, with verifiers for every construction step.

pub mod assembly;
pub mod candidates;
pub mod error;
pub mod exceptional;
pub mod generate;
pub mod graph;
pub mod instance;
pub mod matchings;
pub mod numeric;
pub mod partition;
pub mod report;
pub mod slicing;
pub mod verify;

pub use assembly::{run_pipeline, Certificate};
pub use error::{Error, Failure, Result};
pub use graph::{Edge, Graph, PathSystem};
pub use instance::{Instance, Params, Regime};
pub use partition::Partition;
