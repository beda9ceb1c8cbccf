//! Co-clustering of mixed numeric/categorical data under an exact MAP
//! criterion.
//!
//! The pipeline is: read observations ([`dataset`]), discretize and group
//! variables ([`partition`]), hold the block model and its counts
//! ([`model`]), score it ([`criterion`]), search ([`optimizer`]) and explain
//! the result ([`report`]).

pub mod criterion;
pub mod dataset;
pub mod error;
pub mod model;
pub mod optimizer;
pub mod partition;
pub mod report;
pub mod synthetic;

pub use criterion::{Criterion, CriterionOptions, CriterionValue};
pub use dataset::{Dataset, Schema, Variable, VariableKind};
pub use error::{Error, Result};
pub use model::{verify_counts, CoclusterModel, Move};
pub use optimizer::{fit, FitResult, OptimizerConfig};
pub use partition::PartitionSet;
pub use report::CoclusterReport;
