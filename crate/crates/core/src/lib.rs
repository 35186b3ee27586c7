//! Causal identification on DAGs, structural-equation simulation with shared
//! counterfactual noise, and treatment-effect estimators from group means up
//! to orthogonalized Lasso inference.

pub mod dag;
pub mod data;
pub mod error;
pub mod estimators;
pub mod highdim;
pub mod linalg;
pub mod sem;
pub mod stats;

pub use error::EstimationError;
