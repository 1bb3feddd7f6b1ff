//! Softmax choice under deadlines: behavioral random choice processes with
//! their axiom checks and exact identification, and the neuro-computational
//! side built on value-based drift-diffusion comparisons, Gibbs priors and
//! the Metropolis-DDM exploration algorithm.

pub mod axioms;
pub mod chain;
pub mod choice;
pub mod dataset;
pub mod ddm;
pub mod error;
pub mod evidence;
pub mod experiments;
pub mod identify;
pub mod softmax;

pub use choice::{ChoiceDistribution, Menu, TimeGrid, TimePoint, Universe};
pub use dataset::{ChoiceDataset, DatasetKind};
pub use error::{Error, Result};
pub use softmax::{limit_rule, softmax_prob, SoftmaxParams};
