//! Private and stable prediction over finite hypothesis classes.
//!
//! Learners return value functions `x ↦ Pr[output = 1]` rather than a
//! single hypothesis. Exact predictors enumerate subsets and dichotomies;
//! sampled predictors draw one prediction at a time. The [`verify`] module
//! checks stability and privacy by exhaustive enumeration of neighboring
//! samples.

pub mod classes;
pub mod complexity;
pub mod error;
pub mod experiments;
pub mod mechanisms;
pub mod predictor;
pub mod private;
pub mod rng;
pub mod stable;
pub mod verify;

pub use classes::{ClassKind, Dichotomy, HypothesisClass, Labeling, LabeledSample, Point};
pub use complexity::{Condition, Constants, PreconditionReport, Preconditions};
pub use error::{Error, Result};
pub use predictor::{MixtureMode, MixturePredictor, RandomizedPredictor};
pub use private::{FlipConfig, MainConfig, RealizableConfig};
pub use stable::StableConfig;
pub use verify::{GridMode, NeighborGrid};
