//! Multitarget tracking with generalized labeled multi-Bernoulli (GLMB)
//! filters and their simple-labeled-correlation (SLC) reformulation.
//!
//! * [`glmb`] runs the classical recursion on `(index, label set)` weights.
//! * [`slc`] runs the same recursion on label-set weights plus per-set
//!   correlation weights, and converts losslessly to and from [`glmb`].
//! * [`correlation`] measures how strongly two targets are correlated.
//! * [`oracle`] evaluates everything by brute force on a grid.
//! * [`sim`] generates scenarios, runs the filters and scores them.
//!
//! See `examples/` for one runnable program per capability.

pub mod assignment;
pub mod association;
pub mod birth;
pub mod correlation;
pub mod error;
pub mod glmb;
pub mod hypothesis;
pub mod lrfs;
pub mod numeric;
pub mod oracle;
pub mod single_target;
pub mod slc;
pub mod sim;
pub mod snapshot;

pub use birth::{LmbBirth, SlcBirthModel, SpatialTable};
pub use error::{Error, Result};
pub use glmb::GlmbDensity;
pub use hypothesis::{HypothesisIndex, IndexStep, Mta};
pub use lrfs::{Label, LabelSet, LabeledFiniteSet, LabeledState};
pub use single_target::{ClutterModel, GaussianComponent, MotionModel, SensorModel, SpatialPdf};
pub use slc::{Estimate, SlcDensity};
