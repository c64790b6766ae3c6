//! Data-driven analysis and control of discrete-time LTI systems from one or
//! several finite experiments.
//!
//! - [`hankel`]: Hankel and mosaic-Hankel matrices, (collective) persistency of excitation.
//! - [`willems`]: data dictionaries, rank conditions, trajectory synthesis and
//!   membership, data-driven simulation.
//! - [`ident`]: identification from a record with missing samples.
//! - [`lqr`]: LQR gains from input/state experiments, with data-side certificates.
//! - [`lti`]: model-based reference computations.

pub mod error;
pub mod hankel;
pub mod ident;
pub mod io;
pub mod linalg;
pub mod lqr;
pub mod lti;
pub mod willems;

pub use error::{Error, Result};
pub use hankel::{MosaicHankel, SignalSegment};
pub use ident::{CorruptedTrajectory, IdentificationResult, IdentifyOptions};
pub use lqr::{ExperimentBatch, LqrOptions, LqrSolution, LqrWeights};
pub use lti::{LtiSystem, StateTrajectory};
pub use willems::{DataDictionary, IoSegment, WindowSpec};
