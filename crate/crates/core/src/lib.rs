//! Threshold effects in time-delay estimation, viewed through a random
//! energy model.
//!
//! * [`model`]: validated parameters, the rectangular pulse, the grid.
//! * [`analytic`]: closed-form free energies, phase diagrams and bounds.
//! * [`simulate`]: exact and surrogate Monte Carlo of the receiver.
//! * [`experiments`]: sweeps comparing the two, and their reports.

// `!(a < b)` is deliberate throughout: NaN must fail range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod error;
pub mod experiments;
pub mod model;
pub mod numeric;
pub mod paramfile;
pub mod simulate;

pub use error::{Error, Result};
pub use model::{AmplitudePolicy, AmplitudeRange, Channel, GridSpec, RawParams, SystemParams};
