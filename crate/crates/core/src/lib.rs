//! Virtual magnetic field guidance for threading a rope end through closed
//! loops, plus a kinematic knot-tying simulator built on it.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod field;
pub mod geometry;
pub mod insertion;
pub mod knot;
pub mod linking;
pub mod perturbation;

pub use error::{Error, Result};
pub use field::FieldParams;
pub use geometry::{Loop, LoopFrame, Vec3};
pub use insertion::{InsertionOutcome, InsertionParams, StopRule, Termination, TrajectoryRecord};
