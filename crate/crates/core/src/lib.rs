//! Sampled-data observers: a continuous-time observer driven by an
//! inter-sample output predictor that is reset to each new measurement.
//!
//! The crate builds the two certified designs (high-gain observers for
//! triangular globally Lipschitz plants, Luenberger observers for linear
//! plants), computes their maximum certified sampling period, and simulates
//! them against zero-order-hold and discrete-time baselines.

// `!(x > 0.0)` is the NaN-rejecting form used for every parameter check.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod baseline;
pub mod design;
pub mod exec;
pub mod harness;
pub mod linalg;
pub mod plant;
pub mod sim;
