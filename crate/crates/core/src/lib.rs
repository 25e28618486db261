//! Adaptive control of a scalar linear plant whose actuation path is a lossy
//! Bernoulli channel.
//!
//! The crate is `no_std` (with `alloc`) and contains only the numerical core:
//!
//! - [`jmls`]: coupled Riccati value iteration for the two-mode jump system,
//!   giving mode gains, value coefficients and the optimal average cost.
//! - [`estimation`]: regularized least-squares estimates of the plant, the
//!   empirical channel reliability, and their confidence intervals.
//! - [`ofu`]: the episodic optimistic controller (episode triggers, grid
//!   search for the optimistic parameter, linear feedback).
//! - [`plant`]: the lossy-channel plant, seeded channel/noise streams, and
//!   trajectory/regret bookkeeping for the learning and oracle controllers.
//! - [`bounds`]: stability margins, suprema over the parameter box, and every
//!   constant appearing in the finite-time regret bound, plus per-run checks
//!   of the concentration events.
//!
//! File formats, the CLI and the multi-run experiment drivers live in the
//! `ucb-ncs` companion crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod bounds;
pub mod error;
pub mod estimation;
pub mod jmls;
pub mod model;
pub mod ofu;
pub mod plant;

pub use error::{Error, Result};
pub use model::{CandidateTheta, CostWeights};
