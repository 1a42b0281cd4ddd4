//! Frank-Wolfe (conditional gradient) over strongly convex feasible sets,
//! together with the numerical checks needed to watch the method adapt to a
//! Hölderian error bound: per-iteration contraction and descent checks,
//! explicit rate envelopes, error-bound estimation and rate fitting.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: feasible sets with closed-form linear minimization oracles
//!   and a randomized strong-convexity certificate.
//! * [`objectives`]: smooth convex objectives, smoothness bounds and 1-D
//!   restrictions used by the line search.
//! * [`solver`]: the Frank-Wolfe iteration and its per-iteration trace.
//! * [`analysis`]: rate constants, inequality checkers, error-bound estimation
//!   and rate fitting over traces.
//! * [`problems`]: canned instances with analytic ground truth.
//! * [`harness`] and [`cli`]: problem-spec files, experiment execution and the
//!   `fwheb` command line.
//!
//! All geometry is Euclidean.

// `!(a <= b)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod objectives;
pub mod problems;
pub mod solver;

pub use error::{Error, Result};

/// Dense column vector used for points, gradients and directions.
pub type Vector = nalgebra::DVector<f64>;
