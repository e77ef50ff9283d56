//! Hinge-based exact penalty method for stochastic optimization with
//! weakly convex inequality constraints.
//!
//! The crate is organised around the lifecycle of a constrained problem:
//!
//! - [`oracles`]: stochastic oracle contract and a catalog of synthetic
//!   instances with exact ground-truth evaluators.
//! - [`penalty`]: hinge / squared-hinge penalty calculus and derived constants.
//! - [`estimator`]: the MSVR tracking estimator for constraint and inner values.
//! - [`solver`]: single-loop solvers for plain (Setting I) and coupled
//!   compositional (Setting II) objectives, plus parameter schedules.
//! - [`certify`]: Moreau-envelope stationarity, multiplier extraction,
//!   nearly-ε-KKT certificates and regularity diagnostics.
//!
//! ```
//! use hinge_penalty::oracles::make_exemplar_1d;
//! use hinge_penalty::penalty::{PenaltyKind, PenaltyObjective};
//!
//! let problem = make_exemplar_1d(0.0);
//! let phi = PenaltyObjective::new(&problem, 4.0, PenaltyKind::Hinge).unwrap();
//! let x = hinge_penalty::vector(&[2.0]);
//! assert!((phi.value_exact(&x).unwrap() - 10.0).abs() < 1e-12);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod error;
pub mod estimator;
mod numeric;
pub mod oracles;
pub mod penalty;
pub mod solver;
pub mod stream;

pub use error::{Error, Result};

/// Dense real vector used for points and subgradients.
pub type Vector = nalgebra::DVector<f64>;

/// Dense real matrix (constraint Jacobians, Gram matrices).
pub type Matrix = nalgebra::DMatrix<f64>;

/// Builds a [`Vector`] from a slice.
pub fn vector(values: &[f64]) -> Vector {
    Vector::from_column_slice(values)
}

pub use certify::{kkt_certificate, KktCertificate, ProxControls};
pub use estimator::MsvrState;
pub use oracles::{ConstrainedProblem, Evaluation, InstanceSpec, Oracle};
pub use penalty::{PenaltyKind, PenaltyObjective};
pub use solver::{solve, RunResult, SolverConfig};
