//! Constrained Bayesian optimization for problems whose objective and
//! constraints are only observable at feasible points.
//!
//! The crate provides:
//!
//! * Matérn 5/2 Gaussian-process regression with per-observation noise ([`gp`]),
//! * expectation-propagation fitting of heterogeneous-likelihood GPs and of
//!   probit GP classifiers ([`ep`]),
//! * the EI / POF / EIC / DPOF / EICB acquisition family with the POB and
//!   EMUB exploration functions ([`acquisition`]),
//! * a multi-start bounded maximizer for acquisitions ([`acq_opt`]),
//! * the synthetic benchmark suite and observability wrappers ([`problems`]),
//! * the sequential optimization driver, trajectories and metrics ([`driver`]).

pub mod acq_opt;
pub mod acquisition;
pub mod bounds;
pub mod driver;
pub mod ep;
pub mod error;
pub mod expr;
pub mod figures;
pub mod gp;
pub mod math;
pub mod optim;
pub mod problems;
pub mod seeding;
pub mod sobol;
mod sobol_table;
pub mod trajectory;

pub use bounds::Bounds;
pub use error::{Error, Result};
