//! Solver for mixed random linear equations with `k` hidden components.
//!
//! Each response is an exact linear function of its covariate vector, but the
//! component that produced it is unobserved. The solver runs in two stages:
//!
//! 1. [`init::tensor_init`] — a method-of-moments estimate. Second- and
//!    third-order response-weighted moments are assembled, the second moment
//!    is used to whiten the third into a low-dimensional orthogonally
//!    decomposable tensor, and a robust tensor power method extracts one
//!    eigenpair per component.
//! 2. [`altmin::altmin_run`] — alternating minimization that refines the
//!    estimate by re-assigning each sample to its best-fitting component and
//!    re-solving per-component least squares until the labels stop changing.
//!
//! [`model`] generates synthetic problem instances, [`metrics`] scores
//! estimates against the ground truth by permutation-matched error.
//!
//! The crate is `no_std` + `alloc`; everything is deterministic given the
//! seeds threaded through the APIs. IO, serialization and the experiment
//! harness live in the companion `mixlin-cli` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod altmin;
pub mod error;
pub mod init;
mod linalg;
pub mod metrics;
pub mod model;
pub mod moments;
pub mod rng;
pub mod tensor;
pub mod tensor_power;
pub mod whitening;

pub use error::Error;
pub use model::{Dataset, DifficultyReport, MixtureParams};
pub use tensor::Tensor3;

// public API surfaces nalgebra types; re-export for downstream crates
pub use nalgebra;

/// Crate-wide result type.
pub type Result<T> = core::result::Result<T, Error>;
