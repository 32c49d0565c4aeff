//! Resilient multi-robot multi-target tracking.
//!
//! A team of robots tracks moving targets with range-bearing sensors in an
//! arena that hides sensing and communication danger zones. Zones are
//! unknown until they attack someone. Attacked robots learn the zone,
//! escape, recover, and (in resilient mode) share what they learned with
//! the rest of the communication group.
//!
//! The crate is organised bottom-up:
//!
//! - [`dynamics`]: linear robot/target motion and scripted target policies.
//! - [`zones`]: Gaussian danger zones, attack-probability fields and the
//!   erf-linearized chance-constraint margins.
//! - [`estimation`]: range-bearing EKF and covariance intersection.
//! - [`planner`]: group, single-robot and escape planning as a
//!   hinge-penalized bounded minimization over controls.
//! - [`attacks`]: attack sampling, recovery checks and knowledge sharing.
//! - [`sim`]: scenario configuration, the step loop, metrics and log export.
//! - [`validation`]: Monte-Carlo and brute-force self-checks.
//! - [`cli`]: the `rts` command-line front end.
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod attacks;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod estimation;
pub mod linalg;
pub mod planner;
pub mod sim;
pub mod special;
pub mod validation;
pub mod zones;

pub use error::{Error, Result};
pub use linalg::{Mat2, Vec2};
