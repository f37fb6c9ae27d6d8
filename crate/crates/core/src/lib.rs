//! Reduced-order mechanics for tendon-actuated linked-element tails.
//!
//! A tail is a chain of rigid bones joined by hourglass-shaped elastic joints
//! and bent by tendons routed through loops at four azimuths. This crate holds
//! the algorithmic core:
//!
//! * [`geometry`]: joint profiles, morphology specs and the node/bar/spring
//!   discretisation of a tail.
//! * [`elements`]: bar and rotational-spring potentials and their
//!   finite-difference stiffness matrices.
//! * [`solver`]: global assembly, constraints, tendon load decomposition and
//!   the incremental Euler solver.
//! * [`tail`]: tendon path lengths, force/displacement calibration and the
//!   uniform-bend pose predictor.
//! * [`analysis`]: planar collapse, tip metrics and group statistics
//!   (one-way ANOVA, Tukey HSD, normalized RMS error).
//! * [`oracle`]: independent equilibrium by direct energy minimisation.
//!
//! The crate is `no_std` and only needs `alloc`. Units are millimetres,
//! newtons, N·mm, radians and MPa throughout.
#![cfg_attr(not(test), no_std)]
// NaN must fail range checks, so `!(x > 0.0)` is deliberate
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod analysis;
pub mod elements;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod math;
pub mod oracle;
pub mod roots;
pub mod solver;
pub mod tail;

pub use error::{Error, Result};
