//! Numerical toolkit for diagonal-flow orbits on the space of unimodular
//! lattices in `R^d`.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: weight vectors, weighted quasi-norms and flows, sphere
//!   projections, direction sets and the counting regions.
//! * [`lattice`]: unimodular bases, the unipotent embedding `u(θ)`, exact
//!   point enumeration, successive minima and the α-function.
//! * [`siegel`]: Siegel transforms of finite indicator combinations and the
//!   θ-slice average identity.
//! * [`counting`]: weighted Diophantine solution counts, closed-form Birkhoff
//!   time integrals and the count/integral sandwich.
//! * [`ergodic`]: dyadic averaging machinery for effective pointwise rates and
//!   Monte Carlo estimates of double equidistribution integrals.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod counting;
pub mod error;
pub mod ergodic;
pub mod geometry;
pub mod lattice;
pub mod rng;
pub mod siegel;
pub mod stats;

pub use error::{Error, Result};
