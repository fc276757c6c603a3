//! Multi-instruction navigation agent built from first principles.
//!
//! The crate is `no_std` (with `alloc`) and contains every algorithmic piece:
//!
//! * [`numcore`]: dense `f64` tensors on a reverse-mode differentiation tape,
//!   plus finite-difference gradient checking.
//! * [`navsim`]: deterministic graph worlds with panoramic views, geodesics and
//!   expert (shortest-path) trajectories.
//! * [`langgen`]: templated instructions that mention or elide different hops of
//!   a trajectory, the closed vocabulary, and dataset records.
//! * [`agent`]: the LSTM encoder/decoder policy with visual and textual
//!   attention, parameter-free aggregation of several instructions, and
//!   bilinear action scoring.
//! * [`trainer`]: maximum-likelihood training for the single-instruction and
//!   joint paradigms, Adam, clipping, and the binary checkpoint codec.
//! * [`metrics`]: TL / NE / SR / SPL, the two evaluation settings, and exact
//!   conditional-entropy computations on enumerable joints.
//!
//! File IO, JSON and the command line live in the companion `leo` crate.
#![no_std]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod agent;
pub mod error;
pub mod langgen;
pub mod metrics;
pub mod navsim;
pub mod numcore;
pub mod rng;
pub mod trainer;

pub use error::{Error, Result};
