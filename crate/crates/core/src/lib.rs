//! Data-driven verification of unknown discrete-time stochastic systems.
//!
//! The crate works purely from sampled transitions `(x, y)` with `y ~ f(y | x, a)`:
//!
//! * [`kde`] builds a product-Gaussian conditional density estimator of `f(y | x)`,
//!   its analytic `x`-derivatives and closed-form integrals over hyper-rectangles.
//! * [`lipschitz`] estimates the Lipschitz constant of the conditional density by
//!   maximising `|d f̂ / d x_j|` over a search grid, averages over independent
//!   iterations and attaches the asymptotic error envelope.
//! * [`abstraction`] partitions the state space into a uniform grid and builds
//!   interval MDPs from data (empirical frequencies with Chebyshev intervals, or
//!   kernel estimates) or from a known Gaussian model.
//! * [`verify`] runs interval value iteration for PCTL path formulas and
//!   synthesises min/max strategies.
//!
//! The crate is `no_std` with `alloc`; the `std` feature (default) enables runtime
//! SIMD detection in the matrix kernels, and `parallel` spreads independent work
//! items over a rayon pool without changing any result.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod abstraction;
pub mod error;
pub mod geometry;
pub mod kde;
pub mod linalg;
pub mod lipschitz;
pub mod math;
mod par;
pub mod pctl;
pub mod rng;
pub mod systems;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{Rect, TensorGrid};
pub use rng::{stream_rng, StreamRng, StreamTag};
