//! Multiple rank-1 lattice sampling for trigonometric approximation in
//! weighted Korobov spaces.
//!
//! The pipeline runs bottom-up: [`weights`] defines the subset weights and
//! norm weight, [`cross`] enumerates the weighted hyperbolic cross,
//! [`lattice`] handles single rank-1 lattices, [`construction`] builds an
//! aliasing-free family of lattices, [`approx`] reconstructs Fourier
//! coefficients from samples, [`testbed`] provides test functions and rate
//! experiments, and [`lowerbound`] witnesses the single-lattice error floor in
//! two dimensions.

pub mod approx;
pub mod construction;
pub mod cross;
pub mod error;
pub mod lattice;
pub mod lowerbound;
pub mod primes;
pub mod rng;
pub mod testbed;
pub mod weights;

pub use error::{Error, Result};
