//! Blind super-resolution of point sources by vectorized Hankel lifting.
//!
//! The measurements `y[j] = b_j* x_j` of an `s × n` data matrix are inverted by
//! minimizing the nuclear norm of the block-Hankel lift `H(X)` (see [`solver`]).
//! Frequencies are then read off the noise subspace of `H(X)ᵀ` with a MUSIC
//! pseudospectrum ([`estimate`]), and the orientations and amplitudes follow
//! from a least-squares fit.
//!
//! [`bench`] holds the Monte Carlo harnesses (phase transitions, SNR sweeps)
//! and [`report`] the CSV / JSON / SVG emitters shared with the CLI.

pub mod bench;
mod dense;
mod error;
pub mod estimate;
pub mod lift;
pub mod model;
pub mod report;
pub mod solver;

pub use dense::DataMatrix;
pub use error::{Error, Result};
pub use faer::c64;
pub use faer::{Col, Mat};
