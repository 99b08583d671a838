//! Numerical core for single-resonance eigenvalue studies of the matrix
//! Schrodinger operator `-Delta + V(x)` with Neumann conditions on a box.
//!
//! The crate is organised around one pipeline:
//!
//! 1. [`lattice`] enumerates the dual lattice and classifies points into
//!    non-resonance / single-resonance / higher-resonance domains.
//! 2. [`potential`] holds matrix potentials as Fourier data and extracts the
//!    separable directional part `P(s)` together with the off-ray coupling
//!    table.
//! 3. [`sturm1d`] solves the matrix Sturm-Liouville comparison problem
//!    `T(P(s))` in an orthonormal cosine basis.
//! 4. [`refsolver`] is the ground-truth oracle: a full tensor cosine-Galerkin
//!    discretisation of `-Delta + V`, with overlap coefficients against the
//!    comparison eigenfunctions.
//! 5. [`asymptotics`] evaluates the iterated eigenvalue corrections built from
//!    the off-ray couplings and checks them against the oracle.
//!
//! Everything here is pure computation over `f64` and integer lattice data.
//! The crate is `no_std`-compatible (with `alloc`); enable the `libm` feature
//! when building without `std`.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` rejects NaN where `x <= 0.0` would accept it; index-style
// loops mirror the matrix algebra they implement.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("spectra-core needs either the `std` or the `libm` feature");

extern crate alloc;

#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod asymptotics;
pub mod classify;
pub mod eigen;
pub mod error;
pub mod float;
pub mod geometry;
pub mod lattice;
pub mod params;
pub mod potential;
pub mod refsolver;
pub mod rng;
pub mod sturm1d;

pub use error::CoreError;
pub use geometry::BoxGeometry;
pub use lattice::{Direction, LatticeVector};
pub use params::AsymptoticParams;
