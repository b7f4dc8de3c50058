//! Semiclassical spectral analysis of critical energy levels for
//! Schrödinger operators P_h = -h^2 Δ + V.
//!
//! The crate computes eigenvalue windows of one-dimensional operators,
//! localized spectral sums built from band-limited test functions, and the
//! classical quantities (flows, periods, densities) that explain their
//! behavior as h → 0. The `detector` module inverts this: it classifies
//! energy levels and recovers local data of V at critical points.

pub mod classical;
pub mod detector;
pub mod error;
pub mod invariants;
pub mod jet;
pub mod polynomial;
pub mod potential;
pub mod quad;
pub mod quantum;
pub use quantum as quantum1d;
pub mod specdist;
pub mod sphere;
pub mod testfn;

pub use error::{Error, ErrorKind, Module, Result};
pub use polynomial::{Polynomial, Term};
pub use potential::{CriticalPointInfo, Extremum, Potential, PotentialKind, PotentialSpec, SeedGrid};
