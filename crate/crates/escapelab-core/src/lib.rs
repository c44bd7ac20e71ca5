//! Escape rates and survivor-set dimensions for open dynamical systems.
//!
//! A closed system here is a subshift of finite type together with a locally
//! constant potential, or a conformal graph directed Markov system projecting
//! such a shift to a limit set on the line. Opening the system means removing
//! a shrinking sequence of cylinder unions (a "hole") and tracking what the
//! leak does to the leading spectral data:
//!
//! * the escape rate of the Gibbs measure through the hole, normalized by the
//!   measure of the hole, converges to an explicit constant determined by
//!   whether the hole shrinks to a periodic point;
//! * the Hausdorff dimension of the set of points that never fall in drops
//!   below the closed-system dimension by an amount with the same structure,
//!   scaled by the Lyapunov exponent.
//!
//! The crate computes both sides of these laws: exact finite-level spectral
//! quantities on one side, and the predicted asymptotic constants on the
//! other, plus the supporting machinery (induced first-return systems, large
//! deviation rates, ball-to-cylinder sandwiches) needed to move the laws from
//! cylinder holes to metric balls and from full shifts to induced ones.
//!
//! Everything is `no_std` + `alloc`; IO and file formats live in the
//! companion `escapelab` crate.

#![no_std]
#![forbid(unsafe_code)]
#![warn(missing_docs)]

extern crate alloc;

pub mod diagnostics;
pub mod dimension;
pub mod escape;
pub mod gdms;
pub mod holes;
pub mod induce;
mod linalg;
pub mod symbolic;
pub mod thermo;

pub use symbolic::{Letter, Subshift, Word};
