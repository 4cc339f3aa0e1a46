//! Equilibrium states of uniformly hyperbolic model systems.
//!
//! The crate builds Carathéodory reference measures on unstable leaves of the
//! cat map, the solenoid, a linear horseshoe and subshifts of finite type,
//! pushes them forward and averages them, and checks the resulting measures
//! against exact symbolic oracles (transfer matrices, periodic orbits).
//!
//! Everything here is `no_std` with `alloc`; file formats and the command line
//! live in the `hypermeasure-cli` crate.
#![no_std]
// `!(a < b)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]
// `Float` supplies the math methods without std; whenever std is linked
// (tests, dev-dependencies) the inherent methods win and the import looks
// unused, hence the local `allow`s.

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod caratheodory;
pub mod dimension;
pub mod equilibrium;
mod error;
pub mod linalg;
pub mod pressure;
pub mod refmeasure;
pub mod rng;
pub mod systems;

pub use error::{Error, Result};
