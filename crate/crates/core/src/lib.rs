//! Radial simulator and decay-rate laboratory for the damped semilinear
//! wave equation `u_tt - Laplace(u) + a(x) u_t + |u|^{p-1} u = 0` with
//! `a(x) = a0 <x>^{-alpha}`, `0 <= alpha < 1`.
//!
//! The crate has three layers:
//!
//! * special functions and weight construction (`kummer`, `weights`):
//!   Kummer profiles `phi_{beta,eps}`, the damping potential `A_eps` with
//!   `Laplace(A_eps) ~ a`, and the space-time weights built from them;
//! * simulation and measurement (`model`, `solver`, `energetics`): a
//!   second-order radial leapfrog scheme plus weighted energy functionals;
//! * rate theory and verification (`decay`, `analysis`, `config`,
//!   `harness`): the predicted decay-rate classification, slope fitting of
//!   observed decay, and the experiment driver behind the CLI.

pub mod analysis;
pub mod config;
pub mod decay;
pub mod discrete;
pub mod energetics;
pub mod error;
pub mod harness;
pub mod kummer;
pub mod model;
pub mod solver;
pub mod weights;

pub use error::{Error, Result};
