//! Maximum-weight matchings on sparse random graphs through the cavity
//! method.
//!
//! The crate covers exact solvers and message passing on finite graphs
//! ([`cavity`]), the recursive distributional equation for the limiting
//! message law ([`rde`]), limit predictions and finite-graph estimates
//! ([`asymptotics`]), and a randomized rounding scheme built on universal
//! cover scores ([`rounding`]). Seeded batch runs live in [`experiments`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod cavity;
pub mod cover;
pub mod error;
pub mod experiments;
mod fft;
pub mod generators;
pub mod graph;
pub mod io;
pub mod laws;
pub mod rde;
pub mod rng;
pub mod rounding;

pub use error::{Error, Result};
pub use graph::{Matching, WeightedGraph};
pub use laws::{DegreeLaw, WeightLaw};
pub use rde::CdfGrid;
