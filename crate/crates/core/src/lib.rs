//! Numerical toolkit for the quantum no-deleting principle.
//!
//! Deleting machines are modelled as linear maps on small product spaces
//! ([`machines`]). On top of that engine the crate computes the N-to-M
//! deletion quality bound ([`deletion`]), the fidelities of the conditional
//! deleter ([`fidelity`]), the inner-product obstruction for non-orthogonal
//! alphabets ([`nogo`]) and the no-signalling analysis with two shared
//! singlets ([`signalling`]). [`report`] turns the results into JSON, CSV or
//! text tables.

pub mod config;
pub mod deletion;
pub mod error;
pub mod fidelity;
pub mod hilbert;
pub mod machines;
pub mod nogo;
pub mod report;
pub mod sampling;
pub mod signalling;

pub use error::{Error, Result};
