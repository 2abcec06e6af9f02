//! Labelled transition systems whose branching is weighted by effects.

pub mod algebra;
pub mod bisim;
pub mod distribution;
pub mod error;
pub mod json;
pub mod laws;
pub mod lts;
pub mod quantum;
pub mod random;

pub use error::{Error, Result};
