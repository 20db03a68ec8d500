//! Numerics for nonlinear functionals of random hyperspherical harmonics.

pub mod acceptance;
pub mod accum;
pub mod basis;
pub mod chaos;
pub mod diagram;
pub mod graphs;
pub mod error;
pub mod field;
pub mod rates;
pub mod stats;

pub use error::{Error, Result};
