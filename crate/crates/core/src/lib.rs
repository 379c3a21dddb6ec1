//! Capacity versus power-transfer trade-offs for a small-signal transistor
//! two-port driven by a Gaussian source.

pub mod circuit;
pub mod error;
pub mod grid;
pub mod optim;
pub mod oracle;
pub mod pareto;
pub mod quad;
pub mod roots;
pub mod shell;
pub mod spectrum;

pub use error::{Error, Result};
