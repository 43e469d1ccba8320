//! Quantum memristor models: operators, Hamiltonians, open-system dynamics,
//! hysteresis analysis and a scenario runner.

pub mod analysis;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod model;
pub mod ops;

pub use error::{Error, Result};
