//! Exact analysis, simulation and sequence planning for 10-to-2 `|H⟩`
//! magic-state distillation, alongside the 15-to-1 routine.

pub mod circuit;
pub mod dense;
pub mod enumerator;
pub mod error;
pub mod frame;
pub mod monte_carlo;
pub mod pauli;
pub mod planner;
pub mod poly;
pub mod routines;

pub use error::{Error, Result};
