//! Oracle-based online learning: finite concept classes, realizability and
//! ERM oracles with query accounting, generic and structure-exploiting
//! learners, lower-bound adversaries, and exact combinatorial analysis tools.

pub mod adversaries;
pub mod analysis;
pub mod core;
pub mod error;
pub mod learners;
pub mod oracles;
pub mod structured;

pub use error::{Error, Result};
