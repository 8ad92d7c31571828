//! Numerical laboratory for inhomogeneous Diophantine approximation on
//! curves: resonant point enumeration, the successive-minima construction,
//! brute-force counting/measure oracles, coverage (ubiquity) measurements and
//! box-counting dimension estimates for the planar approximation sets.

pub mod classes;
pub mod construct;
pub mod counting;
pub mod dimension;
pub mod error;
pub mod forms;
pub mod funcspace;
pub mod interval;
pub mod planar;
pub mod resonant;
pub mod ubiquity;

pub use error::{CoreError, Result};
pub use interval::IntervalSet;
