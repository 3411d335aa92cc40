//! Parallel guided ejection search for minimizing the fleet size of
//! pickup-and-delivery routing problems with time windows, plus the
//! operation counters and fitting tools used to study its complexity.

pub mod model;
pub mod io;
pub mod profiler;
pub mod ges;
pub mod ring;
pub mod synthetic;
