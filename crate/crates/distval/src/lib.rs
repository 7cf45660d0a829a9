//! Numerical laboratory for distributional point values and delta sequences:
//! an expression DSL, mollifier/delta-sequence constructions, adaptive
//! pairings, point-value evaluators for several delta-sequence families,
//! scaling-limit probes, and L∞ characterizations via positive test functions.

pub mod accel;
pub mod boundedness;
pub mod distribution;
pub mod expr;
pub mod limitlab;
pub mod mollifier;
pub mod pairing;
pub mod par;
pub mod pointvalue;
pub mod quad;
pub mod report;
pub mod scenario;
