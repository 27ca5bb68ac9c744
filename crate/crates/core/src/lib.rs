//! Exact dyadic combinatorics and the verification machinery built on it:
//! stopping-time decompositions, dilation norm bounds, tree-system
//! rearrangements, wavelet truncations and multiplier series experiments.
//!
//! All measures and norms are exact (`BigRational`, or `a + b√2` where
//! half-integer powers of two appear). Floats only show up in the
//! series experiments that are numeric by nature, and in display columns.

pub mod calibration;
pub mod dilation;
pub mod divergence;
pub mod error;
pub mod interval;
pub mod json;
pub mod linear;
pub mod num;
pub mod pointset;
pub mod sample;
pub mod series;
pub mod step;
pub mod stopping;
pub mod tree;
pub mod wavelet;

pub use error::{Error, Result};
pub use interval::{DyadicInterval, IntervalCollection, Relation, ShiftedGrid};
pub use linear::PwLinear;
pub use num::{Quad2, Rational};
pub use pointset::PointSet;
pub use step::StepFunction;
