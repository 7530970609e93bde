//! Maximal and sharp operators.

pub mod dyadic;
pub mod geometric;

pub use dyadic::{dyadic_maximal, dyadic_sharp};
pub use geometric::{
    geometric_maximal, geometric_sharp, GeometricFamily, PairBudget, RadiusMode, Shape, SharpOutput,
};
