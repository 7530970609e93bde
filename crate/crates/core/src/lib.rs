//! Dyadic harmonic analysis primitives and a harness for checking weighted
//! and mixed-norm Sobolev estimates on manufactured solutions.
//!
//! Modules, bottom up:
//!
//! * [`filtration`]: anisotropic dyadic partitions, conditional averages and
//!   Calderon-Zygmund stopping times.
//! * [`operators`]: dyadic and geometric maximal and sharp functions.
//! * [`weights`]: Muckenhoupt and beta-type constants, weighted and mixed norms.
//! * [`calculus`]: grid functions, finite differences, fully nonlinear
//!   operators, the oscillation functional and manufactured solutions.
//! * [`harness`]: the estimate catalog, refinement studies and reports.
//! * [`config`]: suite files.

pub mod calculus;
pub mod config;
pub mod error;
pub mod expr;
pub mod filtration;
pub mod harness;
pub mod operators;
pub mod par;
pub mod weights;

pub use error::{Error, Result};
