//! Grids, finite differences, fully nonlinear operators and manufactured
//! solutions.

pub mod fd;
pub mod grid;
pub mod manufactured;
pub mod operator;
pub mod symmat;
pub mod theta;

pub use fd::{fd_derivatives, Derivatives};
pub use grid::{Grid, GridDomain, GridFunction};
pub use operator::{
    check_operator_class, evaluate_operator, pucci_extremal, ClassCheck, ClassReport, Coefficient, OperatorKind,
    OperatorSpec, Side,
};
pub use symmat::SymMatrix;
pub use manufactured::{manufactured, Jet, Manufactured};
pub use theta::{homogenize, oscillation_theta, ThetaConfig, ThetaMode, ThetaReport};
