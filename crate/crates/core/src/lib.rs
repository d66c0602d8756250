//! Numerical workbench for Minkowski norms and single-chart Finsler metrics.

pub mod jets;
pub mod expr;
pub mod minkowski;
pub mod sampling;
pub mod tensor;
pub mod indicatrix;
pub mod finsler;
pub mod transport;
