//! Numerical building blocks: quadrature, ODE integration, grids, interpolation
//! and symmetric tridiagonal eigenproblems.

pub mod dop853;
pub mod grid;
pub mod interp;
pub mod quadrature;
pub mod tridiag;
