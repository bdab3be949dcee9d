//! Numerical building blocks: quadrature, root finding, ODE integration,
//! finite differences and small least-squares problems.

pub mod diff;
pub mod lsq;
pub mod ode;
pub mod quad;
pub mod roots;
