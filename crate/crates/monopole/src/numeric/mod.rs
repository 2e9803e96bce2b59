//! Self-contained numerical kernels: quadrature, adaptive integration of
//! ODE initial value problems, and complex polynomial utilities.
//!
//! Nothing in here knows about gauge theory; the modules exist so the rest
//! of the crate has one tested implementation of each primitive instead of
//! ad-hoc copies with slightly different tolerances.

pub mod ode;
pub mod poly;
pub mod quad;
