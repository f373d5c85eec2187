//! Self-contained numerical kernels: dense linear algebra, root bracketing,
//! Gauss-Legendre quadrature, simplex geometry, nonnegative least squares,
//! and a small dense linear-programming solver.
//!
//! Everything here is deterministic: fixed iteration orders, no
//! platform-dependent reductions, and seeded generators only where the caller
//! passes one in.

pub mod bisect;
pub mod linalg;
pub mod lp;
pub mod nnls;
pub mod quadrature;
pub mod simplex_geom;
