//! Numerical engine for the two-parameter family of complex polynomial
//! vector fields `z' = z^{k+1} + eps1*z + eps0` and its disk normal form
//! `z' = P(z)/(1 + A z^k)`.
//!
//! The crate computes labeled equilibria and their periods, the polygon of
//! periods ("periodgon") and the attached star domain, flow-traced
//! separatrix graphs and Douady-Sentenac invariants, homoclinic-loop
//! bifurcation events, the full bifurcation atlas over the slit parameter
//! disk, and the finite-jet reduction to the disk normal form.

pub mod atlas;
pub mod disk;
pub mod flow;
pub mod geom;
pub mod params;
pub mod periodgon;
pub mod poly;
pub mod roots;
pub mod series;
pub mod tol;
pub mod verify;

pub use num_complex::Complex64;

/// Shorthand used throughout the crate.
pub type Cx = num_complex::Complex64;
