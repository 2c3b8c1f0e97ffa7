//! Simulator for the unidirectional porous-medium equation with a blow-up
//! nonlinearity,
//!
//! ```text
//!     d/dt beta(u) = ( lambda * Lap u + gamma(u) )_+    in (0, L) x (0, T),
//!     du/dn = 0                                         on the boundary,
//!     u(0) = u0 > 0,
//! ```
//!
//! where `gamma(s) = s^(p-1)` and `beta'(s) = s^(-alpha)` form a power-law
//! nonlinearity pair. The positive part on the right-hand side makes the
//! evolution unidirectional: `u` never decreases in time.
//!
//! The equation is solved by an implicit time discretization in which each
//! step minimizes a nonconvex functional `J` over the obstacle set
//! `{u >= u_n}`, with a mu-regularization term restoring coercivity. The
//! constraint multiplier `xi` (a selection of the subdifferential of the
//! indicator of `{du/dt >= 0}`) is extracted from the Euler-Lagrange
//! residual at each step.
//!
//! Module map:
//! - [`model`]: the nonlinearity pair and derived scalar functions.
//! - [`grid`]: 1D cell-centered Neumann mesh with an exact
//!   summation-by-parts Laplacian/energy pair.
//! - [`energy`]: the per-step objective, its gradient, the multiplier
//!   residual, and the submodularity gap.
//! - [`optimizer`]: projected gradient descent over the obstacle set with
//!   a KKT certificate.
//! - [`stepper`]: time evolution, mu-continuation, blow-up detection.
//! - [`ode_ref`]: constant-in-space reference ODEs and the blow-up-time
//!   quadrature.
//! - [`diagnostics`]: executable versions of the comparison principles,
//!   sandwich bounds, and weak-form inequalities.

pub mod diagnostics;
pub mod energy;
mod error;
pub mod grid;
pub mod model;
pub mod ode_ref;
pub mod optimizer;
pub mod stepper;

pub use error::{Error, Result};
