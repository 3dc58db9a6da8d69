//! Spectral machinery for the fractional heat equation on (-1, 1) with
//! exterior control.
//!
//! The operator is the integral fractional Laplacian of order s in (0,1)
//! restricted to functions vanishing outside (-1,1). The crate computes
//! its Dirichlet eigenpairs with an exact piecewise-linear Galerkin
//! assembly, evaluates the singular-integral operator and the exterior
//! normal derivative pointwise, solves the forward and backward
//! evolutions by eigenfunction series with closed-form time integrals,
//! and synthesizes exterior null controls by inverting a truncated
//! observability Gramian on an open set away from the interval.
//!
//! The controllability threshold sits at s = 1/2: the reciprocal
//! eigenvalue series converges exactly when 2s > 1, and the Gramian
//! conditioning, control cost trends and observability quotients expose
//! the dichotomy numerically.
//!
//! Modules
//! - [`spectral`]: eigenpairs, eigenvalue asymptotics, closed-form
//!   approximate eigenfunctions, the eigenpair disk cache.
//! - [`nonlocal`]: pointwise operators, exterior traces, Gram data,
//!   Gagliardo seminorms.
//! - [`evolution`]: modal forward/dual solvers, exterior Dirichlet
//!   problem, duality pairing.
//! - [`control`]: Gramian synthesis, verification, trajectory steering,
//!   summability diagnostics, experiment reports.

pub mod control;
pub mod error;
pub mod evolution;
pub mod nonlocal;
pub mod quad;
pub mod spectral;

pub use error::{Error, Result};

/// Default tolerances and sizes shared by the library and the CLI.
pub mod defaults {
    /// Subintervals of the uniform grid.
    pub const GRID: usize = 512;
    /// Modes kept in series truncations.
    pub const MODES: usize = 20;
    /// Control horizon.
    pub const HORIZON: f64 = 1.0;
    /// Eigensolver relative residual bound.
    pub const EIGEN_RESIDUAL_TOL: f64 = 1e-8;
    /// Conjugate-gradient relative residual.
    pub const CG_TOL: f64 = 1e-12;
    /// Relative tolerance of the singular-density quadratures.
    pub const QUAD_REL_TOL: f64 = 1e-8;
}
