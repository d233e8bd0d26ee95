//! Radial Schrödinger-Maxwell systems on constant-curvature model spaces.
//!
//! The coupled system
//!
//! ```text
//!   -Delta_g u + u + e u phi = lambda alpha(x) f(u)
//!   -Delta_g phi + phi       = q u^2
//! ```
//!
//! on an n-dimensional Euclidean or hyperbolic space form reduces, for
//! radially symmetric data, to a pair of weighted ODEs in the geodesic
//! distance r. This crate discretizes that reduction with a conservative
//! finite-volume operator, eliminates phi through the Maxwell sub-solve,
//! and finds critical points of the resulting one-variable energy:
//! global minimizers (Poisson regime), box-constrained minimizers
//! (oscillatory truncation scheme), and mountain-pass saddle points
//! (sublinear two-solution regime). Scenario drivers in [`experiments`]
//! package these into reproducible verdict-bearing runs; the `smform`
//! binary exposes them as subcommands.

pub mod cli;
pub mod energy;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod grid;
pub mod invariants;
pub mod maxwell;
pub mod model;
pub mod quad;
pub mod sampling;
pub mod solvers;
pub mod tridiag;

pub use error::{Error, Result};
