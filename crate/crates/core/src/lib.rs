//! Numerical machinery for positive solutions of Lichnerowicz-type
//! semilinear equations with nonlinear Neumann boundary conditions on
//! discretized manifolds with boundary: mixed (Zaremba) eigenproblems,
//! explicit super/subsolution construction, and the monotone iteration
//! scheme over domain exhaustions.

pub mod barriers;
pub mod error;
pub mod fields;
pub mod iteration;
pub mod linalg;
pub mod mesh;
pub mod operators;
pub mod spectral;

pub use error::{CoreError, Result};
pub use fields::{
    BoundaryNonlinearity, Exponents, PowerTerm, ProblemSpec, ScalarField,
};
pub use mesh::{BoundaryClass, DiscreteDomain, Exhaustion, GrowthPolicy};
