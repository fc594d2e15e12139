//! Numerical laboratory for graphical mean curvature flow out of mean convex
//! cones: expanding solitons, perturbed flows, barrier constructions and the
//! checks that tie them together.

pub mod analysis;
pub mod barriers;
pub mod cones;
pub mod error;
pub mod expander;
pub mod experiments;
pub mod flow;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod ode;
pub mod stencil;
pub mod suite;

pub use error::{Error, Result};
pub use geometry::{geometric_state, mean_curvature, radial_rhs, CurvatureField, GeometricState};
pub use grid::{GridFunction, GridSpec};
