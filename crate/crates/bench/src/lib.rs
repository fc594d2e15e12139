//! Shared fixtures for the criterion benchmarks.

use std::sync::Arc;

use mcf_core::cones::ConeProfile;
use mcf_core::flow::{Boundary, SolverConfig};
use mcf_core::{GridFunction, GridSpec};

/// Radial cone `β|x|` in dimension `n`.
pub fn cone(n: usize, beta: f64) -> ConeProfile {
    ConeProfile::radial(n, beta).expect("valid cone")
}

/// Cone plus a compact bump of the given height, on a stretched grid.
pub fn bumped_cone(k: &ConeProfile, nodes: usize, height: f64) -> (GridFunction, SolverConfig) {
    let grid = Arc::new(GridSpec::stretched(k.n(), 200.0, nodes, 3.0).expect("grid"));
    let u0 = GridFunction::from_radial_fn(grid.clone(), |r| k.eval_radial(r) + height * mcf_core::analysis::bump(r / 3.0)).expect("data");
    (u0, SolverConfig::new(grid, Boundary::Cone(k.clone())))
}
