//! Barriers: the static perturbation `w = k − |x|^{−α}`, the flow barrier `b`
//! with its rescalings `b^λ`, the max-subsolution `B`, and the heat-kernel
//! majorant used for hyperplanes.

mod heat;
mod lemma;
mod subsolution;

use std::sync::Arc;

use serde::Serialize;

pub use heat::{half_space_experiment, psi_identity_residual, psi_refinement, HalfSpaceConfig, HalfSpaceReport, HeatSupersolution, PsiIdentity};
pub use lemma::{
    evolution_equation_residuals, integrate_markers, lemma_barrier_flow, BarrierAttempt, BarrierFlowState,
    EvolutionResiduals, LemmaBarrier, LemmaBarrierConfig, MarkerConfig, MarkerPath,
};
pub use subsolution::{assemble_subsolution, DominanceReport, Subsolution, SubsolutionCheck};

use crate::analysis::{power_fit, DecayFit};
use crate::cones::ConeProfile;
use crate::error::{Error, Result};
use crate::geometry::{radial_mean_curvature, radial_speed, PolarJet};
use crate::grid::{GridFunction, GridSpec};
use crate::io::CsvTable;

const ANGULAR_SAMPLES: usize = 720;

/// `w = k − r^{−α}` sampled on a grid, with `H[w]` at every radius.
#[derive(Debug, Clone, Serialize)]
pub struct StaticBarrier {
    pub alpha: f64,
    #[serde(skip)]
    pub w: GridFunction,
    /// `min_θ H[w]` at every radial node.
    pub h_w: Vec<f64>,
    /// Smallest radius beyond which every sampled `H[w]` is positive.
    pub r0: Option<f64>,
    /// `min_θ r·H[k]` on the unit sphere.
    pub cone_margin: f64,
}

fn angles(k: &ConeProfile) -> Vec<f64> {
    if k.is_radial() {
        vec![0.0]
    } else {
        (0..ANGULAR_SAMPLES)
            .map(|j| j as f64 * std::f64::consts::TAU / ANGULAR_SAMPLES as f64)
            .collect()
    }
}

/// Exact jet of `w = k − c·r^{−α}` at `(r, θ)` for a planar cone.
fn w_jet(k: &ConeProfile, c: f64, alpha: f64, r: f64, theta: f64) -> PolarJet {
    let (g, g1, g2) = k.gamma_jet(theta);
    PolarJet {
        r,
        ur: g + c * alpha * r.powf(-alpha - 1.0),
        urr: -c * alpha * (alpha + 1.0) * r.powf(-alpha - 2.0),
        ut: r * g1,
        utt: r * g2,
        urt: g1,
    }
}

/// `(H, √(1+|Du|²)·H)` of `k − c·r^{−α}` at one point, by exact differentiation.
fn w_curvature(k: &ConeProfile, c: f64, alpha: f64, r: f64, theta: f64) -> (f64, f64) {
    match k.beta() {
        Some(beta) => {
            let ur = beta + c * alpha * r.powf(-alpha - 1.0);
            let urr = -c * alpha * (alpha + 1.0) * r.powf(-alpha - 2.0);
            (
                radial_mean_curvature(k.n(), r, ur, urr),
                radial_speed(k.n(), r, ur, urr),
            )
        }
        None => {
            let j = w_jet(k, c, alpha, r, theta);
            (j.mean_curvature(), j.speed())
        }
    }
}

fn cone_margin(k: &ConeProfile) -> f64 {
    angles(k)
        .iter()
        .map(|&t| k.scaled_curvatures(t).0)
        .fold(f64::INFINITY, f64::min)
}

/// Samples `w = k − r^{−α}` on a grid away from the origin and locates `r₀`.
pub fn static_barrier_w(k: &ConeProfile, alpha: f64, grid: Arc<GridSpec>) -> Result<StaticBarrier> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidInput(format!("alpha = {alpha}")));
    }
    if grid.r_min() <= 0.0 {
        return Err(Error::InvalidGrid("w is singular at the origin".into()));
    }
    let margin = cone_margin(k);
    if !(margin > 1e-12) {
        return Err(Error::Precondition(format!(
            "cone is not strictly mean convex: min r·H[k] = {margin:.3e}"
        )));
    }
    let w = GridFunction::from_polar_fn(grid.clone(), |r, t| k.eval_polar(r, t) - r.powf(-alpha))?;
    let th = angles(k);
    let h_w: Vec<f64> = grid
        .radial_nodes()
        .iter()
        .map(|&r| th.iter().map(|&t| w_curvature(k, 1.0, alpha, r, t).0).fold(f64::INFINITY, f64::min))
        .collect();
    let r0 = match h_w.iter().rposition(|&h| !(h > 0.0)) {
        None => Some(grid.r_min()),
        Some(i) if i + 1 < h_w.len() => Some(grid.radial_nodes()[i + 1]),
        Some(_) => None,
    };
    Ok(StaticBarrier {
        alpha,
        w,
        h_w,
        r0,
        cone_margin: margin,
    })
}

/// Power-law fit of `sup_θ |√(1+|Dw|²)H[w] − √(1+|Dk|²)H[k]|` against `r`
/// over the outer decade `[r_max/10, r_max]`.
pub fn wk_difference_fit(k: &ConeProfile, alpha: f64, r_max: f64) -> Result<DecayFit> {
    if !(alpha > 0.0 && r_max > 0.0) {
        return Err(Error::InvalidInput(format!("alpha = {alpha}, r_max = {r_max}")));
    }
    let th = angles(k);
    let radii: Vec<f64> = (0..=40).map(|i| r_max * 10f64.powf(-1.0 + i as f64 / 40.0)).collect();
    let diff: Vec<f64> = radii
        .iter()
        .map(|&r| {
            th.iter()
                .map(|&t| (w_curvature(k, 1.0, alpha, r, t).1 - w_curvature(k, 0.0, alpha, r, t).1).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    power_fit(&radii, &diff)
}

/// `b^λ(x) = λ·b(x/λ)`: exact on the scaled nodes.
pub fn scale_barrier(b: &GridFunction, lambda: f64) -> Result<GridFunction> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidInput(format!("lambda = {lambda}")));
    }
    let spec = b.spec();
    if spec.r_min() > 0.0 && spec.r_min() * lambda <= f64::MIN_POSITIVE {
        return Err(Error::Domain(format!("inner radius underflows at lambda = {lambda}")));
    }
    let scaled = Arc::new(spec.scaled(lambda)?);
    GridFunction::new(scaled, b.values().iter().map(|v| lambda * v).collect())
}

/// `b^λ(|x|)` for a radial barrier, or `None` outside its domain.
pub fn eval_scaled(b: &GridFunction, lambda: f64, r: f64) -> Option<f64> {
    let spec = b.spec();
    let s = r / lambda;
    if s < spec.r_min() || s > spec.r_max() {
        return None;
    }
    b.interpolate(s).ok().map(|v| lambda * v)
}

/// Barrier export: `r, k, barrier, H[barrier]` (radial barriers; polar ones
/// report the ray `θ = 0`).
pub fn barrier_table(k: &ConeProfile, barrier: &GridFunction, h: &[f64]) -> CsvTable {
    let spec = barrier.spec();
    let nt = spec.n_theta();
    let mut t = CsvTable::new(&["r[length]", "k[length]", "barrier[length]", "H_barrier[1/length]"]);
    for (i, &r) in spec.radial_nodes().iter().enumerate() {
        t.push(vec![r, k.eval_polar(r, 0.0), barrier.values()[i * nt], h[i]]);
    }
    t
}
