//! `B = max{U − m, b^λ − δ/2}`, the subsolution that lifts a solution
//! starting below the cone.

use std::sync::Arc;

use serde::Serialize;

use super::eval_scaled;
use crate::cones::ConeProfile;
use crate::error::{Error, Result};
use crate::expander::ExpanderProfile;
use crate::flow::FlowRun;
use crate::geometry::radial_speed;
use crate::grid::{GridFunction, GridSpec};
use crate::stencil::Weights3;

#[derive(Debug, Clone)]
pub struct Subsolution {
    pub profile: Arc<ExpanderProfile>,
    pub cone: ConeProfile,
    /// The unscaled barrier `b`, defined outside `B_{R₁}`.
    pub barrier: GridFunction,
    pub lambda: f64,
    pub m: f64,
    pub delta: f64,
    /// `m₁ = −inf(b − k)`.
    pub m1: f64,
    pub r1: f64,
    /// `|u₀ − k| < δ/2` outside `B_R`.
    pub r_far: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    Expander,
    Barrier,
}

/// Pointwise residuals `B_t − √(1+|DB|²)H[B]` on the smooth pieces of `B`.
#[derive(Debug, Clone, Serialize)]
pub struct SubsolutionCheck {
    pub expander_branch_max: f64,
    pub barrier_branch_max: f64,
    pub expander_points: usize,
    pub barrier_points: usize,
    /// Nodes whose stencil straddles the crease (not checked).
    pub crease_points: usize,
}

impl SubsolutionCheck {
    pub fn max_residual(&self) -> f64 {
        self.expander_branch_max.max(self.barrier_branch_max)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DominanceReport {
    pub passed: bool,
    /// `min (u − B)` over all snapshots and nodes.
    pub min_margin: f64,
    pub worst_t: f64,
    pub worst_r: f64,
}

/// Builds `B` after checking `λm₁ > m` and `λR₁ > R`.
pub fn assemble_subsolution(
    profile: Arc<ExpanderProfile>,
    k: &ConeProfile,
    barrier: &GridFunction,
    lambda: f64,
    m: f64,
    delta: f64,
    r_far: f64,
) -> Result<Subsolution> {
    if barrier.spec().is_polar() {
        return Err(Error::InvalidInput("the barrier must be radial".into()));
    }
    if !(delta > 0.0 && lambda > 0.0 && m >= 0.0) {
        return Err(Error::InvalidInput(format!("parameter error: λ = {lambda}, m = {m}, δ = {delta}")));
    }
    let spec = barrier.spec();
    let m1 = spec
        .radial_nodes()
        .iter()
        .zip(barrier.values())
        .map(|(&r, &b)| k.eval_radial(r) - b)
        .fold(f64::NEG_INFINITY, f64::max);
    let r1 = spec.r_min();
    if !(lambda * m1 > m) {
        return Err(Error::InvalidInput(format!("parameter error: λm₁ = {} ≤ m = {m}", lambda * m1)));
    }
    if !(lambda * r1 > r_far) {
        return Err(Error::InvalidInput(format!("parameter error: λR₁ = {} ≤ R = {r_far}", lambda * r1)));
    }
    Ok(Subsolution {
        profile,
        cone: k.clone(),
        barrier: barrier.clone(),
        lambda,
        m,
        delta,
        m1,
        r1,
        r_far,
    })
}

impl Subsolution {
    pub fn expander_branch(&self, r: f64, t: f64) -> Result<f64> {
        let u = if t == 0.0 {
            self.cone.eval_radial(r)
        } else {
            self.profile.evaluate_flagged(r, t)?.0
        };
        Ok(u - self.m)
    }

    pub fn barrier_branch(&self, r: f64) -> Option<f64> {
        eval_scaled(&self.barrier, self.lambda, r).map(|v| v - 0.5 * self.delta)
    }

    /// `B(r, t)` and the active branch.
    pub fn eval_branch(&self, r: f64, t: f64) -> Result<(f64, Branch)> {
        let u = self.expander_branch(r, t)?;
        Ok(match self.barrier_branch(r) {
            Some(b) if b > u => (b, Branch::Barrier),
            _ => (u, Branch::Expander),
        })
    }

    pub fn eval(&self, r: f64, t: f64) -> Result<f64> {
        self.eval_branch(r, t).map(|v| v.0)
    }

    /// The barrier branch stops at `λ·r_max(b)`; grids must not reach past it.
    fn check_domain(&self, spec: &GridSpec) -> Result<()> {
        if spec.is_polar() || spec.n() != self.profile.n {
            return Err(Error::InvalidInput("subsolution grids are radial in the expander's dimension".into()));
        }
        let outer = self.lambda * self.barrier.spec().r_max();
        if spec.r_max() > outer * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "grid reaches r = {} beyond the barrier domain {outer}",
                spec.r_max()
            )));
        }
        Ok(())
    }

    pub fn sample(&self, spec: Arc<GridSpec>, t: f64) -> Result<GridFunction> {
        self.check_domain(&spec)?;
        let vals = spec
            .radial_nodes()
            .iter()
            .map(|&r| self.eval(r, t))
            .collect::<Result<Vec<f64>>>()?;
        GridFunction::new(spec, vals)
    }

    /// Residuals on nodes whose three-point stencil lies on one branch with a
    /// strict gap to the other.
    pub fn check(&self, spec: &Arc<GridSpec>, times: &[f64]) -> Result<SubsolutionCheck> {
        self.check_domain(spec)?;
        let r = spec.radial_nodes();
        let n = spec.n();
        let mut out = SubsolutionCheck {
            expander_branch_max: 0.0,
            barrier_branch_max: 0.0,
            expander_points: 0,
            barrier_points: 0,
            crease_points: 0,
        };
        for &t in times {
            if !(t > 0.0) {
                return Err(Error::Domain(format!("t = {t}: the check needs t > 0")));
            }
            let nodes: Vec<(f64, Branch, f64)> = r
                .iter()
                .map(|&x| {
                    let u = self.expander_branch(x, t)?;
                    Ok(match self.barrier_branch(x) {
                        Some(b) if b > u => (b, Branch::Barrier, b - u),
                        Some(b) => (u, Branch::Expander, u - b),
                        None => (u, Branch::Expander, f64::INFINITY),
                    })
                })
                .collect::<Result<_>>()?;
            for i in 0..r.len() - 1 {
                let stencil: Vec<usize> = if i == 0 {
                    if r[0] != 0.0 {
                        continue;
                    }
                    vec![0, 1]
                } else {
                    vec![i - 1, i, i + 1]
                };
                let branch = nodes[i].1;
                if stencil.iter().any(|&j| nodes[j].1 != branch || !(nodes[j].2 > 1e-12)) {
                    out.crease_points += 1;
                    continue;
                }
                let speed = if i == 0 {
                    2.0 * n as f64 * (nodes[1].0 - nodes[0].0) / (r[1] * r[1])
                } else {
                    let w = Weights3::at(r[i], [r[i - 1], r[i], r[i + 1]]);
                    let v = [nodes[i - 1].0, nodes[i].0, nodes[i + 1].0];
                    radial_speed(n, r[i], w.apply_d1(v), w.apply_d2(v))
                };
                match branch {
                    Branch::Expander => {
                        let res = self.profile.time_derivative(r[i], t)? - speed;
                        out.expander_branch_max = out.expander_branch_max.max(res);
                        out.expander_points += 1;
                    }
                    Branch::Barrier => {
                        out.barrier_branch_max = out.barrier_branch_max.max(-speed);
                        out.barrier_points += 1;
                    }
                }
            }
        }
        Ok(out)
    }

    /// `u(·,t) ≥ B(·,t) − tol` at every snapshot of a flow run.
    pub fn dominance(&self, run: &FlowRun, tol: f64) -> Result<DominanceReport> {
        let spec = run.grid().clone();
        self.check_domain(&spec)?;
        let mut rep = DominanceReport {
            passed: true,
            min_margin: f64::INFINITY,
            worst_t: 0.0,
            worst_r: 0.0,
        };
        for s in &run.snapshots {
            for (&x, &u) in spec.radial_nodes().iter().zip(s.u.values()) {
                let margin = u - self.eval(x, s.t)?;
                if margin < rep.min_margin {
                    rep.min_margin = margin;
                    rep.worst_t = s.t;
                    rep.worst_r = x;
                }
            }
        }
        rep.passed = rep.min_margin >= -tol;
        Ok(rep)
    }
}
