//! Heat-kernel majorant for graphs that start below a hyperplane near
//! infinity, and the identity behind it:
//! `∂tΨ − ΔΨ − |∇Ψ|² = ⟨X,ν⟩²/(4t²)` for `Ψ = −(n/2)log t − |X|²/(4t)`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::cones::ConeProfile;
use crate::error::{Error, Result};
use crate::expander::{solve_expander_profile, ExpanderProfile, ShootingConfig};
use crate::flow::{evolve, Boundary, FlowRun, Scheme, SnapshotSchedule, SolverConfig, SolverSettings, TimeStepPolicy};
use crate::grid::{GridFunction, GridSpec};
use crate::stencil::{radial_derivatives, Weights3};

/// `aΦ(X,t) + ε` with `Φ(x,t) = (4πt)^{−n/2} e^{−|x|²/(4t)}`. The amplitude is
/// stored as `log a` since it is typically astronomically large.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HeatSupersolution {
    pub n: usize,
    pub log_amplitude: f64,
    pub epsilon: f64,
}

impl HeatSupersolution {
    pub fn phi(n: usize, x2: f64, t: f64) -> f64 {
        (4.0 * PI * t).powf(-(n as f64) / 2.0) * (-x2 / (4.0 * t)).exp()
    }

    /// `Ψ = log Φ + (n/2)log 4π = −(n/2)log t − |x|²/(4t)`.
    pub fn psi(n: usize, x2: f64, t: f64) -> f64 {
        -(n as f64) / 2.0 * t.ln() - x2 / (4.0 * t)
    }

    /// Smallest `a ≥ 0` with `aΦ(X,t₀) + ε ≥ u` on the graph of `u`.
    pub fn calibrate(u: &GridFunction, t0: f64, epsilon: f64) -> Result<Self> {
        if !(t0 > 0.0) {
            return Err(Error::Domain(format!("t0 = {t0}")));
        }
        let spec = u.spec();
        let n = spec.n();
        let nt = spec.n_theta();
        let mut log_a = f64::NEG_INFINITY;
        for (k, &v) in u.values().iter().enumerate() {
            if v > epsilon {
                let r = spec.radial_nodes()[k / nt];
                let lphi = Self::psi(n, r * r + v * v, t0) - n as f64 / 2.0 * (4.0 * PI).ln();
                log_a = log_a.max((v - epsilon).ln() - lphi);
            }
        }
        Ok(HeatSupersolution {
            n,
            log_amplitude: log_a,
            epsilon,
        })
    }

    pub fn majorant(&self, r: f64, u: f64, t: f64) -> f64 {
        let lphi = Self::psi(self.n, r * r + u * u, t) - self.n as f64 / 2.0 * (4.0 * PI).ln();
        (self.log_amplitude + lphi).exp() + self.epsilon
    }
}

/// `D(Ψ) − ⟨X,ν⟩²/(4t²)` along a radial run.
#[derive(Debug, Clone, Serialize)]
pub struct PsiIdentity {
    pub times: Vec<f64>,
    #[serde(skip)]
    pub residual: Vec<Vec<f64>>,
    pub sup_residual: f64,
    pub min_d_psi: f64,
    pub sup_target: f64,
}

/// Evaluates `D(Ψ) = ∂tΨ − g^{ij}Ψ_{;ij} − g^{ij}Ψ_iΨ_j` by finite differences
/// on the snapshots of `run` with times in `window`. The time derivative is
/// taken along the normal motion: the graph derivative at fixed `x` minus
/// the tangential drift `u_t·u_r·Ψ_r/W²`.
pub fn psi_identity_residual(run: &FlowRun, window: (f64, f64)) -> Result<PsiIdentity> {
    let spec = run.grid().clone();
    if spec.is_polar() {
        return Err(Error::InvalidInput("the identity check runs on radial grids".into()));
    }
    let h = spec.max_spacing();
    if h > 0.25 * window.0.sqrt() {
        return Err(Error::Resolution(format!(
            "Φ is too peaked at t = {} for spacing {h}; use t ≥ {}",
            window.0,
            (4.0 * h).powi(2)
        )));
    }
    let n = spec.n();
    let nf = n as f64;
    let r = spec.radial_nodes();
    let m = r.len();
    let snaps = &run.snapshots;
    let mut out = PsiIdentity {
        times: Vec::new(),
        residual: Vec::new(),
        sup_residual: 0.0,
        min_d_psi: f64::INFINITY,
        sup_target: 0.0,
    };
    for l in 1..snaps.len().saturating_sub(1) {
        let t = snaps[l].t;
        if t < window.0 || t > window.1 {
            continue;
        }
        let tw = Weights3::at(t, [snaps[l - 1].t, t, snaps[l + 1].t]);
        let u = snaps[l].u.values();
        let (ur, urr, _) = radial_derivatives(r, u);
        let psi: Vec<f64> = (0..m).map(|i| HeatSupersolution::psi(n, r[i] * r[i] + u[i] * u[i], t)).collect();
        let (pr, prr, _) = radial_derivatives(r, &psi);
        let mut row = Vec::with_capacity(m - 1);
        for i in 0..m - 1 {
            let ut = tw.apply_d1([snaps[l - 1].u.values()[i], u[i], snaps[l + 1].u.values()[i]]);
            let w2 = 1.0 + ur[i] * ur[i];
            let dpsi_x = -nf / (2.0 * t) + (r[i] * r[i] + u[i] * u[i]) / (4.0 * t * t) - u[i] * ut / (2.0 * t);
            let lap = if r[i] == 0.0 {
                nf * prr[i]
            } else {
                prr[i] / w2 + (nf - 1.0) * pr[i] / (r[i] * w2) - pr[i] * ur[i] * urr[i] / (w2 * w2)
            };
            let d = dpsi_x - ut * pr[i] * ur[i] / w2 - lap - pr[i] * pr[i] / w2;
            let xn = (r[i] * ur[i] - u[i]) / w2.sqrt();
            let target = xn * xn / (4.0 * t * t);
            out.min_d_psi = out.min_d_psi.min(d);
            out.sup_target = out.sup_target.max(target);
            out.sup_residual = out.sup_residual.max((d - target).abs());
            row.push(d - target);
        }
        out.times.push(t);
        out.residual.push(row);
    }
    if out.times.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no interior snapshot in the window [{}, {}]",
            window.0, window.1
        )));
    }
    Ok(out)
}

/// `(h, sup residual)` of the identity over `t ∈ [1, 2]` along the expander
/// of `k` on `[0, r_max]`, one entry per node count. The run starts at
/// `t = 1/2` so the start-up step of the time integrator is out of the window;
/// the time step shrinks with the spacing.
pub fn psi_refinement(k: &ConeProfile, r_max: f64, counts: &[usize], dt_per_h: f64) -> Result<Vec<(f64, f64)>> {
    let profile: Arc<ExpanderProfile> = Arc::new(solve_expander_profile(k, &ShootingConfig::default())?);
    let mut out = Vec::new();
    for &c in counts {
        let grid = Arc::new(GridSpec::uniform(k.n(), 0.0, r_max, c)?);
        let h = grid.max_spacing();
        let dt = dt_per_h * h;
        let steps = (1.5 / dt).round();
        let dt = 1.5 / steps;
        let settings = SolverSettings {
            time_step: TimeStepPolicy::Fixed { dt },
            scheme: Scheme::Bdf2,
            snapshots: SnapshotSchedule::Every { interval: dt },
            ..SolverSettings::default()
        };
        let cfg = SolverConfig::new(
            grid.clone(),
            Boundary::Expander {
                profile: profile.clone(),
                time_offset: 0.5,
                shift: 0.0,
            },
        )
        .with_settings(settings);
        let run = evolve(&profile.sample(grid, 0.5)?, 1.5, &cfg)?;
        // shift the clock so snapshot times are absolute
        let mut run = run;
        for s in &mut run.snapshots {
            s.t += 0.5;
        }
        let id = psi_identity_residual(&run, (1.0, 2.0))?;
        out.push((h, id.sup_residual));
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct HalfSpaceConfig {
    pub t_final: f64,
    pub t0: f64,
    pub epsilon: f64,
    /// Snapshots between `t0` and `t_final`, geometrically spaced.
    pub snapshots: usize,
    pub settings: SolverSettings,
}

impl Default for HalfSpaceConfig {
    fn default() -> Self {
        HalfSpaceConfig {
            t_final: 50.0,
            t0: 0.1,
            epsilon: 0.025,
            snapshots: 60,
            settings: SolverSettings::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HalfSpaceReport {
    pub times: Vec<f64>,
    pub sup_u: Vec<f64>,
    pub majorant: HeatSupersolution,
    /// `min (aΦ + ε − u)` over snapshots with `t ≥ t0`.
    pub majorant_min_margin: f64,
    pub majorant_holds: bool,
    pub final_sup: f64,
    /// First snapshot time after which `sup u` never increases again.
    pub monotone_after: Option<f64>,
    pub passed: bool,
}

/// Flows `u0` (zero at the outer boundary) and tracks `sup u` against `2ε`
/// together with the majorant `aΦ + ε` calibrated at `t0`.
pub fn half_space_experiment(u0: &GridFunction, cfg: &HalfSpaceConfig) -> Result<HalfSpaceReport> {
    if !(cfg.t0 > 0.0 && cfg.t_final > cfg.t0 && cfg.epsilon > 0.0 && cfg.snapshots >= 2) {
        return Err(Error::InvalidInput(format!("half-space configuration {cfg:?}")));
    }
    let q = (cfg.t_final / cfg.t0).powf(1.0 / (cfg.snapshots - 1) as f64);
    let mut times: Vec<f64> = (0..cfg.snapshots).map(|i| cfg.t0 * q.powi(i as i32)).collect();
    *times.last_mut().unwrap() = cfg.t_final;
    let settings = SolverSettings {
        snapshots: SnapshotSchedule::Times { times },
        ..cfg.settings.clone()
    };
    let solver = SolverConfig::new(u0.spec().clone(), Boundary::Initial).with_settings(settings);
    let run = evolve(u0, cfg.t_final, &solver)?;
    let spec = run.grid().clone();
    let nt = spec.n_theta();
    let at_t0 = run
        .snapshots
        .iter()
        .find(|s| (s.t - cfg.t0).abs() <= 1e-9 * cfg.t0)
        .ok_or_else(|| Error::InvalidInput("no snapshot at t0".into()))?;
    let majorant = HeatSupersolution::calibrate(&at_t0.u, cfg.t0, cfg.epsilon)?;
    let mut margin = f64::INFINITY;
    let mut sup_u = Vec::new();
    let mut ts = Vec::new();
    for s in &run.snapshots {
        ts.push(s.t);
        sup_u.push(s.u.max());
        if s.t >= cfg.t0 * (1.0 - 1e-12) {
            for (k, &v) in s.u.values().iter().enumerate() {
                let r = spec.radial_nodes()[k / nt];
                margin = margin.min(majorant.majorant(r, v, s.t) - v);
            }
        }
    }
    let mut monotone_after = None;
    for i in (0..sup_u.len()).rev() {
        if i + 1 < sup_u.len() && sup_u[i + 1] > sup_u[i] * (1.0 + 1e-12) + 1e-15 {
            break;
        }
        monotone_after = Some(ts[i]);
    }
    let final_sup = *sup_u.last().unwrap();
    let majorant_holds = margin >= -1e-12;
    Ok(HalfSpaceReport {
        times: ts,
        sup_u,
        majorant,
        majorant_min_margin: margin,
        majorant_holds,
        final_sup,
        monotone_after,
        passed: final_sup <= 2.0 * cfg.epsilon && majorant_holds,
    })
}
