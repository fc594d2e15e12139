//! Implicit time stepping for graphical mean curvature flow
//! `u_t = √(1+|Du|²)·H[u]` on truncated radial or polar grids.
//!
//! Each step solves `v − base − c·S(v) = 0` by damped Newton, where `S` is
//! the discrete speed and `(base, c)` encode implicit Euler or variable-step
//! BDF2. Boundary nodes (outer ring, and the inner radius when `r_min > 0`)
//! are Dirichlet, pinned to the cone, the expander or the initial data.

mod polar;
mod radial;

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cones::ConeProfile;
use crate::error::{Error, Result};
use crate::expander::ExpanderProfile;
use crate::geometry::mean_curvature;
use crate::grid::{GridFunction, GridSpec};
use crate::io::{write_atomic, CsvTable};

pub(crate) use polar::PolarOperator;
pub(crate) use radial::RadialOperator;

pub(crate) trait SpatialOperator {
    fn len(&self) -> usize;
    fn is_dirichlet(&self, k: usize) -> bool;
    /// Discrete speed at every node (zero on Dirichlet nodes).
    fn speed(&self, v: &[f64], out: &mut [f64]);
    /// Solves `(I − c·∂S(v)) δ = rhs` with identity rows on Dirichlet nodes.
    fn solve_newton(&self, v: &[f64], c: f64, rhs: &mut [f64]) -> Result<()>;
}

pub(crate) fn operator_for(spec: &GridSpec, drift: bool) -> Box<dyn SpatialOperator + Send + Sync> {
    if spec.is_polar() {
        Box::new(PolarOperator::new(spec, drift))
    } else {
        Box::new(RadialOperator::new(spec, drift))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum TimeStepPolicy {
    Fixed { dt: f64 },
    /// Grows or shrinks Δt to keep Newton between 3 and 5 iterations,
    /// halving on failure.
    Adaptive { dt_initial: f64, dt_min: f64, dt_max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ImplicitEuler,
    Bdf2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SnapshotSchedule {
    Every { interval: f64 },
    Times { times: Vec<f64> },
    /// `count` times spaced geometrically from `first` to the final time.
    Geometric { first: f64, count: usize },
}

impl SnapshotSchedule {
    /// Output times in `(0, t_end]`; `t_end` is always the last one.
    pub fn times(&self, t_end: f64) -> Result<Vec<f64>> {
        output_times(self, t_end)
    }
}

/// Serializable solver knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    pub time_step: TimeStepPolicy,
    pub scheme: Scheme,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub snapshots: SnapshotSchedule,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            time_step: TimeStepPolicy::Adaptive {
                dt_initial: 1e-4,
                dt_min: 1e-12,
                dt_max: 0.05,
            },
            scheme: Scheme::Bdf2,
            newton_tol: 1e-10,
            newton_max_iter: 25,
            snapshots: SnapshotSchedule::Every { interval: 0.1 },
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.newton_tol > 0.0 && self.newton_tol <= 1e-4) {
            return Err(Error::InvalidInput(format!(
                "newton_tol {} outside (0, 1e-4]",
                self.newton_tol
            )));
        }
        let ok = match self.time_step {
            TimeStepPolicy::Fixed { dt } => dt > 0.0,
            TimeStepPolicy::Adaptive { dt_initial, dt_min, dt_max } => {
                dt_min > 0.0 && dt_min <= dt_initial && dt_initial <= dt_max
            }
        };
        if !ok {
            return Err(Error::InvalidInput("time step must be positive".into()));
        }
        if self.newton_max_iter == 0 {
            return Err(Error::InvalidInput("newton_max_iter = 0".into()));
        }
        Ok(())
    }
}

/// Far-field data for the Dirichlet nodes.
#[derive(Debug, Clone)]
pub enum Boundary {
    Cone(ConeProfile),
    /// `U(r, t + time_offset) + shift`.
    Expander {
        profile: Arc<ExpanderProfile>,
        time_offset: f64,
        shift: f64,
    },
    Initial,
    /// Similarity variables: the cone plus its own speed, `k + √(1+|Dk|²)H[k]`,
    /// which is the leading far-field correction of a stationary profile.
    SimilarityCone(ConeProfile),
}

/// Everything a run needs besides the initial data.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub grid: Arc<GridSpec>,
    pub boundary: Boundary,
    pub settings: SolverSettings,
    /// Cone used for the `sup|u − k|` diagnostic.
    pub reference_cone: Option<ConeProfile>,
    /// Expander and time offset for the `sup|u − U|` diagnostic.
    pub reference_expander: Option<(Arc<ExpanderProfile>, f64)>,
    /// Adds the similarity drift `−(u − x·Du)/2` (time is then `log t`).
    pub similarity: bool,
}

impl SolverConfig {
    pub fn new(grid: Arc<GridSpec>, boundary: Boundary) -> Self {
        SolverConfig {
            grid,
            boundary,
            settings: SolverSettings::default(),
            reference_cone: None,
            reference_expander: None,
            similarity: false,
        }
    }

    pub fn with_settings(mut self, settings: SolverSettings) -> Self {
        self.settings = settings;
        self
    }
}

fn boundary_value(b: &Boundary, spec: &GridSpec, k: usize, t: f64, initial: &[f64]) -> Result<f64> {
    let nt = spec.n_theta();
    let r = spec.radial_nodes()[k / nt];
    let theta = spec.theta(k % nt);
    Ok(match b {
        Boundary::Cone(c) => c.eval_polar(r, theta),
        Boundary::Expander {
            profile,
            time_offset,
            shift,
        } => profile.evaluate_flagged(r, t + time_offset)?.0 + shift,
        Boundary::Initial => initial[k],
        Boundary::SimilarityCone(c) => {
            let (h, _) = c.scaled_curvatures(theta);
            let (g, g1, _) = c.gamma_jet(theta);
            c.eval_polar(r, theta) + h * (1.0 + g * g + g1 * g1).sqrt() / r
        }
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct StepDiagnostics {
    pub t: f64,
    pub dt: f64,
    pub sup_u_minus_k: Option<f64>,
    pub sup_u_minus_u_exp: Option<f64>,
    pub min_h: f64,
    pub max_h: f64,
    pub newton_iters: usize,
    /// `∫ |u_t|` over the grid (radial volume weights; polar area weights).
    pub mass_ut: f64,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub u: GridFunction,
}

#[derive(Debug, Clone)]
pub struct FlowRun {
    pub snapshots: Vec<Snapshot>,
    pub diagnostics: Vec<StepDiagnostics>,
    pub rejected_steps: usize,
}

impl FlowRun {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("runs keep the initial snapshot")
    }

    pub fn grid(&self) -> &Arc<GridSpec> {
        self.snapshots[0].u.spec()
    }

    pub fn diagnostics_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&[
            "t[time]",
            "dt[time]",
            "sup_u_minus_k[length]",
            "sup_u_minus_U[length]",
            "minH[1/length]",
            "maxH[1/length]",
            "newton_iters[count]",
            "mass_ut[length^(n+1)/time]",
        ]);
        for d in &self.diagnostics {
            t.push(vec![
                d.t,
                d.dt,
                d.sup_u_minus_k.unwrap_or(f64::NAN),
                d.sup_u_minus_u_exp.unwrap_or(f64::NAN),
                d.min_h,
                d.max_h,
                d.newton_iters as f64,
                d.mass_ut,
            ]);
        }
        t
    }

    pub fn snapshot_csv(&self, index: usize) -> CsvTable {
        snapshot_table(&self.snapshots[index].u)
    }

    pub fn write_diagnostics(&self, path: &Path) -> Result<()> {
        let t = self.diagnostics_csv();
        write_atomic(path, |w: &mut dyn Write| t.write(w))
    }
}

pub fn snapshot_table(u: &GridFunction) -> CsvTable {
    let spec = u.spec();
    if spec.is_polar() {
        let mut t = CsvTable::new(&["r[length]", "theta[rad]", "u[length]"]);
        let nt = spec.n_theta();
        for (k, v) in u.values().iter().enumerate() {
            t.push(vec![spec.radial_nodes()[k / nt], spec.theta(k % nt), *v]);
        }
        t
    } else {
        let mut t = CsvTable::new(&["r[length]", "u[length]"]);
        for (r, v) in spec.radial_nodes().iter().zip(u.values()) {
            t.push(vec![*r, *v]);
        }
        t
    }
}

/// Quadrature weights for `∫ f dx` on the grid (angular factor of the sphere
/// omitted in radial mode).
pub fn volume_weights(spec: &GridSpec) -> Vec<f64> {
    let radial = spec.radial_volume_weights();
    if spec.is_polar() {
        let dt = spec.d_theta();
        radial
            .iter()
            .flat_map(|w| std::iter::repeat(w * dt).take(spec.n_theta()))
            .collect()
    } else {
        radial
    }
}

struct Newton<'a> {
    op: &'a (dyn SpatialOperator + Send + Sync),
    tol: f64,
    max_iter: usize,
}

impl Newton<'_> {
    /// Solves `v − base − c·S(v) = 0` on free nodes, `v = g` on Dirichlet nodes.
    fn solve(&self, guess: &[f64], base: &[f64], c: f64, g: &[f64], t: f64, dt: f64) -> Result<(Vec<f64>, usize)> {
        let m = self.op.len();
        let mut v = guess.to_vec();
        let mut s = vec![0.0; m];
        let mut res = vec![0.0; m];
        let mut history = Vec::new();
        let residual = |v: &[f64], s: &mut [f64], res: &mut [f64]| -> f64 {
            self.op.speed(v, s);
            let mut norm = 0.0_f64;
            for k in 0..m {
                res[k] = if self.op.is_dirichlet(k) {
                    v[k] - g[k]
                } else {
                    v[k] - base[k] - c * s[k]
                };
                norm = norm.max(res[k].abs());
            }
            norm
        };
        let mut norm = residual(&v, &mut s, &mut res);
        history.push(norm);
        for it in 1..=self.max_iter {
            if !norm.is_finite() {
                break;
            }
            let mut delta: Vec<f64> = res.iter().map(|x| -x).collect();
            if let Err(e) = self.op.solve_newton(&v, c, &mut delta) {
                return Err(Error::StepFailure {
                    t,
                    dt,
                    reason: e.to_string(),
                    residual_history: history,
                });
            }
            let step = delta.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
            let mut lambda = 1.0;
            let mut trial = v.clone();
            let mut new_norm = f64::INFINITY;
            for _ in 0..8 {
                for k in 0..m {
                    trial[k] = v[k] + lambda * delta[k];
                }
                new_norm = residual(&trial, &mut s, &mut res);
                if new_norm.is_finite() && (new_norm < norm || new_norm <= self.tol) {
                    break;
                }
                lambda *= 0.5;
            }
            v.copy_from_slice(&trial);
            norm = new_norm;
            history.push(norm);
            if lambda == 1.0 && (step <= self.tol || norm <= 1e-3 * self.tol) {
                return Ok((v, it));
            }
        }
        Err(Error::StepFailure {
            t,
            dt,
            reason: "Newton did not converge".into(),
            residual_history: history,
        })
    }
}

/// One implicit Euler step of length `dt` from time `t`.
pub fn step(u: &GridFunction, t: f64, dt: f64, cfg: &SolverConfig) -> Result<GridFunction> {
    if !(dt > 0.0) {
        return Err(Error::InvalidInput(format!("dt = {dt}")));
    }
    cfg.settings.validate()?;
    let spec = u.spec().clone();
    let op = operator_for(&spec, cfg.similarity);
    let g = dirichlet_data(&cfg.boundary, &spec, t + dt, u.values(), op.as_ref())?;
    let newton = Newton {
        op: op.as_ref(),
        tol: cfg.settings.newton_tol,
        max_iter: cfg.settings.newton_max_iter,
    };
    let (v, _) = newton.solve(u.values(), u.values(), dt, &g, t, dt)?;
    GridFunction::new(spec, v)
}

fn dirichlet_data(
    b: &Boundary,
    spec: &GridSpec,
    t: f64,
    initial: &[f64],
    op: &(dyn SpatialOperator + Send + Sync),
) -> Result<Vec<f64>> {
    let mut g = vec![0.0; op.len()];
    for (k, gk) in g.iter_mut().enumerate() {
        if op.is_dirichlet(k) {
            *gk = boundary_value(b, spec, k, t, initial)?;
        }
    }
    Ok(g)
}

fn output_times(schedule: &SnapshotSchedule, t_end: f64) -> Result<Vec<f64>> {
    let mut out: Vec<f64> = match schedule {
        SnapshotSchedule::Every { interval } => {
            if !(*interval > 0.0) {
                return Err(Error::InvalidInput("snapshot interval must be positive".into()));
            }
            let count = (t_end / interval - 1e-9).ceil().max(1.0) as usize;
            (1..=count).map(|j| (j as f64 * interval).min(t_end)).collect()
        }
        SnapshotSchedule::Times { times } => times.iter().copied().filter(|&x| x > 0.0 && x < t_end).collect(),
        SnapshotSchedule::Geometric { first, count } => {
            if !(*first > 0.0 && *first < t_end) || *count < 2 {
                return Err(Error::InvalidInput("geometric schedule needs 0 < first < T and count ≥ 2".into()));
            }
            let q = (t_end / first).ln() / (*count - 1) as f64;
            (0..*count).map(|j| first * (q * j as f64).exp()).collect()
        }
    };
    out.push(t_end);
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * t_end.max(1.0));
    if let Some(last) = out.last_mut() {
        *last = t_end;
    }
    Ok(out)
}

struct Diagnoser<'a> {
    cfg: &'a SolverConfig,
    weights: Vec<f64>,
}

impl Diagnoser<'_> {
    fn record(&self, u: &GridFunction, prev: &[f64], t: f64, dt: f64, iters: usize) -> Result<StepDiagnostics> {
        let spec = u.spec();
        let nt = spec.n_theta();
        let r = spec.radial_nodes();
        let sup_u_minus_k = self.cfg.reference_cone.as_ref().map(|c| {
            u.values()
                .iter()
                .enumerate()
                .map(|(k, v)| (v - c.eval_polar(r[k / nt], spec.theta(k % nt))).abs())
                .fold(0.0, f64::max)
        });
        let sup_u_minus_u_exp = match &self.cfg.reference_expander {
            Some((p, off)) => {
                let mut m = 0.0_f64;
                for (k, v) in u.values().iter().enumerate() {
                    m = m.max((v - p.evaluate_flagged(r[k / nt], t + off)?.0).abs());
                }
                Some(m)
            }
            None => None,
        };
        let h = mean_curvature(u)?;
        let (mut min_h, mut max_h) = (f64::INFINITY, f64::NEG_INFINITY);
        // interior nodes only; the Dirichlet ring carries one-sided stencils
        let m = spec.n_radial();
        for (k, v) in h.values.values().iter().enumerate() {
            let i = k / nt;
            if i == m - 1 || (i == 0 && spec.r_min() > 0.0 && !spec.is_polar()) {
                continue;
            }
            min_h = min_h.min(*v);
            max_h = max_h.max(*v);
        }
        let mass_ut = u
            .values()
            .iter()
            .zip(prev)
            .zip(&self.weights)
            .map(|((a, b), w)| w * ((a - b) / dt).abs())
            .sum();
        Ok(StepDiagnostics {
            t,
            dt,
            sup_u_minus_k,
            sup_u_minus_u_exp,
            min_h,
            max_h,
            newton_iters: iters,
            mass_ut,
        })
    }
}

/// Evolves `u0` over `[0, t_final]` and stores snapshots per the schedule.
pub fn evolve(u0: &GridFunction, t_final: f64, cfg: &SolverConfig) -> Result<FlowRun> {
    if !(t_final > 0.0) {
        return Err(Error::InvalidInput(format!("T = {t_final}")));
    }
    cfg.settings.validate()?;
    if **u0.spec() != *cfg.grid {
        return Err(Error::InvalidInput("initial data lives on a different grid".into()));
    }
    let spec = u0.spec().clone();
    let op = operator_for(&spec, cfg.similarity);
    let newton = Newton {
        op: op.as_ref(),
        tol: cfg.settings.newton_tol,
        max_iter: cfg.settings.newton_max_iter,
    };
    let diag = Diagnoser {
        cfg,
        weights: volume_weights(&spec),
    };
    let outputs = output_times(&cfg.settings.snapshots, t_final)?;
    let mut run = FlowRun {
        snapshots: vec![Snapshot { t: 0.0, u: u0.clone() }],
        diagnostics: Vec::new(),
        rejected_steps: 0,
    };
    let initial = u0.values().to_vec();
    let (mut dt, dt_min, dt_max, adaptive) = match cfg.settings.time_step {
        TimeStepPolicy::Fixed { dt } => (dt, dt, dt, false),
        TimeStepPolicy::Adaptive { dt_initial, dt_min, dt_max } => (dt_initial, dt_min, dt_max, true),
    };
    let mut t = 0.0;
    let mut u = initial.clone();
    let mut prev: Option<(Vec<f64>, f64)> = None;
    let mut next_out = 0;
    while next_out < outputs.len() {
        let target = outputs[next_out];
        let remaining = target - t;
        let mut h = dt.min(remaining);
        // avoid a sliver step just before an output time
        if remaining - h < 1e-3 * h {
            h = remaining;
        }
        let (base, c) = match (&cfg.settings.scheme, &prev) {
            (Scheme::Bdf2, Some((up, hp))) => {
                let w = h / hp;
                let a = (1.0 + w) * (1.0 + w) / (1.0 + 2.0 * w);
                let b = w * w / (1.0 + 2.0 * w);
                let base: Vec<f64> = u.iter().zip(up).map(|(x, y)| a * x - b * y).collect();
                (base, h * (1.0 + w) / (1.0 + 2.0 * w))
            }
            _ => (u.clone(), h),
        };
        let g = dirichlet_data(&cfg.boundary, &spec, t + h, &initial, op.as_ref())?;
        // linear extrapolation as the Newton guess
        let guess: Vec<f64> = match &prev {
            Some((up, hp)) => u.iter().zip(up).map(|(x, y)| x + (x - y) * h / hp).collect(),
            None => u.clone(),
        };
        match newton.solve(&guess, &base, c, &g, t, h) {
            Ok((v, iters)) => {
                let new = GridFunction::new(spec.clone(), v)
                    .map_err(|e| Error::StepFailure {
                        t,
                        dt: h,
                        reason: e.to_string(),
                        residual_history: vec![],
                    })?;
                t = if h == remaining { target } else { t + h };
                run.diagnostics.push(diag.record(&new, &u, t, h, iters)?);
                prev = Some((std::mem::replace(&mut u, new.into_values()), h));
                if t >= target {
                    run.snapshots.push(Snapshot {
                        t,
                        u: GridFunction::new(spec.clone(), u.clone())?,
                    });
                    next_out += 1;
                }
                if adaptive && h == dt {
                    if iters <= 2 {
                        dt = (dt * 1.5).min(dt_max);
                    } else if iters > 5 {
                        dt = (dt * 0.7).max(dt_min);
                    }
                }
            }
            Err(e) => {
                run.rejected_steps += 1;
                if !adaptive || h * 0.5 < dt_min {
                    return Err(e);
                }
                dt = h * 0.5;
            }
        }
    }
    Ok(run)
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub r: f64,
    pub theta: f64,
    pub t: f64,
    /// `u_b − u_a − tol_growth(t)` at the violating node (positive).
    pub excess: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub passed: bool,
    pub first_violation: Option<Violation>,
    /// `min (u_a − u_b + tol_growth)` over all snapshots and nodes.
    pub min_margin: f64,
}

/// Checks `u_a ≥ u_b − (tol + c_scheme·t·Δx²)` snapshot by snapshot.
pub fn comparison_check(a: &FlowRun, b: &FlowRun, tol: f64, c_scheme: f64) -> Result<ComparisonReport> {
    if a.snapshots.len() != b.snapshots.len() {
        return Err(Error::InvalidInput("runs have different snapshot counts".into()));
    }
    let spec = a.grid().clone();
    if *spec != **b.grid() {
        return Err(Error::InvalidInput("runs live on different grids".into()));
    }
    for (sa, sb) in a.snapshots.iter().zip(&b.snapshots) {
        if (sa.t - sb.t).abs() > 1e-9 * sa.t.abs().max(1.0) {
            return Err(Error::InvalidInput(format!("time stamps differ: {} vs {}", sa.t, sb.t)));
        }
    }
    let a0 = a.snapshots[0].u.values();
    let b0 = b.snapshots[0].u.values();
    if let Some(k) = (0..a0.len()).find(|&k| a0[k] < b0[k] - tol) {
        return Err(Error::Precondition(format!(
            "initial data not ordered at node {k}: {} < {}",
            a0[k], b0[k]
        )));
    }
    let dx2 = spec.max_spacing().powi(2);
    let nt = spec.n_theta();
    let mut min_margin = f64::INFINITY;
    let mut first = None;
    for (sa, sb) in a.snapshots.iter().zip(&b.snapshots) {
        let allow = tol + c_scheme * sa.t * dx2;
        for (k, (x, y)) in sa.u.values().iter().zip(sb.u.values()).enumerate() {
            let margin = x - y + allow;
            min_margin = min_margin.min(margin);
            if margin < 0.0 && first.is_none() {
                first = Some(Violation {
                    r: spec.radial_nodes()[k / nt],
                    theta: spec.theta(k % nt),
                    t: sa.t,
                    excess: -margin,
                });
            }
        }
    }
    Ok(ComparisonReport {
        passed: first.is_none(),
        first_violation: first,
        min_margin,
    })
}

/// Earliest snapshot time with `min(u − k) ≥ −δ`.
pub fn detect_t_delta(run: &FlowRun, k: &ConeProfile, delta: f64) -> Result<Option<f64>> {
    if !(delta > 0.0) {
        return Err(Error::InvalidInput(format!("delta = {delta}")));
    }
    let spec = run.grid().clone();
    let nt = spec.n_theta();
    let kv: Vec<f64> = (0..spec.len())
        .map(|i| k.eval_polar(spec.radial_nodes()[i / nt], spec.theta(i % nt)))
        .collect();
    Ok(run
        .snapshots
        .iter()
        .find(|s| s.u.values().iter().zip(&kv).all(|(u, k)| u - k >= -delta))
        .map(|s| s.t))
}

#[cfg(test)]
mod tests;
