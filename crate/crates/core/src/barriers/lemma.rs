//! The flow barrier: a cone pushed down for unit time along its normal with
//! speed `|X|^{−(n−2)/2}`.
//!
//! Two independent discretisations are run. The graph `b` follows the
//! Hamilton–Jacobi equation `b_t = −|F(x,b)|·√(1+|Db|²)` with a Godunov flux,
//! ENO2 gradients and SSP-RK3. Lagrangian markers on the meridian follow
//! `∂t X = −Fν` directly and carry the evolution-equation checks.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::analysis::{power_fit, DecayFit};
use crate::cones::ConeProfile;
use crate::error::{Error, Result};
use crate::geometry::{geometric_state, mean_curvature, GeometricState};
use crate::grid::{lagrange4, GridFunction, GridSpec};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct MarkerConfig {
    pub count: usize,
    pub steps: usize,
    /// Markers start on `[inner·r, outer·r]`, geometrically spaced.
    pub inner: f64,
    pub outer: f64,
}

impl Default for MarkerConfig {
    fn default() -> Self {
        MarkerConfig {
            count: 256,
            steps: 32,
            inner: 0.5,
            outer: 8.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct LemmaBarrierConfig {
    pub r_start: f64,
    pub max_doublings: usize,
    pub t_final: f64,
    /// Multiplies `F`; zero freezes the flow.
    pub speed_scale: f64,
    /// The graph lives on `[r/2, outer_factor·r]`.
    pub outer_factor: f64,
    /// Grid spacing in units of `r`.
    pub spacing: f64,
    pub cfl: f64,
    /// Largest admissible turn of the normal, in radians.
    pub max_normal_turn: f64,
    /// Relative tolerance on the fitted decay exponent of `k − b`.
    pub decay_tolerance: f64,
    pub markers: MarkerConfig,
}

impl Default for LemmaBarrierConfig {
    fn default() -> Self {
        LemmaBarrierConfig {
            r_start: 10.0,
            max_doublings: 4,
            t_final: 1.0,
            speed_scale: 1.0,
            outer_factor: 40.0,
            spacing: 0.01,
            cfl: 0.4,
            max_normal_turn: 0.5,
            decay_tolerance: 0.2,
            markers: MarkerConfig::default(),
        }
    }
}

/// Final state of the graph flow.
#[derive(Debug, Clone)]
pub struct BarrierFlowState {
    pub t: f64,
    pub b: GridFunction,
    /// `F = −|X|^{−2α}` (times the speed scale) at every node.
    pub f: Vec<f64>,
    pub alpha: f64,
    pub geometry: GeometricState,
}

#[derive(Debug, Clone, Serialize)]
pub struct BarrierAttempt {
    pub r: f64,
    /// `None` when every postcondition held.
    pub failure: Option<String>,
}

#[derive(Debug, Clone)]
pub struct LemmaBarrier {
    pub n: usize,
    pub beta: f64,
    /// Inner radius of the certified domain.
    pub r: f64,
    /// `b(·, t_final)` on `[r, outer_factor·r]`.
    pub b: GridFunction,
    pub h_b: Vec<f64>,
    /// `min (k − b)` on the domain.
    pub min_gap: f64,
    /// `max (k − b)`, the constant `m₁`.
    pub max_gap: f64,
    /// Smallest radius beyond which every sampled `H[b]` is positive.
    pub r1: Option<f64>,
    pub decay: Option<DecayFit>,
    pub expected_exponent: f64,
    pub max_normal_turn: f64,
    /// `sup_{|x|≥R}(k − b)` is non-increasing in `R`.
    pub tail_monotone: bool,
    pub certified: bool,
    pub attempts: Vec<BarrierAttempt>,
    pub path: MarkerPath,
    /// Largest height gap between markers and graph on `[r, 4r]`.
    pub marker_graph_gap: f64,
    pub steps: usize,
    pub state: BarrierFlowState,
}

fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

struct GraphFlow {
    alpha: f64,
    scale: f64,
    h: f64,
    r: Vec<f64>,
}

impl GraphFlow {
    fn speed(&self, r: f64, b: f64) -> f64 {
        self.scale * (r * r + b * b).powf(-self.alpha)
    }

    /// `−|F|·√(1+p²)` with the Godunov flux for a convex Hamiltonian.
    fn rhs(&self, b: &[f64], out: &mut [f64]) {
        let m = b.len();
        // two ghost nodes per side, linear extrapolation
        let mut e = Vec::with_capacity(m + 4);
        e.push(3.0 * b[0] - 2.0 * b[1]);
        e.push(2.0 * b[0] - b[1]);
        e.extend_from_slice(b);
        e.push(2.0 * b[m - 1] - b[m - 2]);
        e.push(3.0 * b[m - 1] - 2.0 * b[m - 2]);
        let d2 = |k: usize| e[k + 1] - 2.0 * e[k] + e[k - 1];
        for i in 0..m {
            let k = i + 2;
            let pm = (e[k] - e[k - 1]) / self.h + 0.5 * minmod(d2(k - 1), d2(k)) / self.h;
            let pp = (e[k + 1] - e[k]) / self.h - 0.5 * minmod(d2(k), d2(k + 1)) / self.h;
            let p = pm.max(0.0).max(-pp.min(0.0));
            out[i] = -self.speed(self.r[i], b[i]) * (1.0 + p * p).sqrt();
        }
    }

    fn run(&self, b: &mut [f64], t_final: f64, cfl: f64) -> usize {
        if self.scale == 0.0 || t_final == 0.0 {
            return 0;
        }
        let cmax = self
            .r
            .iter()
            .zip(b.iter())
            .map(|(&r, &v)| self.speed(r, v))
            .fold(0.0, f64::max);
        let steps = ((t_final * cmax / (cfl * self.h)).ceil() as usize).max(1);
        let dt = t_final / steps as f64;
        let m = b.len();
        let (mut k1, mut k2, mut k3) = (vec![0.0; m], vec![0.0; m], vec![0.0; m]);
        let mut s1 = vec![0.0; m];
        let mut s2 = vec![0.0; m];
        for _ in 0..steps {
            self.rhs(b, &mut k1);
            for i in 0..m {
                s1[i] = b[i] + dt * k1[i];
            }
            self.rhs(&s1, &mut k2);
            for i in 0..m {
                s2[i] = 0.75 * b[i] + 0.25 * (s1[i] + dt * k2[i]);
            }
            self.rhs(&s2, &mut k3);
            for i in 0..m {
                b[i] = b[i] / 3.0 + 2.0 / 3.0 * (s2[i] + dt * k3[i]);
            }
        }
        steps
    }
}

/// Meridian positions of the markers at every stored time level.
#[derive(Debug, Clone, Serialize)]
pub struct MarkerPath {
    pub n: usize,
    pub alpha: f64,
    pub speed_scale: f64,
    pub times: Vec<f64>,
    pub rho: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
}

fn d1(x: &[f64], j: usize) -> f64 {
    let m = x.len();
    if j == 0 {
        0.5 * (-3.0 * x[0] + 4.0 * x[1] - x[2])
    } else if j == m - 1 {
        0.5 * (3.0 * x[m - 1] - 4.0 * x[m - 2] + x[m - 3])
    } else {
        0.5 * (x[j + 1] - x[j - 1])
    }
}

fn d2(x: &[f64], j: usize) -> f64 {
    let m = x.len();
    if j == 0 {
        2.0 * x[0] - 5.0 * x[1] + 4.0 * x[2] - x[3]
    } else if j == m - 1 {
        2.0 * x[m - 1] - 5.0 * x[m - 2] + 4.0 * x[m - 3] - x[m - 4]
    } else {
        x[j + 1] - 2.0 * x[j] + x[j - 1]
    }
}

fn marker_velocity(alpha: f64, scale: f64, rho: &[f64], z: &[f64], vr: &mut [f64], vz: &mut [f64]) -> Result<()> {
    for j in 0..rho.len() {
        let (rs, zs) = (d1(rho, j), d1(z, j));
        if !(rs > 0.0) {
            return Err(Error::GraphCondition {
                r: rho[j],
                reason: "markers fold over: the meridian stops being a graph".into(),
            });
        }
        let len = rs.hypot(zs);
        let f = scale * (rho[j] * rho[j] + z[j] * z[j]).powf(-alpha);
        vr[j] = f * zs / len;
        vz[j] = -f * rs / len;
    }
    Ok(())
}

/// RK4 for the markers of the cone `β|x|` pushed with speed `|X|^{−2α}` along `ν`.
pub fn integrate_markers(n: usize, beta: f64, r: f64, scale: f64, t_final: f64, cfg: &MarkerConfig) -> Result<MarkerPath> {
    if n < 3 {
        return Err(Error::InvalidInput(format!("the flow barrier needs n ≥ 3, got {n}")));
    }
    if cfg.count < 8 || cfg.steps < 2 || !(cfg.outer > cfg.inner && cfg.inner > 0.0) {
        return Err(Error::InvalidInput(format!("marker configuration {cfg:?}")));
    }
    let alpha = (n as f64 - 2.0) / 4.0;
    let m = cfg.count;
    let q = (cfg.outer / cfg.inner).powf(1.0 / (m - 1) as f64);
    let mut rho: Vec<f64> = (0..m).map(|j| cfg.inner * r * q.powi(j as i32)).collect();
    let mut z: Vec<f64> = rho.iter().map(|v| beta * v).collect();
    let dt = t_final / cfg.steps as f64;
    let mut path = MarkerPath {
        n,
        alpha,
        speed_scale: scale,
        times: vec![0.0],
        rho: vec![rho.clone()],
        z: vec![z.clone()],
    };
    let mut k = [[vec![0.0; m], vec![0.0; m]], [vec![0.0; m], vec![0.0; m]], [vec![0.0; m], vec![0.0; m]], [vec![0.0; m], vec![0.0; m]]];
    let mut tr = vec![0.0; m];
    let mut tz = vec![0.0; m];
    for s in 0..cfg.steps {
        for stage in 0..4 {
            let c = [0.0, 0.5, 0.5, 1.0][stage];
            if stage == 0 {
                tr.copy_from_slice(&rho);
                tz.copy_from_slice(&z);
            } else {
                for j in 0..m {
                    tr[j] = rho[j] + c * dt * k[stage - 1][0][j];
                    tz[j] = z[j] + c * dt * k[stage - 1][1][j];
                }
            }
            let [a, b] = &mut k[stage];
            marker_velocity(alpha, scale, &tr, &tz, a, b)?;
        }
        for j in 0..m {
            rho[j] += dt / 6.0 * (k[0][0][j] + 2.0 * k[1][0][j] + 2.0 * k[2][0][j] + k[3][0][j]);
            z[j] += dt / 6.0 * (k[0][1][j] + 2.0 * k[1][1][j] + 2.0 * k[2][1][j] + k[3][1][j]);
        }
        path.times.push((s + 1) as f64 * dt);
        path.rho.push(rho.clone());
        path.z.push(z.clone());
    }
    Ok(path)
}

/// Geometry of one marker, in the meridian frame. Angular directions are
/// orthonormal at the point up to the factor `ρ`.
#[derive(Clone, Copy)]
struct MarkerGeometry {
    x2: f64,
    xn: f64,
    xs: f64,
    gss: f64,
    gpp: f64,
    hss: f64,
    hpp: f64,
    nu: [f64; 2],
    pos: [f64; 2],
}

impl MarkerGeometry {
    fn k1(&self) -> f64 {
        self.hss / self.gss
    }
    fn k2(&self) -> f64 {
        self.hpp / self.gpp
    }
    fn mean(&self, n: usize) -> f64 {
        self.k1() + (n - 1) as f64 * self.k2()
    }
    fn a2(&self, n: usize) -> f64 {
        self.k1().powi(2) + (n - 1) as f64 * self.k2().powi(2)
    }
    fn a3(&self, n: usize) -> f64 {
        self.k1().powi(3) + (n - 1) as f64 * self.k2().powi(3)
    }
}

fn level_geometry(rho: &[f64], z: &[f64], j: usize) -> MarkerGeometry {
    let (rs, zs) = (d1(rho, j), d1(z, j));
    let (rss, zss) = (d2(rho, j), d2(z, j));
    let gss = rs * rs + zs * zs;
    let len = gss.sqrt();
    let nu = [zs / len, -rs / len];
    let (p, q) = (rho[j], z[j]);
    MarkerGeometry {
        x2: p * p + q * q,
        xn: p * nu[0] + q * nu[1],
        xs: p * rs + q * zs,
        gss,
        gpp: p * p,
        hss: -(rss * nu[0] + zss * nu[1]),
        hpp: p * nu[0],
        nu,
        pos: [p, q],
    }
}

/// Sup of the scale-invariant residuals of the five evolution equations.
#[derive(Debug, Clone, Serialize)]
pub struct EvolutionResiduals {
    pub metric: f64,
    pub second_form: f64,
    pub mean_curvature: f64,
    pub norm_a2: f64,
    pub normal: f64,
    /// `sup |∂t|A|²|·|X|³/|F|`.
    pub a_evol_ratio: f64,
    /// The same sup restricted to the outer half of the sampled `|X|` range,
    /// divided by the sup over the inner half.
    pub a_evol_outer_over_inner: f64,
    pub points: usize,
}

impl EvolutionResiduals {
    pub fn max(&self) -> f64 {
        self.metric
            .max(self.second_form)
            .max(self.mean_curvature)
            .max(self.norm_a2)
            .max(self.normal)
    }
}

/// Centered time differences of the marker geometry against the right-hand
/// sides of the evolution equations for `g`, `h`, `H`, `|A|²` and `ν`.
///
/// Each residual is made scale invariant by the natural power of `|X|`:
/// `|X|/|F|` for `g` (per `g_ii`) and `ν`, `|X|²/|F|` for `h` (per `g_ii`)
/// and `H`, `|X|³/|F|` for `|A|²`. Markers within `margin·count` of either
/// end are skipped.
pub fn evolution_equation_residuals(path: &MarkerPath, margin: f64) -> Result<EvolutionResiduals> {
    let levels = path.times.len();
    if levels < 3 {
        return Err(Error::InvalidInput(format!(
            "{levels} time levels: centered differences need at least 3"
        )));
    }
    let m = path.rho[0].len();
    let skip = ((margin * m as f64).ceil() as usize).max(2);
    if 2 * skip >= m {
        return Err(Error::InvalidInput("margin leaves no interior markers".into()));
    }
    let n = path.n;
    let nf = n as f64;
    let a = path.alpha;
    let sc = path.speed_scale;
    let mut out = EvolutionResiduals {
        metric: 0.0,
        second_form: 0.0,
        mean_curvature: 0.0,
        norm_a2: 0.0,
        normal: 0.0,
        a_evol_ratio: 0.0,
        a_evol_outer_over_inner: 0.0,
        points: 0,
    };
    let mut ratios: Vec<(f64, f64)> = Vec::new();
    for lv in 1..levels - 1 {
        let dt2 = path.times[lv + 1] - path.times[lv - 1];
        if (path.times[lv + 1] - path.times[lv] - (path.times[lv] - path.times[lv - 1])).abs() > 1e-9 * dt2 {
            return Err(Error::InvalidInput("time levels must be equally spaced".into()));
        }
        for j in skip..m - skip {
            let g0 = level_geometry(&path.rho[lv - 1], &path.z[lv - 1], j);
            let g = level_geometry(&path.rho[lv], &path.z[lv], j);
            let g1 = level_geometry(&path.rho[lv + 1], &path.z[lv + 1], j);
            let ddt = |f: &dyn Fn(&MarkerGeometry) -> f64| (f(&g1) - f(&g0)) / dt2;

            let x = g.x2.sqrt();
            let f0 = g.x2.powf(-a);
            let f = -sc * f0;
            let mf = -f;
            let mean = g.mean(n);
            let a2 = g.a2(n);

            let r_gss = (ddt(&|q| q.gss) + 2.0 * f * g.hss).abs() / g.gss;
            let r_gpp = (ddt(&|q| q.gpp) + 2.0 * f * g.hpp).abs() / g.gpp;
            out.metric = out.metric.max((r_gss.max(r_gpp)) * x / f0);

            let rhs_hss = 4.0 * a * (a + 1.0) * f * g.xs * g.xs / (g.x2 * g.x2)
                - 2.0 * a * f / g.x2 * (g.gss - g.xn * g.hss)
                - f * g.hss * g.hss / g.gss;
            let rhs_hpp = -2.0 * a * f / g.x2 * (g.gpp - g.xn * g.hpp) - f * g.hpp * g.hpp / g.gpp;
            let r_hss = (ddt(&|q| q.hss) - rhs_hss).abs() / g.gss;
            let r_hpp = (ddt(&|q| q.hpp) - rhs_hpp).abs() / g.gpp;
            out.second_form = out.second_form.max(r_hss.max(r_hpp) * g.x2 / f0);

            let rhs_h = mf * (-a2 - 4.0 * a * (a + 1.0) / (g.x2 * g.x2) * (g.x2 - g.xn * g.xn))
                + mf * (2.0 * a / g.x2 * (nf - g.xn * mean));
            let r_h = (ddt(&|q| q.mean(n)) - rhs_h).abs();
            out.mean_curvature = out.mean_curvature.max(r_h * g.x2 / f0);

            let dta2 = ddt(&|q| q.a2(n));
            let rhs_a2 = 2.0 * f * g.a3(n)
                - 8.0 * a * (a + 1.0) * mf / (g.x2 * g.x2) * g.xs * g.xs * g.hss / (g.gss * g.gss)
                + 4.0 * a * mf / g.x2 * (mean - g.xn * a2);
            out.norm_a2 = out.norm_a2.max((dta2 - rhs_a2).abs() * g.x2 * x / f0);

            let coef = sc * 2.0 * a * g.x2.powf(-a - 1.0);
            let mut r_nu = 0.0_f64;
            for c in 0..2 {
                let rhs = coef * (g.pos[c] - g.xn * g.nu[c]);
                r_nu = r_nu.max((ddt(&|q| q.nu[c]) - rhs).abs());
            }
            out.normal = out.normal.max(r_nu * x / f0);

            if sc != 0.0 {
                let ratio = dta2.abs() * g.x2 * x / (sc * f0);
                ratios.push((x, ratio));
                out.a_evol_ratio = out.a_evol_ratio.max(ratio);
            }
            out.points += 1;
        }
    }
    if !ratios.is_empty() {
        let (lo, hi) = ratios
            .iter()
            .fold((f64::INFINITY, 0.0_f64), |(l, h), &(x, _)| (l.min(x), h.max(x)));
        let mid = (lo * hi).sqrt();
        let inner = ratios.iter().filter(|p| p.0 <= mid).map(|p| p.1).fold(0.0, f64::max);
        let outer = ratios.iter().filter(|p| p.0 > mid).map(|p| p.1).fold(0.0, f64::max);
        out.a_evol_outer_over_inner = if inner > 0.0 { outer / inner } else { 0.0 };
    }
    Ok(out)
}

struct Attempt {
    b: GridFunction,
    h_b: Vec<f64>,
    min_gap: f64,
    max_gap: f64,
    r1: Option<f64>,
    decay: Option<DecayFit>,
    turn: f64,
    tail_monotone: bool,
    steps: usize,
    failure: Option<String>,
    full: (Vec<f64>, Vec<f64>),
}

fn attempt(n: usize, beta: f64, r: f64, cfg: &LemmaBarrierConfig) -> Result<Attempt> {
    let alpha = (n as f64 - 2.0) / 4.0;
    let h = cfg.spacing * r;
    let lo = 0.5 * r;
    let count = ((cfg.outer_factor * r - lo) / h).round() as usize + 1;
    let nodes: Vec<f64> = (0..count).map(|i| lo + i as f64 * h).collect();
    let mut b: Vec<f64> = nodes.iter().map(|x| beta * x).collect();
    let flow = GraphFlow {
        alpha,
        scale: cfg.speed_scale,
        h,
        r: nodes.clone(),
    };
    let steps = flow.run(&mut b, cfg.t_final, cfg.cfl);
    if let Some(i) = b.iter().position(|v| !v.is_finite()) {
        return Err(Error::GraphCondition {
            r: nodes[i],
            reason: "non-finite height".into(),
        });
    }
    let first = nodes.iter().position(|&x| x >= r * (1.0 - 1e-12)).unwrap();
    let rs: Vec<f64> = nodes[first..].to_vec();
    let bs: Vec<f64> = b[first..].to_vec();
    let spec = Arc::new(GridSpec::from_nodes(n, rs.clone())?);
    let bf = GridFunction::new(spec, bs.clone())?;
    let h_b = mean_curvature(&bf)?.values.into_values();

    let mut turn = 0.0_f64;
    let mut turn_at = rs[0];
    for i in 1..rs.len() - 1 {
        let slope = (bs[i + 1] - bs[i - 1]) / (rs[i + 1] - rs[i - 1]);
        let d = (slope.atan() - beta.atan()).abs();
        if d > turn {
            turn = d;
            turn_at = rs[i];
        }
    }
    if turn > cfg.max_normal_turn {
        return Err(Error::GraphCondition {
            r: turn_at,
            reason: format!("normal turned by {turn:.3} rad"),
        });
    }
    let gap: Vec<f64> = rs.iter().zip(&bs).map(|(x, v)| beta * x - v).collect();
    let min_gap = gap.iter().copied().fold(f64::INFINITY, f64::min);
    let max_gap = gap.iter().copied().fold(0.0, f64::max);
    let r1 = match h_b.iter().rposition(|&v| !(v > 0.0)) {
        None => Some(rs[0]),
        Some(i) if i + 1 < rs.len() => Some(rs[i + 1]),
        Some(_) => None,
    };
    let tail_monotone = gap.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
    let decay = if min_gap > 0.0 { power_fit(&rs, &gap).ok() } else { None };
    let expected = -(n as f64 - 2.0) / 2.0;
    let mut failure = Vec::new();
    if !(min_gap > 0.0) {
        failure.push(format!("b < k fails: min(k − b) = {min_gap:.3e}"));
    }
    if r1 != Some(rs[0]) {
        failure.push(format!("H[b] > 0 only beyond {r1:?}"));
    }
    match &decay {
        Some(d) if (d.exponent - expected).abs() <= cfg.decay_tolerance * expected.abs() => {}
        Some(d) => failure.push(format!("decay exponent {:.4} vs {expected}", d.exponent)),
        None => failure.push("no decay fit".into()),
    }
    Ok(Attempt {
        b: bf,
        h_b,
        min_gap,
        max_gap,
        r1,
        decay,
        turn,
        tail_monotone,
        steps,
        failure: if failure.is_empty() { None } else { Some(failure.join("; ")) },
        full: (nodes, b),
    })
}

/// Runs the flow barrier for `k = β|x|` in dimension `n ≥ 3`, doubling the
/// inner radius from `r_start` until every postcondition holds.
pub fn lemma_barrier_flow(k: &ConeProfile, cfg: &LemmaBarrierConfig) -> Result<LemmaBarrier> {
    let beta = k
        .beta()
        .ok_or_else(|| Error::InvalidInput("the flow barrier is built for radial cones".into()))?;
    let n = k.n();
    if n < 3 {
        return Err(Error::InvalidInput(format!("the flow barrier needs n ≥ 3, got {n}")));
    }
    if !(cfg.r_start > 0.0 && cfg.t_final >= 0.0 && cfg.spacing > 0.0 && cfg.outer_factor > 2.0) {
        return Err(Error::InvalidInput(format!("barrier configuration {cfg:?}")));
    }
    let mut attempts = Vec::new();
    let mut r = cfg.r_start;
    let mut result = None;
    for round in 0..=cfg.max_doublings {
        let at = attempt(n, beta, r, cfg)?;
        attempts.push(BarrierAttempt {
            r,
            failure: at.failure.clone(),
        });
        let done = at.failure.is_none() || cfg.speed_scale == 0.0 || round == cfg.max_doublings;
        result = Some((r, at));
        if done {
            break;
        }
        r *= 2.0;
    }
    let (r, at) = result.expect("at least one attempt");
    let path = integrate_markers(n, beta, r, cfg.speed_scale, cfg.t_final, &cfg.markers)?;
    let last = path.times.len() - 1;
    let (nodes, full) = &at.full;
    let mut marker_graph_gap = 0.0_f64;
    for (p, zz) in path.rho[last].iter().zip(&path.z[last]) {
        if *p >= r && *p <= 4.0 * r {
            marker_graph_gap = marker_graph_gap.max((lagrange4(nodes, full, *p) - zz).abs());
        }
    }
    let alpha = (n as f64 - 2.0) / 4.0;
    let f: Vec<f64> = at
        .b
        .spec()
        .radial_nodes()
        .iter()
        .zip(at.b.values())
        .map(|(x, v)| -cfg.speed_scale * (x * x + v * v).powf(-alpha))
        .collect();
    let state = BarrierFlowState {
        t: cfg.t_final,
        b: at.b.clone(),
        f,
        alpha,
        geometry: geometric_state(&at.b)?,
    };
    Ok(LemmaBarrier {
        n,
        beta,
        r,
        certified: at.failure.is_none(),
        b: at.b,
        h_b: at.h_b,
        min_gap: at.min_gap,
        max_gap: at.max_gap,
        r1: at.r1,
        decay: at.decay,
        expected_exponent: -(n as f64 - 2.0) / 2.0,
        max_normal_turn: at.turn,
        tail_monotone: at.tail_monotone,
        attempts,
        path,
        marker_graph_gap,
        steps: at.steps,
        state,
    })
}
