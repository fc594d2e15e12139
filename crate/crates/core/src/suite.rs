//! The acceptance battery: fourteen numbered checks, each producing a report
//! with its measured constants and a verdict against pinned tolerances.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{bump, bump_prime, clearing_out_experiment, decay_fit, graph_area_bound_check, power_fit, ClearingOutConfig, Threshold};
use crate::barriers::{
    assemble_subsolution, evolution_equation_residuals, half_space_experiment, integrate_markers, lemma_barrier_flow,
    psi_identity_residual, psi_refinement, static_barrier_w, wk_difference_fit, HalfSpaceConfig, LemmaBarrierConfig,
    MarkerConfig,
};
use crate::cones::ConeProfile;
use crate::error::Result;
use crate::expander::{expander_residual, solve_expander_profile, ShootingConfig};
use crate::experiments::{builtin, run_scenario};
use crate::flow::{detect_t_delta, evolve, Boundary, SnapshotSchedule, SolverConfig, SolverSettings, TimeStepPolicy};
use crate::grid::{GridFunction, GridSpec};
use crate::io::{Outcome, Report};

/// Pinned tolerances, one group per criterion.
pub mod tol {
    pub const SELF_SIMILARITY: f64 = 1e-3;
    pub const SELF_SIMILARITY_SECONDS: f64 = 60.0;
    pub const CONE_DOMINANCE: f64 = -1e-8;
    pub const MONOTONICITY: f64 = -1e-8;
    pub const DECAY_EXPONENT: (f64, f64) = (-0.5, 0.1);
    pub const MAIN_THRESHOLD: f64 = 0.05;
    pub const HALF_SPACE_THRESHOLD: f64 = 0.05;
    pub const WK_EXPONENT: (f64, f64) = (-2.5, 0.15);
    pub const BARRIER_EXPONENT: (f64, f64) = (-0.5, 0.1);
    pub const EVOLUTION_RESIDUAL: f64 = 1e-2;
    pub const EVOLUTION_REFINEMENT: f64 = 2.0;
    pub const PSI_ORDER: f64 = 1.8;
    pub const PLANE_TARGET: f64 = 1e-4;
    pub const DOMINANCE: f64 = 1e-6;
    pub const AREA_TRIALS: usize = 100;
    pub const CLEARING_EXPONENT: (f64, f64) = (1.5, 2.5);
    pub const FAMILY_THRESHOLD: f64 = 0.05;
}

pub const CRITERIA: [&str; 14] = [
    "expander self-similarity",
    "cone dominance",
    "monotonicity",
    "decay rate",
    "two-sided convergence",
    "hyperplane stability",
    "static barrier",
    "flow barrier",
    "evolution equations",
    "psi identity",
    "subsolution dominance",
    "area bound",
    "clearing-out scaling",
    "family uniformity",
];

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct SuiteOptions {
    /// Cheaper resolutions where the criterion allows it.
    pub quick: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    /// One line of the key measured numbers.
    pub summary: String,
    pub seconds: f64,
    pub report: Report,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:2} {:<24} {:>7.2}s  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.seconds,
            self.summary
        )
    }
}

fn within(x: f64, (center, width): (f64, f64)) -> bool {
    (x - center).abs() <= width
}

type Check = (bool, String, Report);

fn report(id: usize) -> Report {
    Report::new(&format!("criterion-{id:02}"), CRITERIA[id - 1])
}

fn finish(mut r: Report, passed: bool, summary: String) -> Result<Check> {
    r.verdict = Outcome::from(passed);
    Ok((passed, summary, r))
}

fn c1_self_similarity(_: &SuiteOptions) -> Result<Check> {
    let mut r = report(1);
    let start = Instant::now();
    let k = ConeProfile::radial(2, 1.0)?;
    let p = Arc::new(solve_expander_profile(&k, &ShootingConfig::default())?);
    let grid = Arc::new(GridSpec::stretched(2, 200.0, 2001, 4.0)?);
    let res = expander_residual(&p, grid, &SolverSettings::default())?;
    let secs = start.elapsed().as_secs_f64();
    r.metric("a", p.a).metric("residuals", res).metric("seconds", secs).metric("nodes", 2001);
    let ok = res.evolution_residual <= tol::SELF_SIMILARITY && secs <= tol::SELF_SIMILARITY_SECONDS;
    finish(r, ok, format!("sup|u(2) − √2φ(·/√2)| = {:.2e}, {secs:.1}s", res.evolution_residual))
}

fn c2_cone_dominance(_: &SuiteOptions) -> Result<Check> {
    let mut r = report(2);
    let times: Vec<f64> = (0..=30).map(|i| 0.01 * 5000f64.powf(i as f64 / 30.0)).collect();
    let mut worst = f64::INFINITY;
    let mut tip_min = f64::INFINITY;
    for n in [2, 3] {
        for beta in [0.5, 1.0, 2.0] {
            let k = ConeProfile::radial(n, beta)?;
            let p = solve_expander_profile(&k, &ShootingConfig::default())?;
            let grid = Arc::new(GridSpec::stretched(n, 200.0, 2001, 4.0)?);
            let kk = k.sample(grid.clone())?;
            let mut local = f64::INFINITY;
            for &t in &times {
                let u = p.sample(grid.clone(), t)?;
                local = local.min(u.zip_map(&kk, |a, b| a - b)?.min());
                tip_min = tip_min.min(u.values()[0]);
            }
            r.metric(&format!("min_U_minus_k_n{n}_beta{beta}"), local);
            worst = worst.min(local);
        }
    }
    r.metric("min_U_minus_k", worst).metric("min_U_at_tip", tip_min);
    let ok = worst >= tol::CONE_DOMINANCE && tip_min > 0.0;
    finish(r, ok, format!("min(U − k) = {worst:.2e}, min U(0,t) = {tip_min:.3e}"))
}

fn c3_monotonicity(_: &SuiteOptions) -> Result<Check> {
    let mut r = report(3);
    let mut worst = f64::INFINITY;
    let mut at_tip = f64::INFINITY;
    for n in [2, 3] {
        for beta in [0.5, 1.0, 2.0] {
            let p = solve_expander_profile(&ConeProfile::radial(n, beta)?, &ShootingConfig::default())?;
            let udot: Vec<f64> = p
                .rho()
                .iter()
                .zip(p.phi().iter().zip(p.phi_prime()))
                .map(|(&x, (&f, &df))| 0.5 * (f - x * df))
                .collect();
            let m = udot.iter().copied().fold(f64::INFINITY, f64::min);
            r.metric(&format!("min_udot_n{n}_beta{beta}"), m);
            worst = worst.min(m);
            at_tip = at_tip.min(udot[0]);
        }
    }
    r.metric("min_udot", worst).metric("min_udot_at_tip", at_tip);
    let ok = worst >= tol::MONOTONICITY && at_tip > 0.0;
    finish(r, ok, format!("min (φ − ρφ')/2 = {worst:.2e}, at ρ = 0 ≥ {at_tip:.3}"))
}

fn c4_decay(_: &SuiteOptions) -> Result<Check> {
    let mut r = report(4);
    let k = ConeProfile::radial(2, 1.0)?;
    let p = solve_expander_profile(&k, &ShootingConfig::default())?;
    let grid = Arc::new(GridSpec::stretched(2, 400.0, 2001, 4.0)?);
    let t: Vec<f64> = (0..=20).map(|i| 5.0 * 10f64.powf(i as f64 / 20.0)).collect();
    let d = t
        .iter()
        .map(|&s| Ok(p.sample(grid.clone(), s + 1.0)?.max_abs_diff(&p.sample(grid.clone(), s)?)?))
        .collect::<Result<Vec<f64>>>()?;
    let fit = decay_fit(&t, &d)?;
    r.metric("fit", &fit);
    let ok = within(fit.exponent, tol::DECAY_EXPONENT);
    finish(r, ok, format!("exponent {:.4} (residual {:.1e})", fit.exponent, fit.residual))
}

fn scenario_check(id: usize, names: &[&str], threshold: f64, opts: &SuiteOptions) -> Result<Check> {
    let mut r = report(id);
    let mut ok = true;
    let mut parts = Vec::new();
    for name in names {
        let mut sc = builtin(name).expect("builtin scenario");
        sc.measure.threshold = threshold;
        sc.seed = sc.seed.wrapping_add(opts.seed);
        let out = run_scenario(&sc)?;
        let m = &out.report.metrics;
        let key = if m.contains_key("final_uniform_sup") {
            "final_uniform_sup"
        } else {
            "final_sup_u_minus_U"
        };
        parts.push(format!(
            "{name}: final {:.4}, settles at {}",
            m[key].as_f64().unwrap_or(f64::NAN),
            m["settles_below_threshold_at"].as_f64().map_or("never".into(), |t| format!("t = {t:.2}"))
        ));
        ok &= out.report.passed();
        r.metric(name, &out.report);
    }
    finish(r, ok, parts.join("; "))
}

fn c6_half_space(opts: &SuiteOptions) -> Result<Check> {
    let mut r = report(6);
    let nodes = if opts.quick { 201 } else { 401 };
    let grid = Arc::new(GridSpec::uniform(2, 0.0, 80.0, nodes)?);
    let u0 = GridFunction::from_radial_fn(grid, |x| bump(x / 5.0))?;
    let cfg = HalfSpaceConfig {
        epsilon: 0.5 * tol::HALF_SPACE_THRESHOLD,
        ..HalfSpaceConfig::default()
    };
    let rep = half_space_experiment(&u0, &cfg)?;
    r.metric("final_sup", rep.final_sup)
        .metric("majorant_min_margin", rep.majorant_min_margin)
        .metric("majorant_log_amplitude", rep.majorant.log_amplitude)
        .metric("monotone_after", rep.monotone_after);
    let ok = rep.final_sup <= tol::HALF_SPACE_THRESHOLD && rep.majorant_holds;
    finish(
        r,
        ok,
        format!("sup u(50) = {:.4}, majorant margin {:.2e}", rep.final_sup, rep.majorant_min_margin),
    )
}

fn c7_static_barrier(_: &SuiteOptions) -> Result<Check> {
    let mut r = report(7);
    let k = ConeProfile::radial(3, 1.0)?;
    let grid = Arc::new(GridSpec::geometric(3, 0.05, 1e4, 2000)?);
    let sb = static_barrier_w(&k, 0.5, grid.clone())?;
    let fit = wk_difference_fit(&k, 0.5, 1e4)?;
    let positive = sb.r0.is_some_and(|r0| {
        grid.radial_nodes()
            .iter()
            .zip(&sb.h_w)
            .all(|(&x, &h)| x < r0 || h > 0.0)
    });
    r.metric("r0", sb.r0).metric("fit", &fit).metric("cone_margin", sb.cone_margin);
    let ok = positive && within(fit.exponent, tol::WK_EXPONENT);
    finish(r, ok, format!("r₀ = {:?}, exponent {:.4}", sb.r0, fit.exponent))
}

fn c8_flow_barrier(_: &SuiteOptions) -> Result<Check> {
    let mut r = report(8);
    let lb = lemma_barrier_flow(&ConeProfile::radial(3, 1.0)?, &LemmaBarrierConfig::default())?;
    let h_ok = lb.h_b.iter().all(|&h| h > 0.0);
    let exponent = lb.decay.as_ref().map_or(f64::NAN, |d| d.exponent);
    r.metric("r", lb.r)
        .metric("min_gap", lb.min_gap)
        .metric("m1", lb.max_gap)
        .metric("r1", lb.r1)
        .metric("decay", &lb.decay)
        .metric("certified", lb.certified)
        .metric("marker_graph_gap", lb.marker_graph_gap)
        .metric("attempts", &lb.attempts);
    let ok = lb.certified && lb.min_gap > 0.0 && h_ok && within(exponent, tol::BARRIER_EXPONENT);
    finish(
        r,
        ok,
        format!("r = {}, min(k − b) = {:.3e}, exponent {exponent:.4}", lb.r, lb.min_gap),
    )
}

fn c9_evolution_equations(_: &SuiteOptions) -> Result<Check> {
    let mut r = report(9);
    let path = |count, steps| {
        integrate_markers(
            3,
            1.0,
            LemmaBarrierConfig::default().r_start,
            1.0,
            1.0,
            &MarkerConfig {
                count,
                steps,
                ..MarkerConfig::default()
            },
        )
    };
    let coarse = evolution_equation_residuals(&path(256, 32)?, 0.1)?;
    let fine = evolution_equation_residuals(&path(512, 64)?, 0.1)?;
    let pairs = [
        ("metric", coarse.metric, fine.metric),
        ("second_form", coarse.second_form, fine.second_form),
        ("mean_curvature", coarse.mean_curvature, fine.mean_curvature),
        ("norm_a2", coarse.norm_a2, fine.norm_a2),
        ("normal", coarse.normal, fine.normal),
    ];
    let worst_ratio = pairs.iter().map(|p| p.1 / p.2).fold(f64::INFINITY, f64::min);
    r.metric("coarse", &coarse).metric("fine", &fine).metric("worst_ratio", worst_ratio);
    let bounded = coarse.a_evol_ratio.is_finite() && fine.a_evol_ratio <= 2.0 * coarse.a_evol_ratio;
    let ok = coarse.max() <= tol::EVOLUTION_RESIDUAL && worst_ratio >= tol::EVOLUTION_REFINEMENT && bounded;
    finish(
        r,
        ok,
        format!(
            "baseline {:.2e}, worst refinement ratio {worst_ratio:.2}, |A|² ratio {:.3} → {:.3}",
            coarse.max(),
            coarse.a_evol_ratio,
            fine.a_evol_ratio
        ),
    )
}

fn c10_psi(_: &SuiteOptions) -> Result<Check> {
    let mut r = report(10);
    let conv = psi_refinement(&ConeProfile::radial(2, 1.0)?, 20.0, &[101, 201, 401], 0.5)?;
    let orders: Vec<f64> = conv
        .windows(2)
        .map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln())
        .collect();
    let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
    let c = 0.7;
    let g = Arc::new(GridSpec::uniform(2, 0.0, 6.0, 121)?);
    let settings = SolverSettings {
        time_step: TimeStepPolicy::Fixed { dt: 0.05 },
        snapshots: SnapshotSchedule::Every { interval: 0.05 },
        ..SolverSettings::default()
    };
    let run = evolve(
        &GridFunction::constant(g.clone(), c)?,
        2.0,
        &SolverConfig::new(g, Boundary::Initial).with_settings(settings),
    )?;
    let id = psi_identity_residual(&run, (1.0, 2.0))?;
    let t0 = id.times[0];
    let target_err = (id.sup_target - c * c / (4.0 * t0 * t0)).abs();
    let plane = id.sup_residual.max(target_err);
    r.metric("refinement", &conv).metric("orders", &orders).metric("plane_error", plane);
    let ok = min_order >= tol::PSI_ORDER && plane <= tol::PLANE_TARGET;
    finish(r, ok, format!("orders {orders:.3?}, plane error {plane:.1e}"))
}

fn c11_subsolution(_: &SuiteOptions) -> Result<Check> {
    let mut r = report(11);
    let k = ConeProfile::radial(3, 1.0)?;
    let lb = lemma_barrier_flow(&k, &LemmaBarrierConfig::default())?;
    let profile = Arc::new(solve_expander_profile(&k, &ShootingConfig::default())?);
    let (depth, radius, delta) = (1.0, 5.0, 0.1);
    // u₀ = k outside B_R, so |u₀ − k| < δ/2 there
    let m = depth + 0.25 * delta;
    let r1 = lb.b.spec().r_min();
    let lambda = 1.25 * (m / lb.max_gap).max(radius / r1);
    let sub = assemble_subsolution(profile.clone(), &k, &lb.b, lambda, m, delta, radius)?;
    let grid = Arc::new(GridSpec::stretched(3, 200.0, 801, 3.0)?);
    let u0 = GridFunction::from_radial_fn(grid.clone(), |x| x - depth * bump(x / radius))?;
    let b0 = sub.sample(grid.clone(), 0.0)?;
    let start_margin = u0.zip_map(&b0, |a, b| a - b)?.min();
    let settings = SolverSettings {
        snapshots: SnapshotSchedule::Geometric { first: 0.05, count: 60 },
        ..SolverSettings::default()
    };
    let cfg = SolverConfig::new(
        grid.clone(),
        Boundary::Expander {
            profile,
            time_offset: 0.0,
            shift: 0.0,
        },
    )
    .with_settings(settings);
    let run = evolve(&u0, 50.0, &cfg)?;
    let dom = sub.dominance(&run, tol::DOMINANCE)?;
    let t_delta = detect_t_delta(&run, &k, delta)?;
    let check = sub.check(&grid, &[1.0, 10.0, 50.0])?;
    r.metric("lambda", lambda)
        .metric("m", m)
        .metric("m1", lb.max_gap)
        .metric("r1", r1)
        .metric("delta", delta)
        .metric("start_margin", start_margin)
        .metric("dominance", &dom)
        .metric("t_delta", t_delta)
        .metric("subsolution_check", &check);
    let ok = start_margin >= 0.0 && dom.passed && t_delta.is_some();
    finish(
        r,
        ok,
        format!("λ = {lambda:.3}, min(u − B) = {:.3e}, t_δ = {}", dom.min_margin, t_delta.map_or("none".into(), |t| format!("{t:.3}"))),
    )
}

fn c12_area_bound(opts: &SuiteOptions) -> Result<Check> {
    let mut r = report(12);
    let mut rng = ChaCha8Rng::seed_from_u64(12 + opts.seed);
    let cells = if opts.quick { 96 } else { 160 };
    let mut passes = 0;
    let mut worst_ratio = 0.0f64;
    let mut nonempty = 0;
    for _ in 0..tol::AREA_TRIALS {
        let beta = rng.gen_range(0.2..2.5);
        let k = ConeProfile::radial(2, beta)?;
        let g = beta.max(1.0);
        let dist = rng.gen_range(2.0..12.0);
        let ang = rng.gen_range(0.0..std::f64::consts::TAU);
        let x = [dist * ang.cos(), dist * ang.sin()];
        let eps = 1.0 / (1.0 + dist);
        let rho = rng.gen_range(eps.max(0.05)..0.95);
        let bumps: Vec<(f64, [f64; 2], f64)> = (0..rng.gen_range(1..4))
            .map(|_| {
                let amp = rng.gen_range(-3.0..3.0);
                let c = [x[0] + rng.gen_range(-0.8..0.8), x[1] + rng.gen_range(-0.8..0.8)];
                (amp, c, rng.gen_range(0.1..0.8))
            })
            .collect();
        let p = |y0: f64, y1: f64| {
            let mut v = 0.0;
            let mut dv = [0.0, 0.0];
            for &(amp, c, w) in &bumps {
                let (dx, dy) = (y0 - c[0], y1 - c[1]);
                let s = dx.hypot(dy) / w;
                if s < 1.0 && s > 0.0 {
                    v += amp * bump(s);
                    let ds = amp * bump_prime(s) / (w * w * s);
                    dv[0] += ds * dx;
                    dv[1] += ds * dy;
                } else if s == 0.0 {
                    v += amp * bump(0.0);
                }
            }
            (v, dv)
        };
        let est = graph_area_bound_check(&k, &p, x, rho, g, &Threshold::Reciprocal, cells)?;
        passes += est.passed as usize;
        if est.area > 0.0 {
            nonempty += 1;
            worst_ratio = worst_ratio.max(est.area / est.bound);
        }
    }
    r.metric("passes", passes)
        .metric("trials", tol::AREA_TRIALS)
        .metric("nonempty_area_trials", nonempty)
        .metric("max_area_over_bound", worst_ratio);
    let ok = passes == tol::AREA_TRIALS;
    finish(
        r,
        ok,
        format!("{passes}/{} passed ({nonempty} with positive area, max A/bound {worst_ratio:.3})", tol::AREA_TRIALS),
    )
}

fn c13_clearing_out(_: &SuiteOptions) -> Result<Check> {
    let mut r = report(13);
    let k = ConeProfile::radial(2, 1.0)?;
    let rhos = [0.05, 0.1, 0.2];
    let mut t0 = Vec::new();
    let mut capped = true;
    for &rho in &rhos {
        let c = clearing_out_experiment(&k, 1.0, rho, &ClearingOutConfig::default())?;
        capped &= c.passed;
        r.metric(&format!("rho_{rho}"), &c);
        t0.push(c.t0.unwrap_or(f64::NAN));
    }
    if t0.iter().any(|t| !t.is_finite() || *t <= 0.0) {
        return finish(r, false, format!("no clearing time for some ρ: {t0:?}"));
    }
    let fit = power_fit(&rhos, &t0)?;
    r.metric("fit", &fit);
    let (lo, hi) = tol::CLEARING_EXPONENT;
    let ok = capped && fit.exponent >= lo && fit.exponent <= hi;
    finish(r, ok, format!("t₀ = {t0:.3?}, exponent {:.3}", fit.exponent))
}

fn run_one(id: usize, opts: &SuiteOptions) -> Result<Check> {
    match id {
        1 => c1_self_similarity(opts),
        2 => c2_cone_dominance(opts),
        3 => c3_monotonicity(opts),
        4 => c4_decay(opts),
        5 => scenario_check(5, &["bump-above", "bump-below"], tol::MAIN_THRESHOLD, opts),
        6 => c6_half_space(opts),
        7 => c7_static_barrier(opts),
        8 => c8_flow_barrier(opts),
        9 => c9_evolution_equations(opts),
        10 => c10_psi(opts),
        11 => c11_subsolution(opts),
        12 => c12_area_bound(opts),
        13 => c13_clearing_out(opts),
        14 => scenario_check(14, &["family"], tol::FAMILY_THRESHOLD, opts),
        _ => unreachable!("criteria are numbered 1 to 14"),
    }
}

/// Runs criterion `id` (1-based). Errors become failed results.
pub fn run_criterion(id: usize, opts: &SuiteOptions) -> CriterionResult {
    assert!((1..=CRITERIA.len()).contains(&id), "criterion {id} does not exist");
    let start = Instant::now();
    let (passed, summary, report) = match run_one(id, opts) {
        Ok(c) => c,
        Err(e) => {
            let mut r = report(id);
            r.metric("error", e.to_string());
            r.verdict = Outcome::Fail;
            (false, format!("error: {e}"), r)
        }
    };
    CriterionResult {
        id,
        name: CRITERIA[id - 1],
        passed,
        summary,
        seconds: start.elapsed().as_secs_f64(),
        report,
    }
}

pub fn run_suite(opts: &SuiteOptions) -> Vec<CriterionResult> {
    (1..=CRITERIA.len()).map(|id| run_criterion(id, opts)).collect()
}
