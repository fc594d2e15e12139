//! Named scenarios: perturbed cones flowed next to their expander, with the
//! comparison runs that sandwich them.
//!
//! A scenario file looks like
//! ```toml
//! name = "bump-above"
//! kind = "main_theorem"
//! paper_ref = "two-sided convergence to the expander"
//! seed = 0
//! t_final = 50.0
//!
//! [cone]
//! kind = "radial"
//! n = 2
//! beta = 1.0
//!
//! [perturbation]
//! kind = "bump"
//! sign = 1.0
//! amplitude = 1.0
//! radius = 5.0
//!
//! [grid]
//! r_max = 200.0
//! nodes = 801
//! stretch = 3.0
//!
//! [solver]          # flow::SolverSettings
//! scheme = "bdf2"
//!
//! [measure]
//! threshold = 0.05
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{bump, decay_fit, DecayFit};
use crate::cones::ConeProfile;
use crate::error::{Error, Result};
use crate::expander::{solve_expander_profile, ExpanderProfile, ShootingConfig};
use crate::flow::{comparison_check, detect_t_delta, evolve, Boundary, ComparisonReport, FlowRun, SnapshotSchedule, SolverConfig, SolverSettings};
use crate::grid::{GridFunction, GridSpec};
use crate::io::{write_csv_atomic, write_json_atomic, CsvTable, Outcome, Report};
use crate::stencil::radial_derivatives;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    MainTheorem,
    OneSided,
    FamilyUniform,
}

/// Initial data relative to the cone `k` (all centred at the tip).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Perturbation {
    None,
    /// `k + sign·amplitude·bump(r/radius)`.
    Bump { sign: f64, amplitude: f64, radius: f64 },
    /// `U(·, t0)`.
    Expander { t0: f64 },
    /// `(k + U(·, t0))/2`.
    Midway { t0: f64 },
    /// `count` members `k + amplitude·e^{−rate·r}·s_i(r)` with `|s_i| ≤ 1`
    /// drawn from the scenario seed.
    Family { count: usize, amplitude: f64, rate: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub r_max: f64,
    pub nodes: usize,
    /// sinh stretching towards the origin; 0 is uniform.
    pub stretch: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Measurements {
    /// Required final level of `sup|u − U|`.
    pub threshold: f64,
    /// `ε` of the sandwich: comparisons allow `tol + c_scheme·t·Δx²`.
    pub comparison_tol: f64,
    pub c_scheme: f64,
    /// Lift `δ` used with `t_δ` for data below the cone.
    pub delta: f64,
    /// Time window of the decay fit.
    pub fit_window: [f64; 2],
    pub exponent_range: [f64; 2],
    /// Record `sup|D(u−U)|` and `sup|D²(u−U)|` as well.
    pub derivatives: bool,
}

impl Default for Measurements {
    fn default() -> Self {
        Measurements {
            threshold: 0.05,
            comparison_tol: 1e-6,
            c_scheme: 0.0,
            delta: 0.05,
            fit_window: [5.0, 50.0],
            exponent_range: [-0.65, -0.35],
            derivatives: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub kind: ScenarioKind,
    /// The claim this scenario exercises.
    #[serde(rename = "paper_ref")]
    pub claim: String,
    #[serde(default)]
    pub seed: u64,
    pub t_final: f64,
    pub cone: ConeProfile,
    pub perturbation: Perturbation,
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub measure: Measurements,
}

fn default_solver() -> SolverSettings {
    SolverSettings {
        snapshots: SnapshotSchedule::Geometric { first: 0.05, count: 60 },
        ..SolverSettings::default()
    }
}

fn base(name: &str, kind: ScenarioKind, claim: &str, perturbation: Perturbation) -> Scenario {
    Scenario {
        name: name.into(),
        kind,
        claim: claim.into(),
        seed: 0,
        t_final: 50.0,
        cone: ConeProfile::radial(2, 1.0).expect("valid cone"),
        perturbation,
        grid: GridConfig {
            r_max: 200.0,
            nodes: 801,
            stretch: 3.0,
        },
        solver: default_solver(),
        measure: Measurements::default(),
    }
}

const TWO_SIDED: &str = "u(·,t) − U(·,t) → 0 uniformly in C^k for data asymptotic to the cone";
const ONE_SIDED: &str = "k ≤ u₀ ≤ U(·,T) gives sup|u − U| ≤ c/√t, and the rate is sharp";
const FAMILY: &str = "uniform convergence for a family sharing a decay envelope";

pub fn builtin_names() -> Vec<&'static str> {
    vec!["bump-above", "bump-below", "zero", "expander-shift", "midway", "family"]
}

pub fn builtin(name: &str) -> Option<Scenario> {
    use Perturbation::*;
    use ScenarioKind::*;
    let bump = |sign| Bump {
        sign,
        amplitude: 1.0,
        radius: 5.0,
    };
    Some(match name {
        "bump-above" => base(name, MainTheorem, TWO_SIDED, bump(1.0)),
        "bump-below" => base(name, MainTheorem, TWO_SIDED, bump(-1.0)),
        "zero" => base(name, MainTheorem, TWO_SIDED, None),
        "expander-shift" => base(name, OneSided, ONE_SIDED, Expander { t0: 0.5 }),
        "midway" => base(name, OneSided, ONE_SIDED, Midway { t0: 0.5 }),
        "family" => Scenario {
            seed: 7,
            ..base(
                name,
                FamilyUniform,
                FAMILY,
                Family {
                    count: 5,
                    amplitude: 0.5,
                    rate: 1.0,
                },
            )
        },
        _ => return Option::None,
    })
}

/// Parses `value` as a TOML literal, falling back to a bare string.
fn parse_literal(value: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.into()))
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Applies dotted `key=value` overrides, re-checking the whole schema.
    pub fn with_overrides(&self, overrides: &[(String, String)]) -> Result<Self> {
        let mut root = toml::Value::try_from(self).map_err(|e| Error::Parse(e.to_string()))?;
        for (key, value) in overrides {
            let mut node = &mut root;
            let parts: Vec<&str> = key.split('.').collect();
            for (i, p) in parts.iter().enumerate() {
                let table = node
                    .as_table_mut()
                    .ok_or_else(|| Error::Parse(format!("{key}: `{p}` is not inside a table")))?;
                if i + 1 == parts.len() {
                    table.insert((*p).into(), parse_literal(value));
                    break;
                }
                node = table
                    .entry(p.to_string())
                    .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            }
        }
        let s: Scenario = root.try_into().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.claim.is_empty() {
            return Err(Error::InvalidInput("a scenario needs a name and a claim".into()));
        }
        if self.cone.beta().is_none() {
            return Err(Error::InvalidInput("scenarios run on radial cones".into()));
        }
        if !(self.t_final > 0.0 && self.grid.r_max > 0.0 && self.grid.nodes >= 3 && self.grid.stretch >= 0.0) {
            return Err(Error::InvalidInput(format!("bad time or grid: {:?}, T = {}", self.grid, self.t_final)));
        }
        self.solver.validate()?;
        let m = &self.measure;
        if !(m.threshold > 0.0 && m.comparison_tol >= 0.0 && m.c_scheme >= 0.0 && m.delta > 0.0) {
            return Err(Error::InvalidInput(format!("bad measurements: {m:?}")));
        }
        let ok = match (&self.kind, &self.perturbation) {
            (ScenarioKind::FamilyUniform, Perturbation::Family { count, amplitude, rate }) => {
                *count >= 1 && *amplitude >= 0.0 && *rate >= 0.0
            }
            (ScenarioKind::FamilyUniform, _) | (_, Perturbation::Family { .. }) => false,
            (_, Perturbation::Bump { amplitude, radius, .. }) => *amplitude >= 0.0 && *radius > 0.0,
            (_, Perturbation::Expander { t0 } | Perturbation::Midway { t0 }) => *t0 > 0.0,
            (_, Perturbation::None) => true,
        };
        if !ok {
            return Err(Error::InvalidInput(format!(
                "perturbation {:?} does not fit a {:?} scenario",
                self.perturbation, self.kind
            )));
        }
        Ok(())
    }

    /// A cheaper variant: half the nodes, coarser snapshot schedule.
    pub fn quick(&self) -> Self {
        let mut s = self.clone();
        s.grid.nodes = s.grid.nodes / 2 + 1;
        if let SnapshotSchedule::Geometric { first, count } = s.solver.snapshots {
            s.solver.snapshots = SnapshotSchedule::Geometric {
                first,
                count: (count / 2).max(8),
            };
        }
        s
    }
}

/// A finished scenario: the report and its time trace.
#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub report: Report,
    pub trace: CsvTable,
}

impl ScenarioOutcome {
    /// Writes `<name>.json` and `<name>.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let j = dir.join(format!("{}.json", self.report.experiment));
        let c = dir.join(format!("{}.csv", self.report.experiment));
        write_json_atomic(&j, &self.report)?;
        write_csv_atomic(&c, &self.trace)?;
        Ok((j, c))
    }
}

struct Setup {
    k: ConeProfile,
    profile: Arc<ExpanderProfile>,
    grid: Arc<GridSpec>,
}

impl Setup {
    fn new(sc: &Scenario) -> Result<Self> {
        let k = sc.cone.clone();
        let profile = Arc::new(solve_expander_profile(&k, &ShootingConfig::default())?);
        let grid = Arc::new(GridSpec::stretched(k.n(), sc.grid.r_max, sc.grid.nodes, sc.grid.stretch)?);
        Ok(Setup { k, profile, grid })
    }

    /// `U(·, t)`, with the cone itself at `t = 0`.
    fn expander(&self, t: f64) -> Result<GridFunction> {
        if t == 0.0 {
            self.k.sample(self.grid.clone())
        } else {
            self.profile.sample(self.grid.clone(), t)
        }
    }

    fn cone(&self) -> Result<GridFunction> {
        self.k.sample(self.grid.clone())
    }

    fn flow(&self, u0: &GridFunction, t_final: f64, offset: f64, shift: f64, settings: &SolverSettings) -> Result<FlowRun> {
        let cfg = SolverConfig::new(
            self.grid.clone(),
            Boundary::Expander {
                profile: self.profile.clone(),
                time_offset: offset,
                shift,
            },
        )
        .with_settings(settings.clone());
        evolve(u0, t_final, &cfg)
    }

    /// Smallest `T` (to bisection accuracy) with `U(·, T) ≥ u0` on the grid.
    fn cover_time(&self, u0: &GridFunction) -> Result<f64> {
        let covers = |t: f64| -> Result<bool> {
            Ok(self.expander(t)?.values().iter().zip(u0.values()).all(|(a, b)| a >= b))
        };
        if covers(0.0)? {
            return Ok(0.0);
        }
        let mut hi = 1.0;
        while !covers(hi)? {
            hi *= 2.0;
            if hi > 1e8 {
                return Err(Error::Precondition("no expander time slice lies above u0".into()));
            }
        }
        let mut lo = 0.0;
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if covers(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }
}

fn initial_data(setup: &Setup, p: &Perturbation) -> Result<GridFunction> {
    let k = setup.cone()?;
    match *p {
        Perturbation::None => Ok(k),
        Perturbation::Bump { sign, amplitude, radius } => {
            let g = setup.grid.clone();
            let beta = setup.k.beta().unwrap_or(0.0);
            GridFunction::from_radial_fn(g, |r| beta * r + sign * amplitude * bump(r / radius))
        }
        Perturbation::Expander { t0 } => setup.expander(t0),
        Perturbation::Midway { t0 } => k.zip_map(&setup.expander(t0)?, |a, b| 0.5 * (a + b)),
        Perturbation::Family { .. } => Err(Error::InvalidInput("family data come from family_members".into())),
    }
}

/// `(sup|u−U|, sup|D(u−U)|, sup|D²(u−U)|)` over the interior nodes.
fn distances(u: &GridFunction, exact: &GridFunction) -> Result<[f64; 3]> {
    let d = u.zip_map(exact, |a, b| a - b)?;
    let r = u.spec().radial_nodes();
    let (d1, d2, _) = radial_derivatives(r, d.values());
    let m = r.len() - 1;
    let sup = |v: &[f64]| v[..m].iter().fold(0.0f64, |a, x| a.max(x.abs()));
    Ok([sup(d.values()), sup(&d1), sup(&d2)])
}

struct Trace {
    t: Vec<f64>,
    dist: Vec<[f64; 3]>,
}

fn trace(setup: &Setup, run: &FlowRun, t_shift: f64) -> Result<Trace> {
    let mut out = Trace {
        t: Vec::new(),
        dist: Vec::new(),
    };
    for s in &run.snapshots {
        let t = s.t + t_shift;
        out.t.push(t);
        out.dist.push(distances(&s.u, &setup.expander(t)?)?);
    }
    Ok(out)
}

/// First time after which `values` stay at or below `level`.
fn settles_below(t: &[f64], values: &[f64], level: f64) -> Option<f64> {
    let last_above = values.iter().rposition(|&v| v > level);
    match last_above {
        None => t.first().copied(),
        Some(i) if i + 1 < t.len() => Some(t[i + 1]),
        Some(_) => None,
    }
}

fn trace_table(tr: &Trace, extra: &[(&str, Vec<f64>)]) -> CsvTable {
    let mut header = vec!["t[time]", "sup_u_minus_U[length]", "sup_Du_minus_DU[1]", "sup_D2u_minus_D2U[1/length]"];
    header.extend(extra.iter().map(|e| e.0));
    let mut table = CsvTable::new(&header);
    for (i, &t) in tr.t.iter().enumerate() {
        let mut row = vec![t, tr.dist[i][0], tr.dist[i][1], tr.dist[i][2]];
        row.extend(extra.iter().map(|e| e.1[i]));
        table.push(row);
    }
    table
}

fn comparison_metrics(report: &mut Report, key: &str, c: &ComparisonReport) {
    report.metric(&format!("{key}_passed"), c.passed);
    report.metric(&format!("{key}_min_margin"), c.min_margin);
    if let Some(v) = &c.first_violation {
        report.metric(&format!("{key}_first_violation"), v);
    }
}

fn new_report(sc: &Scenario) -> Report {
    let mut r = Report::new(&sc.name, &sc.claim);
    r.metric("seed", sc.seed);
    r.metric("cone", &sc.cone);
    r.metric("perturbation", &sc.perturbation);
    r.metric("nodes", sc.grid.nodes);
    r.metric("r_max", sc.grid.r_max);
    r.metric("t_final", sc.t_final);
    r
}

/// Two-sided convergence with the sandwich `U(·,t) − δ ≤ u(·,t+t_δ)` and
/// `u(·,t) ≤ U(·,t+T)`, both checked by comparison runs.
pub fn run_main_theorem(sc: &Scenario) -> Result<ScenarioOutcome> {
    sc.validate()?;
    let setup = Setup::new(sc)?;
    let m = &sc.measure;
    let u0 = initial_data(&setup, &sc.perturbation)?;
    let run = setup.flow(&u0, sc.t_final, 0.0, 0.0, &sc.solver)?;
    let mut report = new_report(sc);

    // upper half: the slice U(·,T) above u0 flows above u
    let t_up = setup.cover_time(&u0)?;
    let upper = setup.flow(&setup.expander(t_up)?, sc.t_final, t_up, 0.0, &sc.solver)?;
    let up = comparison_check(&upper, &run, m.comparison_tol, m.c_scheme)?;
    report.metric("cover_time", t_up);
    comparison_metrics(&mut report, "upper", &up);

    // lower half: either u0 ≥ k already, or wait for t_δ and restart
    let below = u0.zip_map(&setup.cone()?, |a, b| b - a)?.max();
    let (t_delta, low) = if below <= 0.0 {
        let lower = setup.flow(&setup.cone()?, sc.t_final, 0.0, 0.0, &sc.solver)?;
        (Some(0.0), Some(comparison_check(&run, &lower, m.comparison_tol, m.c_scheme)?))
    } else {
        match detect_t_delta(&run, &setup.k, m.delta)? {
            None => (None, None),
            Some(td) => {
                let at = run.snapshots.iter().find(|s| s.t == td).expect("snapshot exists");
                let rest = sc.t_final - td;
                let restarted = setup.flow(&at.u, rest, td, 0.0, &sc.solver)?;
                let kd = setup.cone()?.map(|v| v - m.delta)?;
                let lower = setup.flow(&kd, rest, 0.0, -m.delta, &sc.solver)?;
                (Some(td), Some(comparison_check(&restarted, &lower, m.comparison_tol, m.c_scheme)?))
            }
        }
    };
    report.metric("t_delta", t_delta);
    report.metric("initial_depth_below_cone", below.max(0.0));
    if let Some(c) = &low {
        comparison_metrics(&mut report, "lower", c);
    }

    let tr = trace(&setup, &run, 0.0)?;
    let sup: Vec<f64> = tr.dist.iter().map(|d| d[0]).collect();
    let settle = settles_below(&tr.t, &sup, m.threshold);
    let last = *tr.dist.last().expect("at least one snapshot");
    report.metric("final_sup_u_minus_U", last[0]);
    if m.derivatives {
        report.metric("final_sup_D", last[1]);
        report.metric("final_sup_D2", last[2]);
    }
    report.metric("max_sup_u_minus_U", sup.iter().fold(0.0f64, |a, &b| a.max(b)));
    report.metric("settles_below_threshold_at", settle);
    report.metric("threshold", m.threshold);
    let passed = settle.is_some() && up.passed && low.as_ref().is_some_and(|c| c.passed);
    report.verdict = Outcome::from(passed);
    Ok(ScenarioOutcome {
        report,
        trace: trace_table(&tr, &[]),
    })
}

/// Data trapped between `k` and an expander slice: fits the decay of `sup|u − U|`.
pub fn run_one_sided(sc: &Scenario) -> Result<ScenarioOutcome> {
    sc.validate()?;
    let setup = Setup::new(sc)?;
    let m = &sc.measure;
    let u0 = initial_data(&setup, &sc.perturbation)?;
    let k = setup.cone()?;
    let below = u0.zip_map(&k, |a, b| b - a)?.max();
    if below > m.comparison_tol {
        return Err(Error::Precondition(format!("u0 dips {below:.3e} below the cone")));
    }
    let t_up = setup.cover_time(&u0)?;
    let offset = match sc.perturbation {
        Perturbation::Expander { t0 } => t0,
        _ => 0.0,
    };
    // the fit window ends land on snapshots
    let mut times = sc.solver.snapshots.times(sc.t_final)?;
    times.extend(m.fit_window);
    let settings = SolverSettings {
        snapshots: SnapshotSchedule::Times { times },
        ..sc.solver.clone()
    };
    let run = setup.flow(&u0, sc.t_final, offset, 0.0, &settings)?;
    let tr = trace(&setup, &run, 0.0)?;
    let mut report = new_report(sc);
    report.metric("cover_time", t_up);
    let (ft, fd): (Vec<f64>, Vec<f64>) = tr
        .t
        .iter()
        .zip(&tr.dist)
        .filter(|(&t, _)| t >= m.fit_window[0] * (1.0 - 1e-12) && t <= m.fit_window[1] * (1.0 + 1e-12))
        .map(|(&t, d)| (t, d[0]))
        .unzip();
    let fit: Result<DecayFit> = decay_fit(&ft, &fd);
    let passed = match &fit {
        Ok(f) => {
            report.metric("decay", f);
            f.exponent >= m.exponent_range[0] && f.exponent <= m.exponent_range[1]
        }
        Err(e) => {
            report.metric("decay_error", e.to_string());
            false
        }
    };
    report.metric("exponent_range", m.exponent_range);
    report.metric("final_sup_u_minus_U", tr.dist.last().map(|d| d[0]));
    report.verdict = Outcome::from(passed);
    Ok(ScenarioOutcome {
        report,
        trace: trace_table(&tr, &[]),
    })
}

/// The members of a family scenario, reproducible from the seed.
pub fn family_members(sc: &Scenario, grid: Arc<GridSpec>) -> Result<Vec<GridFunction>> {
    let Perturbation::Family { count, amplitude, rate } = sc.perturbation else {
        return Err(Error::InvalidInput("not a family scenario".into()));
    };
    let beta = sc.cone.beta().unwrap_or(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    (0..count)
        .map(|_| {
            let a: f64 = rng.gen_range(-1.0..=1.0);
            let c: f64 = rng.gen_range(0.0..3.0);
            let w: f64 = rng.gen_range(1.0..3.0);
            GridFunction::from_radial_fn(grid.clone(), |r| {
                beta * r + amplitude * (-rate * r).exp() * a * bump((r - c) / w)
            })
        })
        .collect()
}

/// Runs every member together with the envelope runs `u± = k ± envelope`
/// and checks `u⁻ − ε ≤ uⁱ ≤ u⁺ + ε` at every snapshot.
pub fn run_family_uniform(sc: &Scenario) -> Result<ScenarioOutcome> {
    sc.validate()?;
    let Perturbation::Family { amplitude, rate, .. } = sc.perturbation else {
        return Err(Error::InvalidInput("not a family scenario".into()));
    };
    let setup = Setup::new(sc)?;
    let m = &sc.measure;
    let members = family_members(sc, setup.grid.clone())?;
    let beta = setup.k.beta().unwrap_or(0.0);
    let r = setup.grid.radial_nodes();
    for (i, u) in members.iter().enumerate() {
        for (j, (&x, &v)) in r.iter().zip(u.values()).enumerate() {
            if (v - beta * x).abs() > amplitude * (-rate * x).exp() * (1.0 + 1e-12) {
                return Err(Error::Precondition(format!("member {i} leaves the envelope at node {j}")));
            }
        }
    }
    let env = |s: f64| GridFunction::from_radial_fn(setup.grid.clone(), |x| beta * x + s * amplitude * (-rate * x).exp());
    let mut inputs = vec![env(1.0)?, env(-1.0)?];
    inputs.extend(members);
    let runs: Vec<FlowRun> = inputs
        .par_iter()
        .map(|u0| setup.flow(u0, sc.t_final, 0.0, 0.0, &sc.solver))
        .collect::<Result<_>>()?;
    let (plus, minus) = (&runs[0], &runs[1]);
    let mut report = new_report(sc);
    let mut sandwich = true;
    let mut worst_margin = f64::INFINITY;
    for (i, run) in runs[2..].iter().enumerate() {
        let a = comparison_check(plus, run, m.comparison_tol, m.c_scheme)?;
        let b = comparison_check(run, minus, m.comparison_tol, m.c_scheme)?;
        sandwich &= a.passed && b.passed;
        worst_margin = worst_margin.min(a.min_margin).min(b.min_margin);
        if !(a.passed && b.passed) {
            report.metric(&format!("member_{i}_violation"), (&a.first_violation, &b.first_violation));
        }
    }
    let tp = trace(&setup, plus, 0.0)?;
    let tm = trace(&setup, minus, 0.0)?;
    let members: Vec<Trace> = runs[2..].iter().map(|r| trace(&setup, r, 0.0)).collect::<Result<_>>()?;
    let dx2 = setup.grid.max_spacing().powi(2);
    let mut uniform = Trace {
        t: tp.t.clone(),
        dist: Vec::new(),
    };
    let mut bound = Vec::new();
    let mut bound_holds = true;
    for (s, &t) in tp.t.iter().enumerate() {
        let mut d = [0.0f64; 3];
        for tr in &members {
            for c in 0..3 {
                d[c] = d[c].max(tr.dist[s][c]);
            }
        }
        let eps = m.comparison_tol + m.c_scheme * t * dx2;
        let b = tp.dist[s][0] + tm.dist[s][0] + 2.0 * eps;
        bound_holds &= d[0] <= b;
        uniform.dist.push(d);
        bound.push(b);
    }
    let sup: Vec<f64> = uniform.dist.iter().map(|d| d[0]).collect();
    let settle = settles_below(&uniform.t, &sup, m.threshold);
    report.metric("members", runs.len() - 2);
    report.metric("sandwich_passed", sandwich);
    report.metric("sandwich_min_margin", worst_margin);
    report.metric("bound_holds", bound_holds);
    report.metric("final_uniform_sup", *sup.last().expect("snapshots"));
    report.metric("final_bound", *bound.last().expect("snapshots"));
    report.metric("settles_below_threshold_at", settle);
    report.metric("threshold", m.threshold);
    let per_member: BTreeMap<String, f64> = members
        .iter()
        .enumerate()
        .map(|(i, tr)| (format!("member_{i}"), tr.dist.last().expect("snapshots")[0]))
        .collect();
    report.metric("final_member_sup", per_member);
    report.verdict = Outcome::from(sandwich && bound_holds && settle.is_some());
    let plus_sup: Vec<f64> = tp.dist.iter().map(|d| d[0]).collect();
    let minus_sup: Vec<f64> = tm.dist.iter().map(|d| d[0]).collect();
    Ok(ScenarioOutcome {
        report,
        trace: trace_table(
            &uniform,
            &[
                ("sup_uplus_minus_U[length]", plus_sup),
                ("sup_uminus_minus_U[length]", minus_sup),
                ("bound[length]", bound),
            ],
        ),
    })
}

/// The plain flow of a scenario's initial data (the first member for a
/// family), with its `sup|u − U|` trace.
pub fn evolve_scenario(sc: &Scenario) -> Result<(FlowRun, CsvTable)> {
    sc.validate()?;
    let setup = Setup::new(sc)?;
    let u0 = match sc.perturbation {
        Perturbation::Family { .. } => family_members(sc, setup.grid.clone())?.remove(0),
        ref p => initial_data(&setup, p)?,
    };
    let offset = match sc.perturbation {
        Perturbation::Expander { t0 } => t0,
        _ => 0.0,
    };
    let run = setup.flow(&u0, sc.t_final, offset, 0.0, &sc.solver)?;
    let tr = trace(&setup, &run, 0.0)?;
    Ok((run, trace_table(&tr, &[])))
}

pub fn run_scenario(sc: &Scenario) -> Result<ScenarioOutcome> {
    match sc.kind {
        ScenarioKind::MainTheorem => run_main_theorem(sc),
        ScenarioKind::OneSided => run_one_sided(sc),
        ScenarioKind::FamilyUniform => run_family_uniform(sc),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_round_trip_through_toml() {
        for name in builtin_names() {
            let s = builtin(name).unwrap();
            let text = s.to_toml().unwrap();
            assert_eq!(Scenario::from_toml(&text).unwrap(), s, "{name}");
        }
        assert!(builtin("nope").is_none());
    }

    #[test]
    fn overrides_are_type_checked() {
        let s = builtin("bump-above").unwrap();
        let o = s
            .with_overrides(&[("grid.nodes".into(), "101".into()), ("measure.threshold".into(), "0.1".into())])
            .unwrap();
        assert_eq!(o.grid.nodes, 101);
        assert_eq!(o.measure.threshold, 0.1);
        assert!(s.with_overrides(&[("grid.nodes".into(), "many".into())]).is_err());
        assert!(s.with_overrides(&[("grid.nodes".into(), "-3".into())]).is_err());
        assert!(s.with_overrides(&[("perturbation.kind".into(), "family".into())]).is_err());
    }

    #[test]
    fn family_members_respect_the_envelope_and_the_seed() {
        let s = builtin("family").unwrap();
        let g = Arc::new(GridSpec::uniform(2, 0.0, 20.0, 201).unwrap());
        let a = family_members(&s, g.clone()).unwrap();
        let b = family_members(&s, g.clone()).unwrap();
        assert_eq!(a.len(), 5);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.values(), y.values());
            for (&r, &v) in g.radial_nodes().iter().zip(x.values()) {
                assert!((v - r).abs() <= 0.5 * (-r).exp() + 1e-15);
            }
        }
        let other = Scenario { seed: 8, ..s };
        assert_ne!(family_members(&other, g).unwrap()[0].values(), a[0].values());
    }

    #[test]
    fn settling_time() {
        let t = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(settles_below(&t, &[1.0, 0.1, 0.2, 0.01], 0.15), Some(4.0));
        assert_eq!(settles_below(&t, &[0.1, 0.1, 0.1, 0.1], 0.15), Some(1.0));
        assert_eq!(settles_below(&t, &[0.1, 0.1, 0.1, 0.2], 0.15), None);
    }
}
