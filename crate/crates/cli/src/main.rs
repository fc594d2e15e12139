//! `mcflab`: expanders, flows, barriers and the acceptance battery from the
//! command line.
//!
//! Exit codes: 0 success, 1 a checked property failed, 2 usage or input
//! error, 3 numerical breakdown.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use mcf_core::barriers::{
    barrier_table, evolution_equation_residuals, integrate_markers, lemma_barrier_flow, psi_refinement, static_barrier_w,
    wk_difference_fit, LemmaBarrierConfig,
};
use mcf_core::cones::ConeProfile;
use mcf_core::expander::{expander_residual, solve_expander_profile, ShootingConfig};
use mcf_core::experiments::{builtin, builtin_names, evolve_scenario, run_scenario, Scenario};
use mcf_core::flow::SolverSettings;
use mcf_core::io::{write_csv_atomic, write_json_atomic, Outcome, Report};
use mcf_core::suite::{run_criterion, SuiteOptions, CRITERIA};
use mcf_core::{Error, GridSpec};
use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "mcflab", version, about = "Graphical mean curvature flow out of cones: a numerical laboratory")]
struct Cli {
    /// TOML file with the settings of the subcommand (see --print-config).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Results directory.
    #[arg(long, global = true, env = "MCFLAB_RESULTS", default_value = "results")]
    out: PathBuf,
    /// Seed offset for randomised checks and scenarios.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Cheaper resolutions.
    #[arg(long, global = true)]
    quick: bool,
    /// Print the effective configuration as TOML and exit.
    #[arg(long, global = true)]
    print_config: bool,
    /// Dotted `key=value` override of the configuration, repeatable.
    #[arg(long = "set", global = true, value_parser = parse_key_value)]
    overrides: Vec<(String, String)>,
    /// More progress output on stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the expander profile of a radial cone.
    Expander(ConeArgs),
    /// Run the flow of one scenario's initial data.
    Evolve(ScenarioArgs),
    /// Static, flow and max barriers.
    #[command(subcommand)]
    Barrier(BarrierCommand),
    /// Identity and residual checks.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Run a named scenario with its comparison runs.
    Experiment(ScenarioArgs),
    /// The acceptance battery.
    Suite(SuiteArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
struct ConeArgs {
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
}

/// The flow barrier lives in dimension three and up.
#[derive(Args, Debug, Clone, Serialize)]
struct HigherArgs {
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
struct ScenarioArgs {
    /// Built-in scenario name; ignored with --config.
    #[arg(default_value = "bump-above")]
    name: String,
    /// List the built-in scenarios.
    #[arg(long)]
    list: bool,
}

#[derive(Subcommand, Debug)]
enum BarrierCommand {
    /// `w = k − r^{−α}`: where it is mean convex and how fast it approaches k.
    Static(StaticArgs),
    /// The flow barrier `b` outside a ball.
    Lemma(HigherArgs),
    /// Dominance of the max-subsolution along a flow.
    Subsolution,
}

#[derive(Args, Debug, Clone, Serialize)]
struct StaticArgs {
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0.05)]
    r_min: f64,
    #[arg(long, default_value_t = 1e4)]
    r_max: f64,
    #[arg(long, default_value_t = 2000)]
    nodes: usize,
}

#[derive(Subcommand, Debug)]
enum VerifyCommand {
    /// The heat-kernel identity along an expander, under refinement.
    Psi(ConeArgs),
    /// Evolution equations along the flow barrier markers.
    Evolution(HigherArgs),
    /// The area bound on randomised perturbations.
    Bv,
}

#[derive(Args, Debug, Clone, Serialize)]
struct SuiteArgs {
    /// Comma-separated criterion numbers (default: all).
    #[arg(long, value_delimiter = ',')]
    only: Vec<usize>,
}

fn parse_key_value(s: &str) -> Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    if k.trim().is_empty() {
        return Err("empty key".into());
    }
    Ok((k.trim().into(), v.trim().into()))
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Core(Error),
    Verdict(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verdict(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Core(e) if e.is_numerical() => 3,
            Failure::Core(Error::Certification { .. }) => 1,
            Failure::Core(_) => 2,
        }
    }
}

type Outcome2 = Result<(), Failure>;

fn merge(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_table() && v.is_table() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

fn literal(value: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.into()))
}

/// `default`, then the --config file, then --set overrides, re-checked against the type.
fn layered<T: Serialize + DeserializeOwned>(cli: &Cli, default: &T) -> Result<T, Failure> {
    let mut v = toml::Value::try_from(default).map_err(|e| Failure::Usage(e.to_string()))?;
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        let file: toml::Value = toml::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        merge(&mut v, file);
    }
    for (key, value) in &cli.overrides {
        let mut cur = &v;
        for part in key.split('.') {
            cur = cur.get(part).ok_or_else(|| Failure::Usage(format!("unknown configuration key `{key}`")))?;
        }
        let mut patch = literal(value);
        for part in key.split('.').rev() {
            let mut t = toml::Table::new();
            t.insert(part.into(), patch);
            patch = toml::Value::Table(t);
        }
        merge(&mut v, patch);
    }
    v.try_into().map_err(|e: toml::de::Error| Failure::Usage(format!("configuration: {e}")))
}

fn print_config<T: Serialize>(value: &T) -> Outcome2 {
    let text = toml::to_string(value).map_err(|e| Failure::Usage(e.to_string()))?;
    print!("{text}");
    Ok(())
}

fn out_dir(cli: &Cli, sub: &str) -> Result<PathBuf, Failure> {
    let dir = cli.out.join(sub);
    std::fs::create_dir_all(&dir).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn note(cli: &Cli, msg: &str) {
    if cli.verbose > 0 {
        eprintln!("{msg}");
    }
}

fn written(path: &Path) {
    println!("wrote {}", path.display());
}

fn verdict(report: &Report) -> Outcome2 {
    if report.verdict == Outcome::Pass {
        Ok(())
    } else {
        Err(Failure::Verdict(format!("{}: verdict fail", report.experiment)))
    }
}

fn cmd_expander(cli: &Cli, args: &ConeArgs) -> Outcome2 {
    let cfg: ShootingConfig = layered(cli, &ShootingConfig::default())?;
    if cli.print_config {
        return print_config(&cfg);
    }
    let k = ConeProfile::radial(args.n, args.beta)?;
    let p = Arc::new(solve_expander_profile(&k, &cfg)?);
    note(cli, &format!("a = {:.15} after {} bisections", p.a, p.report.bisections));
    let nodes = if cli.quick { 1001 } else { 2001 };
    let grid = Arc::new(GridSpec::stretched(args.n, 200.0, nodes, 4.0)?);
    let res = expander_residual(&p, grid, &SolverSettings::default())?;
    let mut report = Report::new(&format!("expander-n{}-beta{}", args.n, args.beta), "self-similar expander of a radial cone");
    report
        .metric("n", args.n)
        .metric("beta", args.beta)
        .metric("a", p.a)
        .metric("profile", &p.report)
        .metric("residuals", res)
        .metric("evolution_nodes", nodes);
    let dir = out_dir(cli, "expander")?;
    let stem = format!("n{}_beta{}", args.n, args.beta);
    let csv = dir.join(format!("{stem}_profile.csv"));
    let json = dir.join(format!("{stem}_residuals.json"));
    write_csv_atomic(&csv, &p.to_csv())?;
    write_json_atomic(&json, &report)?;
    written(&csv);
    written(&json);
    println!("a = {:.12}, ode residual {:.2e}, evolution residual {:.2e}", p.a, res.ode_residual, res.evolution_residual);
    Ok(())
}

fn load_scenario(cli: &Cli, args: &ScenarioArgs) -> Result<Option<Scenario>, Failure> {
    if args.list {
        for n in builtin_names() {
            println!("{n}");
        }
        return Ok(None);
    }
    let base = match &cli.config {
        Some(path) => Scenario::load(path)?,
        None => builtin(&args.name).ok_or_else(|| {
            Failure::Usage(format!("unknown scenario `{}`; known: {}", args.name, builtin_names().join(", ")))
        })?,
    };
    let mut sc = base.with_overrides(&cli.overrides)?;
    if let Some(seed) = cli.seed {
        sc.seed = seed;
    }
    if cli.quick {
        sc = sc.quick();
    }
    Ok(Some(sc))
}

fn cmd_evolve(cli: &Cli, args: &ScenarioArgs) -> Outcome2 {
    let Some(sc) = load_scenario(cli, args)? else { return Ok(()) };
    if cli.print_config {
        return print_config(&sc);
    }
    let (run, trace) = evolve_scenario(&sc)?;
    let dir = out_dir(cli, "evolve")?;
    let files = [
        (dir.join(format!("{}_diagnostics.csv", sc.name)), run.diagnostics_csv()),
        (dir.join(format!("{}_final.csv", sc.name)), run.snapshot_csv(run.snapshots.len() - 1)),
        (dir.join(format!("{}_trace.csv", sc.name)), trace),
    ];
    for (path, table) in &files {
        write_csv_atomic(path, table)?;
        written(path);
    }
    println!(
        "{} steps ({} rejected), final t = {}",
        run.diagnostics.len(),
        run.rejected_steps,
        run.last().t
    );
    Ok(())
}

fn cmd_experiment(cli: &Cli, args: &ScenarioArgs) -> Outcome2 {
    let Some(sc) = load_scenario(cli, args)? else { return Ok(()) };
    if cli.print_config {
        return print_config(&sc);
    }
    note(cli, &format!("running {}", sc.name));
    let outcome = run_scenario(&sc)?;
    let (j, c) = outcome.write(&out_dir(cli, "experiments")?)?;
    written(&j);
    written(&c);
    println!("{}: {:?}", sc.name, outcome.report.verdict);
    verdict(&outcome.report)
}

fn cmd_barrier(cli: &Cli, which: &BarrierCommand) -> Outcome2 {
    let dir = out_dir(cli, "barrier")?;
    match which {
        BarrierCommand::Static(a) => {
            if cli.print_config {
                return print_config(a);
            }
            let k = ConeProfile::radial(a.n, a.beta)?;
            let grid = Arc::new(GridSpec::geometric(a.n, a.r_min, a.r_max, a.nodes)?);
            let sb = static_barrier_w(&k, a.alpha, grid)?;
            let fit = wk_difference_fit(&k, a.alpha, a.r_max)?;
            let mut r = Report::new("static-barrier", "k − |x|^{−α} is mean convex outside a ball");
            r.metric("args", a).metric("barrier", &sb).metric("difference_fit", &fit);
            r.verdict = Outcome::from(sb.r0.is_some());
            let csv = dir.join("static.csv");
            let json = dir.join("static.json");
            write_csv_atomic(&csv, &barrier_table(&k, &sb.w, &sb.h_w))?;
            write_json_atomic(&json, &r)?;
            written(&csv);
            written(&json);
            println!("r0 = {:?}, difference exponent {:.4}", sb.r0, fit.exponent);
            verdict(&r)
        }
        BarrierCommand::Lemma(a) => {
            let cfg: LemmaBarrierConfig = layered(cli, &LemmaBarrierConfig::default())?;
            if cli.print_config {
                return print_config(&cfg);
            }
            let k = ConeProfile::radial(a.n, a.beta)?;
            let lb = lemma_barrier_flow(&k, &cfg)?;
            let mut r = Report::new("flow-barrier", "a barrier below k, mean convex, approaching k like |x|^{−1/2}");
            r.metric("r", lb.r)
                .metric("min_gap", lb.min_gap)
                .metric("m1", lb.max_gap)
                .metric("r1", lb.r1)
                .metric("decay", &lb.decay)
                .metric("certified", lb.certified)
                .metric("attempts", &lb.attempts)
                .metric("marker_graph_gap", lb.marker_graph_gap);
            r.verdict = Outcome::from(lb.certified);
            let csv = dir.join("lemma.csv");
            let json = dir.join("lemma.json");
            write_csv_atomic(&csv, &barrier_table(&k, &lb.b, &lb.h_b))?;
            write_json_atomic(&json, &r)?;
            written(&csv);
            written(&json);
            println!("certified = {} at r = {}", lb.certified, lb.r);
            verdict(&r)
        }
        BarrierCommand::Subsolution => criterion(cli, 11, &dir),
    }
}

fn criterion(cli: &Cli, id: usize, dir: &Path) -> Outcome2 {
    let opts = suite_options(cli);
    if cli.print_config {
        return print_config(&opts);
    }
    let res = run_criterion(id, &opts);
    let path = dir.join(format!("{}.json", res.report.experiment));
    write_json_atomic(&path, &res.report)?;
    written(&path);
    println!("{}", res.line());
    verdict(&res.report)
}

fn cmd_verify(cli: &Cli, which: &VerifyCommand) -> Outcome2 {
    let dir = out_dir(cli, "verify")?;
    match which {
        VerifyCommand::Psi(a) => {
            if cli.print_config {
                return print_config(a);
            }
            let counts: &[usize] = if cli.quick { &[101, 201] } else { &[101, 201, 401] };
            let conv = psi_refinement(&ConeProfile::radial(a.n, a.beta)?, 20.0, counts, 0.5)?;
            let orders: Vec<f64> = conv
                .windows(2)
                .map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln())
                .collect();
            let mut r = Report::new("psi-identity", "D(Ψ) = ⟨X,ν⟩²/(4t²) along the flow");
            r.metric("args", a).metric("refinement", &conv).metric("orders", &orders);
            r.verdict = Outcome::from(orders.iter().all(|&o| o >= 1.8));
            let json = dir.join("psi.json");
            write_json_atomic(&json, &r)?;
            written(&json);
            println!("sup residuals {conv:?}, orders {orders:.3?}");
            verdict(&r)
        }
        VerifyCommand::Evolution(a) => {
            let cfg: LemmaBarrierConfig = layered(cli, &LemmaBarrierConfig::default())?;
            if cli.print_config {
                return print_config(&cfg);
            }
            let mut m = cfg.markers.clone();
            let coarse = evolution_equation_residuals(&integrate_markers(a.n, a.beta, cfg.r_start, cfg.speed_scale, cfg.t_final, &m)?, 0.1)?;
            m.count *= 2;
            m.steps *= 2;
            let fine = evolution_equation_residuals(&integrate_markers(a.n, a.beta, cfg.r_start, cfg.speed_scale, cfg.t_final, &m)?, 0.1)?;
            let mut r = Report::new("evolution-equations", "evolution of g, h, H, |A|² and ν under normal speed F");
            r.metric("args", a).metric("coarse", &coarse).metric("fine", &fine);
            r.verdict = Outcome::from(coarse.max() <= 1e-2 && fine.max() * 2.0 <= coarse.max());
            let json = dir.join("evolution.json");
            write_json_atomic(&json, &r)?;
            written(&json);
            println!("max residual {:.3e} → {:.3e}", coarse.max(), fine.max());
            verdict(&r)
        }
        VerifyCommand::Bv => criterion(cli, 12, &dir),
    }
}

fn suite_options(cli: &Cli) -> SuiteOptions {
    SuiteOptions {
        quick: cli.quick,
        seed: cli.seed.unwrap_or(0),
    }
}

fn cmd_suite(cli: &Cli, args: &SuiteArgs) -> Outcome2 {
    let opts = suite_options(cli);
    if cli.print_config {
        return print_config(&opts);
    }
    let ids: Vec<usize> = if args.only.is_empty() {
        (1..=CRITERIA.len()).collect()
    } else {
        args.only.clone()
    };
    if let Some(bad) = ids.iter().find(|&&i| i == 0 || i > CRITERIA.len()) {
        return Err(Failure::Usage(format!("criterion {bad} does not exist (1 to {})", CRITERIA.len())));
    }
    let dir = out_dir(cli, "suite")?;
    let mut results = Vec::new();
    for id in ids {
        let res = run_criterion(id, &opts);
        println!("{}", res.line());
        write_json_atomic(&dir.join(format!("{}.json", res.report.experiment)), &res.report)?;
        results.push(res);
    }
    let failed: Vec<usize> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    let summary = serde_json::json!({
        "options": opts,
        "passed": results.len() - failed.len(),
        "failed": failed,
        "criteria": results.iter().map(|r| serde_json::json!({
            "id": r.id, "name": r.name, "passed": r.passed, "summary": r.summary, "seconds": r.seconds,
        })).collect::<Vec<_>>(),
    });
    let path = dir.join("summary.json");
    write_json_atomic(&path, &summary)?;
    written(&path);
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verdict(format!("criteria {failed:?} failed")))
    }
}

fn run(cli: &Cli) -> Outcome2 {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Failure::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Expander(a) => cmd_expander(cli, a),
        Command::Evolve(a) => cmd_evolve(cli, a),
        Command::Barrier(b) => cmd_barrier(cli, b),
        Command::Verify(v) => cmd_verify(cli, v),
        Command::Experiment(a) => cmd_experiment(cli, a),
        Command::Suite(a) => cmd_suite(cli, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(m) => eprintln!("error: {m}"),
                Failure::Core(e) => eprintln!("error: {e}"),
                Failure::Verdict(m) => eprintln!("failed: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
