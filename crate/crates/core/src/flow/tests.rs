use super::*;
use crate::expander::{solve_expander_profile, ShootingConfig};

fn radial_grid(n: usize, r_max: f64, count: usize) -> Arc<GridSpec> {
    Arc::new(GridSpec::uniform(n, 0.0, r_max, count).unwrap())
}

fn fixed(dt: f64, interval: f64) -> SolverSettings {
    SolverSettings {
        time_step: TimeStepPolicy::Fixed { dt },
        snapshots: SnapshotSchedule::Every { interval },
        ..SolverSettings::default()
    }
}

#[test]
fn constants_are_stationary() {
    let g = radial_grid(3, 5.0, 51);
    let u = GridFunction::constant(g.clone(), 1.25).unwrap();
    let cfg = SolverConfig::new(g, Boundary::Initial);
    let v = step(&u, 0.0, 0.1, &cfg).unwrap();
    assert!(v.max_abs_diff(&u).unwrap() <= cfg.settings.newton_tol);
}

#[test]
fn planes_are_stationary() {
    // a genuine plane: n = 1 graph off the origin, and a tilted plane in polar mode
    let g = Arc::new(GridSpec::uniform(1, 1.0, 4.0, 31).unwrap());
    let u = GridFunction::from_radial_fn(g.clone(), |r| 0.7 * r - 0.2).unwrap();
    let cfg = SolverConfig::new(g, Boundary::Initial);
    let v = step(&u, 0.0, 0.05, &cfg).unwrap();
    assert!(v.max_abs_diff(&u).unwrap() <= 1e-10);

    // tilted planes only pick up the O(Δθ²) error of the angular differences
    let change = |nt: usize| {
        let nodes: Vec<f64> = (0..12).map(|i| 0.25 + 0.5 * i as f64).collect();
        let pg = Arc::new(GridSpec::polar(nodes, nt).unwrap());
        let u = GridFunction::from_polar_fn(pg.clone(), |r, t| 0.4 * r * t.cos() - 0.3 * r * t.sin() + 1.0).unwrap();
        let cfg = SolverConfig::new(pg, Boundary::Initial);
        step(&u, 0.0, 0.05, &cfg).unwrap().max_abs_diff(&u).unwrap()
    };
    let (c16, c64) = (change(16), change(64));
    assert!(c64 < 2e-3 && c16 / c64 > 10.0, "{c16} {c64}");
}

#[test]
fn mean_convex_cone_moves_up_at_the_tip() {
    let g = radial_grid(2, 10.0, 101);
    let k = ConeProfile::radial(2, 1.0).unwrap();
    let u0 = k.sample(g.clone()).unwrap();
    let cfg = SolverConfig::new(g, Boundary::Cone(k));
    let v = step(&u0, 0.0, 1e-3, &cfg).unwrap();
    assert!(v.values()[0] > u0.values()[0]);
    // explicit Euler micro-steps agree on the direction and rough size
    let spec = u0.spec().clone();
    let op = operator_for(&spec, false);
    let mut w = u0.values().to_vec();
    let mut s = vec![0.0; w.len()];
    for _ in 0..400 {
        op.speed(&w, &mut s);
        for k in 0..w.len() - 1 {
            w[k] += 2.5e-6 * s[k];
        }
    }
    assert!(w[0] > 0.0);
    assert!((v.values()[0] - w[0]).abs() < 0.5 * w[0]);
    for (a, b) in v.values().iter().zip(u0.values()) {
        assert!(a - b >= -1e-12);
    }
}

#[test]
fn newton_failure_carries_history() {
    let g = radial_grid(2, 10.0, 101);
    let k = ConeProfile::radial(2, 3.0).unwrap();
    let u0 = k.sample(g.clone()).unwrap();
    let mut settings = fixed(1.0, 1.0);
    settings.newton_max_iter = 1;
    let cfg = SolverConfig::new(g, Boundary::Cone(k)).with_settings(settings);
    match step(&u0, 0.0, 1.0, &cfg) {
        Err(Error::StepFailure { residual_history, .. }) => assert!(!residual_history.is_empty()),
        other => panic!("expected a step failure, got {other:?}"),
    }
}

fn self_similarity_error(count: usize) -> f64 {
    let p = Arc::new(
        solve_expander_profile(&ConeProfile::radial(2, 1.0).unwrap(), &ShootingConfig::default()).unwrap(),
    );
    let g = radial_grid(2, 20.0, count);
    let u0 = p.sample(g.clone(), 1.0).unwrap();
    let mut cfg = SolverConfig::new(
        g.clone(),
        Boundary::Expander {
            profile: p.clone(),
            time_offset: 1.0,
            shift: 0.0,
        },
    )
    .with_settings(fixed(2e-3, 1.0));
    cfg.reference_expander = Some((p.clone(), 1.0));
    let run = evolve(&u0, 1.0, &cfg).unwrap();
    let exact = p.sample(g, 2.0).unwrap();
    run.last().u.max_abs_diff(&exact).unwrap()
}

#[test]
fn expander_is_self_similar_under_the_solver() {
    let coarse = self_similarity_error(101);
    let fine = self_similarity_error(201);
    assert!(fine < 2e-3, "{fine}");
    assert!(coarse / fine >= 3.0, "{coarse} {fine}");
}

#[test]
fn comparison_and_fault_injection() {
    let g = radial_grid(2, 10.0, 61);
    let bump = |r: f64| (-r * r).exp();
    let a0 = GridFunction::from_radial_fn(g.clone(), |r| bump(r)).unwrap();
    let b0 = GridFunction::from_radial_fn(g.clone(), |r| bump(r) - 0.05).unwrap();
    let cfg_a = SolverConfig::new(g.clone(), Boundary::Initial).with_settings(fixed(0.01, 0.1));
    let run_a = evolve(&a0, 0.5, &cfg_a).unwrap();
    let run_b = evolve(&b0, 0.5, &cfg_a).unwrap();
    assert!(comparison_check(&run_a, &run_a, 1e-12, 1.0).unwrap().passed);
    assert!(comparison_check(&run_a, &run_b, 1e-12, 1.0).unwrap().passed);
    let mut bad = run_a.clone();
    bad.snapshots[3].u.values_mut()[7] -= 1.0;
    let rep = comparison_check(&bad, &run_b, 1e-12, 1.0).unwrap();
    let v = rep.first_violation.unwrap();
    assert_eq!(v.t, bad.snapshots[3].t);
    assert_eq!(v.r, g.radial_nodes()[7]);
    assert!(comparison_check(&run_b, &run_a, 1e-12, 1.0).is_err());
}

#[test]
fn t_delta_detection() {
    let g = radial_grid(2, 30.0, 151);
    let k = ConeProfile::radial(2, 1.0).unwrap();
    let delta = 0.05;
    let above = k.sample(g.clone()).unwrap().map(|v| v + 0.1).unwrap();
    let cfg = SolverConfig::new(g.clone(), Boundary::Cone(k.clone())).with_settings(fixed(0.01, 0.1));
    let run = evolve(&above, 0.2, &cfg).unwrap();
    assert_eq!(detect_t_delta(&run, &k, delta).unwrap(), Some(0.0));

    let dent = GridFunction::from_radial_fn(g.clone(), |r| {
        let s = r / 3.0;
        r - if s < 1.0 { 2.0 * delta * (1.0 - 1.0 / (1.0 - s * s)).exp() } else { 0.0 }
    })
    .unwrap();
    let run = evolve(&dent, 3.0, &cfg).unwrap();
    let t = detect_t_delta(&run, &k, delta).unwrap().expect("t_delta reached");
    assert!(t > 0.0);
    assert_eq!(detect_t_delta(&run, &k, 1.0).unwrap(), Some(0.0));
}

#[test]
fn polar_mode_reproduces_radial_mode() {
    // polar rings at (i + ½)h coincide with every other node of a radial grid of spacing h/2
    let h = 0.2;
    let nodes: Vec<f64> = (0..40).map(|i| (i as f64 + 0.5) * h).collect();
    let pg = Arc::new(GridSpec::polar(nodes, 16).unwrap());
    let rg = radial_grid(2, 40.0 * h - 0.5 * h, 80);
    let f = |r: f64| 0.5 * (-(r * r) / 4.0).exp() + 0.3 * r;
    let up = GridFunction::from_radial_fn(pg.clone(), f).unwrap();
    let ur = GridFunction::from_radial_fn(rg.clone(), f).unwrap();
    let settings = fixed(0.01, 0.2);
    let run_p = evolve(&up, 0.2, &SolverConfig::new(pg, Boundary::Initial).with_settings(settings.clone())).unwrap();
    let run_r = evolve(&ur, 0.2, &SolverConfig::new(rg, Boundary::Initial).with_settings(settings)).unwrap();
    let vp = run_p.last().u.values();
    let vr = run_r.last().u.values();
    let mut worst = 0.0_f64;
    for i in 0..39 {
        worst = worst.max((vp[i * 16 + 3] - vr[2 * i + 1]).abs());
    }
    let moved = (vp[3] - up.values()[3]).abs();
    assert!(worst < 0.05 * moved, "{worst} vs {moved}");
    for j in 0..16 {
        assert!((vp[20 * 16 + j] - vp[20 * 16]).abs() < 1e-10);
    }
}

#[test]
fn snapshots_follow_schedule() {
    assert_eq!(output_times(&SnapshotSchedule::Every { interval: 0.25 }, 1.0).unwrap(), vec![0.25, 0.5, 0.75, 1.0]);
    let geo = output_times(&SnapshotSchedule::Geometric { first: 1.0, count: 3 }, 100.0).unwrap();
    assert!((geo[1] - 10.0).abs() < 1e-9 && geo[2] == 100.0);
}
