use std::sync::Arc;

use mcf_core::analysis::{bump, decay_fit, graph_area_bound_check, sup_diff, Region, Threshold};
use mcf_core::barriers::{assemble_subsolution, scale_barrier};
use mcf_core::cones::{check_stability_condition, eval_cone, ConeProfile, StabilitySample};
use mcf_core::expander::{solve_expander_profile, ShootingConfig};
use mcf_core::experiments::{builtin, run_scenario, Scenario};
use mcf_core::flow::{comparison_check, evolve, Boundary, SnapshotSchedule, SolverConfig, SolverSettings, TimeStepPolicy};
use mcf_core::geometry::{divergence_form_rhs, radial_mean_curvature, radial_rhs};
use mcf_core::{mean_curvature, GridFunction, GridSpec};
use proptest::prelude::*;

fn grid(n: usize, r_max: f64, count: usize) -> Arc<GridSpec> {
    Arc::new(GridSpec::uniform(n, 0.0, r_max, count).unwrap())
}

fn smooth(a: f64, b: f64, c: f64) -> impl Fn(f64) -> f64 {
    move |r: f64| a * (-b * r * r).exp() + c * (0.5 * r * r).cos()
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(64) })]

    #[test]
    fn sup_diff_is_a_metric(
        a in prop::collection::vec(-5.0f64..5.0, 21),
        b in prop::collection::vec(-5.0f64..5.0, 21),
        c in prop::collection::vec(-5.0f64..5.0, 21),
    ) {
        let g = grid(2, 2.0, 21);
        let [u, v, w] = [a, b, c].map(|x| GridFunction::new(g.clone(), x).unwrap());
        let d = |x: &GridFunction, y: &GridFunction| sup_diff(x, y, Region::all()).unwrap();
        prop_assert_eq!(d(&u, &u), 0.0);
        prop_assert_eq!(d(&u, &v), d(&v, &u));
        prop_assert!(d(&u, &w) <= d(&u, &v) + d(&v, &w) + 1e-12);
    }

    #[test]
    fn decay_fit_recovers_planted_power_laws(p in -2.0f64..1.0, c in 0.1f64..10.0, t0 in 0.5f64..5.0) {
        let t: Vec<f64> = (0..15).map(|i| t0 * 20f64.powf(i as f64 / 14.0)).collect();
        let d: Vec<f64> = t.iter().map(|x| c * x.powf(p)).collect();
        let f = decay_fit(&t, &d).unwrap();
        prop_assert!((f.exponent - p).abs() < 1e-9);
        prop_assert!((f.constant / c - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cones_are_homogeneous(
        beta in 0.0f64..3.0,
        samples in prop::collection::vec(0.2f64..2.0, 16),
        x in -10.0f64..10.0,
        y in -10.0f64..10.0,
        e in -6i32..6,
    ) {
        let lambda = 2f64.powi(e);
        for k in [ConeProfile::radial(2, beta).unwrap(), ConeProfile::angular(samples.clone()).unwrap()] {
            let a = eval_cone(&k, &[lambda * x, lambda * y]);
            prop_assert_eq!(a, lambda * eval_cone(&k, &[x, y]));
        }
    }

    #[test]
    fn radial_cones_have_scale_free_curvature(n in 2usize..5, beta in 0.0f64..4.0, r in 0.01f64..1e4) {
        let expected = (n - 1) as f64 * beta / (1.0 + beta * beta).sqrt();
        let rh = r * radial_mean_curvature(n, r, beta, 0.0);
        prop_assert!((rh - expected).abs() <= 1e-12 * expected.max(1.0));
    }

    #[test]
    fn discrete_mean_curvature_scales_like_inverse_length(
        a in -2.0f64..2.0, b in 0.1f64..2.0, c in -1.0f64..1.0, e in -3i32..4,
    ) {
        let lambda = 2f64.powi(e);
        let g = grid(3, 4.0, 81);
        let u = GridFunction::from_radial_fn(g.clone(), smooth(a, b, c)).unwrap();
        let ul = scale_barrier(&u, lambda).unwrap();
        let h = mean_curvature(&u).unwrap().values;
        let hl = mean_curvature(&ul).unwrap().values;
        for (x, y) in h.values().iter().zip(hl.values()) {
            prop_assert!((y * lambda - x).abs() <= 1e-9 * x.abs().max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(20) })]

    #[test]
    fn reduced_and_divergence_forms_agree_to_second_order(
        a in -2.0f64..2.0, b in 0.2f64..1.5, c in -1.0f64..1.0, n in 2usize..4,
    ) {
        let diff = |count: usize| {
            let u = GridFunction::from_radial_fn(grid(n, 3.0, count), smooth(a, b, c)).unwrap();
            let x = radial_rhs(&u).unwrap();
            let y = divergence_form_rhs(&u).unwrap();
            x.max_abs_diff(&y).unwrap()
        };
        let (d0, d1, d2) = (diff(121), diff(241), diff(481));
        prop_assume!(d0 > 1e-10);
        let p1 = (d0 / d1).log2();
        let p2 = (d1 / d2).log2();
        prop_assert!(p1.min(p2) >= 1.9, "orders {} {}", p1, p2);
    }

    #[test]
    fn flows_preserve_order(
        a in -1.0f64..1.0, w in 0.5f64..3.0, gap in 0.0f64..0.5, g2 in 0.0f64..1.0, w2 in 0.5f64..3.0,
    ) {
        let g = grid(2, 10.0, 101);
        let k = ConeProfile::radial(2, 1.0).unwrap();
        let ua = GridFunction::from_radial_fn(g.clone(), |r| k.eval_radial(r) + a * bump(r / w) + gap).unwrap();
        let ub = GridFunction::from_radial_fn(g.clone(), |r| k.eval_radial(r) + a * bump(r / w) - g2 * bump(r / w2)).unwrap();
        let settings = SolverSettings {
            snapshots: SnapshotSchedule::Every { interval: 0.1 },
            ..SolverSettings::default()
        };
        let cfg = SolverConfig::new(g, Boundary::Initial).with_settings(settings);
        let ra = evolve(&ua, 1.0, &cfg).unwrap();
        let rb = evolve(&ub, 1.0, &cfg).unwrap();
        let rep = comparison_check(&ra, &rb, 1e-8, 0.0).unwrap();
        prop_assert!(rep.passed, "{:?}", rep.first_violation);
    }

    #[test]
    fn expanders_lie_above_their_cone_and_rise(
        n in 2usize..4, beta in 0.2f64..3.0, r in 0.0f64..50.0, t in 0.01f64..20.0, e in -2i32..3,
    ) {
        let k = ConeProfile::radial(n, beta).unwrap();
        let p = solve_expander_profile(&k, &ShootingConfig::default()).unwrap();
        let (u, _) = p.evaluate_flagged(r, t).unwrap();
        prop_assert!(u >= k.eval_radial(r) - 1e-8);
        prop_assert!(p.time_derivative(r, t).unwrap() >= -1e-8);
        let lambda = 2f64.powi(e);
        let (ul, _) = p.evaluate_flagged(lambda * r, lambda * lambda * t).unwrap();
        prop_assert!((ul - lambda * u).abs() <= 1e-9 * ul.abs().max(1.0));
    }

    #[test]
    fn stability_check_is_monotone_in_a2(
        samples in prop::collection::vec((0.5f64..4.0, -1e-4f64..1e-4, 0.0f64..0.2), 1..12),
        bump_idx in 0usize..12, extra in 0.0f64..1.0, n in 3usize..6,
    ) {
        let s: Vec<StabilitySample> = samples.iter().map(|&(p_norm, h, a2)| StabilitySample { p_norm, h, a2 }).collect();
        let before = check_stability_condition(&s, n, 1e-3).unwrap();
        let mut raised = s.clone();
        let i = bump_idx % raised.len();
        raised[i].a2 += extra;
        let after = check_stability_condition(&raised, n, 1e-3).unwrap();
        prop_assert!(before.verdict.ok() || !after.verdict.ok());
    }

    #[test]
    fn active_branch_ignores_common_shifts(r in 0.0f64..300.0, t in 0.01f64..30.0, c in 0.0f64..0.04) {
        let k = ConeProfile::radial(3, 1.0).unwrap();
        let p = Arc::new(solve_expander_profile(&k, &ShootingConfig::default()).unwrap());
        let g = Arc::new(GridSpec::uniform(3, 10.0, 100.0, 91).unwrap());
        let b = GridFunction::from_radial_fn(g, |x| x - 2.0 / x.sqrt()).unwrap();
        let s = assemble_subsolution(p.clone(), &k, &b, 3.0, 1.0, 0.1, 5.0).unwrap();
        // both branches lowered by c: m → m + c, δ/2 → δ/2 + c
        let shifted = assemble_subsolution(p, &k, &b, 3.0, 1.0 + c, 0.1 + 2.0 * c, 5.0).unwrap();
        let (v, branch) = s.eval_branch(r, t).unwrap();
        let (w, branch2) = shifted.eval_branch(r, t).unwrap();
        prop_assert_eq!(branch, branch2);
        prop_assert!((v - c - w).abs() < 1e-12 * v.abs().max(1.0));
    }

    #[test]
    fn area_bound_holds_for_valid_inputs(
        beta in 0.2f64..2.5, dist in 2.0f64..10.0, ang in 0.0f64..std::f64::consts::TAU, rho_frac in 0.0f64..1.0,
        amp in -3.0f64..3.0, off in (-0.7f64..0.7, -0.7f64..0.7), w in 0.1f64..0.8,
    ) {
        let k = ConeProfile::radial(2, beta).unwrap();
        let x = [dist * ang.cos(), dist * ang.sin()];
        let eps = 1.0 / (1.0 + dist);
        let rho = eps + (0.95 - eps) * rho_frac;
        let c = [x[0] + off.0, x[1] + off.1];
        let p = |y0: f64, y1: f64| {
            let (dx, dy) = (y0 - c[0], y1 - c[1]);
            let s = (dx * dx + dy * dy) / (w * w);
            if s >= 1.0 {
                return (0.0, [0.0, 0.0]);
            }
            let v = amp * (1.0 - s).powi(3);
            let ds = -6.0 * amp * (1.0 - s).powi(2) / (w * w);
            (v, [ds * dx, ds * dy])
        };
        let est = graph_area_bound_check(&k, &p, x, rho, beta.max(1.0), &Threshold::Reciprocal, 64).unwrap();
        prop_assert!(est.area >= 0.0 && est.bv >= 0.0);
        prop_assert!(est.passed, "{:?}", est);
    }

    #[test]
    fn scenario_overrides_round_trip(nodes in 3usize..5000, threshold in 1e-4f64..1.0, seed in 0u64..1000) {
        let s = builtin("family").unwrap();
        let o = s.with_overrides(&[
            ("grid.nodes".into(), nodes.to_string()),
            ("measure.threshold".into(), format!("{threshold:e}")),
            ("seed".into(), seed.to_string()),
        ]).unwrap();
        prop_assert_eq!(o.grid.nodes, nodes);
        prop_assert_eq!(o.measure.threshold, threshold);
        prop_assert_eq!(o.seed, seed);
        prop_assert_eq!(Scenario::from_toml(&o.to_toml().unwrap()).unwrap(), o);
    }
}

#[test]
fn bump_is_a_unit_cutoff() {
    assert_eq!(bump(0.0), 1.0);
    for i in 0..=200 {
        let s = -2.0 + 0.02 * i as f64;
        let v = bump(s);
        assert!((0.0..=1.0).contains(&v));
        if s.abs() >= 1.0 {
            assert_eq!(v, 0.0);
        }
    }
}

#[test]
fn scenarios_are_reproducible() {
    let s = builtin("family")
        .unwrap()
        .with_overrides(&[("grid.nodes".into(), "201".into()), ("t_final".into(), "5.0".into())])
        .unwrap();
    let a = run_scenario(&s).unwrap();
    let b = run_scenario(&s).unwrap();
    assert_eq!(
        serde_json::to_string(&a.report).unwrap(),
        serde_json::to_string(&b.report).unwrap()
    );
    assert_eq!(a.trace.to_csv_string(), b.trace.to_csv_string());
    assert!(a.trace.to_csv_string().starts_with("t[time],"));
}

#[test]
fn fixed_steps_are_reproducible_too() {
    let g = grid(2, 10.0, 51);
    let u0 = GridFunction::from_radial_fn(g.clone(), |r| r + bump(r / 3.0)).unwrap();
    let settings = SolverSettings {
        time_step: TimeStepPolicy::Fixed { dt: 0.01 },
        ..SolverSettings::default()
    };
    let cfg = SolverConfig::new(g, Boundary::Initial).with_settings(settings);
    let a = evolve(&u0, 0.5, &cfg).unwrap();
    let b = evolve(&u0, 0.5, &cfg).unwrap();
    assert_eq!(a.last().u.values(), b.last().u.values());
}
