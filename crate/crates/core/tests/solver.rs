mod common;

use taoi::kernel::{build_transitions, uniformize};
use taoi::solver::{brute_force_optimal, evaluate_policy_exact, rvi, rvi_threshold, solve, verify_structure};
use taoi::{Action, ActionTable, Error, Method, PolicyKind, SolverConfig, Threshold};

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

#[test]
fn rvi_matches_exhaustive_search() {
    let cases = [
        (0.5, 0.2, 2, 8),
        (0.9, 0.1, 2, 8),
        (0.7, 0.3, 3, 7),
        (0.3, 0.05, 1, 6),
        (0.95, 0.4, 4, 9),
    ];
    for (q, p, t_u, dm) in cases {
        let params = common::params(q, p, t_u, dm);
        let smdp = build_transitions(&params).unwrap();
        let oracle = brute_force_optimal(&smdp).unwrap();
        let (_, sol) = solve(&params, &cfg(), Method::Rvi).unwrap();
        assert!(sol.converged);
        assert!(
            (sol.gain - oracle.value).abs() < 1e-6,
            "{q} {p} {t_u}: {} vs {}",
            sol.gain,
            oracle.value
        );
        let exact = evaluate_policy_exact(&smdp, &sol.policy).unwrap().avg_taoi;
        assert!((exact - oracle.value).abs() < 1e-9);
    }
}

#[test]
fn oracle_small_instance_counts() {
    let params = common::params(0.5, 0.2, 2, 8);
    let oracle = brute_force_optimal(&build_transitions(&params).unwrap()).unwrap();
    assert_eq!(oracle.evaluated + oracle.skipped_multichain, 1 << 16);
}

#[test]
fn oracle_refuses_large_spaces() {
    let params = common::params(0.9, 0.1, 2, 64);
    let err = brute_force_optimal(&build_transitions(&params).unwrap()).unwrap_err();
    assert!(matches!(err, Error::OracleGuard { states: 128, .. }));
}

#[test]
fn exact_value_matches_dense_oracle_for_optimal_policy() {
    let params = common::params(0.8, 0.15, 5, 60);
    let (_, sol) = solve(&params, &cfg(), Method::Threshold).unwrap();
    let smdp = build_transitions(&params).unwrap();
    let dense = common::dense_avg_taoi(&smdp, &sol.policy);
    assert!((sol.gain - dense).abs() < 1e-7, "{} vs {dense}", sol.gain);
}

#[test]
fn solvers_agree_and_residual_is_bounded() {
    for (q, p, t_u) in [(0.5, 0.1, 2), (0.9, 0.3, 10), (0.7, 0.1, 25)] {
        let params = common::params(q, p, t_u, 20 * t_u);
        let mdp = uniformize(&build_transitions(&params).unwrap(), 0.9).unwrap();
        let a = rvi(&mdp, &cfg()).unwrap();
        let b = rvi_threshold(&mdp, &cfg()).unwrap();
        assert!(a.converged && b.converged);
        assert_eq!(a.policy, b.policy);
        assert!((a.gain - b.gain).abs() < 1e-9);
        for s in [&a, &b] {
            assert!(s.bellman_residual <= 10.0 * cfg().tol, "{}", s.bellman_residual);
            assert_eq!(s.h[s.ref_state.0], 0.0);
        }
    }
}

#[test]
fn threshold_sweep_saves_minimizations() {
    let params = common::params(0.9, 0.1, 10, 2000);
    let mdp = uniformize(&build_transitions(&params).unwrap(), 0.9).unwrap();
    let a = rvi(&mdp, &cfg()).unwrap();
    let b = rvi_threshold(&mdp, &cfg()).unwrap();
    assert_eq!(a.minimizations_last_iter, 4000);
    assert!(b.minimizations_last_iter < a.minimizations_last_iter);
    assert!(b.minimizations_total < a.minimizations_total);
    assert_eq!(a.policy, b.policy);
}

#[test]
fn gain_is_bounded_by_baselines() {
    for (q, p, t_u) in [(0.5, 0.3, 5), (0.9, 0.1, 10), (0.6, 0.1, 3)] {
        let params = common::params(q, p, t_u, 20 * t_u);
        let smdp = build_transitions(&params).unwrap();
        let (_, sol) = solve(&params, &cfg(), Method::Threshold).unwrap();
        assert!(sol.gain >= 1.0 && sol.gain <= params.delta_max() as f64);
        assert!(sol.gain >= t_u as f64);
        for base in [PolicyKind::AlwaysTransmit, PolicyKind::PreIdBased] {
            let v = evaluate_policy_exact(&smdp, &base.to_table(smdp.space()).unwrap())
                .unwrap()
                .avg_taoi;
            assert!(sol.gain <= v + 1e-9);
        }
    }
}

#[test]
fn unit_delay_transmits_everywhere() {
    for q in [0.5, 0.9] {
        let params = common::params(q, 0.1, 1, 20);
        let (_, sol) = solve(&params, &cfg(), Method::Threshold).unwrap();
        assert!(sol.policy.actions().iter().all(|&a| a == Action::Transmit));
        let th = sol.thresholds.unwrap();
        assert_eq!((th.f0, th.f1), (Threshold::At(1), Threshold::At(1)));
    }
}

#[test]
fn structure_report_on_reference_instance() {
    let params = common::params(0.9, 0.1, 10, 500);
    let (mdp, sol) = solve(&params, &cfg(), Method::Threshold).unwrap();
    let report = verify_structure(&sol, &mdp, &cfg());
    assert!(report.theorem1_threshold_pass);
    assert!(report.lemma1_pass);
    assert!(report.lemma1.worst_margin >= 0.0);
    assert_eq!(report.lemma3.len(), 4);
    let th = sol.thresholds.unwrap();
    assert!(th.f1.value().is_some());
}

#[test]
fn non_convergence_is_reported() {
    let params = common::params(0.9, 0.1, 10, 200);
    let (_, sol) = solve(&params, &cfg().with_max_iters(3), Method::Rvi).unwrap();
    assert!(!sol.converged);
    assert_eq!(sol.iters, 3);
}

#[test]
fn epsilon_does_not_change_policy() {
    let params = common::params(0.7, 0.2, 4, 80);
    let (_, a) = solve(&params, &cfg().with_epsilon(0.9), Method::Rvi).unwrap();
    let (_, b) = solve(&params, &cfg().with_epsilon(0.5), Method::Rvi).unwrap();
    assert_eq!(a.policy, b.policy);
    assert!((a.gain - b.gain).abs() < 1e-8);
}

#[test]
fn solution_json_round_trips_policy() {
    let params = common::params(0.9, 0.1, 3, 30);
    let (_, sol) = solve(&params, &cfg(), Method::Threshold).unwrap();
    let doc = sol.to_json();
    for key in ["params", "gain", "thresholds", "policy", "h", "iters", "residual"] {
        assert!(doc.get(key).is_some(), "{key}");
    }
    assert_eq!(ActionTable::from_solution_json(&doc).unwrap(), sol.policy);
}
