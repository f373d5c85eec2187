//! Structural properties of the task-reduction families: monotone response
//! to task levels, task decoupling, zero anchoring, analytic-Jacobian
//! agreement with finite differences, and stationary-profile consistency in
//! both directions.

mod common;

use common::{benchmark_growth, four_task_family, random_simplex, random_tasks, rng, sensing_family};
use proptest::prelude::*;
use rand::Rng;
use taskgame::{GrowthRate64, RateFamily64, StationaryOutcome};

fn water_family() -> RateFamily64 {
    RateFamily64::water_distribution(vec![20.0, 35.0, 50.0]).unwrap()
}

fn all_families() -> Vec<(RateFamily64, &'static str)> {
    vec![
        (four_task_family(), "dedicated-strategy"),
        (sensing_family(), "shared-strategy"),
        (water_family(), "level-proportional"),
        (
            RateFamily64::resource_collection(vec![2.0, 4.0], vec![0.1, 0.02], vec![0.5, 2.0])
                .unwrap(),
            "mixed-exponent",
        ),
    ]
}

#[test]
fn reduction_rates_increase_with_task_levels() {
    let mut r = rng(1001);
    for (family, label) in all_families() {
        let m = family.task_count();
        let n = family.strategy_count();
        for _ in 0..1000 {
            let x = random_simplex(&mut r, n, 1.0);
            // Levels kept below the saturation range of the rate curve so
            // strict monotonicity is resolvable in double precision.
            let qa = random_tasks(&mut r, m, 1e-3, 60.0);
            let qb: Vec<f64> = qa
                .iter()
                .map(|&v| v * (1.0 + r.gen_range(1e-4..2.0f64)))
                .collect();
            let fa = family.reduction_rate(&qa, &x).unwrap();
            let fb = family.reduction_rate(&qb, &x).unwrap();
            for i in 0..m {
                assert!(
                    fb[i] >= fa[i],
                    "{label}: rate {i} fell from {} to {} as the level rose",
                    fa[i],
                    fb[i]
                );
                // The population factor is strictly positive for interior x,
                // so the increase must be strict.
                assert!(fb[i] > fa[i], "{label}: rate {i} failed to rise strictly");
            }
        }
    }
}

#[test]
fn rates_do_not_react_to_other_tasks() {
    let mut r = rng(1002);
    for (family, label) in all_families() {
        let m = family.task_count();
        let n = family.strategy_count();
        for _ in 0..200 {
            let x = random_simplex(&mut r, n, 1.0);
            let q = random_tasks(&mut r, m, 1e-3, 300.0);
            let f = family.reduction_rate(&q, &x).unwrap();
            for j in 0..m {
                let mut q2 = q.clone();
                q2[j] *= 3.0;
                let f2 = family.reduction_rate(&q2, &x).unwrap();
                for i in 0..m {
                    if i != j {
                        assert_eq!(
                            f[i], f2[i],
                            "{label}: rate {i} reacted to a change in task {j}"
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn empty_tasks_are_not_reduced() {
    let mut r = rng(1003);
    for (family, label) in all_families() {
        let m = family.task_count();
        let n = family.strategy_count();
        for _ in 0..200 {
            let x = random_simplex(&mut r, n, 1.0);
            let f = family.reduction_rate(&vec![0.0; m], &x).unwrap();
            for (i, &fi) in f.iter().enumerate() {
                assert_eq!(fi, 0.0, "{label}: empty task {i} was reduced at rate {fi}");
            }
        }
    }
}

#[test]
fn analytic_jacobian_matches_central_differences() {
    let mut r = rng(1004);
    for (family, label) in all_families() {
        let m = family.task_count();
        let n = family.strategy_count();
        for _ in 0..200 {
            // Interior points: mix toward the barycenter so every component
            // is at least 1/(2n) and central differences stay well scaled.
            let raw = random_simplex(&mut r, n, 1.0);
            let x: Vec<f64> = raw.iter().map(|&v| 0.5 * v + 0.5 / n as f64).collect();
            let q = random_tasks(&mut r, m, 1e-2, 200.0);
            let jac = family.jacobian_x(&q, &x).unwrap();
            for j in 0..n {
                let h = 1e-6 * (1.0 + x[j]);
                let mut plus = x.clone();
                plus[j] += h;
                let mut minus = x.clone();
                minus[j] -= h;
                let fp = family.reduction_rate(&q, &plus).unwrap();
                let fm = family.reduction_rate(&q, &minus).unwrap();
                for i in 0..m {
                    let fd = (fp[i] - fm[i]) / (2.0 * h);
                    let scale = 1.0 + jac.at(i, j).abs();
                    assert!(
                        (jac.at(i, j) - fd).abs() <= 1e-5 * scale,
                        "{label}: dF_{i}/dx_{j} = {} but finite difference = {fd}",
                        jac.at(i, j)
                    );
                }
            }
        }
    }
}

#[test]
fn stationary_profiles_null_the_drift_everywhere() {
    let mut r = rng(1005);
    let growth = benchmark_growth();
    // Dedicated strategies: a drift-nulling profile exists at every
    // positive level vector (each strategy's mass is free to take any
    // non-negative value), so existence and residual are asserted
    // unconditionally.
    let family = four_task_family();
    for _ in 0..200 {
        let q = random_tasks(&mut r, family.task_count(), 1e-2, 150.0);
        let y = family.stationary_profile(&q, &growth).unwrap();
        let drift = family.drift(&q, &y, &growth).unwrap();
        let worst = drift.iter().fold(0.0f64, |a, &d| a.max(d.abs()));
        assert!(
            worst <= 1e-8,
            "dedicated-strategy: profile residual {worst} at q = {q:?}"
        );
    }
    // Shared strategies: the needed per-task neighborhood masses can fall
    // outside the cone spanned by the task-strategy incidence columns (one
    // requirement dominating the sum of the rest), in which case no
    // non-negative profile exists. Feasible draws must still null the
    // drift exactly.
    let family = sensing_family();
    let mut feasible = 0;
    for _ in 0..200 {
        let q = random_tasks(&mut r, family.task_count(), 1e-2, 150.0);
        match family.stationary_profile(&q, &growth) {
            Ok(y) => {
                feasible += 1;
                let drift = family.drift(&q, &y, &growth).unwrap();
                let worst = drift.iter().fold(0.0f64, |a, &d| a.max(d.abs()));
                assert!(
                    worst <= 1e-8,
                    "shared-strategy: profile residual {worst} at q = {q:?}"
                );
            }
            Err(taskgame::Error::StationaryInfeasible { residual }) => {
                assert!(residual > 1e-8, "infeasible draw with tiny residual");
            }
            Err(e) => panic!("unexpected profile error: {e:?}"),
        }
    }
    assert!(feasible >= 8, "only {feasible} feasible draws out of 200");
}

#[test]
fn stationary_levels_round_trip_through_profiles() {
    let mut r = rng(1006);
    let growth = GrowthRate64::new(vec![0.02, 0.05, 0.10, 0.15]).unwrap();
    for (family, exact_profile) in [(four_task_family(), true), (sensing_family(), false)] {
        let n = family.strategy_count();
        let mut feasible = 0;
        for _ in 0..200 {
            let x = random_simplex(&mut r, n, 1.0);
            match family.stationary_tasks(&x, &growth).unwrap() {
                StationaryOutcome::Feasible(q) => {
                    feasible += 1;
                    let back = family.stationary_profile(q.values(), &growth).unwrap();
                    let drift = family.drift(q.values(), &back, &growth).unwrap();
                    let worst = drift.iter().fold(0.0f64, |a, &d| a.max(d.abs()));
                    assert!(worst <= 1e-8, "recovered profile residual {worst}");
                    if exact_profile {
                        for i in 0..n {
                            assert!(
                                (back[i] - x[i]).abs() <= 1e-7 * (1.0 + x[i]),
                                "dedicated-strategy profile must invert exactly: \
                                 x_{i} = {} vs {}",
                                x[i],
                                back[i]
                            );
                        }
                    }
                }
                StationaryOutcome::Infeasible { tasks } => {
                    assert!(!tasks.is_empty());
                }
            }
        }
        assert!(feasible >= 50, "only {feasible} feasible draws out of 200");
    }
}

#[test]
fn starved_tasks_are_reported_infeasible() {
    let family = four_task_family();
    let growth = benchmark_growth();
    // Nearly all mass on strategy 0: the saturated reduction rates are
    // (3.395, 0.035, 0.035, 0.035) against growth (0.05, 0.25, 1, 2), so
    // every task but the first starves.
    let x = vec![0.97, 0.01, 0.01, 0.01];
    match family.stationary_tasks(&x, &growth).unwrap() {
        StationaryOutcome::Infeasible { tasks } => assert_eq!(tasks, vec![1, 2, 3]),
        other => panic!("expected starvation, got {other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn scaling_mass_scales_rates_with_unit_exponents(
        q in prop::collection::vec(1e-3f64..200.0, 4),
        weights in prop::collection::vec(1e-3f64..1.0, 4),
        scale in 0.1f64..10.0,
    ) {
        // With beta = 1 the reduction rate is linear in the population mass.
        let family = four_task_family();
        let total: f64 = weights.iter().sum();
        let x: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let xs: Vec<f64> = x.iter().map(|v| v * scale).collect();
        let f = family.reduction_rate(&q, &x).unwrap();
        let fs = family.reduction_rate(&q, &xs).unwrap();
        for i in 0..4 {
            prop_assert!((fs[i] - scale * f[i]).abs() <= 1e-12 * (1.0 + fs[i].abs()));
        }
    }

    #[test]
    fn negative_population_components_are_treated_as_empty(
        q in prop::collection::vec(1e-3f64..200.0, 4),
        i in 0usize..4,
    ) {
        let family = four_task_family();
        let mut x = vec![0.25; 4];
        x[i] = 0.0;
        let zeroed = family.reduction_rate(&q, &x).unwrap();
        x[i] = -0.1;
        let negative = family.reduction_rate(&q, &x).unwrap();
        prop_assert_eq!(zeroed, negative);
    }
}
