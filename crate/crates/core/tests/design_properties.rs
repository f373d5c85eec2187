//! Properties of the payoff-design pipeline: scaling invariance of
//! certification, optimizer sanity against simplex vertices, bit-exact
//! determinism of the margin program, and the level-equalization property
//! of the max-norm optimum verified against a brute-force grid.

mod common;

use common::{benchmark_growth, four_task_family, rng, sensing_family, sensing_growth_a};
use rand::Rng;
use taskgame::{
    design_payoff, optimal_equilibrium, sample_constraints, verify_conditions, CostFunction,
    GrowthRate64, PayoffPattern, RateFamily64, StationaryOutcome,
};

#[test]
fn scaling_a_certified_design_preserves_certification() {
    let mut r = rng(5001);
    let cases = [
        (four_task_family(), benchmark_growth(), PayoffPattern::Diagonal),
        (
            sensing_family(),
            sensing_growth_a(),
            PayoffPattern::NeighborShared {
                sets: common::sensing_service_sets(),
            },
        ),
    ];
    let mut certified = 0;
    for (family, growth, pattern) in cases {
        let eq = optimal_equilibrium(&family, &growth, 1.0, CostFunction::SumOfSquares).unwrap();
        let q_max = common::default_q_max(&family, &growth);
        let samples = sample_constraints(&family, &growth, 1.0, 300, 31, q_max).unwrap();
        let report = design_payoff(&family, &growth, &samples, pattern, &eq.pair).unwrap();
        assert!(report.passed && report.margin > 0.0);
        for _ in 0..5 {
            let scale = 10f64.powf(r.gen_range(-2.0..1.0));
            let scaled = report.payoff.scaled(scale).unwrap();
            let rescaled = verify_conditions(&scaled, &family, &growth, &samples, &eq.pair)
                .unwrap();
            assert!(
                rescaled.passed,
                "scale {scale} broke certification: {rescaled:?}"
            );
            certified += 1;
        }
    }
    assert_eq!(certified, 10);
}

#[test]
fn no_simplex_vertex_beats_the_optimizer() {
    for cost in [CostFunction::SumOfSquares, CostFunction::MaxNorm] {
        for (family, growth) in [
            (four_task_family(), benchmark_growth()),
            (sensing_family(), sensing_growth_a()),
        ] {
            let n = family.strategy_count();
            let eq = optimal_equilibrium(&family, &growth, 1.0, cost).unwrap();
            assert!(eq.pair.residual() <= 1e-8);
            for i in 0..n {
                let mut vertex = vec![0.0; n];
                vertex[i] = 1.0;
                match family.stationary_tasks(&vertex, &growth) {
                    Ok(StationaryOutcome::Feasible(q)) => {
                        let c = cost.evaluate(q.values());
                        assert!(
                            c >= eq.cost - 1e-8,
                            "vertex {i} scores {c}, optimizer {}",
                            eq.cost
                        );
                    }
                    Ok(StationaryOutcome::Infeasible { .. }) | Err(_) => {}
                }
            }
        }
    }
}

#[test]
fn margin_program_is_bit_deterministic() {
    let family = four_task_family();
    let growth = benchmark_growth();
    let eq = optimal_equilibrium(&family, &growth, 1.0, CostFunction::SumOfSquares).unwrap();
    let samples = sample_constraints(&family, &growth, 1.0, 500, 37, 150.0).unwrap();
    let a = design_payoff(&family, &growth, &samples, PayoffPattern::Diagonal, &eq.pair).unwrap();
    let b = design_payoff(&family, &growth, &samples, PayoffPattern::Diagonal, &eq.pair).unwrap();
    assert_eq!(a.payoff.matrix().to_rows(), b.payoff.matrix().to_rows());
    assert_eq!(a.margin, b.margin);
}

#[test]
fn max_norm_optimum_equalizes_levels_and_matches_brute_force() {
    // Shared parameters: the equalized solution is optimal, compare with an
    // exhaustive simplex grid at resolution 1e-3.
    for (m, growth) in [
        (2usize, GrowthRate64::new(vec![0.3, 0.9]).unwrap()),
        (3usize, GrowthRate64::new(vec![0.2, 0.5, 1.1]).unwrap()),
    ] {
        let family =
            RateFamily64::resource_collection(vec![3.5; m], vec![0.05; m], vec![1.0; m]).unwrap();
        let eq = optimal_equilibrium(&family, &growth, 1.0, CostFunction::MaxNorm).unwrap();
        let q = eq.pair.tasks().values();
        let q_max = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let q_min = q.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(
            q_max - q_min <= 1e-6 * q_max,
            "levels not equalized: spread {} at {q:?}",
            q_max - q_min
        );

        let mut brute = f64::INFINITY;
        let steps = 1000usize;
        let mut probe = |x: &[f64]| {
            if let Ok(StationaryOutcome::Feasible(qv)) = family.stationary_tasks(x, &growth) {
                let c = CostFunction::MaxNorm.evaluate(qv.values());
                if c < brute {
                    brute = c;
                }
            }
        };
        if m == 2 {
            for a in 1..steps {
                let xa = a as f64 / steps as f64;
                probe(&[xa, 1.0 - xa]);
            }
        } else {
            for a in 1..steps {
                for b in 1..steps - a {
                    let xa = a as f64 / steps as f64;
                    let xb = b as f64 / steps as f64;
                    probe(&[xa, xb, 1.0 - xa - xb]);
                }
            }
        }
        assert!(
            eq.cost <= brute + 1e-9,
            "optimizer cost {} above the {steps}-step grid minimum {brute}",
            eq.cost
        );
        assert!(
            brute <= eq.cost + 0.5,
            "grid minimum {brute} implausibly far from optimizer cost {}",
            eq.cost
        );
    }
}
