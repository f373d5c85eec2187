//! Properties of the finite-population simulator: exact mass conservation,
//! chi-square agreement of the event-level strategy draw with the revision
//! target, and mean-field convergence that improves monotonically with the
//! population size.

mod common;

use common::{
    anchored_loop, benchmark_growth, benchmark_optimum, four_task_family, reference_sos_design,
    rng,
};
use taskgame::{
    simulate_agents, AgentSimConfig64, ClosedLoop64, CostFunction, PopulationState64,
    RevisionProtocol64, SimConfig64, TaskVector64, Trajectory64,
};

fn benchmark_system() -> ClosedLoop64 {
    let (pair, _) = benchmark_optimum(CostFunction::SumOfSquares);
    anchored_loop(
        four_task_family(),
        benchmark_growth(),
        reference_sos_design(),
        pair.population(),
        1e-4,
    )
}

fn ode_reference(system: &ClosedLoop64, horizon: f64) -> Trajectory64 {
    let q0 = TaskVector64::zeros(4);
    let x0 = PopulationState64::uniform(4, 1.0).unwrap();
    let config = SimConfig64 {
        horizon,
        step: 1e-3,
        record_stride: 100,
        antistorage: None,
        pin_population: false,
    };
    system.simulate(&q0, &x0, &config).unwrap()
}

fn sup_deviation(system: &ClosedLoop64, ode: &Trajectory64, agents: usize, seed: u64) -> f64 {
    let x0 = PopulationState64::uniform(4, 1.0).unwrap();
    let config = AgentSimConfig64 {
        agent_count: agents,
        seed,
        horizon: *ode.times.last().unwrap(),
        step: 1e-3,
        record_stride: 100,
        antistorage: None,
    };
    let stoch = simulate_agents(system, &[0.0; 4], &x0, &config).unwrap();
    assert_eq!(stoch.times, ode.times, "grids must match for comparison");
    let mut sup = 0.0f64;
    for k in 0..ode.len() {
        for i in 0..4 {
            sup = sup.max((stoch.populations[k][i] - ode.populations[k][i]).abs());
        }
    }
    sup
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v[v.len() / 2]
}

#[test]
fn empirical_mass_is_exactly_conserved() {
    let system = benchmark_system();
    let x0 = PopulationState64::uniform(4, 1.0).unwrap();
    for agents in [3usize, 17, 250] {
        let config = AgentSimConfig64 {
            agent_count: agents,
            seed: 77,
            horizon: 2.0,
            step: 1e-3,
            record_stride: 50,
            antistorage: None,
        };
        let traj = simulate_agents(&system, &[0.0; 4], &x0, &config).unwrap();
        for x in &traj.populations {
            // Each mass is an integer multiple of 1/N, so the sum is exact
            // up to one rounding per strategy.
            let total: f64 = x.iter().sum();
            assert!((total - 1.0).abs() <= 4.0 * f64::EPSILON);
            for &xi in x {
                let scaled = xi * agents as f64;
                assert!(
                    (scaled - scaled.round()).abs() <= 1e-9,
                    "mass {xi} is not an integer count at N = {agents}"
                );
            }
        }
    }
}

#[test]
fn strategy_draws_follow_the_revision_target() {
    // 1e5 draws at a frozen payoff; chi-square against the target
    // distribution with 3 degrees of freedom, significance 1e-3
    // (critical value 16.266).
    let proto = RevisionProtocol64::new(vec![0.25; 4], 1e-2).unwrap();
    let p = [0.00, 0.01, 0.02, 0.03];
    let target = proto.target(&p).unwrap();
    let mut r = rng(6001);
    let draws = 100_000usize;
    let mut hist = [0usize; 4];
    for _ in 0..draws {
        hist[taskgame::agents::draw_strategy(&target, &mut r)] += 1;
    }
    let mut chi2 = 0.0;
    for i in 0..4 {
        let expected = draws as f64 * target[i];
        assert!(expected >= 5.0, "cell {i} too small for the test");
        let diff = hist[i] as f64 - expected;
        chi2 += diff * diff / expected;
    }
    assert!(
        chi2 <= 16.266,
        "chi-square statistic {chi2} exceeds the 1e-3 critical value; hist = {hist:?}"
    );
}

#[test]
fn mean_field_deviation_shrinks_with_population_size() {
    let system = benchmark_system();
    let ode = ode_reference(&system, 10.0);
    let mut medians = Vec::new();
    for &agents in &[100usize, 1000, 10000] {
        let devs: Vec<f64> = (0..5)
            .map(|s| sup_deviation(&system, &ode, agents, 1000 + s))
            .collect();
        medians.push(median(devs));
    }
    assert!(
        medians[0] >= medians[1] && medians[1] >= medians[2],
        "median sup-deviations not non-increasing in N: {medians:?}"
    );
}
