//! Shared fixtures for the integration suites: the four-task benchmark
//! game, the six-strategy sensing game, reference payoff matrices, and an
//! independent constrained-maximization oracle for the storage function.
#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use taskgame::numerics::simplex_geom::{project_simplex, sample_simplex};
use taskgame::{
    ClosedLoop64, GrowthRate64, PayoffMatrix64, PopulationState64, RateFamily64,
    RevisionProtocol64, StationaryPair64,
};

/// Four tasks, four dedicated strategies, shared saturation parameters.
pub fn four_task_family() -> RateFamily64 {
    RateFamily64::resource_collection(vec![3.5; 4], vec![0.05; 4], vec![1.0; 4]).unwrap()
}

/// The benchmark growth profile spanning almost two orders of magnitude.
pub fn benchmark_growth() -> GrowthRate64 {
    GrowthRate64::new(vec![0.05, 0.25, 1.00, 2.00]).unwrap()
}

/// Service sets of the six-strategy sensing game: each of the four tasks is
/// covered by three strategies, each strategy covers two tasks.
pub fn sensing_service_sets() -> Vec<Vec<usize>> {
    vec![vec![0, 1, 2], vec![0, 3, 4], vec![1, 3, 5], vec![2, 4, 5]]
}

/// Four tasks observed by six overlapping strategies.
pub fn sensing_family() -> RateFamily64 {
    RateFamily64::heterogeneous_sensing(
        vec![3.5; 4],
        vec![0.05; 4],
        vec![1.0; 4],
        sensing_service_sets(),
        6,
    )
    .unwrap()
}

/// Reference diagonal design for the sum-of-squares cost on the benchmark
/// game.
pub fn reference_sos_design() -> PayoffMatrix64 {
    PayoffMatrix64::diagonal(&[1.00, 0.66, 0.48, 0.40]).unwrap()
}

/// Reference design for the max-norm cost on the benchmark game.
pub fn reference_maxnorm_design() -> PayoffMatrix64 {
    PayoffMatrix64::identity(4).unwrap()
}

/// Reference shared-column design for the sensing game with growth
/// (0.5, 1.0, 1.5, 2.0).
pub fn reference_sensing_design_a() -> PayoffMatrix64 {
    PayoffMatrix64::neighbor_shared(sensing_service_sets(), 6, &[1.00, 0.81, 0.72, 0.67]).unwrap()
}

/// Growth profile for the first sensing reference design.
pub fn sensing_growth_a() -> GrowthRate64 {
    GrowthRate64::new(vec![0.5, 1.0, 1.5, 2.0]).unwrap()
}

/// Reference shared-column design for the sensing game with growth
/// (0.1, 0.5, 1.0, 2.0).
pub fn reference_sensing_design_b() -> PayoffMatrix64 {
    PayoffMatrix64::neighbor_shared(sensing_service_sets(), 6, &[1.68, 0.99, 0.80, 0.67]).unwrap()
}

/// Growth profile for the second sensing reference design.
pub fn sensing_growth_b() -> GrowthRate64 {
    GrowthRate64::new(vec![0.1, 0.5, 1.0, 2.0]).unwrap()
}

/// Closed loop with the anchor set to the target population state.
pub fn anchored_loop(
    family: RateFamily64,
    growth: GrowthRate64,
    payoff: PayoffMatrix64,
    anchor: &PopulationState64,
    temperature: f64,
) -> ClosedLoop64 {
    let protocol = RevisionProtocol64::new(anchor.masses().to_vec(), temperature).unwrap();
    ClosedLoop64::new(family, growth, payoff, protocol).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform payoff vector in `[lo, hi]^n`.
pub fn random_payoff(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

/// Strictly positive point on the mass-`mass` simplex.
pub fn random_simplex(rng: &mut ChaCha8Rng, n: usize, mass: f64) -> Vec<f64> {
    sample_simplex(rng, n, mass)
}

/// Component-wise log-uniform task vector on `[lo, hi]^m`.
pub fn random_tasks(rng: &mut ChaCha8Rng, m: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..m)
        .map(|_| {
            let u: f64 = rng.gen_range(0.0..1.0);
            (lo.ln() + u * (hi.ln() - lo.ln())).exp()
        })
        .collect()
}

/// Trapezoid value of `integrand(k)` sampled on the trajectory grid
/// `times`.
pub fn trapezoid(times: &[f64], integrand: &[f64]) -> f64 {
    let mut total = 0.0;
    for k in 1..times.len() {
        total += 0.5 * (integrand[k] + integrand[k - 1]) * (times[k] - times[k - 1]);
    }
    total
}

/// Stationary pair for the benchmark game at the minimizer of the given
/// cost.
pub fn benchmark_optimum(cost: taskgame::CostFunction) -> (StationaryPair64, f64) {
    let report =
        taskgame::optimal_equilibrium(&four_task_family(), &benchmark_growth(), 1.0, cost)
            .unwrap();
    (report.pair, report.cost)
}

/// Constraint-sampler upper level: twice the peak stationary level of the
/// max-norm optimum, the convention used throughout the design pipeline.
pub fn default_q_max(family: &RateFamily64, growth: &GrowthRate64) -> f64 {
    let eq = taskgame::optimal_equilibrium(family, growth, 1.0, taskgame::CostFunction::MaxNorm)
        .unwrap();
    2.0 * eq
        .pair
        .tasks()
        .values()
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Independent oracle for the storage function: evaluates
/// `max_z { p'z - eta * D(z || theta) } - (p'x - eta * D(x || theta))`
/// by exponentiated-gradient ascent over the simplex face supported by
/// `theta` (multiplicative log-space updates keep every component strictly
/// positive, so the maximizer's exponentially small entries are reachable),
/// with Euclidean projected-gradient ascent as a second route and the best
/// of all starts kept. Never uses the closed-form log-partition identity.
pub fn storage_oracle(p: &[f64], x: &[f64], theta: &[f64], eta: f64, mass: f64) -> f64 {
    let support: Vec<usize> = (0..theta.len()).filter(|&i| theta[i] > 0.0).collect();
    assert!(!support.is_empty(), "anchor must have support");
    let ps: Vec<f64> = support.iter().map(|&i| p[i]).collect();
    let ths: Vec<f64> = support.iter().map(|&i| theta[i]).collect();
    let k_n = support.len();
    let phi = |z: &[f64]| -> f64 {
        let mut v = 0.0;
        for k in 0..k_n {
            if z[k] > 0.0 {
                v += ps[k] * z[k] - eta * z[k] * (z[k].ln() - ths[k].ln());
            }
        }
        v
    };
    let grad = |z: &[f64], g: &mut [f64]| {
        for k in 0..k_n {
            let zk = z[k].max(1e-300);
            g[k] = ps[k] - eta * ((zk.ln() - ths[k].ln()) + 1.0);
        }
    };
    // Renormalized multiplicative step in log space (overflow-safe).
    let eg_step = |z: &[f64], g: &[f64], beta: f64| -> Vec<f64> {
        let logs: Vec<f64> = z
            .iter()
            .zip(g)
            .map(|(&zk, &gk)| zk.max(1e-300).ln() + beta * gk)
            .collect();
        let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = logs.iter().map(|&l| (l - top).exp()).collect();
        let total: f64 = weights.iter().sum();
        weights.iter().map(|&wgt| mass * wgt / total).collect()
    };

    let mut starts: Vec<Vec<f64>> = vec![ths.clone(), vec![mass / k_n as f64; k_n]];
    for k in 0..k_n {
        let mut v: Vec<f64> = ths.iter().map(|&t| 0.1 * t).collect();
        v[k] += 0.9 * mass;
        let total: f64 = v.iter().sum();
        for e in &mut v {
            *e *= mass / total;
        }
        starts.push(v);
    }

    let mut best = f64::NEG_INFINITY;
    for z0 in starts {
        // Route 1: exponentiated gradient with Armijo backtracking.
        let mut z = z0.clone();
        let mut value = phi(&z);
        let mut g = vec![0.0; k_n];
        for _ in 0..5000 {
            grad(&z, &mut g);
            let mut beta = 1.0;
            let mut moved = false;
            for _ in 0..80 {
                let trial = eg_step(&z, &g, beta);
                let v = phi(&trial);
                if v > value + 1e-16 * (1.0 + value.abs()) {
                    z = trial;
                    value = v;
                    moved = true;
                    break;
                }
                beta *= 0.5;
            }
            if !moved {
                break;
            }
        }
        if value > best {
            best = value;
        }

        // Route 2: Euclidean projected gradient from the same start.
        let mut z = z0;
        let mut value = phi(&z);
        for _ in 0..5000 {
            grad(&z, &mut g);
            let mut alpha = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let trial_raw: Vec<f64> =
                    z.iter().zip(&g).map(|(&a, &gi)| a + alpha * gi).collect();
                let trial = project_simplex(&trial_raw, mass);
                let v = phi(&trial);
                if v > value + 1e-16 * (1.0 + value.abs()) {
                    z = trial;
                    value = v;
                    moved = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !moved {
                break;
            }
        }
        if value > best {
            best = value;
        }
    }
    let handle = taskgame::relative_entropy(x, theta).unwrap();
    let px: f64 = p.iter().zip(x).map(|(&a, &b)| a * b).sum();
    best - (px - eta * handle)
}
