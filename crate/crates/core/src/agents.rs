//! Finite-population stochastic simulation: `N` agents carry strategies,
//! revise at the jumps of independent unit-rate Poisson clocks (aggregated
//! into one rate-`N` clock), and draw replacement strategies from the
//! revision target at the current empirical state. Task levels follow the
//! deterministic drift between jumps. Validates the mean-field limit of the
//! population dynamic.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::closed_loop::{ClosedLoop, Trajectory};
use crate::error::{Error, Result};
use crate::passivity::{antistorage, QuadratureSpec};
use crate::model::PopulationState;
use crate::scalar::{inf_norm, Scalar};

/// Configuration for a finite-population run. Jump times are exact (drawn
/// from the aggregate exponential clock); `step` bounds the RK4 chunk used
/// to integrate the task levels between jumps and, with `record_stride`,
/// fixes the same recording grid the mean-field simulator uses.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AgentSimConfig<S> {
    /// Number of agents, at least 1.
    pub agent_count: usize,
    /// Seed for the jump-time, agent-choice, and strategy draws.
    pub seed: u64,
    /// Final time of the run.
    pub horizon: S,
    /// Upper bound on the RK4 chunk for the task levels; also the grid unit
    /// for recording.
    pub step: S,
    /// Record every `record_stride`-th grid point (plus start and end).
    pub record_stride: usize,
    /// When set, record the state-dependent energy along the trajectory
    /// with this quadrature.
    pub antistorage: Option<QuadratureSpec>,
}

impl<S: Scalar> AgentSimConfig<S> {
    pub fn validate(&self) -> Result<()> {
        if self.agent_count == 0 {
            return Err(Error::invalid("agent sim config", "agent count must be at least 1"));
        }
        if !(self.horizon > S::zero()) || !self.horizon.is_finite() {
            return Err(Error::invalid(
                "agent sim config",
                "horizon must be positive and finite",
            ));
        }
        if !(self.step > S::zero()) || !self.step.is_finite() {
            return Err(Error::invalid("agent sim config", "step must be positive and finite"));
        }
        if self.record_stride == 0 {
            return Err(Error::invalid("agent sim config", "record stride must be at least 1"));
        }
        if let Some(quad) = &self.antistorage {
            quad.validate()?;
        }
        Ok(())
    }
}

/// Integer strategy counts closest to the target distribution: floors of
/// `N x_i / M` plus one extra for the largest fractional remainders
/// (ties broken toward lower strategy indices). The counts always sum to
/// `agent_count`.
pub fn initial_counts<S: Scalar>(x0: &PopulationState<S>, agent_count: usize) -> Vec<usize> {
    let n = x0.len();
    let mass = x0.total_mass();
    let shares: Vec<f64> = x0
        .masses()
        .iter()
        .map(|&xi| (xi / mass).as_f64() * agent_count as f64)
        .collect();
    let mut counts: Vec<usize> = shares.iter().map(|&s| s.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let ra = shares[a] - shares[a].floor();
        let rb = shares[b] - shares[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for k in 0..agent_count.saturating_sub(assigned) {
        counts[order[k % n]] += 1;
    }
    counts
}

/// Samples a strategy index with probabilities proportional to `target`
/// (one revision-event draw). Entries that are exactly zero are never
/// selected.
pub fn draw_strategy<S: Scalar>(target: &[S], rng: &mut ChaCha8Rng) -> usize {
    let total: S = target.iter().copied().sum();
    let u = S::real(rng.gen_range(0.0..1.0)) * total;
    let mut acc = S::zero();
    for (i, &ti) in target.iter().enumerate() {
        acc = acc + ti;
        if ti > S::zero() && u < acc {
            return i;
        }
    }
    // Floating-point tail: fall back to the last selectable strategy.
    target
        .iter()
        .rposition(|&ti| ti > S::zero())
        .unwrap_or(target.len() - 1)
}

fn strategy_of_agent(counts: &[usize], agent: usize) -> usize {
    let mut acc = 0;
    for (i, &c) in counts.iter().enumerate() {
        acc += c;
        if agent < acc {
            return i;
        }
    }
    counts.len() - 1
}

/// Runs the finite-population counterpart of [`ClosedLoop::simulate`]:
/// the empirical state `x̂_i = M count_i / N` jumps at revision events while
/// the task levels follow the drift, and the trajectory is recorded on the
/// same grid the mean-field simulator would use. Deterministic for a fixed
/// seed.
pub fn simulate_agents<S: Scalar>(
    system: &ClosedLoop<S>,
    q0: &[S],
    x0: &PopulationState<S>,
    config: &AgentSimConfig<S>,
) -> Result<Trajectory<S>> {
    config.validate()?;
    let family = system.family();
    let growth = system.growth();
    let payoff = system.payoff();
    let protocol = system.protocol();
    let m = family.task_count();
    let n = family.strategy_count();
    if q0.len() != m {
        return Err(Error::Dimension {
            what: "initial task vector",
            expected: m,
            got: q0.len(),
        });
    }
    if x0.len() != n {
        return Err(Error::Dimension {
            what: "initial population state",
            expected: n,
            got: x0.len(),
        });
    }
    if (x0.total_mass() - protocol.mass()).abs() > S::real(1e-9) {
        return Err(Error::invalid(
            "initial population state",
            format!(
                "mass {} does not match the protocol mass {}",
                x0.total_mass(),
                protocol.mass()
            ),
        ));
    }
    if q0.iter().any(|&v| !v.is_finite() || v < S::zero()) {
        return Err(Error::invalid(
            "initial task vector",
            "entries must be finite and nonnegative",
        ));
    }

    // Recording grid identical to the mean-field simulator's.
    let ratio = (config.horizon / config.step).as_f64();
    let full = ratio.floor() as usize;
    let remainder = config.horizon - S::from_usize(full).unwrap() * config.step;
    let tail = remainder > config.step * S::real(1e-9);
    let total_steps = full + usize::from(tail);
    let mut record_times = vec![S::zero()];
    let mut k = config.record_stride;
    while k < total_steps {
        record_times.push(S::from_usize(k).unwrap() * config.step);
        k += config.record_stride;
    }
    if total_steps >= 1 {
        record_times.push(config.horizon);
    }

    let mass = protocol.mass();
    let n_agents = config.agent_count;
    let rate = n_agents as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut counts = initial_counts(x0, n_agents);
    let empirical = |counts: &[usize]| -> Vec<S> {
        counts
            .iter()
            .map(|&c| mass * S::from_usize(c).unwrap() / S::from_usize(n_agents).unwrap())
            .collect()
    };
    let mut x_hat = empirical(&counts);
    let mut q = q0.to_vec();

    let mut traj = Trajectory {
        times: Vec::new(),
        tasks: Vec::new(),
        populations: Vec::new(),
        payoffs: Vec::new(),
        storage: Vec::new(),
        antistorage: config.antistorage.as_ref().map(|_| Vec::new()),
    };
    let record = |traj: &mut Trajectory<S>, t: S, q: &[S], x: &[S]| -> Result<()> {
        let p = payoff.payoff(q);
        traj.storage.push(protocol.storage(&p, x)?);
        if let Some(quad) = &config.antistorage {
            let l = antistorage(q, x, payoff, family, growth, quad)?;
            traj.antistorage
                .as_mut()
                .expect("energy samples allocated when requested")
                .push(l);
        }
        traj.times.push(t);
        traj.tasks.push(q.to_vec());
        traj.populations.push(x.to_vec());
        traj.payoffs.push(p);
        Ok(())
    };

    let exp_gap = |rng: &mut ChaCha8Rng| -> S {
        let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        S::real(-u.ln() / rate)
    };

    record(&mut traj, S::zero(), &q, &x_hat)?;
    let mut t = S::zero();
    let mut next_event = exp_gap(&mut rng);
    for &t_rec in &record_times[1..] {
        loop {
            if next_event < t_rec {
                advance_tasks(system, &mut q, &x_hat, next_event - t, config.step, t)?;
                t = next_event;
                let p = payoff.payoff(&q);
                let target = protocol.target(&p)?;
                let agent = rng.gen_range(0..n_agents);
                let old = strategy_of_agent(&counts, agent);
                let new = draw_strategy(&target, &mut rng);
                counts[old] -= 1;
                counts[new] += 1;
                x_hat[old] = mass * S::from_usize(counts[old]).unwrap()
                    / S::from_usize(n_agents).unwrap();
                x_hat[new] = mass * S::from_usize(counts[new]).unwrap()
                    / S::from_usize(n_agents).unwrap();
                next_event = t + exp_gap(&mut rng);
            } else {
                break;
            }
        }
        advance_tasks(system, &mut q, &x_hat, t_rec - t, config.step, t)?;
        t = t_rec;
        record(&mut traj, t, &q, &x_hat)?;
    }
    Ok(traj)
}

/// Integrates the task levels over a window with the empirical state held
/// constant, in classical RK4 chunks no longer than `step`.
fn advance_tasks<S: Scalar>(
    system: &ClosedLoop<S>,
    q: &mut Vec<S>,
    x_hat: &[S],
    window: S,
    step: S,
    t0: S,
) -> Result<()> {
    let family = system.family();
    let growth = system.growth();
    let mut remaining = window;
    while remaining > S::zero() {
        let h = step.min(remaining);
        let half = h * S::real(0.5);
        let k1 = family.drift(q, x_hat, growth)?;
        let s2: Vec<S> = q.iter().zip(&k1).map(|(&a, &d)| a + half * d).collect();
        let k2 = family.drift(&s2, x_hat, growth)?;
        let s3: Vec<S> = q.iter().zip(&k2).map(|(&a, &d)| a + half * d).collect();
        let k3 = family.drift(&s3, x_hat, growth)?;
        let s4: Vec<S> = q.iter().zip(&k3).map(|(&a, &d)| a + h * d).collect();
        let k4 = family.drift(&s4, x_hat, growth)?;
        let two = S::real(2.0);
        let sixth = h / S::real(6.0);
        for i in 0..q.len() {
            q[i] = q[i] + sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
            if !q[i].is_finite() {
                return Err(Error::Unstable {
                    t: t0.as_f64(),
                    detail: format!("task level {i} became non-finite"),
                });
            }
            if q[i] < S::zero() {
                if q[i] < -S::real(1e-9) {
                    return Err(Error::Unstable {
                        t: t0.as_f64(),
                        detail: format!(
                            "task level {i} crossed zero by {} (beyond clamping tolerance)",
                            q[i]
                        ),
                    });
                }
                q[i] = S::zero();
            }
        }
        let norm = inf_norm(q);
        if norm > S::real(1e6) {
            return Err(Error::Unbounded {
                t: t0.as_f64(),
                norm: norm.as_f64(),
            });
        }
        remaining = remaining - h;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_loop::{PayoffMatrix, SimConfig};
    use crate::model::{GrowthRate, RateFamily, TaskVector};
    use crate::protocol::RevisionProtocol;

    fn scalar_system() -> ClosedLoop<f64> {
        let fam = RateFamily::resource_collection(vec![3.5], vec![0.05], vec![1.0]).unwrap();
        let w = GrowthRate::new(vec![0.25]).unwrap();
        let g = PayoffMatrix::identity(1).unwrap();
        let proto = RevisionProtocol::new(vec![1.0], 1e-4).unwrap();
        ClosedLoop::new(fam, w, g, proto).unwrap()
    }

    fn two_strategy_system(theta: Vec<f64>) -> ClosedLoop<f64> {
        let fam =
            RateFamily::resource_collection(vec![3.5, 3.5], vec![0.05, 0.05], vec![1.0, 1.0])
                .unwrap();
        let w = GrowthRate::new(vec![0.25, 0.5]).unwrap();
        let g = PayoffMatrix::identity(2).unwrap();
        let proto = RevisionProtocol::new(theta, 1e-2).unwrap();
        ClosedLoop::new(fam, w, g, proto).unwrap()
    }

    #[test]
    fn largest_remainder_counts() {
        let x = PopulationState::new(vec![0.61, 0.39], 1.0).unwrap();
        assert_eq!(initial_counts(&x, 10), vec![6, 4]);
        let y = PopulationState::new(vec![0.5, 0.3, 0.2], 1.0).unwrap();
        assert_eq!(initial_counts(&y, 7), vec![4, 2, 1]);
        let z = PopulationState::uniform(3, 2.0).unwrap();
        let c = initial_counts(&z, 100);
        assert_eq!(c.iter().sum::<usize>(), 100);
        assert_eq!(c, vec![34, 33, 33]);
    }

    #[test]
    fn same_seed_reproduces_the_trajectory() {
        let sys = two_strategy_system(vec![0.5, 0.5]);
        let x0 = PopulationState::uniform(2, 1.0).unwrap();
        let config = AgentSimConfig {
            agent_count: 50,
            seed: 42,
            horizon: 2.0,
            step: 1e-2,
            record_stride: 10,
            antistorage: None,
        };
        let a = simulate_agents(&sys, &[5.0, 5.0], &x0, &config).unwrap();
        let b = simulate_agents(&sys, &[5.0, 5.0], &x0, &config).unwrap();
        assert_eq!(a.times, b.times);
        assert_eq!(a.tasks, b.tasks);
        assert_eq!(a.populations, b.populations);
        let other = AgentSimConfig { seed: 43, ..config };
        let c = simulate_agents(&sys, &[5.0, 5.0], &x0, &other).unwrap();
        assert_ne!(a.populations, c.populations);
    }

    #[test]
    fn single_agent_lives_on_the_vertices() {
        let sys = two_strategy_system(vec![0.5, 0.5]);
        let x0 = PopulationState::new(vec![1.0, 0.0], 1.0).unwrap();
        let config = AgentSimConfig {
            agent_count: 1,
            seed: 7,
            horizon: 3.0,
            step: 1e-2,
            record_stride: 5,
            antistorage: None,
        };
        let traj = simulate_agents(&sys, &[5.0, 5.0], &x0, &config).unwrap();
        let mut visited_second = false;
        for x in &traj.populations {
            assert!(x.iter().all(|&v| v == 0.0 || v == 1.0));
            assert_eq!(x.iter().sum::<f64>(), 1.0);
            if x[1] == 1.0 {
                visited_second = true;
            }
        }
        assert!(visited_second, "three time units at rate 1 should see a switch");
    }

    #[test]
    fn mass_is_conserved_at_every_record() {
        let sys = two_strategy_system(vec![0.5, 0.5]);
        let x0 = PopulationState::uniform(2, 1.0).unwrap();
        let config = AgentSimConfig {
            agent_count: 37,
            seed: 11,
            horizon: 1.0,
            step: 1e-2,
            record_stride: 10,
            antistorage: None,
        };
        let traj = simulate_agents(&sys, &[2.0, 3.0], &x0, &config).unwrap();
        for x in &traj.populations {
            assert!((x.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn record_grid_matches_the_mean_field_simulator() {
        let sys = scalar_system();
        let x0 = PopulationState::uniform(1, 1.0).unwrap();
        let ode_config = SimConfig {
            horizon: 0.55,
            step: 1e-1,
            record_stride: 1,
            antistorage: None,
            pin_population: false,
        };
        let ode = sys
            .simulate(&TaskVector::new(vec![1.0]).unwrap(), &x0, &ode_config)
            .unwrap();
        let config = AgentSimConfig {
            agent_count: 3,
            seed: 1,
            horizon: 0.55,
            step: 1e-1,
            record_stride: 1,
            antistorage: None,
        };
        let stoch = simulate_agents(&sys, &[1.0], &x0, &config).unwrap();
        assert_eq!(ode.times, stoch.times);
    }

    #[test]
    fn zero_target_strategies_are_never_drawn() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..2000 {
            assert_eq!(draw_strategy(&[0.0, 1.0], &mut rng), 1);
        }
        let mut histogram = [0usize; 3];
        for _ in 0..3000 {
            histogram[draw_strategy(&[0.25, 0.0, 0.75], &mut rng)] += 1;
        }
        assert_eq!(histogram[1], 0);
        assert!(histogram[0] > 500 && histogram[2] > 1800);
    }

    #[test]
    fn single_strategy_population_tracks_the_ode() {
        // With one strategy the empirical state is frozen at M, so the task
        // level must match the deterministic run exactly on the grid.
        let sys = scalar_system();
        let x0 = PopulationState::uniform(1, 1.0).unwrap();
        let config = AgentSimConfig {
            agent_count: 10,
            seed: 3,
            horizon: 200.0,
            step: 1e-2,
            record_stride: 1000,
            antistorage: None,
        };
        let traj = simulate_agents(&sys, &[0.0], &x0, &config).unwrap();
        let limit = 20.0 * (3.75f64 / 3.25).ln();
        let last = traj.last_tasks()[0];
        assert!((last - limit).abs() < 1e-3, "got {last}, want ~{limit}");
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let base = AgentSimConfig {
            agent_count: 1,
            seed: 0,
            horizon: 1.0,
            step: 1e-2,
            record_stride: 1,
            antistorage: None,
        };
        assert!(base.validate().is_ok());
        assert!(AgentSimConfig { agent_count: 0, ..base }.validate().is_err());
        assert!(AgentSimConfig { horizon: 0.0, ..base }.validate().is_err());
        assert!(AgentSimConfig { step: -1.0, ..base }.validate().is_err());
        assert!(AgentSimConfig { record_stride: 0, ..base }.validate().is_err());
    }
}
