//! Closed-loop integration: task dynamics `q' = w - F(q, x)`, the linear
//! payoff mechanism `p = G q`, and the population's revision dynamic
//! `x' = target(p) - x`, advanced together by a fixed-step classical
//! Runge-Kutta scheme with invariant guards.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{GrowthRate, PopulationState, RateFamily, TaskVector};
use crate::passivity::{antistorage, QuadratureSpec};
use crate::protocol::RevisionProtocol;
use crate::numerics::linalg::Mat;
use crate::scalar::{inf_norm, Scalar};

/// Structural zero/equality pattern a payoff matrix declares and respects.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PayoffPattern {
    /// Square, one strategy per task; off-diagonal entries are zero.
    Diagonal,
    /// Entry (j, i) is nonzero only when strategy j services task i, and all
    /// nonzero entries within a column are equal (one value per task).
    NeighborShared { sets: Vec<Vec<usize>> },
    /// No structural constraint.
    Dense,
}

/// Linear payoff mechanism `p = G q` (`n` strategies by `m` tasks) carrying
/// the pattern its entries are guaranteed to respect.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PayoffMatrix<S> {
    matrix: Mat<S>,
    pattern: PayoffPattern,
}

impl<S: Scalar> PayoffMatrix<S> {
    pub fn new(matrix: Mat<S>, pattern: PayoffPattern) -> Result<Self> {
        for r in 0..matrix.rows() {
            for c in 0..matrix.cols() {
                if !matrix.at(r, c).is_finite() {
                    return Err(Error::invalid(
                        "payoff matrix",
                        format!("entry ({r}, {c}) is not finite"),
                    ));
                }
            }
        }
        match &pattern {
            PayoffPattern::Diagonal => {
                if matrix.rows() != matrix.cols() {
                    return Err(Error::invalid(
                        "payoff matrix",
                        "diagonal pattern requires a square matrix",
                    ));
                }
                for r in 0..matrix.rows() {
                    for c in 0..matrix.cols() {
                        if r != c && matrix.at(r, c) != S::zero() {
                            return Err(Error::invalid(
                                "payoff matrix",
                                format!("diagonal pattern violated at ({r}, {c})"),
                            ));
                        }
                    }
                }
            }
            PayoffPattern::NeighborShared { sets } => {
                if sets.len() != matrix.cols() {
                    return Err(Error::invalid(
                        "payoff matrix",
                        "one service set per task (column) required",
                    ));
                }
                for (i, set) in sets.iter().enumerate() {
                    if set.is_empty() {
                        return Err(Error::invalid(
                            "payoff matrix",
                            format!("service set for task {i} is empty"),
                        ));
                    }
                    if set.iter().any(|&j| j >= matrix.rows()) {
                        return Err(Error::invalid(
                            "payoff matrix",
                            format!("service set for task {i} references a missing strategy"),
                        ));
                    }
                    let shared = matrix.at(set[0], i);
                    for j in 0..matrix.rows() {
                        let v = matrix.at(j, i);
                        if set.contains(&j) {
                            if v != shared {
                                return Err(Error::invalid(
                                    "payoff matrix",
                                    format!("column {i} must share one value on its service set"),
                                ));
                            }
                        } else if v != S::zero() {
                            return Err(Error::invalid(
                                "payoff matrix",
                                format!("entry ({j}, {i}) outside the service set must be zero"),
                            ));
                        }
                    }
                }
            }
            PayoffPattern::Dense => {}
        }
        Ok(PayoffMatrix { matrix, pattern })
    }

    /// Square diagonal matrix from its diagonal values.
    pub fn diagonal(values: &[S]) -> Result<Self> {
        let m = values.len();
        let mut mat = Mat::zeros(m, m);
        for (i, &v) in values.iter().enumerate() {
            mat.set(i, i, v);
        }
        PayoffMatrix::new(mat, PayoffPattern::Diagonal)
    }

    pub fn identity(m: usize) -> Result<Self> {
        PayoffMatrix::new(Mat::identity(m), PayoffPattern::Diagonal)
    }

    /// One shared value per task, placed on the rows of its service set.
    pub fn neighbor_shared(sets: Vec<Vec<usize>>, strategies: usize, values: &[S]) -> Result<Self> {
        if values.len() != sets.len() {
            return Err(Error::invalid(
                "payoff matrix",
                "one shared value per task required",
            ));
        }
        let mut mat = Mat::zeros(strategies, sets.len());
        for (i, set) in sets.iter().enumerate() {
            for &j in set {
                if j >= strategies {
                    return Err(Error::invalid(
                        "payoff matrix",
                        format!("service set for task {i} references a missing strategy"),
                    ));
                }
                mat.set(j, i, values[i]);
            }
        }
        PayoffMatrix::new(mat, PayoffPattern::NeighborShared { sets })
    }

    pub fn dense(matrix: Mat<S>) -> Result<Self> {
        PayoffMatrix::new(matrix, PayoffPattern::Dense)
    }

    pub fn matrix(&self) -> &Mat<S> {
        &self.matrix
    }

    pub fn pattern(&self) -> &PayoffPattern {
        &self.pattern
    }

    /// Strategies (rows).
    pub fn strategies(&self) -> usize {
        self.matrix.rows()
    }

    /// Tasks (columns).
    pub fn tasks(&self) -> usize {
        self.matrix.cols()
    }

    /// `p = G q`.
    pub fn payoff(&self, q: &[S]) -> Vec<S> {
        self.matrix.matvec(q)
    }

    /// Same pattern, every entry scaled.
    pub fn scaled(&self, factor: S) -> Result<Self> {
        let mut mat = self.matrix.clone();
        for r in 0..mat.rows() {
            for c in 0..mat.cols() {
                let v = mat.at(r, c) * factor;
                mat.set(r, c, v);
            }
        }
        PayoffMatrix::new(mat, self.pattern.clone())
    }
}

/// Integration settings. System data (rate family, growth rate, payoff
/// matrix, protocol) lives on [`ClosedLoop`].
#[derive(Clone, Debug)]
pub struct SimConfig<S> {
    /// Final time `T`.
    pub horizon: S,
    /// Fixed step `dt`.
    pub step: S,
    /// Record every this-many steps (plus the initial and final states).
    pub record_stride: usize,
    /// When set, also record the antistorage value at recorded samples.
    pub antistorage: Option<QuadratureSpec>,
    /// Freeze the population at its initial state (opens the loop).
    pub pin_population: bool,
}

impl<S: Scalar> Default for SimConfig<S> {
    fn default() -> Self {
        SimConfig {
            horizon: S::real(100.0),
            step: S::real(1e-3),
            record_stride: 100,
            antistorage: None,
            pin_population: false,
        }
    }
}

impl<S: Scalar> SimConfig<S> {
    pub fn validate(&self) -> Result<()> {
        if !self.horizon.is_finite() || !(self.horizon > S::zero()) {
            return Err(Error::invalid("sim config", "horizon must be positive and finite"));
        }
        if !self.step.is_finite() || !(self.step > S::zero()) {
            return Err(Error::invalid("sim config", "step must be positive and finite"));
        }
        if self.step > self.horizon {
            return Err(Error::invalid("sim config", "step must not exceed horizon"));
        }
        if self.record_stride == 0 {
            return Err(Error::invalid("sim config", "record stride must be at least 1"));
        }
        if let Some(q) = &self.antistorage {
            q.validate()?;
        }
        Ok(())
    }
}

/// Recorded samples of a closed-loop (or agent-based) run.
#[derive(Clone, Debug, Serialize)]
pub struct Trajectory<S> {
    pub times: Vec<S>,
    pub tasks: Vec<Vec<S>>,
    pub populations: Vec<Vec<S>>,
    pub payoffs: Vec<Vec<S>>,
    pub storage: Vec<S>,
    pub antistorage: Option<Vec<S>>,
}

impl<S: Scalar> Trajectory<S> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_tasks(&self) -> &[S] {
        self.tasks.last().expect("trajectory has at least the initial sample")
    }

    pub fn last_population(&self) -> &[S] {
        self.populations
            .last()
            .expect("trajectory has at least the initial sample")
    }
}

/// The coupled system: rate family + growth rate + payoff mechanism +
/// revision protocol, dimension-checked once at construction.
#[derive(Clone, Debug)]
pub struct ClosedLoop<S> {
    family: RateFamily<S>,
    growth: GrowthRate<S>,
    payoff: PayoffMatrix<S>,
    protocol: RevisionProtocol<S>,
}

/// Per-step clamp/renormalization tolerance; larger corrections indicate the
/// step size is too large for the dynamics.
const GUARD_TOL: f64 = 1e-9;
/// Abort threshold on the task-vector magnitude.
const BOUND_LIMIT: f64 = 1e6;

impl<S: Scalar> ClosedLoop<S> {
    pub fn new(
        family: RateFamily<S>,
        growth: GrowthRate<S>,
        payoff: PayoffMatrix<S>,
        protocol: RevisionProtocol<S>,
    ) -> Result<Self> {
        family.validate()?;
        let m = family.task_count();
        let n = family.strategy_count();
        if growth.len() != m {
            return Err(Error::Dimension {
                what: "growth rate",
                expected: m,
                got: growth.len(),
            });
        }
        if payoff.tasks() != m {
            return Err(Error::Dimension {
                what: "payoff matrix columns",
                expected: m,
                got: payoff.tasks(),
            });
        }
        if payoff.strategies() != n {
            return Err(Error::Dimension {
                what: "payoff matrix rows",
                expected: n,
                got: payoff.strategies(),
            });
        }
        if protocol.len() != n {
            return Err(Error::Dimension {
                what: "protocol weights",
                expected: n,
                got: protocol.len(),
            });
        }
        Ok(ClosedLoop {
            family,
            growth,
            payoff,
            protocol,
        })
    }

    pub fn family(&self) -> &RateFamily<S> {
        &self.family
    }

    pub fn growth(&self) -> &GrowthRate<S> {
        &self.growth
    }

    pub fn payoff(&self) -> &PayoffMatrix<S> {
        &self.payoff
    }

    pub fn protocol(&self) -> &RevisionProtocol<S> {
        &self.protocol
    }

    fn field(&self, q: &[S], x: &[S], pin: bool) -> Result<(Vec<S>, Vec<S>)> {
        let qdot = self.family.drift(q, x, &self.growth)?;
        let xdot = if pin {
            vec![S::zero(); x.len()]
        } else {
            let p = self.payoff.payoff(q);
            self.protocol.edm_field(&p, x)?
        };
        Ok((qdot, xdot))
    }

    /// One classical 4th-order Runge-Kutta step of size `dt` from `(q, x)`,
    /// with the payoff `p = G q` evaluated inside every stage, followed by
    /// the invariant guards: `q` clamped at zero from below and `x`
    /// renormalized to its mass, both only up to 1e-9 per step.
    pub fn step(&self, q: &[S], x: &[S], dt: S, t: S, pin: bool) -> Result<(Vec<S>, Vec<S>)> {
        let half = dt * S::real(0.5);
        let (kq1, kx1) = self.field(q, x, pin)?;
        let q2: Vec<S> = q.iter().zip(&kq1).map(|(&a, &k)| a + half * k).collect();
        let x2: Vec<S> = x.iter().zip(&kx1).map(|(&a, &k)| a + half * k).collect();
        let (kq2, kx2) = self.field(&q2, &x2, pin)?;
        let q3: Vec<S> = q.iter().zip(&kq2).map(|(&a, &k)| a + half * k).collect();
        let x3: Vec<S> = x.iter().zip(&kx2).map(|(&a, &k)| a + half * k).collect();
        let (kq3, kx3) = self.field(&q3, &x3, pin)?;
        let q4: Vec<S> = q.iter().zip(&kq3).map(|(&a, &k)| a + dt * k).collect();
        let x4: Vec<S> = x.iter().zip(&kx3).map(|(&a, &k)| a + dt * k).collect();
        let (kq4, kx4) = self.field(&q4, &x4, pin)?;

        let sixth = dt / S::real(6.0);
        let two = S::real(2.0);
        let mut qn: Vec<S> = (0..q.len())
            .map(|i| q[i] + sixth * (kq1[i] + two * kq2[i] + two * kq3[i] + kq4[i]))
            .collect();
        let mut xn: Vec<S> = (0..x.len())
            .map(|i| x[i] + sixth * (kx1[i] + two * kx2[i] + two * kx3[i] + kx4[i]))
            .collect();

        let guard = S::real(GUARD_TOL);
        for (i, qi) in qn.iter_mut().enumerate() {
            if !qi.is_finite() {
                return Err(Error::Unstable {
                    t: t.as_f64(),
                    detail: format!("task level {i} became non-finite"),
                });
            }
            if *qi < S::zero() {
                if -*qi > guard {
                    return Err(Error::Unstable {
                        t: t.as_f64(),
                        detail: format!(
                            "task level {i} underflowed to {qi}; reduce the step size"
                        ),
                    });
                }
                *qi = S::zero();
            }
        }
        let mass = self.protocol.mass();
        let mut sum = S::zero();
        for (i, xi) in xn.iter_mut().enumerate() {
            if !xi.is_finite() {
                return Err(Error::Unstable {
                    t: t.as_f64(),
                    detail: format!("strategy mass {i} became non-finite"),
                });
            }
            if *xi < S::zero() {
                if -*xi > guard {
                    return Err(Error::Unstable {
                        t: t.as_f64(),
                        detail: format!(
                            "strategy mass {i} underflowed to {xi}; reduce the step size"
                        ),
                    });
                }
                *xi = S::zero();
            }
            sum = sum + *xi;
        }
        if (sum - mass).abs() > guard {
            return Err(Error::Unstable {
                t: t.as_f64(),
                detail: format!(
                    "population mass drifted to {sum} (expected {mass}); reduce the step size"
                ),
            });
        }
        let scale = mass / sum;
        for xi in xn.iter_mut() {
            *xi = *xi * scale;
        }
        Ok((qn, xn))
    }

    /// Residual of the closed-loop equilibrium conditions at `(q, x)`:
    /// `||w - F(q, x)||_inf + ||edm_field(Gq, x)||_inf`.
    pub fn equilibrium_residual(&self, q: &[S], x: &[S]) -> Result<S> {
        let drift = self.family.drift(q, x, &self.growth)?;
        let p = self.payoff.payoff(q);
        let field = self.protocol.edm_field(&p, x)?;
        Ok(inf_norm(&drift) + inf_norm(&field))
    }

    /// Fixed-step integration over `[0, horizon]`, recording every
    /// `record_stride`-th sample plus the initial and final states. The
    /// storage value is recorded at every sample; the antistorage value too
    /// when the config requests it (the drift-nulling profile must then
    /// exist along the whole recorded trajectory).
    pub fn simulate(
        &self,
        q0: &TaskVector<S>,
        x0: &PopulationState<S>,
        config: &SimConfig<S>,
    ) -> Result<Trajectory<S>> {
        config.validate()?;
        if q0.len() != self.family.task_count() {
            return Err(Error::Dimension {
                what: "initial task vector",
                expected: self.family.task_count(),
                got: q0.len(),
            });
        }
        if x0.len() != self.family.strategy_count() {
            return Err(Error::Dimension {
                what: "initial population state",
                expected: self.family.strategy_count(),
                got: x0.len(),
            });
        }
        if (x0.total_mass() - self.protocol.mass()).abs() > S::real(1e-9) {
            return Err(Error::invalid(
                "initial population state",
                format!(
                    "mass {} does not match the protocol mass {}",
                    x0.total_mass(),
                    self.protocol.mass()
                ),
            ));
        }

        let ratio = (config.horizon / config.step).as_f64();
        let full = ratio.floor() as usize;
        let remainder = config.horizon - S::from_usize(full).unwrap() * config.step;
        let tail = remainder > config.step * S::real(1e-9);
        let total_steps = full + usize::from(tail);

        let mut traj = Trajectory {
            times: Vec::new(),
            tasks: Vec::new(),
            populations: Vec::new(),
            payoffs: Vec::new(),
            storage: Vec::new(),
            antistorage: config.antistorage.as_ref().map(|_| Vec::new()),
        };
        let mut q = q0.values().to_vec();
        let mut x = x0.masses().to_vec();

        self.record(&mut traj, S::zero(), &q, &x, config)?;
        for k in 0..total_steps {
            let t = S::from_usize(k).unwrap() * config.step;
            let dt = if k == full { remainder } else { config.step };
            let (qn, xn) = self.step(&q, &x, dt, t, config.pin_population)?;
            q = qn;
            x = xn;
            let t_next = if k + 1 == total_steps {
                config.horizon
            } else {
                S::from_usize(k + 1).unwrap() * config.step
            };
            let norm = inf_norm(&q);
            if norm > S::real(BOUND_LIMIT) {
                return Err(Error::Unbounded {
                    t: t_next.as_f64(),
                    norm: norm.as_f64(),
                });
            }
            if (k + 1) % config.record_stride == 0 || k + 1 == total_steps {
                self.record(&mut traj, t_next, &q, &x, config)?;
            }
        }
        Ok(traj)
    }

    fn record(
        &self,
        traj: &mut Trajectory<S>,
        t: S,
        q: &[S],
        x: &[S],
        config: &SimConfig<S>,
    ) -> Result<()> {
        let p = self.payoff.payoff(q);
        traj.storage.push(self.protocol.storage(&p, x)?);
        if let Some(quad) = &config.antistorage {
            let l = antistorage(q, x, &self.payoff, &self.family, &self.growth, quad)?;
            traj.antistorage
                .as_mut()
                .expect("antistorage vector allocated when requested")
                .push(l);
        }
        traj.times.push(t);
        traj.tasks.push(q.to_vec());
        traj.populations.push(x.to_vec());
        traj.payoffs.push(p);
        Ok(())
    }
}
