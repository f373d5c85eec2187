//! Task-allocation game dynamics: reduction-rate families, the drift of the
//! task vector, stationary-point solvers, and the drift-nulling strategy
//! profile.
//!
//! The task vector `q` tracks remaining jobs per task; the population state
//! `x` distributes a fixed agent mass over strategies. Jobs grow at a
//! constant rate `w` and are reduced at rate `F(q, x)`, so `q' = w - F(q, x)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::bisect::increasing_root;
use crate::numerics::linalg::Mat;
use crate::numerics::nnls::{min_norm_nonneg, nnls, MinNormFailure};
use crate::scalar::{dot, inf_norm, Scalar};

/// Residual tolerance certifying a stationary pair.
pub const STATIONARY_TOL: f64 = 1e-8;

/// Per-task remaining-job levels (nonnegative, finite).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskVector<S> {
    values: Vec<S>,
}

impl<S: Scalar> TaskVector<S> {
    pub fn new(values: Vec<S>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("task vector", "must have at least one task"));
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < S::zero() {
                return Err(Error::invalid(
                    "task vector",
                    format!("entry {i} = {v} must be finite and nonnegative"),
                ));
            }
        }
        Ok(TaskVector { values })
    }

    pub fn zeros(m: usize) -> Self {
        TaskVector {
            values: vec![S::zero(); m],
        }
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<S> {
        self.values
    }
}

/// Agent-mass distribution over strategies; entries are nonnegative and sum
/// to the total mass within 1e-9.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationState<S> {
    masses: Vec<S>,
    total_mass: S,
}

impl<S: Scalar> PopulationState<S> {
    pub fn new(masses: Vec<S>, total_mass: S) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::invalid("population state", "needs at least one strategy"));
        }
        if !(total_mass > S::zero()) || !total_mass.is_finite() {
            return Err(Error::invalid(
                "population state",
                format!("total mass {total_mass} must be positive and finite"),
            ));
        }
        let mut sum = S::zero();
        for (i, &v) in masses.iter().enumerate() {
            if !v.is_finite() || v < S::zero() {
                return Err(Error::invalid(
                    "population state",
                    format!("mass {i} = {v} must be finite and nonnegative"),
                ));
            }
            sum = sum + v;
        }
        if (sum - total_mass).abs() > S::real(1e-9) {
            return Err(Error::invalid(
                "population state",
                format!("masses sum to {sum}, expected {total_mass} within 1e-9"),
            ));
        }
        Ok(PopulationState { masses, total_mass })
    }

    /// Uniform distribution of `mass` over `n` strategies.
    pub fn uniform(n: usize, mass: S) -> Result<Self> {
        let share = mass / S::from_usize(n).unwrap();
        PopulationState::new(vec![share; n], mass)
    }

    pub fn masses(&self) -> &[S] {
        &self.masses
    }

    pub fn total_mass(&self) -> S {
        self.total_mass
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }
}

/// Constant environmental job-growth rate per task (nonnegative).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GrowthRate<S> {
    values: Vec<S>,
}

impl<S: Scalar> GrowthRate<S> {
    pub fn new(values: Vec<S>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("growth rate", "must have at least one task"));
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < S::zero() {
                return Err(Error::invalid(
                    "growth rate",
                    format!("entry {i} = {v} must be finite and nonnegative"),
                ));
            }
        }
        Ok(GrowthRate { values })
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Parameterized reduction-rate mapping `F(q, x)`.
///
/// Each family satisfies: `F_i(0, x) = 0`, `F_i` increases in `q_i`, and
/// `F_i` depends on no other task's level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateFamily<S> {
    /// One strategy per task; strategy `i` alone reduces task `i`:
    /// `F_i = R_i * t_i(q_i) * x_i^beta_i` with the saturation curve
    /// `t_i(q) = (exp(a_i q) - 1) / (exp(a_i q) + 1)`.
    ResourceCollection {
        rates: Vec<S>,
        saturations: Vec<S>,
        exponents: Vec<S>,
    },
    /// Several strategies service each task:
    /// `F_i = R_i * t_i(q_i) * sum_{j in neighborhoods[i]} x_j^beta_i`.
    HeterogeneousSensing {
        rates: Vec<S>,
        saturations: Vec<S>,
        exponents: Vec<S>,
        /// Strategy indices (0-based) able to service each task.
        neighborhoods: Vec<Vec<usize>>,
        strategy_count: usize,
    },
    /// Outflow proportional to fill fraction: `F_i = (q_i / max_levels_i) * x_i`.
    WaterDistribution { max_levels: Vec<S> },
}

impl<S: Scalar> RateFamily<S> {
    pub fn resource_collection(rates: Vec<S>, saturations: Vec<S>, exponents: Vec<S>) -> Result<Self> {
        let f = RateFamily::ResourceCollection {
            rates,
            saturations,
            exponents,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn heterogeneous_sensing(
        rates: Vec<S>,
        saturations: Vec<S>,
        exponents: Vec<S>,
        neighborhoods: Vec<Vec<usize>>,
        strategy_count: usize,
    ) -> Result<Self> {
        let mut neighborhoods = neighborhoods;
        for set in &mut neighborhoods {
            set.sort_unstable();
            set.dedup();
        }
        let f = RateFamily::HeterogeneousSensing {
            rates,
            saturations,
            exponents,
            neighborhoods,
            strategy_count,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn water_distribution(max_levels: Vec<S>) -> Result<Self> {
        let f = RateFamily::WaterDistribution { max_levels };
        f.validate()?;
        Ok(f)
    }

    /// Checks all structural invariants; constructors call this, and
    /// deserialized values must be passed through it before use.
    pub fn validate(&self) -> Result<()> {
        let check_positive = |what: &'static str, vals: &[S]| -> Result<()> {
            for (i, &v) in vals.iter().enumerate() {
                if !v.is_finite() || !(v > S::zero()) {
                    return Err(Error::invalid(
                        what,
                        format!("entry {i} = {v} must be positive and finite"),
                    ));
                }
            }
            Ok(())
        };
        match self {
            RateFamily::ResourceCollection {
                rates,
                saturations,
                exponents,
            } => {
                let m = rates.len();
                if m == 0 {
                    return Err(Error::invalid("rate family", "needs at least one task"));
                }
                if saturations.len() != m || exponents.len() != m {
                    return Err(Error::invalid(
                        "rate family",
                        "rates, saturations, exponents must have equal length",
                    ));
                }
                check_positive("rates", rates)?;
                check_positive("saturations", saturations)?;
                check_exponents(exponents)?;
                Ok(())
            }
            RateFamily::HeterogeneousSensing {
                rates,
                saturations,
                exponents,
                neighborhoods,
                strategy_count,
            } => {
                let m = rates.len();
                if m == 0 {
                    return Err(Error::invalid("rate family", "needs at least one task"));
                }
                if saturations.len() != m || exponents.len() != m || neighborhoods.len() != m {
                    return Err(Error::invalid(
                        "rate family",
                        "rates, saturations, exponents, neighborhoods must have equal length",
                    ));
                }
                if *strategy_count == 0 {
                    return Err(Error::invalid("rate family", "needs at least one strategy"));
                }
                check_positive("rates", rates)?;
                check_positive("saturations", saturations)?;
                check_exponents(exponents)?;
                for (i, set) in neighborhoods.iter().enumerate() {
                    if set.is_empty() {
                        return Err(Error::invalid(
                            "neighborhoods",
                            format!("task {i} has an empty strategy set"),
                        ));
                    }
                    if let Some(&j) = set.iter().find(|&&j| j >= *strategy_count) {
                        return Err(Error::invalid(
                            "neighborhoods",
                            format!("task {i} references strategy {j} >= {strategy_count}"),
                        ));
                    }
                }
                Ok(())
            }
            RateFamily::WaterDistribution { max_levels } => {
                if max_levels.is_empty() {
                    return Err(Error::invalid("rate family", "needs at least one task"));
                }
                check_positive("max levels", max_levels)
            }
        }
    }

    pub fn task_count(&self) -> usize {
        match self {
            RateFamily::ResourceCollection { rates, .. } => rates.len(),
            RateFamily::HeterogeneousSensing { rates, .. } => rates.len(),
            RateFamily::WaterDistribution { max_levels } => max_levels.len(),
        }
    }

    pub fn strategy_count(&self) -> usize {
        match self {
            RateFamily::ResourceCollection { rates, .. } => rates.len(),
            RateFamily::HeterogeneousSensing { strategy_count, .. } => *strategy_count,
            RateFamily::WaterDistribution { max_levels } => max_levels.len(),
        }
    }

    /// Neighborhood sets for pattern construction; single-index sets for the
    /// one-strategy-per-task families.
    pub fn service_sets(&self) -> Vec<Vec<usize>> {
        match self {
            RateFamily::HeterogeneousSensing { neighborhoods, .. } => neighborhoods.clone(),
            _ => (0..self.task_count()).map(|i| vec![i]).collect(),
        }
    }

    /// The `q`-dependent factor of `F_i` (maximum-rate times saturation for
    /// the sensing families, fill fraction for reservoirs).
    fn level_factor(&self, i: usize, q_i: S) -> S {
        match self {
            RateFamily::ResourceCollection {
                rates, saturations, ..
            }
            | RateFamily::HeterogeneousSensing {
                rates, saturations, ..
            } => {
                // (exp(a q) - 1) / (exp(a q) + 1) == tanh(a q / 2)
                rates[i] * (saturations[i] * q_i * S::real(0.5)).tanh()
            }
            RateFamily::WaterDistribution { max_levels } => q_i / max_levels[i],
        }
    }

    /// Supremum of the level factor over `q_i >= 0`.
    fn level_factor_sup(&self, i: usize) -> S {
        match self {
            RateFamily::ResourceCollection { rates, .. }
            | RateFamily::HeterogeneousSensing { rates, .. } => rates[i],
            RateFamily::WaterDistribution { .. } => S::infinity(),
        }
    }

    /// Supremum of each reduction rate over all task levels at fixed `x`
    /// (zero when no serving mass is present, infinite for reservoirs
    /// otherwise). The equilibrium optimizer descends the shortfall of
    /// these suprema below the growth rates to walk infeasible points into
    /// the feasible set.
    pub(crate) fn saturated_rate(&self, x: &[S]) -> Vec<S> {
        (0..self.task_count())
            .map(|i| {
                let pf = self.population_factor(i, x);
                if pf == S::zero() {
                    S::zero()
                } else {
                    self.level_factor_sup(i) * pf
                }
            })
            .collect()
    }

    /// The population-dependent factor of `F_i`. Negative masses (transient
    /// integrator states) are clamped to zero, extending `x^beta` by
    /// continuity.
    fn population_factor(&self, i: usize, x: &[S]) -> S {
        match self {
            RateFamily::ResourceCollection { exponents, .. } => {
                pow_clamped(x[i], exponents[i])
            }
            RateFamily::HeterogeneousSensing {
                exponents,
                neighborhoods,
                ..
            } => neighborhoods[i]
                .iter()
                .map(|&j| pow_clamped(x[j], exponents[i]))
                .sum(),
            RateFamily::WaterDistribution { .. } => x[i].max(S::zero()),
        }
    }

    fn check_dims(&self, q: &[S], x: &[S]) -> Result<()> {
        if q.len() != self.task_count() {
            return Err(Error::Dimension {
                what: "task vector",
                expected: self.task_count(),
                got: q.len(),
            });
        }
        if x.len() != self.strategy_count() {
            return Err(Error::Dimension {
                what: "population state",
                expected: self.strategy_count(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Reduction rate `F(q, x)`.
    pub fn reduction_rate(&self, q: &[S], x: &[S]) -> Result<Vec<S>> {
        self.check_dims(q, x)?;
        Ok((0..self.task_count())
            .map(|i| self.level_factor(i, q[i]) * self.population_factor(i, x))
            .collect())
    }

    /// Drift of the task vector: `w - F(q, x)`.
    pub fn drift(&self, q: &[S], x: &[S], w: &GrowthRate<S>) -> Result<Vec<S>> {
        if w.len() != self.task_count() {
            return Err(Error::Dimension {
                what: "growth rate",
                expected: self.task_count(),
                got: w.len(),
            });
        }
        let f = self.reduction_rate(q, x)?;
        Ok(w.values().iter().zip(f).map(|(&wi, fi)| wi - fi).collect())
    }

    /// Analytic Jacobian of `F` in the population state, `dF_i/dx_j`.
    ///
    /// Fails with a singularity error when some relevant `x_j <= 0` and the
    /// task's exponent is below 1 (the derivative is unbounded there).
    pub fn jacobian_x(&self, q: &[S], x: &[S]) -> Result<Mat<S>> {
        self.check_dims(q, x)?;
        let m = self.task_count();
        let n = self.strategy_count();
        let mut jac = Mat::zeros(m, n);
        match self {
            RateFamily::ResourceCollection { exponents, .. } => {
                for i in 0..m {
                    let d = pow_derivative(x[i], exponents[i]).ok_or_else(|| Error::Singular {
                        what: "population jacobian",
                        detail: format!("x_{i} = 0 with exponent {} < 1", exponents[i]),
                    })?;
                    jac.set(i, i, self.level_factor(i, q[i]) * d);
                }
            }
            RateFamily::HeterogeneousSensing {
                exponents,
                neighborhoods,
                ..
            } => {
                for i in 0..m {
                    let lf = self.level_factor(i, q[i]);
                    for &j in &neighborhoods[i] {
                        let d = pow_derivative(x[j], exponents[i]).ok_or_else(|| Error::Singular {
                            what: "population jacobian",
                            detail: format!("x_{j} = 0 with exponent {} < 1", exponents[i]),
                        })?;
                        jac.set(i, j, lf * d);
                    }
                }
            }
            RateFamily::WaterDistribution { max_levels } => {
                for i in 0..m {
                    jac.set(i, i, q[i] / max_levels[i]);
                }
            }
        }
        Ok(jac)
    }

    /// For each task, the unique `q_i >= 0` with `F_i(q_i, x) = w_i`, or the
    /// list of tasks whose growth exceeds every reachable rate.
    pub fn stationary_tasks(&self, x: &[S], w: &GrowthRate<S>) -> Result<StationaryOutcome<S>> {
        if x.len() != self.strategy_count() {
            return Err(Error::Dimension {
                what: "population state",
                expected: self.strategy_count(),
                got: x.len(),
            });
        }
        if w.len() != self.task_count() {
            return Err(Error::Dimension {
                what: "growth rate",
                expected: self.task_count(),
                got: w.len(),
            });
        }
        let mut q = vec![S::zero(); self.task_count()];
        let mut blocked = Vec::new();
        for i in 0..self.task_count() {
            let wi = w.values()[i];
            if wi == S::zero() {
                continue; // q_i = 0 is the root: F_i(0, x) = 0
            }
            let pf = self.population_factor(i, x);
            if !(self.level_factor_sup(i) * pf > wi) {
                blocked.push(i);
                continue;
            }
            match self {
                RateFamily::WaterDistribution { max_levels } => {
                    q[i] = wi * max_levels[i] / pf;
                }
                _ => {
                    let f = |qi: S| self.level_factor(i, qi) * pf - wi;
                    match increasing_root(f, S::real(1e-12), S::real(1e15)) {
                        Some(root) => q[i] = root,
                        None => blocked.push(i), // saturates below w_i numerically
                    }
                }
            }
        }
        if blocked.is_empty() {
            Ok(StationaryOutcome::Feasible(TaskVector::new(q)?))
        } else {
            Ok(StationaryOutcome::Infeasible { tasks: blocked })
        }
    }

    /// Strategy profile `y >= 0` (not mass-constrained) nulling the drift at
    /// `q`: `F(q, y) = w`. For the shared-strategy family the underdetermined
    /// system is resolved to the minimum-norm nonnegative solution in the
    /// substituted variables `z_j = y_j^beta`.
    pub fn stationary_profile(&self, q: &[S], w: &GrowthRate<S>) -> Result<Vec<S>> {
        if q.len() != self.task_count() {
            return Err(Error::Dimension {
                what: "task vector",
                expected: self.task_count(),
                got: q.len(),
            });
        }
        if w.len() != self.task_count() {
            return Err(Error::Dimension {
                what: "growth rate",
                expected: self.task_count(),
                got: w.len(),
            });
        }
        match self {
            RateFamily::ResourceCollection { exponents, .. } => {
                let mut y = vec![S::zero(); self.task_count()];
                for i in 0..self.task_count() {
                    let wi = w.values()[i];
                    if wi == S::zero() {
                        continue; // y_i = 0 nulls the drift and minimizes norm
                    }
                    let lf = self.level_factor(i, q[i]);
                    if !(lf > S::zero()) {
                        return Err(Error::Singular {
                            what: "stationary profile",
                            detail: format!("task {i}: zero level factor with growth {wi} > 0"),
                        });
                    }
                    y[i] = powi_inv(wi / lf, exponents[i]);
                }
                Ok(y)
            }
            RateFamily::WaterDistribution { max_levels } => {
                let mut y = vec![S::zero(); self.task_count()];
                for i in 0..self.task_count() {
                    let wi = w.values()[i];
                    if wi == S::zero() {
                        continue;
                    }
                    if !(q[i] > S::zero()) {
                        return Err(Error::Singular {
                            what: "stationary profile",
                            detail: format!("task {i}: empty reservoir with growth {wi} > 0"),
                        });
                    }
                    y[i] = wi * max_levels[i] / q[i];
                }
                Ok(y)
            }
            RateFamily::HeterogeneousSensing {
                exponents,
                neighborhoods,
                strategy_count,
                ..
            } => {
                let beta = exponents[0];
                if exponents.iter().any(|&b| b != beta) {
                    return Err(Error::Unsupported {
                        detail: "stationary profile for shared strategies requires a uniform \
                                 exponent across tasks"
                            .into(),
                    });
                }
                let n = *strategy_count;
                let mut rows: Vec<Vec<S>> = Vec::new();
                let mut rhs: Vec<S> = Vec::new();
                for i in 0..self.task_count() {
                    let wi = w.values()[i];
                    let lf = self.level_factor(i, q[i]);
                    if !(lf > S::zero()) {
                        if wi > S::zero() {
                            return Err(Error::Singular {
                                what: "stationary profile",
                                detail: format!("task {i}: zero level factor with growth {wi} > 0"),
                            });
                        }
                        continue; // F_i vanishes identically; no constraint
                    }
                    let mut row = vec![S::zero(); n];
                    for &j in &neighborhoods[i] {
                        row[j] = S::one();
                    }
                    rows.push(row);
                    rhs.push(wi / lf);
                }
                let z = if rows.is_empty() {
                    vec![S::zero(); n]
                } else if rows.len() > n {
                    // Overdetermined: feasibility is all that can be asked.
                    let a = Mat::from_rows(&rows);
                    let z = nnls(&a, &rhs);
                    let resid = inf_norm(
                        &(0..rows.len())
                            .map(|r| dot(a.row(r), &z) - rhs[r])
                            .collect::<Vec<_>>(),
                    );
                    if resid > S::real(STATIONARY_TOL) {
                        return Err(Error::StationaryInfeasible {
                            residual: resid.as_f64(),
                        });
                    }
                    z
                } else {
                    let a = Mat::from_rows(&rows);
                    match min_norm_nonneg(&a, &rhs, S::real(STATIONARY_TOL)) {
                        Ok(z) => z,
                        Err(MinNormFailure::Infeasible { residual }) => {
                            return Err(Error::StationaryInfeasible { residual })
                        }
                        Err(MinNormFailure::RankDeficient) => {
                            return Err(Error::invalid(
                                "stationary profile",
                                "stationary constraints are linearly dependent",
                            ))
                        }
                    }
                };
                let y: Vec<S> = z.iter().map(|&zj| powi_inv(zj, beta)).collect();
                let resid = inf_norm(
                    &self
                        .drift(q, &y, w)
                        .expect("dimensions already checked"),
                );
                if resid > S::real(STATIONARY_TOL) {
                    return Err(Error::StationaryInfeasible {
                        residual: resid.as_f64(),
                    });
                }
                Ok(y)
            }
        }
    }
}

/// `max(x, 0)^beta`, with the exponent-1 fast path.
#[inline]
fn pow_clamped<S: Scalar>(x: S, beta: S) -> S {
    let xc = x.max(S::zero());
    if beta == S::one() {
        xc
    } else {
        xc.powf(beta)
    }
}

/// `d/dx x^beta = beta * x^(beta-1)` at `max(x, 0)`, or `None` when the
/// derivative is unbounded (`beta < 1` at zero).
#[inline]
fn pow_derivative<S: Scalar>(x: S, beta: S) -> Option<S> {
    let xc = x.max(S::zero());
    if beta == S::one() {
        return Some(S::one());
    }
    if xc == S::zero() {
        if beta < S::one() {
            return None;
        }
        return Some(S::zero());
    }
    Some(beta * xc.powf(beta - S::one()))
}

/// `v^(1/beta)` with the exponent-1 fast path.
#[inline]
fn powi_inv<S: Scalar>(v: S, beta: S) -> S {
    if beta == S::one() {
        v
    } else {
        v.powf(S::one() / beta)
    }
}

fn check_exponents<S: Scalar>(exponents: &[S]) -> Result<()> {
    for (i, &b) in exponents.iter().enumerate() {
        if !b.is_finite() || !(b > S::zero()) || b > S::real(2.0) {
            return Err(Error::invalid(
                "exponents",
                format!("entry {i} = {b} must lie in (0, 2]"),
            ));
        }
    }
    Ok(())
}

/// Result of [`RateFamily::stationary_tasks`]: infeasibility is a value, not
/// a failure, because the equilibrium optimizer scores infeasible states as
/// infinite cost.
#[derive(Clone, Debug, PartialEq)]
pub enum StationaryOutcome<S> {
    Feasible(TaskVector<S>),
    /// Tasks whose growth rate exceeds every reachable reduction rate.
    Infeasible { tasks: Vec<usize> },
}

impl<S: Scalar> StationaryOutcome<S> {
    pub fn feasible(self) -> Option<TaskVector<S>> {
        match self {
            StationaryOutcome::Feasible(q) => Some(q),
            StationaryOutcome::Infeasible { .. } => None,
        }
    }
}

/// A `(q, x)` pair certified stationary: `|| F(q, x) - w ||_inf` within
/// tolerance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StationaryPair<S> {
    tasks: TaskVector<S>,
    population: PopulationState<S>,
    residual: S,
}

impl<S: Scalar> StationaryPair<S> {
    pub fn new(
        family: &RateFamily<S>,
        w: &GrowthRate<S>,
        tasks: TaskVector<S>,
        population: PopulationState<S>,
    ) -> Result<Self> {
        Self::with_tolerance(family, w, tasks, population, S::real(STATIONARY_TOL))
    }

    pub fn with_tolerance(
        family: &RateFamily<S>,
        w: &GrowthRate<S>,
        tasks: TaskVector<S>,
        population: PopulationState<S>,
        tol: S,
    ) -> Result<Self> {
        let drift = family.drift(tasks.values(), population.masses(), w)?;
        let residual = inf_norm(&drift);
        if residual > tol {
            return Err(Error::invalid(
                "stationary pair",
                format!("drift residual {residual} exceeds tolerance {tol}"),
            ));
        }
        Ok(StationaryPair {
            tasks,
            population,
            residual,
        })
    }

    pub fn tasks(&self) -> &TaskVector<S> {
        &self.tasks
    }

    pub fn population(&self) -> &PopulationState<S> {
        &self.population
    }

    pub fn residual(&self) -> S {
        self.residual
    }
}
