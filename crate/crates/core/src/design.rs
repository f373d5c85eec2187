//! Payoff design: find the cost-minimizing stationary pair, sample the
//! constraint set, solve the margin-maximizing linear program for the payoff
//! matrix, and verify the three sufficient conditions (payoff-Jacobian
//! symmetry, column alignment, row dominance) that certify closed-loop
//! convergence to that pair.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::closed_loop::{PayoffMatrix, PayoffPattern};
use crate::error::{Error, Result};
use crate::model::{
    GrowthRate, PopulationState, RateFamily, StationaryOutcome, StationaryPair, TaskVector,
};
use crate::numerics::bisect::increasing_root;
use crate::numerics::linalg::Mat;
use crate::numerics::lp::{maximize, InequalityProgram, LpOutcome};
use crate::numerics::simplex_geom::{low_discrepancy_simplex, project_simplex, sample_simplex};
use crate::scalar::{dot, inf_norm, two_norm, Scalar};

/// Cost of a task vector; the design steers the closed loop to its
/// constrained minimizer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostFunction {
    /// `sum_i q_i^2`
    SumOfSquares,
    /// `max_i q_i`
    MaxNorm,
}

impl CostFunction {
    pub fn evaluate<S: Scalar>(&self, q: &[S]) -> S {
        match self {
            CostFunction::SumOfSquares => q.iter().map(|&v| v * v).sum(),
            CostFunction::MaxNorm => q.iter().copied().fold(S::zero(), S::max),
        }
    }
}

/// One sampled state for the column condition: a task vector, a population
/// state, and the drift-nulling profile at that task vector.
#[derive(Clone, Debug, Serialize)]
pub struct ConstraintSample<S> {
    tasks: TaskVector<S>,
    population: PopulationState<S>,
    profile: Vec<S>,
}

impl<S: Scalar> ConstraintSample<S> {
    /// Checks the profile actually nulls the drift (residual at most 1e-8).
    pub fn new(
        family: &RateFamily<S>,
        growth: &GrowthRate<S>,
        tasks: TaskVector<S>,
        population: PopulationState<S>,
        profile: Vec<S>,
    ) -> Result<Self> {
        let drift = family.drift(tasks.values(), &profile, growth)?;
        let residual = inf_norm(&drift);
        if residual > S::real(1e-8) {
            return Err(Error::invalid(
                "constraint sample",
                format!("profile residual {residual} exceeds 1e-8"),
            ));
        }
        Ok(ConstraintSample {
            tasks,
            population,
            profile,
        })
    }

    pub fn tasks(&self) -> &[S] {
        self.tasks.values()
    }

    pub fn population(&self) -> &[S] {
        self.population.masses()
    }

    pub fn profile(&self) -> &[S] {
        &self.profile
    }
}

/// Draws `count` constraint samples: task vectors log-uniform per component
/// on `[1e-2, q_max]`, population states uniform on the mass-`M` simplex,
/// each paired with its drift-nulling profile. Draws whose profile does not
/// exist are discarded and redrawn, with up to `10 * count` redraws on top
/// of the initial `count` attempts. Deterministic for a fixed seed.
pub fn sample_constraints<S: Scalar>(
    family: &RateFamily<S>,
    growth: &GrowthRate<S>,
    mass: S,
    count: usize,
    seed: u64,
    q_max: S,
) -> Result<Vec<ConstraintSample<S>>> {
    if count == 0 {
        return Err(Error::invalid("constraint sampling", "count must be at least 1"));
    }
    let lo = 1e-2;
    let hi = q_max.as_f64();
    if !(hi > lo) || !hi.is_finite() {
        return Err(Error::invalid(
            "constraint sampling",
            format!("q_max = {hi} must be finite and exceed {lo}"),
        ));
    }
    let m = family.task_count();
    let n = family.strategy_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(count);
    let budget = 11 * count;
    let mut attempts = 0;
    while samples.len() < count {
        if attempts >= budget {
            return Err(Error::SamplerBudget {
                attempts,
                wanted: count,
            });
        }
        attempts += 1;
        let q: Vec<S> = (0..m)
            .map(|_| {
                let u: f64 = rng.gen_range(0.0..1.0);
                S::real((lo.ln() + u * (hi.ln() - lo.ln())).exp())
            })
            .collect();
        let x = sample_simplex(&mut rng, n, mass);
        match family.stationary_profile(&q, growth) {
            Ok(profile) => {
                samples.push(ConstraintSample::new(
                    family,
                    growth,
                    TaskVector::new(q)?,
                    PopulationState::new(x, mass)?,
                    profile,
                )?);
            }
            Err(Error::StationaryInfeasible { .. }) | Err(Error::Singular { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(samples)
}

/// The cost-minimizing stationary pair plus the per-start landscape the
/// multi-start optimizer saw.
#[derive(Clone, Debug, Serialize)]
pub struct EquilibriumReport<S> {
    pub pair: StationaryPair<S>,
    pub cost: S,
    pub local_minima: Vec<LocalMinimum<S>>,
}

/// Final point of one optimizer start (infeasible starts carry no cost).
#[derive(Clone, Debug, Serialize)]
pub struct LocalMinimum<S> {
    pub population: Vec<S>,
    pub cost: Option<S>,
    pub converged: bool,
}

const PGD_STARTS: usize = 20;
const PGD_MAX_ITERS: usize = 300;
const PGD_GRAD_TOL: f64 = 1e-8;

/// Minimizes `cost(q(x))` over the mass-`M` simplex, where `q(x)` is the
/// stationary task vector for population `x` (infeasible `x` scores
/// infinite cost). Multi-start projected-gradient descent with
/// central-difference gradients from 20 deterministic low-discrepancy
/// starts; starts that cannot hold every task stationary are first walked
/// into the feasible set by descending the saturated-rate shortfall. For
/// the max-norm cost on single-strategy-per-task families the result is
/// polished by exact level equalization.
pub fn optimal_equilibrium<S: Scalar>(
    family: &RateFamily<S>,
    growth: &GrowthRate<S>,
    mass: S,
    cost: CostFunction,
) -> Result<EquilibriumReport<S>> {
    family.validate()?;
    if growth.len() != family.task_count() {
        return Err(Error::Dimension {
            what: "growth rate",
            expected: family.task_count(),
            got: growth.len(),
        });
    }
    if !(mass > S::zero()) || !mass.is_finite() {
        return Err(Error::invalid("population mass", "must be positive and finite"));
    }
    let n = family.strategy_count();

    let objective = |x: &[S]| -> Option<(TaskVector<S>, S)> {
        match family.stationary_tasks(x, growth) {
            Ok(StationaryOutcome::Feasible(q)) => {
                let c = cost.evaluate(q.values());
                Some((q, c))
            }
            _ => None,
        }
    };

    // Degenerate game: nothing ever grows, so empty tasks cost nothing.
    if growth.values().iter().all(|&wi| wi == S::zero()) {
        let x = PopulationState::uniform(n, mass)?;
        let q = TaskVector::zeros(family.task_count());
        let pair = StationaryPair::new(family, growth, q, x.clone())?;
        return Ok(EquilibriumReport {
            cost: S::zero(),
            local_minima: vec![LocalMinimum {
                population: x.masses().to_vec(),
                cost: Some(S::zero()),
                converged: true,
            }],
            pair,
        });
    }

    let mut best: Option<(Vec<S>, S)> = None;
    let mut minima = Vec::new();

    if n == 1 {
        // The simplex is a single point.
        let x = vec![mass];
        match objective(&x) {
            Some((_, c)) => {
                minima.push(LocalMinimum {
                    population: x.clone(),
                    cost: Some(c),
                    converged: true,
                });
                best = Some((x, c));
            }
            None => {
                return Err(Error::GameInfeasible {
                    detail: "the single available strategy cannot hold every task stationary"
                        .into(),
                })
            }
        }
    } else {
        let feasible = |y: &[S]| objective(y).is_some();
        for start in 0..PGD_STARTS {
            let seeded = low_discrepancy_simplex(start, n, mass);
            let x0 = restore_feasibility(family, growth, &feasible, seeded, mass);
            let (x, value, converged) = descend(&objective, x0, mass);
            minima.push(LocalMinimum {
                population: x.clone(),
                cost: value,
                converged,
            });
            if let Some(v) = value {
                if best.as_ref().map_or(true, |(_, b)| v < *b) {
                    best = Some((x, v));
                }
            }
        }
    }

    if let Some(polished) = equalized_max_norm(family, growth, mass, cost) {
        let (x, c) = polished;
        let better = best
            .as_ref()
            .map_or(true, |(_, b)| c <= *b + S::real(1e-9) * (S::one() + b.abs()));
        minima.push(LocalMinimum {
            population: x.clone(),
            cost: Some(c),
            converged: true,
        });
        if better {
            best = Some((x, c));
        }
    }

    let (x_best, cost_best) = best.ok_or_else(|| Error::GameInfeasible {
        detail: "every optimizer start was infeasible: no sampled population state can hold \
                 all tasks stationary"
            .into(),
    })?;

    // Tidy the mass to machine accuracy before certifying stationarity.
    let total: S = x_best.iter().copied().sum();
    let x_exact: Vec<S> = x_best.iter().map(|&v| v * mass / total).collect();
    let (q_star, _) = objective(&x_exact).ok_or_else(|| Error::GameInfeasible {
        detail: "the optimizer's best point lost feasibility under mass renormalization".into(),
    })?;
    let pair = StationaryPair::new(
        family,
        growth,
        q_star,
        PopulationState::new(x_exact, mass)?,
    )?;
    Ok(EquilibriumReport {
        pair,
        cost: cost_best,
        local_minima: minima,
    })
}

/// Total shortfall of the saturated reduction rates below the growth rates
/// (with a small relative cushion). Zero exactly when every task can be
/// held stationary with room to spare, so descending it steers points
/// toward the feasible set.
fn feasibility_gap<S: Scalar>(family: &RateFamily<S>, growth: &GrowthRate<S>, x: &[S]) -> S {
    let sup = family.saturated_rate(x);
    growth
        .values()
        .iter()
        .zip(&sup)
        .map(|(&wi, &fi)| {
            if fi.is_finite() {
                (wi * S::real(1.0 + 1e-3) - fi).max(S::zero())
            } else {
                S::zero()
            }
        })
        .sum()
}

/// Walks an infeasible start into the feasible set by projected-gradient
/// descent on the saturated-rate shortfall, stopping as soon as the point
/// can hold every task stationary. When the shortfall cannot be removed
/// (the game itself may be infeasible) the last iterate is returned and the
/// caller records the start as infeasible.
fn restore_feasibility<S: Scalar>(
    family: &RateFamily<S>,
    growth: &GrowthRate<S>,
    feasible: &impl Fn(&[S]) -> bool,
    mut x: Vec<S>,
    mass: S,
) -> Vec<S> {
    if feasible(&x) {
        return x;
    }
    let gap = |y: &[S]| feasibility_gap(family, growth, y);
    let n = x.len();
    let mut value = gap(&x);
    let h = S::real(1e-7) * (S::one() + mass);
    for _ in 0..PGD_MAX_ITERS {
        let mut grad = vec![S::zero(); n];
        for i in 0..n {
            let mut plus = x.clone();
            plus[i] = plus[i] + h;
            let mut minus = x.clone();
            minus[i] = (minus[i] - h).max(S::zero());
            grad[i] = (gap(&plus) - gap(&minus)) / (plus[i] - minus[i]);
        }
        let mut alpha = S::one();
        let mut improved = false;
        for _ in 0..60 {
            let trial_raw: Vec<S> = x
                .iter()
                .zip(&grad)
                .map(|(&a, &g)| a - alpha * g)
                .collect();
            let trial = project_simplex(&trial_raw, mass);
            let c = gap(&trial);
            if c < value - S::real(1e-15) * (S::one() + value) {
                x = trial;
                value = c;
                improved = true;
                break;
            }
            alpha = alpha * S::real(0.5);
        }
        if feasible(&x) || !improved {
            break;
        }
    }
    x
}

/// Projected-gradient descent from one start. Returns the final point, its
/// cost (when feasible), and whether the projected-gradient criterion was
/// met (stalls at the finite-difference noise floor end the descent without
/// the converged flag).
fn descend<S: Scalar>(
    objective: &impl Fn(&[S]) -> Option<(TaskVector<S>, S)>,
    mut x: Vec<S>,
    mass: S,
) -> (Vec<S>, Option<S>, bool) {
    let mut value = match objective(&x) {
        Some((_, c)) => c,
        None => return (x, None, false),
    };
    let n = x.len();
    let mut converged = false;
    for _ in 0..PGD_MAX_ITERS {
        // Central differences on the unconstrained extension of the
        // objective; one-sided where a side loses feasibility.
        let h = S::real(1e-6) * (S::one() + mass);
        let mut grad = vec![S::zero(); n];
        for i in 0..n {
            let mut plus = x.clone();
            plus[i] = plus[i] + h;
            let mut minus = x.clone();
            minus[i] = (minus[i] - h).max(S::zero());
            let f_plus = objective(&plus).map(|(_, c)| c);
            let f_minus = objective(&minus).map(|(_, c)| c);
            grad[i] = match (f_plus, f_minus) {
                (Some(a), Some(b)) => (a - b) / (plus[i] - minus[i]),
                (Some(a), None) => (a - value) / h,
                (None, Some(b)) => (value - b) / h,
                (None, None) => S::zero(),
            };
        }
        let stepped: Vec<S> = x.iter().zip(&grad).map(|(&a, &g)| a - g).collect();
        let projected = project_simplex(&stepped, mass);
        let pg: Vec<S> = x.iter().zip(&projected).map(|(&a, &b)| a - b).collect();
        if inf_norm(&pg) <= S::real(PGD_GRAD_TOL) {
            converged = true;
            break;
        }

        let mut alpha = S::one();
        let mut improved = false;
        for _ in 0..40 {
            let trial_raw: Vec<S> = x
                .iter()
                .zip(&grad)
                .map(|(&a, &g)| a - alpha * g)
                .collect();
            let trial = project_simplex(&trial_raw, mass);
            if let Some((_, c)) = objective(&trial) {
                if c < value - S::real(1e-12) * (S::one() + value.abs()) {
                    x = trial;
                    value = c;
                    improved = true;
                    break;
                }
            }
            alpha = alpha * S::real(0.5);
        }
        if !improved {
            break; // stalled at the finite-difference noise floor
        }
    }
    (x, Some(value), converged)
}

/// Exact optimum for the max-norm cost on families where task `i` is
/// serviced only by strategy `i`: the cost is minimized by equalizing all
/// stationary task levels (tasks with zero growth stay empty), so the level
/// solves a one-dimensional mass-balance equation.
fn equalized_max_norm<S: Scalar>(
    family: &RateFamily<S>,
    growth: &GrowthRate<S>,
    mass: S,
    cost: CostFunction,
) -> Option<(Vec<S>, S)> {
    if cost != CostFunction::MaxNorm {
        return None;
    }
    let m = family.task_count();
    let profile_at_level = |level: S| -> Option<Vec<S>> {
        let q: Vec<S> = growth
            .values()
            .iter()
            .map(|&wi| if wi > S::zero() { level } else { S::zero() })
            .collect();
        family.stationary_profile(&q, growth).ok()
    };
    match family {
        RateFamily::ResourceCollection { .. } | RateFamily::WaterDistribution { .. } => {
            // Residual mass as a function of the common level: increasing,
            // negative for tiny levels (profiles blow up), positive once the
            // needed mass drops below M. Its root is the equalized design.
            let balance = |level: S| -> S {
                match profile_at_level(level.max(S::real(1e-300))) {
                    Some(y) => mass - y.iter().copied().sum(),
                    None => S::real(-1.0),
                }
            };
            let level = increasing_root(balance, S::real(1e-12), S::real(1e12))?;
            if !(level > S::zero()) {
                return None; // all-zero growth is handled upstream
            }
            let y = profile_at_level(level)?;
            let total: S = y.iter().copied().sum();
            if (total - mass).abs() > S::real(1e-7) * mass {
                return None;
            }
            let x: Vec<S> = y.iter().map(|&v| v * mass / total).collect();
            let q: Vec<S> = growth
                .values()
                .iter()
                .map(|&wi| if wi > S::zero() { level } else { S::zero() })
                .collect();
            match family.stationary_tasks(&x, growth) {
                Ok(StationaryOutcome::Feasible(q_exact)) => {
                    let c = cost.evaluate(q_exact.values());
                    let _ = q;
                    Some((x, c))
                }
                _ => None,
            }
        }
        RateFamily::HeterogeneousSensing { .. } => None,
    }
    .filter(|_| m > 0)
}

/// Per-condition outcome inside a [`DesignReport`]: how many checks ran,
/// how many violated the -1e-9 cushion, the worst value seen, and up to 100
/// offender indices (sample/task for the column condition, strategy pairs
/// for the row condition, sample indices for symmetry).
#[derive(Clone, Debug, Serialize)]
pub struct ConditionVerdict<S> {
    pub checked: usize,
    pub violations: usize,
    pub worst: S,
    pub offenders: Vec<Vec<usize>>,
    pub passed: bool,
}

/// Payoff matrix with its certification: the achieved margin and the three
/// condition verdicts.
#[derive(Clone, Debug, Serialize)]
pub struct DesignReport<S> {
    pub payoff: PayoffMatrix<S>,
    /// Margin: the LP objective for a designed matrix, the minimum
    /// normalized column slack for a verified one.
    pub margin: S,
    /// (a) symmetry of `G * dF/dx` at sampled states.
    pub symmetry: ConditionVerdict<S>,
    /// (b) positive column alignment at every sample.
    pub column: ConditionVerdict<S>,
    /// (c) row dominance at the optimal pair.
    pub row: ConditionVerdict<S>,
    pub passed: bool,
}

const VIOLATION_CUSHION: f64 = 1e-9;
const SYMMETRY_TOL: f64 = 1e-8;
const SYMMETRY_POINTS: usize = 200;
const NORM_FLOOR: f64 = 1e-12;
const ENTRY_BOUND: f64 = 10.0;
const OFFENDER_CAP: usize = 100;

/// Sparse pattern-to-variable mapping: `entries[(row, col)] -> LP variable`.
struct PatternVars {
    count: usize,
    entries: Vec<(usize, usize, usize)>,
}

fn pattern_vars<S: Scalar>(
    pattern: &PayoffPattern,
    family: &RateFamily<S>,
) -> Result<PatternVars> {
    let m = family.task_count();
    let n = family.strategy_count();
    match pattern {
        PayoffPattern::Diagonal => {
            let sets = family.service_sets();
            if m != n || sets.iter().enumerate().any(|(i, s)| s.as_slice() != [i]) {
                return Err(Error::Unsupported {
                    detail: "diagonal pattern requires one dedicated strategy per task".into(),
                });
            }
            Ok(PatternVars {
                count: m,
                entries: (0..m).map(|i| (i, i, i)).collect(),
            })
        }
        PayoffPattern::NeighborShared { sets } => {
            let family_sets = family.service_sets();
            if *sets != family_sets {
                return Err(Error::invalid(
                    "payoff pattern",
                    "shared-value sets must match the family's service sets",
                ));
            }
            match family {
                RateFamily::HeterogeneousSensing { exponents, .. } => {
                    if exponents.iter().any(|&b| b != S::one()) {
                        return Err(Error::Unsupported {
                            detail: "the shared-value pattern cannot symmetrize the \
                                     payoff-Jacobian product unless every exponent is 1"
                                .into(),
                        });
                    }
                }
                _ => {
                    return Err(Error::Unsupported {
                        detail: "the shared-value pattern applies to shared-strategy families \
                                 only"
                            .into(),
                    })
                }
            }
            let mut entries = Vec::new();
            for (i, set) in sets.iter().enumerate() {
                for &j in set {
                    entries.push((j, i, i));
                }
            }
            Ok(PatternVars { count: m, entries })
        }
        PayoffPattern::Dense => Ok(PatternVars {
            count: n * m,
            entries: (0..n)
                .flat_map(|j| (0..m).map(move |i| (j, i, j * m + i)))
                .collect(),
        }),
    }
}

/// Margin-maximizing payoff design over the pattern's free entries:
///
/// maximize `eps` subject to, for every sample `s` and task `i`,
/// `(F_i(q_s, x_s) - w_i) (x_s - y_s)' G_i_col >= eps * ||h||_2` with
/// `h = (F_i - w_i)(x_s - y_s)`; row dominance `(G_i_row - G_j_row) q* >= 0`
/// for every supported strategy `i` and every `j`; and `|entry| <= 10`.
/// Declares the design infeasible when the optimal margin is nonpositive.
/// Deterministic (Bland pivoting).
pub fn design_payoff<S: Scalar>(
    family: &RateFamily<S>,
    growth: &GrowthRate<S>,
    samples: &[ConstraintSample<S>],
    pattern: PayoffPattern,
    pair: &StationaryPair<S>,
) -> Result<DesignReport<S>> {
    if samples.is_empty() {
        return Err(Error::invalid("payoff design", "needs at least one sample"));
    }
    check_pair_dims(family, pair)?;
    let vars = pattern_vars(&pattern, family)?;
    let m = family.task_count();
    let n = family.strategy_count();
    let d = vars.count + 1; // pattern variables plus the margin
    let eps_ix = vars.count;

    let mut program = InequalityProgram {
        objective: {
            let mut c = vec![S::zero(); d];
            c[eps_ix] = S::one();
            c
        },
        rows: Vec::new(),
        rhs: Vec::new(),
    };
    // Which constraint row came from which sample (for infeasibility
    // reporting); usize::MAX marks structural rows.
    let mut row_sample = Vec::new();

    for (s_ix, sample) in samples.iter().enumerate() {
        if sample.tasks().len() != m || sample.population().len() != n {
            return Err(Error::invalid("payoff design", "sample dimensions mismatch"));
        }
        let f = family.reduction_rate(sample.tasks(), sample.population())?;
        for i in 0..m {
            let gap = f[i] - growth.values()[i];
            let h: Vec<S> = sample
                .population()
                .iter()
                .zip(sample.profile())
                .map(|(&xj, &yj)| gap * (xj - yj))
                .collect();
            let norm = two_norm(&h);
            if norm <= S::real(NORM_FLOOR) {
                continue; // the sample sits on the stationary set for task i
            }
            let mut row = vec![S::zero(); d];
            for &(r, c, v) in &vars.entries {
                if c == i {
                    row[v] = row[v] + h[r];
                }
            }
            row[eps_ix] = -norm;
            program.rows.push(row);
            program.rhs.push(S::zero());
            row_sample.push(s_ix);
        }
    }

    let q_star = pair.tasks().values();
    let x_star = pair.population().masses();
    let q_norm = two_norm(q_star).max(S::real(NORM_FLOOR));
    for i in 0..n {
        if !(x_star[i] > S::zero()) {
            continue;
        }
        for j in 0..n {
            if j == i {
                continue;
            }
            let mut row = vec![S::zero(); d];
            for &(r, c, v) in &vars.entries {
                if r == i {
                    row[v] = row[v] + q_star[c] / q_norm;
                }
                if r == j {
                    row[v] = row[v] - q_star[c] / q_norm;
                }
            }
            program.rows.push(row);
            program.rhs.push(S::zero());
            row_sample.push(usize::MAX);
        }
    }

    let bound = S::real(ENTRY_BOUND);
    for v in 0..vars.count {
        let mut up = vec![S::zero(); d];
        up[v] = -S::one();
        program.rows.push(up);
        program.rhs.push(-bound);
        row_sample.push(usize::MAX);
        let mut low = vec![S::zero(); d];
        low[v] = S::one();
        program.rows.push(low);
        program.rhs.push(-bound);
        row_sample.push(usize::MAX);
    }
    // Safety cap keeping the program bounded even in degenerate cases; the
    // normalized margin never reaches it.
    let mut cap = vec![S::zero(); d];
    cap[eps_ix] = -S::one();
    program.rows.push(cap);
    program.rhs.push(-S::real(1e3));
    row_sample.push(usize::MAX);

    let (solution, margin) = match maximize(&program) {
        LpOutcome::Optimal { solution, value } => (solution, value),
        other => {
            return Err(Error::invalid(
                "payoff design",
                format!("margin program did not solve cleanly: {other:?}"),
            ))
        }
    };

    let mut mat = Mat::zeros(n, m);
    for &(r, c, v) in &vars.entries {
        mat.set(r, c, solution[v]);
    }
    let payoff = PayoffMatrix::new(mat, pattern)?;

    if !(margin > S::zero()) {
        // Report the samples whose constraints pin the margin down.
        let mut worst = Vec::new();
        for (row_ix, &s_ix) in row_sample.iter().enumerate() {
            if s_ix == usize::MAX {
                continue;
            }
            let slack = dot(&program.rows[row_ix], &solution) - program.rhs[row_ix];
            if slack <= margin.abs() + S::real(VIOLATION_CUSHION) && !worst.contains(&s_ix) {
                worst.push(s_ix);
                if worst.len() >= 20 {
                    break;
                }
            }
        }
        return Err(Error::DesignInfeasible {
            margin: margin.as_f64(),
            worst_samples: worst,
        });
    }

    let mut report = verify_conditions(&payoff, family, growth, samples, pair)?;
    report.margin = margin;
    Ok(report)
}

/// The pattern the family naturally induces: diagonal when each task has a
/// dedicated strategy, shared column values otherwise.
pub fn natural_pattern<S: Scalar>(family: &RateFamily<S>) -> PayoffPattern {
    match family {
        RateFamily::HeterogeneousSensing { .. } => PayoffPattern::NeighborShared {
            sets: family.service_sets(),
        },
        _ => PayoffPattern::Diagonal,
    }
}

fn check_pair_dims<S: Scalar>(family: &RateFamily<S>, pair: &StationaryPair<S>) -> Result<()> {
    if pair.tasks().len() != family.task_count() {
        return Err(Error::Dimension {
            what: "optimal task vector",
            expected: family.task_count(),
            got: pair.tasks().len(),
        });
    }
    if pair.population().len() != family.strategy_count() {
        return Err(Error::Dimension {
            what: "optimal population state",
            expected: family.strategy_count(),
            got: pair.population().len(),
        });
    }
    Ok(())
}

/// Checks the three certification conditions for a given payoff matrix:
/// (a) `G * dF/dx` symmetric at up to 200 sampled states, asymmetry within
/// 1e-8; (b) positive normalized column slack at every sample, violations
/// counted below -1e-9; (c) row dominance `(G_i_row - G_j_row) q* >= 0`
/// exhaustively over strategy pairs with `x*_i > 0`, same cushion.
pub fn verify_conditions<S: Scalar>(
    payoff: &PayoffMatrix<S>,
    family: &RateFamily<S>,
    growth: &GrowthRate<S>,
    samples: &[ConstraintSample<S>],
    pair: &StationaryPair<S>,
) -> Result<DesignReport<S>> {
    if samples.is_empty() {
        return Err(Error::invalid("verification", "needs at least one sample"));
    }
    check_pair_dims(family, pair)?;
    let m = family.task_count();
    let n = family.strategy_count();
    if payoff.tasks() != m || payoff.strategies() != n {
        return Err(Error::Dimension {
            what: "payoff matrix",
            expected: n * m,
            got: payoff.strategies() * payoff.tasks(),
        });
    }
    let g = payoff.matrix();
    let cushion = S::real(VIOLATION_CUSHION);

    // (a) symmetry of G * J at sampled states.
    let sym_count = samples.len().min(SYMMETRY_POINTS);
    let mut sym_worst = S::zero();
    let mut sym_violations = 0;
    let mut sym_offenders = Vec::new();
    for (s_ix, sample) in samples.iter().take(sym_count).enumerate() {
        let jac = family.jacobian_x(sample.tasks(), sample.population())?;
        let gj = g.matmul(&jac);
        let mut asym = S::zero();
        for r in 0..n {
            for c in 0..r {
                asym = asym.max((gj.at(r, c) - gj.at(c, r)).abs());
            }
        }
        if asym > sym_worst {
            sym_worst = asym;
        }
        if asym > S::real(SYMMETRY_TOL) {
            sym_violations += 1;
            if sym_offenders.len() < OFFENDER_CAP {
                sym_offenders.push(vec![s_ix]);
            }
        }
    }
    let symmetry = ConditionVerdict {
        checked: sym_count,
        violations: sym_violations,
        worst: sym_worst,
        offenders: sym_offenders,
        passed: sym_violations == 0,
    };

    // (b) normalized column slack at every sample and task.
    let mut col_checked = 0;
    let mut col_min = S::infinity();
    let mut col_violations = 0;
    let mut col_offenders = Vec::new();
    for (s_ix, sample) in samples.iter().enumerate() {
        let f = family.reduction_rate(sample.tasks(), sample.population())?;
        for i in 0..m {
            let gap = f[i] - growth.values()[i];
            let h: Vec<S> = sample
                .population()
                .iter()
                .zip(sample.profile())
                .map(|(&xj, &yj)| gap * (xj - yj))
                .collect();
            let norm = two_norm(&h);
            if norm <= S::real(NORM_FLOOR) {
                continue;
            }
            col_checked += 1;
            let slack = dot(&h, g.col(i).as_slice()) / norm;
            if slack < col_min {
                col_min = slack;
            }
            if slack < -cushion {
                col_violations += 1;
                if col_offenders.len() < OFFENDER_CAP {
                    col_offenders.push(vec![s_ix, i]);
                }
            }
        }
    }
    if col_checked == 0 {
        col_min = S::zero();
    }
    let column = ConditionVerdict {
        checked: col_checked,
        violations: col_violations,
        worst: col_min,
        offenders: col_offenders,
        passed: col_violations == 0 && col_min > S::zero(),
    };

    // (c) row dominance at the optimal pair, exhaustive over pairs.
    let q_star = pair.tasks().values();
    let x_star = pair.population().masses();
    let row_payoff: Vec<S> = (0..n).map(|j| dot(g.row(j), q_star)).collect();
    let mut row_checked = 0;
    let mut row_min = S::infinity();
    let mut row_violations = 0;
    let mut row_offenders = Vec::new();
    for i in 0..n {
        if !(x_star[i] > S::zero()) {
            continue;
        }
        for j in 0..n {
            if j == i {
                continue;
            }
            row_checked += 1;
            let val = row_payoff[i] - row_payoff[j];
            if val < row_min {
                row_min = val;
            }
            if val < -cushion {
                row_violations += 1;
                if row_offenders.len() < OFFENDER_CAP {
                    row_offenders.push(vec![i, j]);
                }
            }
        }
    }
    if row_checked == 0 {
        row_min = S::zero();
    }
    let row = ConditionVerdict {
        checked: row_checked,
        violations: row_violations,
        worst: row_min,
        offenders: row_offenders,
        passed: row_violations == 0,
    };

    let passed = symmetry.passed && column.passed && row.passed;
    Ok(DesignReport {
        payoff: payoff.clone(),
        margin: column.worst,
        symmetry,
        column,
        row,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn four_task_family() -> RateFamily<f64> {
        RateFamily::resource_collection(vec![3.5; 4], vec![0.05; 4], vec![1.0; 4]).unwrap()
    }

    #[test]
    fn cost_values() {
        assert_eq!(CostFunction::SumOfSquares.evaluate::<f64>(&[0.0, 0.0]), 0.0);
        assert_eq!(CostFunction::SumOfSquares.evaluate::<f64>(&[1.0, 2.0]), 5.0);
        assert_eq!(CostFunction::MaxNorm.evaluate::<f64>(&[1.0, 2.0]), 2.0);
    }

    #[test]
    fn zero_growth_short_circuits() {
        let fam = four_task_family();
        let w = GrowthRate::new(vec![0.0; 4]).unwrap();
        let report = optimal_equilibrium(&fam, &w, 1.0, CostFunction::SumOfSquares).unwrap();
        assert_eq!(report.cost, 0.0);
        assert_eq!(report.pair.tasks().values(), &[0.0; 4]);
    }

    #[test]
    fn single_strategy_is_forced() {
        let fam = RateFamily::resource_collection(vec![3.5], vec![0.05], vec![1.0]).unwrap();
        let w = GrowthRate::new(vec![0.25]).unwrap();
        let report = optimal_equilibrium(&fam, &w, 1.0, CostFunction::MaxNorm).unwrap();
        assert_eq!(report.pair.population().masses(), &[1.0]);
        assert_abs_diff_eq!(
            report.pair.tasks().values()[0],
            20.0 * (3.75f64 / 3.25).ln(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn max_norm_equalizes_levels() {
        // All tasks share R = 3.5: equal levels need x_i proportional to w_i,
        // and the common level satisfies 3.5 t(q) = sum(w) / M.
        let fam = four_task_family();
        let w = GrowthRate::new(vec![0.05, 0.25, 1.0, 2.0]).unwrap();
        let report = optimal_equilibrium(&fam, &w, 1.0, CostFunction::MaxNorm).unwrap();
        let q = report.pair.tasks().values();
        let expected = 20.0 * 34.0f64.ln();
        for &qi in q {
            assert_abs_diff_eq!(qi, expected, epsilon = 1e-8);
        }
        let x = report.pair.population().masses();
        for i in 0..4 {
            assert_abs_diff_eq!(x[i], w.values()[i] / 3.3, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(report.cost, expected, epsilon = 1e-8);
    }

    #[test]
    fn infeasible_game_is_reported() {
        // Total growth exceeds the maximum total reduction rate (R = 0.5).
        let fam =
            RateFamily::resource_collection(vec![0.5, 0.5], vec![0.05, 0.05], vec![1.0, 1.0])
                .unwrap();
        let w = GrowthRate::new(vec![0.4, 0.4]).unwrap();
        assert!(matches!(
            optimal_equilibrium(&fam, &w, 1.0, CostFunction::MaxNorm),
            Err(Error::GameInfeasible { .. })
        ));
    }

    #[test]
    fn sampler_is_deterministic_and_respects_the_residual_bound() {
        let fam = four_task_family();
        let w = GrowthRate::new(vec![0.05, 0.25, 1.0, 2.0]).unwrap();
        let a = sample_constraints(&fam, &w, 1.0, 32, 99, 200.0).unwrap();
        let b = sample_constraints(&fam, &w, 1.0, 32, 99, 200.0).unwrap();
        assert_eq!(a.len(), 32);
        for (sa, sb) in a.iter().zip(&b) {
            assert_eq!(sa.tasks(), sb.tasks());
            assert_eq!(sa.population(), sb.population());
            assert_eq!(sa.profile(), sb.profile());
            let drift = fam.drift(sa.tasks(), sa.profile(), &w).unwrap();
            assert!(crate::scalar::inf_norm(&drift) <= 1e-8);
            assert!(sa.tasks().iter().all(|&q| (0.01..=200.0).contains(&q)));
        }
        let c = sample_constraints(&fam, &w, 1.0, 32, 100, 200.0).unwrap();
        assert_ne!(a[0].tasks(), c[0].tasks());
    }

    #[test]
    fn closed_form_profile_matches_hand_inversion() {
        // y_i = w_i (e^{alpha q_i} + 1) / (R (e^{alpha q_i} - 1)).
        let fam = four_task_family();
        let w = GrowthRate::new(vec![0.05, 0.25, 1.0, 2.0]).unwrap();
        let q = [13.0, 7.0, 29.0, 55.0];
        let y = fam.stationary_profile(&q, &w).unwrap();
        for i in 0..4 {
            let e = (0.05 * q[i]).exp();
            let expected = w.values()[i] * (e + 1.0) / (3.5 * (e - 1.0));
            assert_abs_diff_eq!(y[i], expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn designed_diagonal_payoff_is_certified_and_balanced() {
        let fam = RateFamily::resource_collection(vec![3.5, 3.5], vec![0.05, 0.05], vec![1.0, 1.0])
            .unwrap();
        let w = GrowthRate::new(vec![0.25, 0.5]).unwrap();
        let eq = optimal_equilibrium(&fam, &w, 1.0, CostFunction::SumOfSquares).unwrap();
        let samples = sample_constraints(&fam, &w, 1.0, 200, 7, 150.0).unwrap();
        let report = design_payoff(
            &fam,
            &w,
            &samples,
            PayoffPattern::Diagonal,
            &eq.pair,
        )
        .unwrap();
        assert!(report.margin > 0.0);
        assert!(report.passed, "verdicts: {report:?}");
        let g: &Mat<f64> = report.payoff.matrix();
        let q = eq.pair.tasks().values();
        // Row dominance at a fully supported optimum forces equal products.
        assert_abs_diff_eq!(g.at(0, 0) * q[0], g.at(1, 1) * q[1], epsilon = 1e-6);
        assert!(g.at(0, 0).abs() <= 10.0 + 1e-9);
        assert!(g.at(1, 1).abs() <= 10.0 + 1e-9);
    }

    #[test]
    fn verification_flags_sign_flips_and_zero_matrices() {
        let fam = RateFamily::resource_collection(vec![3.5, 3.5], vec![0.05, 0.05], vec![1.0, 1.0])
            .unwrap();
        let w = GrowthRate::new(vec![0.25, 0.5]).unwrap();
        let eq = optimal_equilibrium(&fam, &w, 1.0, CostFunction::MaxNorm).unwrap();
        let samples = sample_constraints(&fam, &w, 1.0, 100, 11, 150.0).unwrap();

        let identity = PayoffMatrix::identity(2).unwrap();
        let ok = verify_conditions(&identity, &fam, &w, &samples, &eq.pair).unwrap();
        assert!(ok.passed, "identity at the equalized optimum: {ok:?}");

        let neg = PayoffMatrix::diagonal(&[-1.0, -1.0]).unwrap();
        let bad = verify_conditions(&neg, &fam, &w, &samples, &eq.pair).unwrap();
        assert!(!bad.column.passed);
        assert!(bad.column.violations > 0);

        let zero = PayoffMatrix::diagonal(&[0.0, 0.0]).unwrap();
        let z = verify_conditions(&zero, &fam, &w, &samples, &eq.pair).unwrap();
        assert!(!z.column.passed);
        assert_eq!(z.column.violations, 0);
        assert_eq!(z.margin, 0.0);
    }

    #[test]
    fn pattern_gates() {
        let rc = four_task_family();
        let hs = RateFamily::heterogeneous_sensing(
            vec![3.5; 4],
            vec![0.05; 4],
            vec![1.0; 4],
            vec![vec![0, 1, 2], vec![0, 3, 4], vec![1, 3, 5], vec![2, 4, 5]],
            6,
        )
        .unwrap();
        assert!(pattern_vars(&PayoffPattern::Diagonal, &rc).is_ok());
        assert!(pattern_vars(&PayoffPattern::Diagonal, &hs).is_err());
        assert!(pattern_vars(
            &PayoffPattern::NeighborShared {
                sets: hs.service_sets()
            },
            &hs
        )
        .is_ok());
        assert!(pattern_vars(
            &PayoffPattern::NeighborShared {
                sets: rc.service_sets()
            },
            &rc
        )
        .is_err());

        let hs_beta = RateFamily::heterogeneous_sensing(
            vec![3.5; 4],
            vec![0.05; 4],
            vec![2.0; 4],
            vec![vec![0, 1, 2], vec![0, 3, 4], vec![1, 3, 5], vec![2, 4, 5]],
            6,
        )
        .unwrap();
        assert!(matches!(
            pattern_vars(
                &PayoffPattern::NeighborShared {
                    sets: hs_beta.service_sets()
                },
                &hs_beta
            ),
            Err(Error::Unsupported { .. })
        ));
    }

    #[test]
    fn scaling_a_certified_payoff_keeps_it_certified() {
        let fam = RateFamily::resource_collection(vec![3.5, 3.5], vec![0.05, 0.05], vec![1.0, 1.0])
            .unwrap();
        let w = GrowthRate::new(vec![0.25, 0.5]).unwrap();
        let eq = optimal_equilibrium(&fam, &w, 1.0, CostFunction::MaxNorm).unwrap();
        let samples = sample_constraints(&fam, &w, 1.0, 100, 3, 150.0).unwrap();
        let identity = PayoffMatrix::identity(2).unwrap();
        for &scale in &[0.5, 2.0, 7.25] {
            let scaled = identity.scaled(scale).unwrap();
            let rep = verify_conditions(&scaled, &fam, &w, &samples, &eq.pair).unwrap();
            assert!(rep.passed, "scale {scale}: {rep:?}");
        }
    }
}
