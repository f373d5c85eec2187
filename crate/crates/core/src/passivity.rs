//! Energy-style convergence certificates.
//!
//! The antistorage function `L(q, x)` measures how far `(q, x)` sits from
//! the stationary set `{F(q, x) = w}` through a line integral along the
//! segment from the drift-nulling profile `g(q)` to `x`:
//!
//! `L(q, x) = (x - g(q))' G  integral_0^1 (F(q, s(tau)) - w) dtau`,
//! `s(tau) = tau x + (1 - tau) g(q)`.
//!
//! For a well-designed payoff matrix `G`, `L` is nonnegative and vanishes
//! exactly on the stationary set, and the sum of `L` with the protocol's
//! storage decreases along closed-loop trajectories; this module evaluates
//! `L` by composite Gauss-Legendre quadrature on panels dyadically graded
//! toward both endpoints and monitors that decrement.

use serde::{Deserialize, Serialize};

use crate::closed_loop::{PayoffMatrix, Trajectory};
use crate::error::{Error, Result};
use crate::model::{GrowthRate, RateFamily};
use crate::numerics::quadrature::gauss_legendre_unit;
use crate::protocol::RevisionProtocol;
use crate::scalar::{dot, Scalar};

/// Gauss-Legendre node count per quadrature panel for the antistorage line
/// integral. 16 nodes are exact (to rounding) whenever the rate is
/// polynomial of degree at most 31 in the population state - in particular
/// for every unit-exponent family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QuadratureSpec {
    pub nodes: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { nodes: 16 }
    }
}

impl QuadratureSpec {
    pub fn new(nodes: usize) -> Result<Self> {
        let spec = QuadratureSpec { nodes };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes < 2 || self.nodes > 64 {
            return Err(Error::invalid(
                "quadrature spec",
                format!("node count {} must lie in [2, 64]", self.nodes),
            ));
        }
        Ok(())
    }
}

/// Number of dyadic refinement levels toward each endpoint of the line
/// integral. Fractional population exponents place root-type branch points
/// where a segment component vanishes - arbitrarily close to `tau = 0` when
/// a profile component is tiny and to `tau = 1` when a population component
/// is tiny - and a fixed-node rule on one panel loses its accuracy there.
/// On graded panels the branch point is never closer to a panel than the
/// panel's own width, restoring fast convergence; 40 levels push the
/// leftover endpoint panels below 1e-12 width.
const GRADE_LEVELS: i32 = 40;

/// Antistorage value at `(q, x)`. Requires the drift-nulling profile to
/// exist at `q`; its computation errors propagate.
pub fn antistorage<S: Scalar>(
    q: &[S],
    x: &[S],
    payoff: &PayoffMatrix<S>,
    family: &RateFamily<S>,
    growth: &GrowthRate<S>,
    quad: &QuadratureSpec,
) -> Result<S> {
    quad.validate()?;
    if x.len() != family.strategy_count() {
        return Err(Error::Dimension {
            what: "population state",
            expected: family.strategy_count(),
            got: x.len(),
        });
    }
    let g = family.stationary_profile(q, growth)?;
    let delta: Vec<S> = x.iter().zip(&g).map(|(&xi, &gi)| xi - gi).collect();
    // (x - g)' G, a row vector over tasks.
    let lead = payoff.matrix().tr_matvec(&delta);

    let (nodes, weights) = gauss_legendre_unit::<S>(quad.nodes);
    let mut bounds: Vec<S> = Vec::with_capacity(2 * GRADE_LEVELS as usize + 2);
    bounds.push(S::zero());
    for k in (1..=GRADE_LEVELS).rev() {
        bounds.push(S::real(2f64.powi(-k)));
    }
    for k in 2..=GRADE_LEVELS {
        bounds.push(S::one() - S::real(2f64.powi(-k)));
    }
    bounds.push(S::one());

    let mut integral = vec![S::zero(); family.task_count()];
    let mut s_tau = vec![S::zero(); x.len()];
    for panel in bounds.windows(2) {
        let width = panel[1] - panel[0];
        if !(width > S::zero()) {
            continue; // grading below the scalar's resolution
        }
        for (&node, &wk) in nodes.iter().zip(&weights) {
            let tau = panel[0] + width * node;
            for j in 0..x.len() {
                s_tau[j] = g[j] + tau * delta[j];
            }
            let f = family.reduction_rate(q, &s_tau)?;
            for i in 0..integral.len() {
                integral[i] = integral[i] + width * wk * (f[i] - growth.values()[i]);
            }
        }
    }
    Ok(dot(&lead, &integral))
}

/// Result of sweeping the antistorage over a set of sampled states.
#[derive(Clone, Debug, Serialize)]
pub struct AntistorageSweep<S> {
    pub points: usize,
    pub min_value: S,
    pub worst_index: usize,
    /// Points with antistorage below `-tolerance`.
    pub violations: usize,
    pub tolerance: S,
    pub passed: bool,
}

/// Evaluates the antistorage at each `(q, x)` point and reports the most
/// negative value found.
pub fn antistorage_sweep<S: Scalar>(
    points: &[(Vec<S>, Vec<S>)],
    payoff: &PayoffMatrix<S>,
    family: &RateFamily<S>,
    growth: &GrowthRate<S>,
    quad: &QuadratureSpec,
    tolerance: S,
) -> Result<AntistorageSweep<S>> {
    if points.is_empty() {
        return Err(Error::invalid("antistorage sweep", "needs at least one point"));
    }
    let mut min_value = S::infinity();
    let mut worst_index = 0;
    let mut violations = 0;
    for (idx, (q, x)) in points.iter().enumerate() {
        let l = antistorage(q, x, payoff, family, growth, quad)?;
        if l < min_value {
            min_value = l;
            worst_index = idx;
        }
        if l < -tolerance {
            violations += 1;
        }
    }
    Ok(AntistorageSweep {
        points: points.len(),
        min_value,
        worst_index,
        violations,
        tolerance,
        passed: violations == 0,
    })
}

/// Verdict on the decrement of the combined energy `V = S + L` along a
/// recorded trajectory.
#[derive(Clone, Debug, Serialize)]
pub struct MonitorReport<S> {
    pub samples: usize,
    /// `V` at the first recorded sample.
    pub initial: S,
    /// Largest increase between consecutive recorded samples (0 if the
    /// sequence never increases).
    pub max_increment: S,
    /// Sample index where the largest increase lands.
    pub worst_index: Option<usize>,
    /// Allowed increment: `1e-6 * (1 + initial)`.
    pub tolerance: S,
    pub passed: bool,
}

/// Recomputes `V_k = S(p_k, x_k) + L(q_k, x_k)` at every recorded sample of
/// `traj` and checks that the sequence is non-increasing up to
/// `1e-6 * (1 + V_0)`.
pub fn lyapunov_monitor<S: Scalar>(
    traj: &Trajectory<S>,
    payoff: &PayoffMatrix<S>,
    family: &RateFamily<S>,
    growth: &GrowthRate<S>,
    protocol: &RevisionProtocol<S>,
    quad: &QuadratureSpec,
) -> Result<MonitorReport<S>> {
    if traj.is_empty() {
        return Err(Error::invalid("lyapunov monitor", "trajectory has no samples"));
    }
    let mut values = Vec::with_capacity(traj.len());
    for k in 0..traj.len() {
        let q = &traj.tasks[k];
        let x = &traj.populations[k];
        let p = payoff.payoff(q);
        let s = protocol.storage(&p, x)?;
        let l = antistorage(q, x, payoff, family, growth, quad)?;
        values.push(s + l);
    }
    let initial = values[0];
    let mut max_increment = S::zero();
    let mut worst_index = None;
    for k in 1..values.len() {
        let inc = values[k] - values[k - 1];
        if inc > max_increment {
            max_increment = inc;
            worst_index = Some(k);
        }
    }
    let tolerance = S::real(1e-6) * (S::one() + initial);
    Ok(MonitorReport {
        samples: values.len(),
        initial,
        max_increment,
        worst_index,
        tolerance,
        passed: max_increment <= tolerance,
    })
}
