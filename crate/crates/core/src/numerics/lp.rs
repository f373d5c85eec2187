//! Dense linear programming: maximize a linear objective over a polyhedron
//! given as inequality rows `a . v >= b`.
//!
//! The intended workload has tens of thousands of rows but at most a few
//! dozen variables, so the program is solved through its standard-form dual
//! (equalities = primal variables, columns = primal rows) with a two-phase
//! tableau simplex. Bland's rule keeps the pivot sequence finite and
//! deterministic; the primal solution is recovered from the optimal basis
//! multipliers.

use crate::numerics::linalg::{solve_dense, Mat};
use crate::scalar::{dot, Scalar};

/// `maximize objective . v` subject to `rows[i] . v >= rhs[i]` (free `v`).
#[derive(Clone, Debug)]
pub struct InequalityProgram<S> {
    pub objective: Vec<S>,
    pub rows: Vec<Vec<S>>,
    pub rhs: Vec<S>,
}

/// Outcome of [`maximize`].
#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome<S> {
    Optimal { solution: Vec<S>, value: S },
    Infeasible,
    Unbounded,
    /// Safety cap on pivots was hit (not expected on well-posed inputs).
    IterationLimit,
}

const RC_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const PHASE1_TOL: f64 = 1e-7;
const MAX_PIVOTS: usize = 200_000;

struct Tableau<S> {
    /// Rows of `ncols` columns plus a trailing rhs entry.
    rows: Vec<Vec<S>>,
    /// Reduced-cost row (same layout, trailing entry carries -objective).
    rc: Vec<S>,
    basis: Vec<usize>,
    ncols: usize,
}

impl<S: Scalar> Tableau<S> {
    fn pivot(&mut self, r: usize, c: usize) {
        let piv = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v = *v / piv;
        }
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][c];
            if f == S::zero() {
                continue;
            }
            for j in 0..=self.ncols {
                let upd = self.rows[i][j] - f * self.rows[r][j];
                self.rows[i][j] = upd;
            }
            self.rows[i][c] = S::zero();
        }
        let f = self.rc[c];
        if f != S::zero() {
            for j in 0..=self.ncols {
                let upd = self.rc[j] - f * self.rows[r][j];
                self.rc[j] = upd;
            }
            self.rc[c] = S::zero();
        }
        self.basis[r] = c;
    }

    /// Recomputes the reduced-cost row for the given column costs.
    fn reset_costs(&mut self, cost: &[S]) {
        self.rc = vec![S::zero(); self.ncols + 1];
        self.rc[..self.ncols].copy_from_slice(cost);
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb == S::zero() {
                continue;
            }
            for j in 0..=self.ncols {
                let upd = self.rc[j] - cb * self.rows[r][j];
                self.rc[j] = upd;
            }
        }
    }

    fn objective_value(&self, cost: &[S]) -> S {
        self.basis
            .iter()
            .enumerate()
            .map(|(r, &b)| cost[b] * self.rows[r][self.ncols])
            .sum()
    }

    /// One simplex phase (minimization) with Bland's rule. `allowed` masks
    /// columns barred from entering. Returns `Ok(())` at optimality,
    /// `Err(true)` on an unbounded ray, `Err(false)` on the pivot cap.
    fn run(&mut self, allowed: &[bool], budget: &mut usize) -> Result<(), bool> {
        let rhs = self.ncols;
        loop {
            let mut entering = None;
            for j in 0..self.ncols {
                if allowed[j] && self.rc[j] < -S::real(RC_TOL) {
                    entering = Some(j);
                    break; // Bland: lowest eligible index
                }
            }
            let Some(c) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, S)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][c];
                if a > S::real(PIVOT_TOL) {
                    let ratio = self.rows[r][rhs] / a;
                    match leave {
                        None => leave = Some((r, ratio)),
                        Some((br, bratio)) => {
                            let tie = (ratio - bratio).abs()
                                <= S::real(1e-12) * (S::one() + bratio.abs());
                            if tie {
                                if self.basis[r] < self.basis[br] {
                                    leave = Some((r, ratio)); // Bland tie-break
                                }
                            } else if ratio < bratio {
                                leave = Some((r, ratio));
                            }
                        }
                    }
                }
            }
            let Some((r, _)) = leave else {
                return Err(true);
            };
            if *budget == 0 {
                return Err(false);
            }
            *budget -= 1;
            self.pivot(r, c);
        }
    }
}

/// Solves the inequality-constrained maximization. Deterministic for fixed
/// input.
pub fn maximize<S: Scalar>(p: &InequalityProgram<S>) -> LpOutcome<S> {
    let d = p.objective.len();
    let n = p.rows.len();
    assert_eq!(p.rhs.len(), n, "rhs length");
    for row in &p.rows {
        assert_eq!(row.len(), d, "row length");
    }
    if n == 0 {
        return if p.objective.iter().all(|&c| c == S::zero()) {
            LpOutcome::Optimal {
                solution: vec![S::zero(); d],
                value: S::zero(),
            }
        } else {
            LpOutcome::Unbounded
        };
    }

    // Dual: minimize (-rhs) . u  s.t.  sum_i rows[i][j] u_i = -objective[j],
    // u >= 0. Equality j is sign-flipped when its right side is negative.
    let mut flip = vec![false; d];
    let mut beq: Vec<S> = p.objective.iter().map(|&c| -c).collect();
    for j in 0..d {
        if beq[j] < S::zero() {
            flip[j] = true;
            beq[j] = -beq[j];
        }
    }
    let sign = |j: usize| if flip[j] { -S::one() } else { S::one() };

    let ncols = n + d;
    let mut rows: Vec<Vec<S>> = Vec::with_capacity(d);
    for j in 0..d {
        let mut row = vec![S::zero(); ncols + 1];
        for i in 0..n {
            row[i] = sign(j) * p.rows[i][j];
        }
        row[n + j] = S::one(); // artificial
        row[ncols] = beq[j];
        rows.push(row);
    }
    let mut tab = Tableau {
        rows,
        rc: Vec::new(),
        basis: (n..n + d).collect(),
        ncols,
    };
    // Original equality index carried by each tableau row (rows only ever
    // get removed, never reordered).
    let mut origin: Vec<usize> = (0..d).collect();

    // Phase 1: drive the artificial variables to zero.
    let mut cost1 = vec![S::zero(); ncols];
    for c in cost1.iter_mut().skip(n) {
        *c = S::one();
    }
    tab.reset_costs(&cost1);
    let allowed: Vec<bool> = (0..ncols).map(|j| j < n).collect();
    let mut budget = MAX_PIVOTS;
    if tab.run(&allowed, &mut budget).is_err() {
        // Phase-1 cost is bounded below by zero, so a ray is numerical noise;
        // either way the pivot budget story ends here.
        return LpOutcome::IterationLimit;
    }
    if tab.objective_value(&cost1) > S::real(PHASE1_TOL) {
        // Dual infeasible; a feasible primal must then be unbounded.
        return LpOutcome::Unbounded;
    }

    // Pivot lingering zero-level artificials out of the basis, dropping rows
    // whose equality turned out redundant (all-zero over real columns).
    let mut r = 0;
    while r < tab.basis.len() {
        if tab.basis[r] >= n {
            let c = (0..n).find(|&j| tab.rows[r][j].abs() > S::real(PIVOT_TOL));
            match c {
                Some(c) => tab.pivot(r, c),
                None => {
                    tab.rows.remove(r);
                    tab.basis.remove(r);
                    origin.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }

    // Phase 2: the dual objective.
    let mut cost2 = vec![S::zero(); ncols];
    for i in 0..n {
        cost2[i] = -p.rhs[i];
    }
    tab.reset_costs(&cost2);
    match tab.run(&allowed, &mut budget) {
        Ok(()) => {}
        Err(true) => return LpOutcome::Infeasible, // dual unbounded => primal empty
        Err(false) => return LpOutcome::IterationLimit,
    }

    // Recover the primal point from the equality multipliers of the optimal
    // basis: solve B^T y = c_B over the surviving equalities, undo the sign
    // flips, negate. Dropped equalities are dependent directions; their
    // multiplier is fixed at zero, which keeps every reduced cost intact.
    let db = tab.basis.len();
    let mut bt = Mat::zeros(db, db);
    let mut cb = vec![S::zero(); db];
    for (rr, &bv) in tab.basis.iter().enumerate() {
        cb[rr] = cost2[bv];
        for (cc, &jrow) in origin.iter().enumerate() {
            let entry = if bv < n {
                sign(jrow) * p.rows[bv][jrow]
            } else if bv - n == jrow {
                S::one()
            } else {
                S::zero()
            };
            bt.set(rr, cc, entry);
        }
    }
    let Some(y) = solve_dense(&bt, &cb) else {
        return LpOutcome::IterationLimit;
    };
    let mut v = vec![S::zero(); d];
    for (cc, &jrow) in origin.iter().enumerate() {
        v[jrow] = if flip[jrow] { y[cc] } else { -y[cc] };
    }
    let value = dot(&p.objective, &v);
    LpOutcome::Optimal { solution: v, value }
}
