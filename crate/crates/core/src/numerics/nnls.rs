//! Nonnegative least squares (active-set method of Lawson and Hanson), the
//! least-distance program built on it, and the minimum-norm nonnegative
//! solver for underdetermined linear systems.

use crate::numerics::linalg::{householder_qr, solve_dense, Mat};
use crate::scalar::{dot, inf_norm, Scalar};

/// Minimizes `|| a z - b ||_2` over `z >= 0` (Lawson-Hanson active set).
///
/// Deterministic: ties in the gradient pick the lowest index. Returns the
/// best iterate if the iteration cap is hit (callers check the residual).
pub fn nnls<S: Scalar>(a: &Mat<S>, b: &[S]) -> Vec<S> {
    let m = a.rows();
    let n = a.cols();
    assert_eq!(b.len(), m, "rhs dimension");
    let mut z = vec![S::zero(); n];
    if n == 0 || m == 0 {
        return z;
    }
    let mut passive: Vec<usize> = Vec::new();
    let mut banned = vec![false; n];
    let grad_scale = inf_norm(&a.tr_matvec(b)).max(S::one());
    let tol = S::epsilon() * S::real(1e3) * grad_scale;
    let outer_cap = 10 * n.max(m) + 20;
    let inner_cap = outer_cap;

    for _ in 0..outer_cap {
        // Gradient of the residual at the current iterate.
        let resid: Vec<S> = (0..m)
            .map(|i| b[i] - dot(a.row(i), &z))
            .collect();
        let w = a.tr_matvec(&resid);
        let mut best: Option<usize> = None;
        for j in 0..n {
            if banned[j] || passive.contains(&j) {
                continue;
            }
            if w[j] > tol && best.map_or(true, |bj| w[j] > w[bj]) {
                best = Some(j);
            }
        }
        let Some(enter) = best else { break };
        passive.push(enter);

        let mut inner_ok = false;
        for _ in 0..inner_cap {
            let Some(s) = passive_least_squares(a, b, &passive) else {
                // Degenerate column set: drop the newcomer and bar it until
                // the active set changes again.
                let dropped = passive.pop().expect("just pushed");
                banned[dropped] = true;
                inner_ok = true; // outer loop continues with other candidates
                break;
            };
            if passive.iter().all(|&j| s[j] > S::zero()) {
                z = s;
                banned.iter_mut().for_each(|b| *b = false);
                inner_ok = true;
                break;
            }
            // Step as far toward s as feasibility allows, then prune.
            let mut alpha = S::one();
            for &j in &passive {
                if s[j] <= S::zero() {
                    let denom = z[j] - s[j];
                    if denom > S::zero() {
                        alpha = alpha.min(z[j] / denom);
                    } else {
                        alpha = S::zero();
                    }
                }
            }
            for j in 0..n {
                z[j] = z[j] + alpha * (s[j] - z[j]);
            }
            let prune = S::epsilon() * S::real(16.0);
            passive.retain(|&j| {
                if z[j] <= prune {
                    z[j] = S::zero();
                    false
                } else {
                    true
                }
            });
        }
        if !inner_ok {
            break; // cap hit; return best effort
        }
    }
    z
}

/// Unconstrained least squares restricted to the `passive` columns, via the
/// normal equations (column sets here are tiny and well conditioned).
fn passive_least_squares<S: Scalar>(a: &Mat<S>, b: &[S], passive: &[usize]) -> Option<Vec<S>> {
    let k = passive.len();
    let mut gram = Mat::zeros(k, k);
    let mut rhs = vec![S::zero(); k];
    for (r, &jr) in passive.iter().enumerate() {
        for (c, &jc) in passive.iter().enumerate() {
            let mut s = S::zero();
            for i in 0..a.rows() {
                s = s + a.at(i, jr) * a.at(i, jc);
            }
            gram.set(r, c, s);
        }
        let mut s = S::zero();
        for i in 0..a.rows() {
            s = s + a.at(i, jr) * b[i];
        }
        rhs[r] = s;
    }
    let sol = solve_dense(&gram, &rhs)?;
    let mut full = vec![S::zero(); a.cols()];
    for (r, &j) in passive.iter().enumerate() {
        full[j] = sol[r];
    }
    Some(full)
}

/// Least-distance program: minimizes `|| x ||_2` subject to `g x >= h`,
/// through the Lawson-Hanson reduction to NNLS. Returns `None` when the
/// constraint set is (numerically) empty.
pub fn least_distance<S: Scalar>(g: &Mat<S>, h: &[S]) -> Option<Vec<S>> {
    let p = g.rows();
    let k = g.cols();
    assert_eq!(h.len(), p, "constraint rhs dimension");
    if k == 0 {
        // Zero-dimensional variable: feasible iff h <= 0.
        return if h.iter().all(|&v| v <= S::real(1e-12)) {
            Some(Vec::new())
        } else {
            None
        };
    }
    // Columns of the NNLS matrix are the constraint rows with their bound.
    let mut e = Mat::zeros(k + 1, p);
    for c in 0..p {
        for r in 0..k {
            e.set(r, c, g.at(c, r));
        }
        e.set(k, c, h[c]);
    }
    let mut f = vec![S::zero(); k + 1];
    f[k] = S::one();
    let u = nnls(&e, &f);
    let eu = e.matvec(&u);
    let r: Vec<S> = (0..k + 1).map(|i| eu[i] - f[i]).collect();
    let r_last = r[k];
    if r_last > -S::real(1e-12) {
        return None; // residual vanished: constraints inconsistent
    }
    Some((0..k).map(|j| -r[j] / r_last).collect())
}

/// Failure modes of [`min_norm_nonneg`].
#[derive(Debug, Clone, PartialEq)]
pub enum MinNormFailure {
    /// No nonnegative solution: the best nonnegative residual is reported.
    Infeasible { residual: f64 },
    /// The coefficient rows are linearly dependent, so the null-space
    /// parameterization is unavailable.
    RankDeficient,
}

/// Minimum-Euclidean-norm solution of `a z = b` over `z >= 0`, for a wide
/// matrix `a` with full row rank.
///
/// Stage 1 certifies feasibility with NNLS (residual above `feas_tol` is
/// reported as infeasible); stage 2 computes the exact minimum-norm point by
/// parameterizing the affine solution set through a Householder null-space
/// basis and solving the induced least-distance program.
pub fn min_norm_nonneg<S: Scalar>(
    a: &Mat<S>,
    b: &[S],
    feas_tol: S,
) -> Result<Vec<S>, MinNormFailure> {
    let m = a.rows();
    let n = a.cols();
    if m == 0 {
        return Ok(vec![S::zero(); n]); // no constraints: the origin
    }
    assert!(m <= n, "expected an underdetermined or square system");

    let z_feas = nnls(a, b);
    let resid: Vec<S> = (0..m)
        .map(|i| dot(a.row(i), &z_feas) - b[i])
        .collect();
    let resid_norm = inf_norm(&resid);
    if resid_norm > feas_tol {
        return Err(MinNormFailure::Infeasible {
            residual: resid_norm.as_f64(),
        });
    }

    let (q, r) = householder_qr(&a.transpose()); // a^T = q r, q is n x n
    let rank_tol = S::epsilon() * S::from_usize(n).unwrap() * r.at(0, 0).abs().max(S::one());
    for j in 0..m {
        if r.at(j, j).abs() <= rank_tol {
            return Err(MinNormFailure::RankDeficient);
        }
    }
    // Minimum-norm particular solution: solve r^T u = b (lower triangular),
    // then z0 = q[:, 0..m] u lies in the row space of `a`.
    let mut u = vec![S::zero(); m];
    for i in 0..m {
        let mut s = b[i];
        for j in 0..i {
            s = s - r.at(j, i) * u[j];
        }
        u[i] = s / r.at(i, i);
    }
    let mut z0 = vec![S::zero(); n];
    for i in 0..n {
        let mut s = S::zero();
        for j in 0..m {
            s = s + q.at(i, j) * u[j];
        }
        z0[i] = s;
    }

    let slack = -S::real(1e-12);
    let k = n - m;
    if k == 0 || z0.iter().all(|&v| v >= slack) {
        for v in &mut z0 {
            *v = v.max(S::zero());
        }
        return Ok(z0);
    }

    // Remaining freedom: z = z0 + q2 y with q2 the null-space basis; keep z
    // nonnegative while minimizing || y || (equivalently || z || by
    // orthogonality).
    let mut q2 = Mat::zeros(n, k);
    for i in 0..n {
        for j in 0..k {
            q2.set(i, j, q.at(i, m + j));
        }
    }
    let h: Vec<S> = z0.iter().map(|&v| -v).collect();
    match least_distance(&q2, &h) {
        Some(y) => {
            let corr = q2.matvec(&y);
            let mut z: Vec<S> = z0
                .iter()
                .zip(&corr)
                .map(|(&a, &c)| (a + c).max(S::zero()))
                .collect();
            for v in &mut z {
                if !v.is_finite() {
                    return Ok(z_feas); // numerical breakdown: keep the feasible point
                }
            }
            Ok(z)
        }
        // Stage 1 proved feasibility; if the reduction still stalls
        // numerically, fall back to the feasible (non-minimal) point.
        None => Ok(z_feas),
    }
}
