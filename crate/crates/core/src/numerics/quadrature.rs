//! Gauss-Legendre quadrature nodes and weights.

use crate::scalar::Scalar;

/// Legendre polynomial `P_n` and derivative `P_n'` at `x`, by the three-term
/// recurrence.
fn legendre_and_derivative<S: Scalar>(n: usize, x: S) -> (S, S) {
    let mut p_prev = S::one(); // P_0
    let mut p = x; // P_1
    for k in 1..n {
        let kf = S::from_usize(k).unwrap();
        let next =
            ((S::real(2.0) * kf + S::one()) * x * p - kf * p_prev) / (kf + S::one());
        p_prev = p;
        p = next;
    }
    let nf = S::from_usize(n).unwrap();
    // P_n'(x) = n (x P_n - P_{n-1}) / (x^2 - 1)
    let dp = nf * (x * p - p_prev) / (x * x - S::one());
    (p, dp)
}

/// Gauss-Legendre nodes and weights on `[0, 1]`, exact for polynomials up to
/// degree `2 n - 1`. Panics for `n == 0`.
pub fn gauss_legendre_unit<S: Scalar>(n: usize) -> (Vec<S>, Vec<S>) {
    assert!(n >= 1, "at least one node");
    let mut nodes = vec![S::zero(); n];
    let mut weights = vec![S::zero(); n];
    let pi = S::real(core::f64::consts::PI);
    let nf = S::from_usize(n).unwrap();
    for i in 0..n {
        // Chebyshev-like initial guess, then Newton on P_n.
        let k = S::from_usize(i).unwrap();
        let mut x = (pi * (k + S::real(0.75)) / (nf + S::real(0.5))).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_derivative(n, x);
            let step = p / dp;
            x = x - step;
            if step.abs() <= S::epsilon() * S::real(4.0) {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(n, x);
        let w = S::real(2.0) / ((S::one() - x * x) * dp * dp);
        // Map [-1, 1] -> [0, 1].
        nodes[i] = (x + S::one()) * S::real(0.5);
        weights[i] = w * S::real(0.5);
    }
    // Ascending nodes for a deterministic summation order.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| nodes[a].partial_cmp(&nodes[b]).unwrap());
    let nodes_sorted = order.iter().map(|&i| nodes[i]).collect();
    let weights_sorted = order.iter().map(|&i| weights[i]).collect();
    (nodes_sorted, weights_sorted)
}
