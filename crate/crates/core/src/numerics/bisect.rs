//! Root bracketing and bisection for monotone scalar equations.

use crate::scalar::Scalar;

/// Finds the root of a nondecreasing function `f` on `[0, inf)` with
/// `f(0) <= 0`, by doubling an upper bracket from 1 and bisecting.
///
/// Returns `None` when no sign change is found below `max_upper` (the
/// function saturates below zero). Stops when the bracket width falls below
/// `width` or the midpoint can no longer be distinguished from an endpoint.
pub fn increasing_root<S: Scalar>(f: impl Fn(S) -> S, width: S, max_upper: S) -> Option<S> {
    let zero = S::zero();
    if f(zero) > zero {
        // Monotonicity puts the root at or below 0; 0 is the nonnegative root.
        return Some(zero);
    }
    let mut hi = S::one();
    while f(hi) < zero {
        hi = hi + hi;
        if hi > max_upper {
            return None;
        }
    }
    let mut lo = zero;
    loop {
        let mid = (lo + hi) * S::real(0.5);
        if mid <= lo || mid >= hi {
            return Some(mid); // bracket no longer splits in this precision
        }
        if f(mid) < zero {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= width {
            return Some((lo + hi) * S::real(0.5));
        }
    }
}
