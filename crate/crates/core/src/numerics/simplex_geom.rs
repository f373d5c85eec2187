//! Geometry of the scaled probability simplex: Euclidean projection, seeded
//! sampling, and a deterministic low-discrepancy point sequence.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;

/// Euclidean projection of `v` onto `{ x >= 0 : sum x = mass }` by sorting
/// and thresholding.
pub fn project_simplex<S: Scalar>(v: &[S], mass: S) -> Vec<S> {
    let n = v.len();
    assert!(n > 0, "empty vector");
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = S::zero();
    let mut theta = (sorted[0] - mass).max(S::zero()); // fallback, overwritten below
    let mut found = false;
    for (k, &u) in sorted.iter().enumerate() {
        cumsum = cumsum + u;
        let kf = S::from_usize(k + 1).unwrap();
        let t = (cumsum - mass) / kf;
        if u - t > S::zero() {
            theta = t;
            found = true;
        } else {
            break;
        }
    }
    debug_assert!(found, "projection threshold always exists");
    let _ = found;
    v.iter().map(|&x| (x - theta).max(S::zero())).collect()
}

/// Uniform (flat Dirichlet) sample from the simplex of the given mass.
pub fn sample_simplex<S: Scalar>(rng: &mut ChaCha8Rng, n: usize, mass: S) -> Vec<S> {
    assert!(n > 0, "empty simplex");
    // -ln(U) exponentials normalized to the requested mass.
    let mut out: Vec<S> = (0..n)
        .map(|_| {
            let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            S::real(-u.ln())
        })
        .collect();
    let total: S = out.iter().copied().sum();
    for x in &mut out {
        *x = *x / total * mass;
    }
    out
}

/// First distinct primes, for the Kronecker directions.
const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// `index`-th point of a deterministic low-discrepancy sequence on the
/// simplex: a Kronecker lattice in the unit cube pushed through the
/// exponential map. Supports up to 16 coordinates.
pub fn low_discrepancy_simplex<S: Scalar>(index: usize, n: usize, mass: S) -> Vec<S> {
    assert!(n > 0 && n <= PRIMES.len(), "dimension out of range");
    let k = (index + 1) as f64;
    let mut out: Vec<S> = (0..n)
        .map(|j| {
            let alpha = (PRIMES[j] as f64).sqrt().fract();
            let u = (0.5 + k * alpha).fract().clamp(f64::MIN_POSITIVE, 1.0 - 1e-12);
            S::real(-(1.0 - u).ln())
        })
        .collect();
    let total: S = out.iter().copied().sum();
    for x in &mut out {
        *x = *x / total * mass;
    }
    out
}
