//! Strategy-revision protocol: an entropy-regularized best response.
//!
//! Given strategy payoffs `p`, revising agents move toward the target
//! distribution that maximizes `p' z - eta * D(z || theta)` over the
//! mass-`M` simplex, where `D` is relative entropy against the anchor
//! weights `theta`. The population state then follows the mean dynamic
//! `x' = target(p) - x`. The value gap of that maximization is a storage
//! function: nonnegative, zero exactly at the target, and dissipative
//! along trajectories.

use crate::error::{Error, Result};
use crate::scalar::{dot, Scalar};

/// Entropy-regularized revision protocol with anchor weights `theta` (a
/// point of the mass-`M` simplex) and temperature `eta > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct RevisionProtocol<S> {
    weights: Vec<S>,
    temperature: S,
    mass: S,
}

impl<S: Scalar> RevisionProtocol<S> {
    /// `weights` must be finite and nonnegative with a positive sum; the
    /// protocol's population mass is that sum. `temperature` must be
    /// positive and finite.
    pub fn new(weights: Vec<S>, temperature: S) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("protocol weights", "need at least one strategy"));
        }
        let mut mass = S::zero();
        for (i, &v) in weights.iter().enumerate() {
            if !v.is_finite() || v < S::zero() {
                return Err(Error::invalid(
                    "protocol weights",
                    format!("entry {i} = {v} must be finite and nonnegative"),
                ));
            }
            mass = mass + v;
        }
        if !(mass > S::zero()) {
            return Err(Error::invalid("protocol weights", "must have positive total mass"));
        }
        if !temperature.is_finite() || !(temperature > S::zero()) {
            return Err(Error::invalid(
                "protocol temperature",
                format!("{temperature} must be positive and finite"),
            ));
        }
        Ok(RevisionProtocol {
            weights,
            temperature,
            mass,
        })
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn temperature(&self) -> S {
        self.temperature
    }

    pub fn mass(&self) -> S {
        self.mass
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    fn check_payoff(&self, p: &[S]) -> Result<()> {
        if p.len() != self.weights.len() {
            return Err(Error::Dimension {
                what: "payoff vector",
                expected: self.weights.len(),
                got: p.len(),
            });
        }
        for (i, &v) in p.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Domain {
                    detail: format!("payoff entry {i} = {v} is not finite"),
                });
            }
        }
        Ok(())
    }

    /// Largest scaled payoff over the anchor support, and the scaled
    /// payoffs themselves. The shift makes the subsequent exponentials
    /// overflow-free for any finite payoff magnitude.
    fn shifted_exponents(&self, p: &[S]) -> (S, Vec<S>) {
        let u: Vec<S> = p.iter().map(|&pi| pi / self.temperature).collect();
        let mut s = S::neg_infinity();
        for (ui, &th) in u.iter().zip(&self.weights) {
            if th > S::zero() && *ui > s {
                s = *ui;
            }
        }
        (s, u)
    }

    /// Target distribution: `target_i = M * theta_i * exp(p_i / eta) / Z`
    /// with `Z` normalizing the sum to `M`. Strategies outside the anchor
    /// support get exactly zero. Computed with a max-shift so arbitrarily
    /// large payoffs cannot overflow.
    pub fn target(&self, p: &[S]) -> Result<Vec<S>> {
        self.check_payoff(p)?;
        let (s, u) = self.shifted_exponents(p);
        let min_exp = S::min_positive_value().ln();
        let mut weighted = vec![S::zero(); self.weights.len()];
        let mut z = S::zero();
        for i in 0..self.weights.len() {
            let th = self.weights[i];
            if !(th > S::zero()) {
                continue;
            }
            let d = u[i] - s;
            let e = if d < min_exp { S::zero() } else { d.exp() };
            weighted[i] = th * e;
            z = z + weighted[i];
        }
        // z >= theta_argmax > 0: the shifted exponent is 0 at the argmax.
        Ok(weighted.into_iter().map(|v| self.mass * v / z).collect())
    }

    /// Mean revision dynamic `target(p) - x`, corrected to sum to zero by
    /// removing the numerical mass drift in proportion to each strategy's
    /// current mass (so empty strategies keep a nonnegative inflow).
    pub fn edm_field(&self, p: &[S], x: &[S]) -> Result<Vec<S>> {
        if x.len() != self.weights.len() {
            return Err(Error::Dimension {
                what: "population state",
                expected: self.weights.len(),
                got: x.len(),
            });
        }
        let t = self.target(p)?;
        let mut field: Vec<S> = t.iter().zip(x).map(|(&ti, &xi)| ti - xi).collect();
        let resid: S = field.iter().copied().sum();
        for (fi, &xi) in field.iter_mut().zip(x) {
            *fi = *fi - resid * xi / self.mass;
        }
        Ok(field)
    }

    /// Optimal value of the regularized best response,
    /// `max_z { p' z - eta D(z || theta) } = eta M (ln Z - ln M)`.
    fn response_value(&self, p: &[S]) -> S {
        let (s, u) = self.shifted_exponents(p);
        let min_exp = S::min_positive_value().ln();
        let mut z = S::zero();
        for i in 0..self.weights.len() {
            let th = self.weights[i];
            if !(th > S::zero()) {
                continue;
            }
            let d = u[i] - s;
            if d >= min_exp {
                z = z + th * d.exp();
            }
        }
        self.temperature * self.mass * (s + z.ln() - self.mass.ln())
    }

    /// Storage (value gap) `V(p) - (p' x - eta D(x || theta))`. Nonnegative,
    /// and zero exactly when `x = target(p)`.
    ///
    /// Requires `x` to put mass only where the anchor does; mass outside the
    /// anchor support makes the gap infinite and is reported as a domain
    /// error.
    pub fn storage(&self, p: &[S], x: &[S]) -> Result<S> {
        self.check_payoff(p)?;
        if x.len() != self.weights.len() {
            return Err(Error::Dimension {
                what: "population state",
                expected: self.weights.len(),
                got: x.len(),
            });
        }
        let d = relative_entropy(x, &self.weights)?;
        Ok(self.response_value(p) - (dot(p, x) - self.temperature * d))
    }
}

/// Relative entropy `sum_i a_i ln(a_i / b_i)` over the support of `a`,
/// for nonnegative vectors of equal mass. Fails when `a` has mass where
/// `b` has none (the divergence is infinite there).
pub fn relative_entropy<S: Scalar>(a: &[S], b: &[S]) -> Result<S> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            what: "relative entropy arguments",
            expected: b.len(),
            got: a.len(),
        });
    }
    let mut d = S::zero();
    for i in 0..a.len() {
        let ai = a[i];
        if ai > S::zero() {
            if !(b[i] > S::zero()) {
                return Err(Error::Domain {
                    detail: format!(
                        "relative entropy: mass {ai} at index {i} where the reference has none"
                    ),
                });
            }
            d = d + ai * (ai.ln() - b[i].ln());
        }
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn halves() -> RevisionProtocol<f64> {
        RevisionProtocol::new(vec![0.5, 0.5], 1.0).unwrap()
    }

    #[test]
    fn target_matches_direct_formula_for_moderate_payoffs() {
        let proto = RevisionProtocol::<f64>::new(vec![0.2, 0.3, 0.5], 0.7).unwrap();
        let p = [0.4f64, -1.1, 2.0];
        let t = proto.target(&p).unwrap();
        // Direct normalization without the max shift.
        let raw: Vec<f64> = (0..3)
            .map(|i| proto.weights()[i] * (p[i] / 0.7).exp())
            .collect();
        let z: f64 = raw.iter().sum();
        for i in 0..3 {
            assert_abs_diff_eq!(t[i], raw[i] / z, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(t.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn target_known_two_strategy_value() {
        // p = (ln 2, 0), eta = 1, uniform anchor: odds are 2:1.
        let proto = halves();
        let t = proto.target(&[2.0f64.ln(), 0.0]).unwrap();
        assert_abs_diff_eq!(t[0], 2.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(t[1], 1.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn zero_anchor_weight_means_zero_target_mass() {
        let proto = RevisionProtocol::new(vec![0.0, 0.4, 0.6], 1e-4).unwrap();
        let t = proto.target(&[1e9, 0.0, 0.0]).unwrap();
        assert_eq!(t[0], 0.0);
        assert_abs_diff_eq!(t.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn extreme_payoffs_do_not_overflow() {
        let proto = RevisionProtocol::<f64>::new(vec![0.25; 4], 1e-4).unwrap();
        let t = proto.target(&[1e6, 1e6 - 1.0, -1e6, 0.0]).unwrap();
        assert!(t.iter().all(|v| v.is_finite()));
        assert_abs_diff_eq!(t.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert!(t[0] > 0.999);
        assert_eq!(t[2], 0.0); // underflows cleanly, not NaN
    }

    #[test]
    fn edm_field_known_value_and_zero_sum() {
        let proto = halves();
        let f = proto.edm_field(&[2.0f64.ln(), 0.0], &[0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(f[0], 1.0 / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f[1], -1.0 / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f[0] + f[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn edm_field_keeps_empty_strategies_nonnegative() {
        let proto = RevisionProtocol::new(vec![0.3, 0.3, 0.4], 0.5).unwrap();
        let f = proto.edm_field(&[1.0, -2.0, 0.3], &[0.0, 0.6, 0.4]).unwrap();
        assert!(f[0] >= 0.0);
    }

    #[test]
    fn storage_known_value() {
        // V = ln(3/2), p'x = (ln 2)/2, D(x||theta) = 0.
        let proto = halves();
        let s = proto.storage(&[2.0f64.ln(), 0.0], &[0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(s, 1.5f64.ln() - 0.5 * 2.0f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn storage_vanishes_at_the_target() {
        let proto = RevisionProtocol::<f64>::new(vec![0.2, 0.3, 0.5], 1e-2).unwrap();
        let p = [0.02f64, 0.05, 0.01];
        let t = proto.target(&p).unwrap();
        let s = proto.storage(&p, &t).unwrap();
        assert!(s.abs() <= 1e-12, "storage at target = {s}");
    }

    #[test]
    fn storage_positive_away_from_target() {
        let proto = RevisionProtocol::new(vec![0.2, 0.3, 0.5], 1e-2).unwrap();
        let p = [0.02, 0.05, 0.01];
        let s = proto.storage(&p, &[0.5, 0.25, 0.25]).unwrap();
        assert!(s > 1e-6);
    }

    #[test]
    fn storage_rejects_mass_outside_anchor_support() {
        let proto = RevisionProtocol::new(vec![0.0, 1.0], 1.0).unwrap();
        assert!(matches!(
            proto.storage(&[0.0, 0.0], &[0.5, 0.5]),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn relative_entropy_known_values() {
        let d = relative_entropy(&[1.0, 0.0], &[0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(d, 2.0f64.ln(), epsilon = 1e-14);
        let z = relative_entropy(&[0.3, 0.7], &[0.3, 0.7]).unwrap();
        assert_abs_diff_eq!(z, 0.0, epsilon = 1e-15);
        assert!(relative_entropy(&[0.5, 0.5], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn constructor_rejects_bad_parameters() {
        assert!(RevisionProtocol::new(vec![], 1.0).is_err());
        assert!(RevisionProtocol::new(vec![0.0, 0.0], 1.0).is_err());
        assert!(RevisionProtocol::new(vec![-0.1, 1.1], 1.0).is_err());
        assert!(RevisionProtocol::new(vec![0.5, 0.5], 0.0).is_err());
        assert!(RevisionProtocol::new(vec![0.5, 0.5], f64::NAN).is_err());
    }

    #[test]
    fn mass_two_target_scales() {
        let proto = RevisionProtocol::new(vec![1.0, 1.0], 1.0).unwrap();
        assert_abs_diff_eq!(proto.mass(), 2.0, epsilon = 0.0);
        let t = proto.target(&[0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(t[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(t[1], 1.0, epsilon = 1e-14);
    }
}
