//! Per-period utility `u`, its inverse `phi`, the marginal cost of utility
//! `phi'`, and `rho`, the inverse of `phi'`.
//!
//! Bounded families are normalized so that `u(0) = 0`. The logarithmic family
//! has `u(0) = -inf`, which is represented by [`Utility::NegInfinity`] rather
//! than a float.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum DomainError {
    #[error("consumption must be non-negative, got {0}")]
    NegativeConsumption(f64),
    #[error("utility {value} is below the floor {floor}")]
    BelowFloor { value: f64, floor: f64 },
    #[error("marginal cost must be {requirement}, got {value}")]
    MarginalCost { value: f64, requirement: &'static str },
    #[error("utility exponent must lie in (0, 1), got {0}")]
    Exponent(f64),
    #[error("value is not finite")]
    NotFinite,
}

/// Closed-form utility families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "param", rename_all = "snake_case", deny_unknown_fields)]
pub enum UtilitySpec<S> {
    /// `u(c) = sqrt(c)`, so `phi(v) = v^2`.
    Sqrt,
    /// `u(c) = ln c`.
    Log,
    /// `u(c) = c^gamma` with `gamma` in `(0, 1)`.
    Isoelastic(S),
}

/// A utility level, possibly minus infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Utility<S> {
    Finite(S),
    NegInfinity,
}

impl<S: Real> Utility<S> {
    pub fn finite(self) -> Option<S> {
        match self {
            Utility::Finite(v) => Some(v),
            Utility::NegInfinity => None,
        }
    }
}

impl<S: Real> UtilitySpec<S> {
    pub fn check(&self) -> Result<(), DomainError> {
        if let UtilitySpec::Isoelastic(g) = *self {
            if !(g > S::zero() && g < S::one()) {
                return Err(DomainError::Exponent(g.as_f64()));
            }
        }
        Ok(())
    }

    /// Power of the bounded family, `None` for `Log`.
    fn exponent(&self) -> Option<S> {
        match *self {
            UtilitySpec::Sqrt => Some(S::lit(0.5)),
            UtilitySpec::Isoelastic(g) => Some(g),
            UtilitySpec::Log => None,
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.exponent().is_some()
    }

    /// `u(0)` for bounded families.
    pub fn floor(&self) -> Option<S> {
        self.exponent().map(|_| S::zero())
    }

    /// Right derivative `phi'_+(0)`; zero for every bounded family here, since
    /// all of them satisfy `u'_+(0) = inf`.
    pub fn phi_prime_at_floor(&self) -> Option<S> {
        self.exponent().map(|_| S::zero())
    }

    /// All supported families satisfy the Inada condition at zero.
    pub fn inada_at_zero(&self) -> bool {
        true
    }

    pub fn u(&self, c: S) -> Result<Utility<S>, DomainError> {
        if !c.is_finite() {
            return Err(DomainError::NotFinite);
        }
        if c < S::zero() {
            return Err(DomainError::NegativeConsumption(c.as_f64()));
        }
        Ok(match self.exponent() {
            Some(g) => Utility::Finite(if c == S::zero() { S::zero() } else { c.powf(g) }),
            None if c == S::zero() => Utility::NegInfinity,
            None => Utility::Finite(c.ln()),
        })
    }

    fn check_level(&self, v: S) -> Result<(), DomainError> {
        if !v.is_finite() {
            return Err(DomainError::NotFinite);
        }
        match self.floor() {
            Some(f) if v < f => Err(DomainError::BelowFloor {
                value: v.as_f64(),
                floor: f.as_f64(),
            }),
            _ => Ok(()),
        }
    }

    pub fn phi(&self, v: S) -> Result<S, DomainError> {
        self.check_level(v)?;
        Ok(self.phi_unchecked(v))
    }

    pub fn phi_prime(&self, v: S) -> Result<S, DomainError> {
        self.check_level(v)?;
        Ok(self.phi_prime_unchecked(v))
    }

    /// `rho(x) = (phi')^{-1}(x)` when `x >= phi'_+(0)`, the floor otherwise.
    pub fn rho(&self, x: S) -> Result<S, DomainError> {
        if !x.is_finite() {
            return Err(DomainError::NotFinite);
        }
        match self.exponent() {
            Some(g) => {
                if x < S::zero() {
                    return Err(DomainError::MarginalCost {
                        value: x.as_f64(),
                        requirement: "non-negative",
                    });
                }
                if x == S::zero() {
                    return Ok(S::zero());
                }
                // phi'(v) = v^{1/g - 1} / g
                Ok((g * x).powf(g / (S::one() - g)))
            }
            None => {
                if x <= S::zero() {
                    return Err(DomainError::MarginalCost {
                        value: x.as_f64(),
                        requirement: "positive",
                    });
                }
                Ok(x.ln())
            }
        }
    }

    /// `phi` without the floor check. Callers guarantee `v` is in range.
    #[inline]
    pub(crate) fn phi_unchecked(&self, v: S) -> S {
        match self.exponent() {
            Some(g) if g == S::lit(0.5) => v * v,
            Some(g) => v.max(S::zero()).powf(S::one() / g),
            None => v.exp(),
        }
    }

    #[inline]
    pub(crate) fn phi_prime_unchecked(&self, v: S) -> S {
        match self.exponent() {
            Some(g) if g == S::lit(0.5) => S::lit(2.0) * v,
            Some(g) => v.max(S::zero()).powf(S::one() / g - S::one()) / g,
            None => v.exp(),
        }
    }

    #[inline]
    pub(crate) fn phi_second_unchecked(&self, v: S) -> S {
        match self.exponent() {
            Some(g) if g == S::lit(0.5) => S::lit(2.0),
            Some(g) => {
                let a = S::one() / g;
                a * (a - S::one()) * v.max(S::zero()).powf(a - S::lit(2.0))
            }
            None => v.exp(),
        }
    }

    /// Convenience: `u(c)` as a finite number, erroring on the log sentinel.
    pub fn u_finite(&self, c: S) -> Result<S, DomainError> {
        self.u(c)?.finite().ok_or(DomainError::NotFinite)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const SQRT: UtilitySpec<f64> = UtilitySpec::Sqrt;
    const LOG: UtilitySpec<f64> = UtilitySpec::Log;

    #[test]
    fn u_examples() {
        assert_eq!(SQRT.u(4.0).unwrap(), Utility::Finite(2.0));
        assert_eq!(LOG.u(1.0).unwrap(), Utility::Finite(0.0));
        assert_eq!(SQRT.u(0.0).unwrap(), Utility::Finite(0.0));
        assert_eq!(LOG.u(0.0).unwrap(), Utility::NegInfinity);
        assert!(matches!(SQRT.u(-1.0), Err(DomainError::NegativeConsumption(_))));
    }

    #[test]
    fn phi_examples() {
        assert_eq!(SQRT.phi(2.0).unwrap(), 4.0);
        assert_eq!(LOG.phi(0.0).unwrap(), 1.0);
        assert_eq!(SQRT.phi(1.5).unwrap(), 2.25);
        assert!(matches!(SQRT.phi(-0.1), Err(DomainError::BelowFloor { .. })));
        // any real is in range for log
        assert!(LOG.phi(-50.0).is_ok());
    }

    #[test]
    fn phi_prime_examples() {
        assert_eq!(SQRT.phi_prime(1.0).unwrap(), 2.0);
        assert_relative_eq!(LOG.phi_prime(3f64.ln()).unwrap(), 3.0, max_relative = 1e-15);
        assert_eq!(SQRT.phi_prime(0.0).unwrap(), 0.0);
        assert_eq!(SQRT.phi_prime_at_floor(), Some(0.0));
        assert_eq!(LOG.phi_prime_at_floor(), None);
    }

    #[test]
    fn rho_examples() {
        assert_eq!(SQRT.rho(2.0).unwrap(), 1.0);
        assert_eq!(SQRT.rho(0.0).unwrap(), 0.0);
        assert_relative_eq!(LOG.rho(3.0).unwrap(), 3f64.ln());
        assert!(SQRT.rho(-1.0).is_err());
        assert!(LOG.rho(0.0).is_err());
    }

    #[test]
    fn isoelastic_matches_sqrt_at_one_half() {
        let iso = UtilitySpec::Isoelastic(0.5);
        for v in [0.1, 1.0, 3.7] {
            assert_relative_eq!(iso.phi(v).unwrap(), SQRT.phi(v).unwrap(), max_relative = 1e-14);
            assert_relative_eq!(
                iso.phi_prime(v).unwrap(),
                SQRT.phi_prime(v).unwrap(),
                max_relative = 1e-14
            );
        }
        assert!(UtilitySpec::Isoelastic(1.0).check().is_err());
        assert!(UtilitySpec::Isoelastic(0.0).check().is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let s: UtilitySpec<f32> = UtilitySpec::Sqrt;
        assert_eq!(s.phi(1.5).unwrap(), 2.25f32);
        assert_eq!(s.rho(2.0).unwrap(), 1.0f32);
    }

    fn specs() -> impl Strategy<Value = UtilitySpec<f64>> {
        prop_oneof![
            Just(UtilitySpec::Sqrt),
            Just(UtilitySpec::Log),
            (0.1f64..0.9).prop_map(UtilitySpec::Isoelastic),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn phi_inverts_u(spec in specs(), logc in -6.0f64..6.0) {
            let c = 10f64.powf(logc);
            let v = spec.u_finite(c).unwrap();
            let back = spec.phi(v).unwrap();
            prop_assert!((back - c).abs() <= 1e-12 * c);
        }

        #[test]
        fn rho_inverts_phi_prime(spec in specs(), v in 0.01f64..20.0) {
            let v = if spec.is_bounded() { v } else { v - 10.0 };
            let back = spec.rho(spec.phi_prime(v).unwrap()).unwrap();
            prop_assert!((back - v).abs() <= 1e-10 * v.abs().max(1.0));
        }

        #[test]
        fn phi_is_strictly_convex(spec in specs(), a in 0.01f64..10.0, gap in 0.01f64..5.0) {
            let (v1, v2) = (a, a + gap);
            let mid = spec.phi((v1 + v2) / 2.0).unwrap();
            let chord = (spec.phi(v1).unwrap() + spec.phi(v2).unwrap()) / 2.0;
            prop_assert!(mid < chord);
        }

        #[test]
        fn phi_prime_matches_central_difference(spec in specs(), v in 0.05f64..4.0) {
            let h = 1e-5;
            let fd = (spec.phi(v + h).unwrap() - spec.phi(v - h).unwrap()) / (2.0 * h);
            let exact = spec.phi_prime(v).unwrap();
            prop_assert!((exact - fd).abs() <= 1e-6 * exact.abs().max(1.0));
        }

        #[test]
        fn u_strictly_increasing(spec in specs(), c in 0.001f64..100.0, dc in 0.001f64..10.0) {
            prop_assert!(spec.u_finite(c + dc).unwrap() > spec.u_finite(c).unwrap());
        }
    }
}
