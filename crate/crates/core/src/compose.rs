//! Classic composition theorems.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::kahan_sum;
use crate::params::{is_homogeneous, PrivacyParams};

/// Which composition theorem turns per-mechanism guarantees into a guarantee
/// for the whole sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[non_exhaustive]
pub enum CompositionTheorem {
    /// Sum the ε's and δ's.
    Simple,
    /// Advanced composition for k identical `(ε, δ)` mechanisms, with slack δ′.
    Advanced { delta_slack: f64 },
}

impl CompositionTheorem {
    pub fn advanced(delta_slack: f64) -> Result<Self> {
        check_slack(delta_slack)?;
        Ok(Self::Advanced { delta_slack })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Simple => "simple",
            Self::Advanced { .. } => "advanced",
        }
    }

    /// Whether the theorem applies to the given guarantees.
    pub fn is_compatible(&self, guarantees: &[PrivacyParams]) -> bool {
        match self {
            Self::Simple => true,
            Self::Advanced { .. } => is_homogeneous(guarantees),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Simple => Ok(()),
            Self::Advanced { delta_slack } => check_slack(delta_slack),
        }
    }
}

fn check_slack(delta_slack: f64) -> Result<()> {
    if delta_slack > 0.0 && delta_slack < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidSlack(delta_slack))
    }
}

/// `(Σ ε_i, Σ δ_i)` without clamping δ.
pub fn simple_sum(guarantees: &[PrivacyParams]) -> (f64, f64) {
    let eps = guarantees.iter().map(|g| g.epsilon()).sum();
    let delta = kahan_sum(guarantees.iter().map(|g| g.delta()));
    (eps, delta)
}

/// Simple composition: `(Σ ε_i, min(1, Σ δ_i))`. An empty sequence composes to `(0, 0)`.
pub fn simple_compose(guarantees: &[PrivacyParams]) -> PrivacyParams {
    let (eps, delta) = simple_sum(guarantees);
    PrivacyParams::clamped(eps, delta)
}

/// Advanced composition of k identical `(ε, δ)` mechanisms:
/// `ε′ = √(2k ln(1/δ′)) ε + k ε (e^ε − 1)` and `δ_total = k δ + δ′`.
pub fn advanced_compose(guarantees: &[PrivacyParams], delta_slack: f64) -> Result<PrivacyParams> {
    check_slack(delta_slack)?;
    if !is_homogeneous(guarantees) {
        return Err(Error::HeterogeneousInput);
    }
    let Some(g) = guarantees.first() else {
        return Ok(PrivacyParams::ZERO);
    };
    let k = guarantees.len() as f64;
    let eps = g.epsilon();
    let eps_total = (2.0 * k * (1.0 / delta_slack).ln()).sqrt() * eps + k * eps * eps.exp_m1();
    Ok(PrivacyParams::clamped(eps_total, k * g.delta() + delta_slack))
}

/// Composes with the chosen theorem. An empty sequence composes to `(0, 0)`
/// under every theorem.
pub fn compose(guarantees: &[PrivacyParams], theorem: &CompositionTheorem) -> Result<PrivacyParams> {
    if guarantees.is_empty() {
        return Ok(PrivacyParams::ZERO);
    }
    match *theorem {
        CompositionTheorem::Simple => Ok(simple_compose(guarantees)),
        CompositionTheorem::Advanced { delta_slack } => {
            check_slack(delta_slack)?;
            if !is_homogeneous(guarantees) {
                return Err(Error::IncompatibleTheorem {
                    theorem: "advanced",
                    reason: "guarantees are not identical",
                });
            }
            advanced_compose(guarantees, delta_slack)
        }
    }
}

/// The ε-smaller of simple composition and (when the sequence is homogeneous)
/// advanced composition with slack δ′; ties go to the smaller δ.
pub fn best_classic_bound(guarantees: &[PrivacyParams], delta_slack: f64) -> Result<PrivacyParams> {
    check_slack(delta_slack)?;
    let simple = simple_compose(guarantees);
    if guarantees.is_empty() || !is_homogeneous(guarantees) {
        return Ok(simple);
    }
    let advanced = advanced_compose(guarantees, delta_slack)?;
    let pick_advanced = advanced.epsilon() < simple.epsilon()
        || (advanced.epsilon() == simple.epsilon() && advanced.delta() < simple.delta());
    Ok(if pick_advanced { advanced } else { simple })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn p(e: f64, d: f64) -> PrivacyParams {
        PrivacyParams::new(e, d).unwrap()
    }

    #[test]
    fn simple_examples() {
        assert_eq!(simple_compose(&[]), PrivacyParams::ZERO);
        let r = simple_compose(&[p(0.1, 1e-6); 3]);
        assert_relative_eq!(r.epsilon(), 0.3, epsilon = 1e-15);
        assert_relative_eq!(r.delta(), 3e-6, epsilon = 1e-20);
        let r = simple_compose(&[p(0.1, 0.0), p(0.2, 1e-6)]);
        assert_relative_eq!(r.epsilon(), 0.3, epsilon = 1e-15);
        assert_eq!(r.delta(), 1e-6);
    }

    #[test]
    fn simple_clamps_delta() {
        assert_eq!(simple_compose(&[p(0.0, 0.6), p(0.0, 0.7)]).delta(), 1.0);
    }

    // Expected values from direct high-precision evaluation of the advanced formula.
    #[test]
    fn advanced_examples() {
        let r = advanced_compose(&[p(0.0, 0.0); 10], 1e-5).unwrap();
        assert_eq!(r.epsilon(), 0.0);
        assert_eq!(r.delta(), 1e-5);

        let r = advanced_compose(&[p(0.1, 1e-8); 100], 1e-5).unwrap();
        assert_relative_eq!(r.epsilon(), 5.850_235_092_944_558, epsilon = 1e-12);
        assert_relative_eq!(r.delta(), 1.1e-5, epsilon = 1e-18);

        let r = advanced_compose(&[p(0.1, 0.0); 10], 1e-6).unwrap();
        assert_relative_eq!(r.epsilon(), 1.767_429_054_344_757_7, epsilon = 1e-12);
        assert_eq!(r.delta(), 1e-6);
    }

    #[test]
    fn advanced_errors() {
        assert_eq!(
            advanced_compose(&[p(0.1, 0.0), p(0.2, 0.0)], 1e-5),
            Err(Error::HeterogeneousInput)
        );
        assert_eq!(advanced_compose(&[p(0.1, 0.0)], 0.0), Err(Error::InvalidSlack(0.0)));
        assert_eq!(advanced_compose(&[p(0.1, 0.0)], 1.0), Err(Error::InvalidSlack(1.0)));
        assert!(CompositionTheorem::advanced(-1.0).is_err());
    }

    #[test]
    fn compose_dispatch() {
        assert_eq!(
            compose(&[p(0.5, 1e-6)], &CompositionTheorem::Simple).unwrap(),
            p(0.5, 1e-6)
        );
        let adv = CompositionTheorem::advanced(1e-5).unwrap();
        let seq = [p(0.1, 0.0); 100];
        assert_eq!(compose(&seq, &adv).unwrap(), advanced_compose(&seq, 1e-5).unwrap());
        assert!(matches!(
            compose(&[p(0.1, 0.0), p(0.3, 0.0)], &adv),
            Err(Error::IncompatibleTheorem { .. })
        ));
        assert_eq!(compose(&[], &adv).unwrap(), PrivacyParams::ZERO);
    }

    #[test]
    fn best_classic_examples() {
        let r = best_classic_bound(&[p(0.5, 0.0); 2], 1e-6).unwrap();
        assert_eq!(r, simple_compose(&[p(0.5, 0.0); 2]));
        assert_relative_eq!(
            advanced_compose(&[p(0.5, 0.0); 2], 1e-6).unwrap().epsilon(),
            4.365_643_459_549_967,
            epsilon = 1e-12
        );

        let r = best_classic_bound(&[p(0.01, 0.0); 365], 1e-5).unwrap();
        assert_relative_eq!(r.epsilon(), 0.953_440_198_154_231_5, epsilon = 1e-12);
        assert_relative_eq!(r.delta(), 1e-5);

        assert_eq!(best_classic_bound(&[p(0.3, 1e-7)], 1e-6).unwrap(), p(0.3, 1e-7));
        assert_eq!(best_classic_bound(&[p(0.0, 1e-7)], 1e-6).unwrap(), p(0.0, 1e-7));
    }

    fn arb_params() -> impl Strategy<Value = PrivacyParams> {
        (0.0..3.0f64, 0.0..1e-3f64).prop_map(|(e, d)| p(e, d))
    }

    proptest! {
        #[test]
        fn simple_is_additive_and_permutation_invariant(
            a in prop::collection::vec(arb_params(), 0..20),
            b in prop::collection::vec(arb_params(), 0..20),
        ) {
            let joined: Vec<_> = a.iter().chain(&b).copied().collect();
            let (e, d) = simple_sum(&joined);
            let (ea, da) = simple_sum(&a);
            let (eb, db) = simple_sum(&b);
            prop_assert!((e - (ea + eb)).abs() <= 1e-12);
            prop_assert!((d - (da + db)).abs() <= 1e-15);
            let mut reversed = joined.clone();
            reversed.reverse();
            let (er, dr) = simple_sum(&reversed);
            prop_assert!((e - er).abs() <= 1e-12 && (d - dr).abs() <= 1e-15);
        }

        #[test]
        fn best_classic_never_exceeds_simple(g in arb_params(), k in 1usize..400, slack in 1e-9..0.5f64) {
            let seq = vec![g; k];
            prop_assert!(best_classic_bound(&seq, slack).unwrap().epsilon() <= simple_compose(&seq).epsilon());
        }
    }

    #[test]
    fn advanced_is_monotone_on_grid() {
        let eps_grid = [0.0, 0.01, 0.1, 0.5, 1.0, 2.0];
        let delta_grid = [0.0, 1e-8, 1e-6, 1e-4];
        for k in 1..40 {
            for (ie, &e) in eps_grid.iter().enumerate() {
                for (id, &d) in delta_grid.iter().enumerate() {
                    let base = advanced_compose(&vec![p(e, d); k], 1e-5).unwrap();
                    let more_k = advanced_compose(&vec![p(e, d); k + 1], 1e-5).unwrap();
                    assert!(base.dominated_by(&more_k, 0.0));
                    if let Some(&e2) = eps_grid.get(ie + 1) {
                        let r = advanced_compose(&vec![p(e2, d); k], 1e-5).unwrap();
                        assert!(base.dominated_by(&r, 0.0));
                    }
                    if let Some(&d2) = delta_grid.get(id + 1) {
                        let r = advanced_compose(&vec![p(e, d2); k], 1e-5).unwrap();
                        assert!(base.dominated_by(&r, 0.0));
                    }
                }
            }
        }
    }
}
