//! Utility functions mapping SINR to data rate.
//!
//! Algorithms only ever touch a utility through the [`Utility`] trait: the
//! value at a given SINR, the maximum value reachable below an SINR cap, and
//! the smallest SINR reaching a target value. Every utility is zero below an
//! SINR of 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest step table accepted at load time.
pub const MAX_STEPS: usize = 10_000;

pub trait Utility {
    /// Value at SINR `gamma`.
    fn value(&self, gamma: f64) -> f64;

    /// Value at `gamma_cap`, the SINR a link reaches alone at full power.
    /// `gamma_cap` may be `f64::INFINITY`; unbounded families then fail with
    /// [`Error::Unbounded`].
    fn max_utility(&self, gamma_cap: f64) -> Result<f64>;

    /// Smallest SINR whose value is at least `target`, or `None` when no SINR
    /// up to `gamma_cap` gets there.
    fn inverse_threshold(&self, target: f64, gamma_cap: f64) -> Result<Option<f64>>;
}

impl<U: Utility + ?Sized> Utility for &U {
    fn value(&self, gamma: f64) -> f64 {
        (**self).value(gamma)
    }

    fn max_utility(&self, gamma_cap: f64) -> Result<f64> {
        (**self).max_utility(gamma_cap)
    }

    fn inverse_threshold(&self, target: f64, gamma_cap: f64) -> Result<Option<f64>> {
        (**self).inverse_threshold(target, gamma_cap)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum UtilitySpec {
    /// `steps[i] = (gamma_i, value_i)`; the value of the largest `gamma_i <= gamma`.
    Step { steps: Vec<(f64, f64)> },
    /// `scale * log2(1 + gamma)` from `cutoff` on, zero below.
    Shannon { scale: f64, cutoff: f64 },
}

impl UtilitySpec {
    pub fn step(steps: Vec<(f64, f64)>) -> Result<Self> {
        let u = UtilitySpec::Step { steps };
        u.validate()?;
        Ok(u)
    }

    pub fn shannon(scale: f64, cutoff: f64) -> Result<Self> {
        let u = UtilitySpec::Shannon { scale, cutoff };
        u.validate()?;
        Ok(u)
    }

    /// A single step: value 1 from `beta` on.
    pub fn threshold(beta: f64) -> Result<Self> {
        Self::step(vec![(beta, 1.0)])
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            UtilitySpec::Step { steps } => {
                if steps.is_empty() {
                    return Err(Error::InvalidUtility("step table is empty".into()));
                }
                if steps.len() > MAX_STEPS {
                    return Err(Error::InvalidUtility(format!(
                        "{} steps exceeds the limit of {MAX_STEPS}",
                        steps.len()
                    )));
                }
                if !(steps[0].0 >= 1.0) {
                    return Err(Error::InvalidUtility(format!(
                        "first step at SINR {} is below 1",
                        steps[0].0
                    )));
                }
                for (i, &(g, v)) in steps.iter().enumerate() {
                    if !g.is_finite() || !v.is_finite() || v < 0.0 {
                        return Err(Error::InvalidUtility(format!("step {i} = ({g}, {v})")));
                    }
                    if i > 0 {
                        let (pg, pv) = steps[i - 1];
                        if g <= pg {
                            return Err(Error::InvalidUtility(format!(
                                "step SINRs must increase strictly (step {i})"
                            )));
                        }
                        if v < pv {
                            return Err(Error::InvalidUtility(format!(
                                "step values must not decrease (step {i})"
                            )));
                        }
                    }
                }
                Ok(())
            }
            UtilitySpec::Shannon { scale, cutoff } => {
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(Error::InvalidUtility(format!("scale {scale} must be > 0")));
                }
                if !(cutoff.is_finite() && *cutoff >= 1.0) {
                    return Err(Error::InvalidUtility(format!("cutoff {cutoff} must be >= 1")));
                }
                Ok(())
            }
        }
    }
}

impl Utility for UtilitySpec {
    fn value(&self, gamma: f64) -> f64 {
        match self {
            UtilitySpec::Step { steps } => {
                let k = steps.partition_point(|&(g, _)| g <= gamma);
                if k == 0 {
                    0.0
                } else {
                    steps[k - 1].1
                }
            }
            UtilitySpec::Shannon { scale, cutoff } => {
                if gamma >= *cutoff {
                    scale * (1.0 + gamma).log2()
                } else {
                    0.0
                }
            }
        }
    }

    fn max_utility(&self, gamma_cap: f64) -> Result<f64> {
        match self {
            UtilitySpec::Step { .. } => Ok(self.value(gamma_cap)),
            UtilitySpec::Shannon { .. } if gamma_cap == f64::INFINITY => Err(Error::Unbounded),
            UtilitySpec::Shannon { .. } => Ok(self.value(gamma_cap)),
        }
    }

    fn inverse_threshold(&self, target: f64, gamma_cap: f64) -> Result<Option<f64>> {
        if !(target > 0.0) {
            return Err(Error::NonPositiveTarget(target));
        }
        let gamma = match self {
            UtilitySpec::Step { steps } => {
                let k = steps.partition_point(|&(_, v)| v < target);
                match steps.get(k) {
                    Some(&(g, _)) => g,
                    None => return Ok(None),
                }
            }
            UtilitySpec::Shannon { scale, cutoff } => ((target / scale).exp2() - 1.0).max(*cutoff),
        };
        Ok((gamma <= gamma_cap).then_some(gamma))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_steps() -> UtilitySpec {
        UtilitySpec::step(vec![(1.0, 0.5), (4.0, 2.0)]).unwrap()
    }

    #[test]
    fn max_utility_reads() {
        let u = two_steps();
        assert_eq!(u.max_utility(10.0).unwrap(), 2.0);
        assert_eq!(u.max_utility(2.0).unwrap(), 0.5);
        assert_eq!(u.max_utility(f64::INFINITY).unwrap(), 2.0);
        let s = UtilitySpec::shannon(1.0, 1.0).unwrap();
        assert!((s.max_utility(3.0).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn shannon_unbounded_under_infinite_cap() {
        let s = UtilitySpec::shannon(1.0, 1.0).unwrap();
        assert!(matches!(s.max_utility(f64::INFINITY), Err(Error::Unbounded)));
    }

    #[test]
    fn inverse_queries() {
        let u = two_steps();
        assert_eq!(u.inverse_threshold(1.0, f64::INFINITY).unwrap(), Some(4.0));
        assert_eq!(u.inverse_threshold(0.5, f64::INFINITY).unwrap(), Some(1.0));
        let s = UtilitySpec::shannon(1.0, 1.0).unwrap();
        assert_eq!(s.inverse_threshold(2.0, f64::INFINITY).unwrap(), Some(3.0));
        let single = UtilitySpec::step(vec![(1.0, 0.5)]).unwrap();
        assert_eq!(single.inverse_threshold(0.6, f64::INFINITY).unwrap(), None);
    }

    #[test]
    fn inverse_respects_cap() {
        let u = two_steps();
        assert_eq!(u.inverse_threshold(1.0, 3.9).unwrap(), None);
        let s = UtilitySpec::shannon(1.0, 1.0).unwrap();
        assert_eq!(s.inverse_threshold(2.0, 2.0).unwrap(), None);
    }

    #[test]
    fn shannon_inverse_clamps_to_cutoff() {
        let s = UtilitySpec::shannon(1.0, 7.0).unwrap();
        assert_eq!(s.inverse_threshold(0.1, f64::INFINITY).unwrap(), Some(7.0));
        assert_eq!(s.value(6.9), 0.0);
    }

    #[test]
    fn nonpositive_target_rejected() {
        assert!(matches!(
            two_steps().inverse_threshold(0.0, 10.0),
            Err(Error::NonPositiveTarget(_))
        ));
    }

    #[test]
    fn zero_below_one() {
        assert_eq!(two_steps().value(0.99), 0.0);
        assert_eq!(UtilitySpec::shannon(3.0, 1.0).unwrap().value(0.5), 0.0);
    }

    #[test]
    fn rejects_malformed_tables() {
        assert!(UtilitySpec::step(vec![]).is_err());
        assert!(UtilitySpec::step(vec![(0.5, 1.0)]).is_err());
        assert!(UtilitySpec::step(vec![(1.0, 2.0), (2.0, 1.0)]).is_err());
        assert!(UtilitySpec::step(vec![(2.0, 1.0), (2.0, 3.0)]).is_err());
        assert!(UtilitySpec::step(vec![(1.0, 1.0); MAX_STEPS + 1]).is_err());
        assert!(UtilitySpec::shannon(0.0, 1.0).is_err());
        assert!(UtilitySpec::shannon(1.0, 0.5).is_err());
    }

    #[test]
    fn json_shape() {
        let u: UtilitySpec =
            serde_json::from_str(r#"{"type":"step","steps":[[1,0.5],[4,2.0]]}"#).unwrap();
        assert_eq!(u, two_steps());
        let s: UtilitySpec =
            serde_json::from_str(r#"{"type":"shannon","scale":1,"cutoff":1}"#).unwrap();
        assert_eq!(s, UtilitySpec::shannon(1.0, 1.0).unwrap());
    }

    fn step_table() -> impl Strategy<Value = UtilitySpec> {
        prop::collection::vec((0.01f64..5.0, 0.0f64..3.0), 1..12).prop_map(|incs| {
            let mut g = 1.0;
            let mut v = 0.0;
            let steps = incs
                .into_iter()
                .enumerate()
                .map(|(i, (dg, dv))| {
                    if i > 0 {
                        g += dg;
                    }
                    v += dv;
                    (g, v)
                })
                .collect();
            UtilitySpec::step(steps).unwrap()
        })
    }

    proptest! {
        #[test]
        fn step_round_trip(u in step_table(), frac in 0.001f64..1.0) {
            let top = u.max_utility(f64::INFINITY).unwrap();
            prop_assume!(top > 0.0);
            let target = frac * top;
            let g = u.inverse_threshold(target, f64::INFINITY).unwrap().unwrap();
            prop_assert!(g >= 1.0);
            prop_assert!(u.value(g) >= target);
            // every representable SINR just below the answer falls short
            let below = f64::from_bits(g.to_bits() - 1);
            prop_assert!(u.value(below) < target);
        }

        #[test]
        fn shannon_round_trip(scale in 0.1f64..10.0, cutoff in 1.0f64..20.0, target in 0.001f64..50.0) {
            let u = UtilitySpec::shannon(scale, cutoff).unwrap();
            let g = u.inverse_threshold(target, f64::INFINITY).unwrap().unwrap();
            prop_assert!(g >= 1.0);
            prop_assert!(u.value(g) >= target * (1.0 - 1e-9));
            let below = g * (1.0 - 1e-9);
            prop_assert!(u.value(below) < target * (1.0 + 1e-9));
        }

        #[test]
        fn inverse_is_monotone(u in step_table(), a in 0.001f64..1.0, b in 0.001f64..1.0) {
            let top = u.max_utility(f64::INFINITY).unwrap();
            prop_assume!(top > 0.0);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let g_lo = u.inverse_threshold(lo * top, f64::INFINITY).unwrap().unwrap();
            let g_hi = u.inverse_threshold(hi * top, f64::INFINITY).unwrap().unwrap();
            prop_assert!(g_lo <= g_hi);
        }

        #[test]
        fn nondecreasing_in_gamma(u in step_table(), x in 0.0f64..40.0, y in 0.0f64..40.0) {
            let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
            prop_assert!(u.value(lo) <= u.value(hi));
        }
    }
}
