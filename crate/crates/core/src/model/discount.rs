use serde::{Deserialize, Serialize};

use super::ModelConfig;
use crate::scalar::Real;

/// Random-discounting view of the agent's preferences: from date `t` on, type
/// `n` discounts date `t+s` by `beta_n * delta_bar^s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscountRepresentation<S> {
    /// Agent-belief mean discount factor.
    pub delta_bar: S,
    pub betas: Vec<S>,
    /// Occurrence probabilities (firm beliefs).
    pub probabilities: Vec<S>,
    /// Whether the most patient type has `beta > 1`, outside the
    /// present-bias range of quasi-hyperbolic discounting.
    pub top_beta_exceeds_one: bool,
}

impl<S: Real> DiscountRepresentation<S> {
    pub fn new(config: &ModelConfig<S>) -> Self {
        let delta_bar = config.mean_delta_agent();
        let betas: Vec<S> = config.deltas.iter().map(|&d| d / delta_bar).collect();
        let top_beta_exceeds_one = betas.last().is_some_and(|&b| b > S::one());
        Self { delta_bar, betas, probabilities: config.p.clone(), top_beta_exceeds_one }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardChoice {
    Immediate,
    Delayed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChoiceReversal<S> {
    /// Probability of taking the earlier reward when it is available now.
    pub prob_immediate_now: S,
    /// Choice when both rewards lie `delay >= 1` periods ahead.
    pub choice_deferred: RewardChoice,
}

/// Choice between `immediate` utility at `t` and `delayed` utility at `t+1`
/// (now), and the same pair shifted `delay` periods into the future.
///
/// Now, the agent has learned `delta_t` and takes the earlier reward iff
/// `immediate > delta_t * delayed`. Deferred, both rewards carry the common
/// factor `delta_t * delta_bar^(delay-1)`, so the comparison is
/// `immediate` against `delta_bar * delayed`.
pub fn choice_reversal<S: Real>(
    config: &ModelConfig<S>,
    immediate: S,
    delayed: S,
    delay: usize,
) -> ChoiceReversal<S> {
    debug_assert!(delay >= 1);
    let prob_immediate_now = config
        .deltas
        .iter()
        .zip(&config.p)
        .filter(|(&d, _)| immediate > d * delayed)
        .fold(S::zero(), |a, (_, &p)| a + p);
    let choice_deferred = if immediate > config.mean_delta_agent() * delayed {
        RewardChoice::Immediate
    } else {
        RewardChoice::Delayed
    };
    ChoiceReversal { prob_immediate_now, choice_deferred }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Income;
    use crate::utility::UtilitySpec;
    use proptest::prelude::*;

    fn config(p: [f64; 2], q: [f64; 2]) -> ModelConfig<f64> {
        ModelConfig {
            horizon: 3,
            deltas: vec![0.4, 0.9],
            p: p.to_vec(),
            q: q.to_vec(),
            rate: 1.0,
            income: Income::TotalNpv(3.0),
            utility: UtilitySpec::Sqrt,
        }
    }

    #[test]
    fn representation_example() {
        let r = DiscountRepresentation::new(&config([0.75, 0.25], [0.75, 0.25]));
        assert!((r.delta_bar - 0.525).abs() < 1e-15);
        assert!((r.betas[0] - 0.4 / 0.525).abs() < 1e-15);
        assert!((r.betas[1] - 0.9 / 0.525).abs() < 1e-15);
        assert!(r.top_beta_exceeds_one);
    }

    #[test]
    fn reversal_examples() {
        let c = choice_reversal(&config([0.75, 0.25], [0.75, 0.25]), 50.0, 100.0, 3);
        assert_eq!(c.prob_immediate_now, 0.75);
        assert_eq!(c.choice_deferred, RewardChoice::Delayed);

        let c = choice_reversal(&config([1.0, 0.0], [0.75, 0.25]), 50.0, 100.0, 1);
        assert_eq!(c.prob_immediate_now, 1.0);
        assert_eq!(c.choice_deferred, RewardChoice::Delayed);

        let c = choice_reversal(&config([1.0, 0.0], [0.99, 0.01]), 50.0, 100.0, 1);
        assert_eq!(c.choice_deferred, RewardChoice::Immediate);
    }

    proptest! {
        #[test]
        fn betas_average_to_one(d1 in 0.05f64..1.0, gap in 0.01f64..1.0, q2 in 0.01f64..0.99) {
            let mut c = config([0.5, 0.5], [1.0 - q2, q2]);
            c.deltas = vec![d1, d1 + gap];
            let r = DiscountRepresentation::new(&c);
            let avg: f64 = r.betas.iter().zip(&c.q).map(|(b, q)| b * q).sum();
            prop_assert!((avg - 1.0).abs() <= 1e-14);
            prop_assert!(r.betas[0] < r.betas[1]);
        }
    }
}
