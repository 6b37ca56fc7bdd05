//! Problem instances: horizon, discount-factor grid, firm and agent beliefs,
//! interest rate, income and utility, together with the validation of the
//! modelling assumptions.

mod discount;
mod history;
mod policy;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{sum, Real};
use crate::utility::UtilitySpec;

pub use discount::{choice_reversal, ChoiceReversal, DiscountRepresentation, RewardChoice};
pub use history::TypeHistory;
pub use policy::Policy;

const PROBABILITY_SUM_TOL: f64 = 1e-12;

/// How the income stream is specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case", deny_unknown_fields)]
pub enum Income<S> {
    /// Date-1 value `I_T` of the whole stream.
    TotalNpv(S),
    /// Constant income `w` each period, so `I_T = sum_t w / R^{t-1}`.
    PerPeriod(S),
}

/// Which part of the analysis an instance is meant for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Section {
    /// Two types and a firm certain that the agent is impatient (`p_1 = 1`).
    DegenerateImpatience,
    /// Any number of types; firm beliefs with full support.
    General,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig<S> {
    pub horizon: usize,
    pub deltas: Vec<S>,
    /// Firm (correct) beliefs.
    pub p: Vec<S>,
    /// Agent beliefs.
    pub q: Vec<S>,
    pub rate: S,
    pub income: Income<S>,
    pub utility: UtilitySpec<S>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("horizon T={0} is too short: T >= 3 required")]
    HorizonTooShort(usize),
    #[error("N={0} types given: at least two discount factors required")]
    TooFewTypes(usize),
    #[error("discount factor {index} must be positive, got {value}")]
    NonPositiveDelta { index: usize, value: f64 },
    #[error("discount factors must be strictly increasing (violated at index {0})")]
    DeltasNotIncreasing(usize),
    #[error("{which} beliefs have {found} entries, expected {expected}")]
    BeliefLength { which: &'static str, expected: usize, found: usize },
    #[error("{which} belief {index} is negative ({value})")]
    NegativeProbability { which: &'static str, index: usize, value: f64 },
    #[error("{which} beliefs sum to {sum}, not 1")]
    ProbabilitySum { which: &'static str, sum: f64 },
    #[error("agent beliefs lack full support: q_{0} = 0")]
    AgentSupport(usize),
    #[error("FOSD violated at m={0}: agent must be weakly more optimistic than firms")]
    FosdViolated(usize),
    #[error("gross interest rate R={0} must be at least 1")]
    RateBelowOne(f64),
    #[error("income must be positive, got {0}")]
    NonPositiveIncome(f64),
    #[error("invalid utility: {0}")]
    Utility(#[from] crate::utility::DomainError),
    #[error("degenerate-impatience instances need exactly two types, got N={0}")]
    DegenerateNeedsTwoTypes(usize),
    #[error("p₁=1 required for degenerate-impatience instances (got p₁={0})")]
    DegenerateNeedsCertainImpatience(f64),
    #[error("degenerate-impatience instances need u(0) finite (bounded utility)")]
    DegenerateNeedsBoundedUtility,
    #[error("firm beliefs lack full support: p_{0} = 0")]
    FirmSupport(usize),
}

impl ConfigError {
    /// Stable numeric code per violated assumption.
    pub fn code(&self) -> u32 {
        match self {
            ConfigError::HorizonTooShort(_) => 1,
            ConfigError::TooFewTypes(_) => 2,
            ConfigError::NonPositiveDelta { .. } => 3,
            ConfigError::DeltasNotIncreasing(_) => 4,
            ConfigError::BeliefLength { .. } => 5,
            ConfigError::NegativeProbability { .. } => 6,
            ConfigError::ProbabilitySum { .. } => 7,
            ConfigError::AgentSupport(_) => 8,
            ConfigError::FosdViolated(_) => 9,
            ConfigError::RateBelowOne(_) => 10,
            ConfigError::NonPositiveIncome(_) => 11,
            ConfigError::Utility(_) => 12,
            ConfigError::DegenerateNeedsTwoTypes(_) => 13,
            ConfigError::DegenerateNeedsCertainImpatience(_) => 14,
            ConfigError::DegenerateNeedsBoundedUtility => 15,
            ConfigError::FirmSupport(_) => 16,
        }
    }
}

/// All violations found in one pass.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl ConfigErrors {
    pub fn contains(&self, pred: impl Fn(&ConfigError) -> bool) -> bool {
        self.0.iter().any(pred)
    }
}

/// A configuration that passed validation, with probabilities renormalized.
#[derive(Debug, Clone, PartialEq)]
pub struct Validated<S> {
    pub config: ModelConfig<S>,
    pub section: Option<Section>,
    pub notes: Vec<String>,
}

impl<S: Real> ModelConfig<S> {
    pub fn n_types(&self) -> usize {
        self.deltas.len()
    }

    /// `I_T`, the date-1 value of income.
    pub fn income_npv(&self) -> S {
        self.income_npv_at(self.horizon)
    }

    pub fn income_npv_at(&self, horizon: usize) -> S {
        match self.income {
            Income::TotalNpv(i) => i,
            Income::PerPeriod(w) => {
                let mut total = S::zero();
                let mut disc = S::one();
                for _ in 0..horizon {
                    total = total + w * disc;
                    disc = disc / self.rate;
                }
                total
            }
        }
    }

    /// Same instance with a different horizon.
    pub fn with_horizon(&self, horizon: usize) -> Self {
        Self { horizon, ..self.clone() }
    }

    /// Agent-belief mean discount factor `q . delta`.
    pub fn mean_delta_agent(&self) -> S {
        self.deltas.iter().zip(&self.q).fold(S::zero(), |a, (&d, &q)| a + d * q)
    }

    /// Firm-belief mean discount factor `p . delta`.
    pub fn mean_delta_firm(&self) -> S {
        self.deltas.iter().zip(&self.p).fold(S::zero(), |a, (&d, &p)| a + d * p)
    }

    /// Upper-tail agent-belief sums `Qbar_n = sum_{m >= n} q_m`.
    pub fn agent_upper_tails(&self) -> Vec<S> {
        let mut out = vec![S::zero(); self.n_types()];
        let mut acc = S::zero();
        for n in (0..self.n_types()).rev() {
            acc = acc + self.q[n];
            out[n] = acc;
        }
        out
    }

    /// Checks every modelling assumption. With `section` given, the extra
    /// restrictions of that part of the analysis are checked as well.
    pub fn validate(&self, section: Option<Section>) -> Result<Validated<S>, ConfigErrors> {
        let mut errs = Vec::new();
        let mut notes = Vec::new();
        let n = self.n_types();
        let tol = S::tol(PROBABILITY_SUM_TOL);

        if self.horizon < 3 {
            errs.push(ConfigError::HorizonTooShort(self.horizon));
        }
        if n < 2 {
            errs.push(ConfigError::TooFewTypes(n));
        }
        for (i, &d) in self.deltas.iter().enumerate() {
            if !(d > S::zero()) {
                errs.push(ConfigError::NonPositiveDelta { index: i + 1, value: d.as_f64() });
            }
            if i > 0 && !(d > self.deltas[i - 1]) {
                errs.push(ConfigError::DeltasNotIncreasing(i + 1));
            }
        }
        let mut beliefs_ok = true;
        for (which, probs) in [("firm", &self.p), ("agent", &self.q)] {
            if probs.len() != n {
                errs.push(ConfigError::BeliefLength { which, expected: n, found: probs.len() });
                beliefs_ok = false;
                continue;
            }
            for (i, &x) in probs.iter().enumerate() {
                if x < S::zero() || !x.is_finite() {
                    errs.push(ConfigError::NegativeProbability { which, index: i + 1, value: x.as_f64() });
                    beliefs_ok = false;
                }
            }
            let s = sum(probs.iter().copied());
            if (s - S::one()).abs() > tol {
                errs.push(ConfigError::ProbabilitySum { which, sum: s.as_f64() });
                beliefs_ok = false;
            }
        }

        // In the two-type degenerate setting either belief extreme is a
        // meaningful limit: q = (0, 1) is the fully naive agent and q = (1, 0)
        // agrees with the firm.
        let degenerate = section == Some(Section::DegenerateImpatience);
        let extreme = |lo: S, hi: S| lo == S::zero() && (hi - S::one()).abs() <= tol;
        let limit_beliefs = degenerate && n == 2 && self.q.len() == 2;
        let fully_naive = limit_beliefs && extreme(self.q[0], self.q[1]);
        let agrees_with_firm = limit_beliefs && extreme(self.q[1], self.q[0]);
        if beliefs_ok {
            for (i, &q) in self.q.iter().enumerate() {
                if q == S::zero() && !fully_naive && !agrees_with_firm {
                    errs.push(ConfigError::AgentSupport(i + 1));
                }
            }
            if fully_naive {
                notes.push(
                    "q₂=1: fully naive limiting case; agent preferences and beliefs coincide \
                     with the quasi-hyperbolic naive benchmark"
                        .to_string(),
                );
            }
            if agrees_with_firm {
                notes.push(
                    "q₂=0: agent certain of impatience; equilibrium and efficient paths coincide"
                        .to_string(),
                );
            }
            let (mut cp, mut cq) = (S::zero(), S::zero());
            for m in 0..n {
                cp = cp + self.p[m];
                cq = cq + self.q[m];
                if cp < cq - tol {
                    errs.push(ConfigError::FosdViolated(m + 1));
                    break;
                }
            }
        }
        if !(self.rate >= S::one()) {
            errs.push(ConfigError::RateBelowOne(self.rate.as_f64()));
        }
        let income_value = match self.income {
            Income::TotalNpv(x) | Income::PerPeriod(x) => x,
        };
        if !(income_value > S::zero()) {
            errs.push(ConfigError::NonPositiveIncome(income_value.as_f64()));
        }
        if let Err(e) = self.utility.check() {
            errs.push(e.into());
        }

        match section {
            Some(Section::DegenerateImpatience) => {
                if n != 2 {
                    errs.push(ConfigError::DegenerateNeedsTwoTypes(n));
                }
                if let Some(&p1) = self.p.first() {
                    if (p1 - S::one()).abs() > tol {
                        errs.push(ConfigError::DegenerateNeedsCertainImpatience(p1.as_f64()));
                    }
                }
                if !self.utility.is_bounded() {
                    errs.push(ConfigError::DegenerateNeedsBoundedUtility);
                }
            }
            Some(Section::General) => {
                if beliefs_ok {
                    for (i, &p) in self.p.iter().enumerate() {
                        if p == S::zero() {
                            errs.push(ConfigError::FirmSupport(i + 1));
                        }
                    }
                }
            }
            None => {}
        }

        if !errs.is_empty() {
            return Err(ConfigErrors(errs));
        }
        let mut config = self.clone();
        normalize(&mut config.p);
        normalize(&mut config.q);
        Ok(Validated { config, section, notes })
    }

    /// Histories `(n_1, ..., n_t)` of length `t`, lexicographically ordered.
    pub fn histories(&self, t: usize) -> Result<Vec<TypeHistory>, ConfigError> {
        self.check_history_length(t)?;
        Ok(TypeHistory::enumerate(self.n_types(), t, None))
    }

    /// Histories of length `t` whose first entry is the lowest type.
    pub fn restricted_histories(&self, t: usize) -> Result<Vec<TypeHistory>, ConfigError> {
        self.check_history_length(t)?;
        Ok(TypeHistory::enumerate(self.n_types(), t, Some(0)))
    }

    fn check_history_length(&self, t: usize) -> Result<(), ConfigError> {
        if t == 0 || t + 1 > self.horizon {
            // reuse the horizon error: a date outside 1..T-1 has no history
            return Err(ConfigError::HorizonTooShort(t));
        }
        Ok(())
    }
}

fn normalize<S: Real>(probs: &mut [S]) {
    let s = sum(probs.iter().copied());
    if s > S::zero() {
        for x in probs.iter_mut() {
            *x = *x / s;
        }
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Two types 0.4/0.9, certain impatience, the agent's 3:1 beliefs.
    pub fn degenerate(horizon: usize, q2: f64, rate: f64, income: Income<f64>) -> ModelConfig<f64> {
        ModelConfig {
            horizon,
            deltas: vec![0.4, 0.9],
            p: vec![1.0, 0.0],
            q: vec![1.0 - q2, q2],
            rate,
            income,
            utility: UtilitySpec::Sqrt,
        }
    }

    /// Uniform grid on `[lo, hi]` with common uniform beliefs.
    pub fn uniform_grid(n: usize, lo: f64, hi: f64, rate: f64, income: f64) -> ModelConfig<f64> {
        let deltas = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
        ModelConfig {
            horizon: 3,
            deltas,
            p: vec![1.0 / n as f64; n],
            q: vec![1.0 / n as f64; n],
            rate,
            income: Income::TotalNpv(income),
            utility: UtilitySpec::Sqrt,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn accepts_the_reversal_instance_as_degenerate() {
        let c = degenerate(3, 0.25, 1.0, Income::TotalNpv(3.0));
        let v = c.validate(Some(Section::DegenerateImpatience)).unwrap();
        assert!(v.notes.is_empty());
    }

    #[test]
    fn rejects_less_optimistic_agent() {
        let mut c = degenerate(3, 0.25, 1.0, Income::TotalNpv(3.0));
        c.p = vec![0.5, 0.5];
        c.q = vec![0.75, 0.25];
        let e = c.validate(None).unwrap_err();
        assert!(e.contains(|e| matches!(e, ConfigError::FosdViolated(1))));
        assert!(e.to_string().contains("FOSD violated at m=1"));
    }

    #[test]
    fn rejects_agent_without_full_support() {
        let c = degenerate(3, 0.0, 1.0, Income::TotalNpv(3.0));
        let e = c.validate(None).unwrap_err();
        assert!(e.contains(|e| matches!(e, ConfigError::AgentSupport(2))));
    }

    #[test]
    fn belief_extremes_are_accepted_with_note_in_degenerate_setting() {
        let c = degenerate(3, 0.0, 1.0, Income::TotalNpv(3.0));
        let v = c.validate(Some(Section::DegenerateImpatience)).unwrap();
        assert_eq!(v.notes.len(), 1);

        let c = degenerate(3, 1.0, 1.0, Income::TotalNpv(3.0));
        let v = c.validate(Some(Section::DegenerateImpatience)).unwrap();
        assert_eq!(v.notes.len(), 1);
        // outside the degenerate section the same beliefs are rejected
        assert!(c.validate(None).is_err());
    }

    #[test]
    fn degenerate_section_requires_certain_impatience() {
        let mut c = degenerate(3, 0.5, 1.0, Income::TotalNpv(3.0));
        c.p = vec![0.5, 0.5];
        let e = c.validate(Some(Section::DegenerateImpatience)).unwrap_err();
        assert!(e.to_string().contains("p₁=1 required"));
    }

    #[test]
    fn general_section_requires_firm_support() {
        let c = degenerate(3, 0.5, 1.0, Income::TotalNpv(3.0));
        let e = c.validate(Some(Section::General)).unwrap_err();
        assert!(e.contains(|e| matches!(e, ConfigError::FirmSupport(2))));
    }

    #[test]
    fn short_horizon_and_equal_deltas_rejected() {
        let mut c = uniform_grid(2, 0.5, 1.0, 1.5, 3.0);
        c.horizon = 2;
        c.deltas = vec![0.5, 0.5];
        let e = c.validate(None).unwrap_err();
        assert!(e.contains(|e| matches!(e, ConfigError::HorizonTooShort(2))));
        assert!(e.contains(|e| matches!(e, ConfigError::DeltasNotIncreasing(2))));
        let codes: Vec<u32> = e.0.iter().map(ConfigError::code).collect();
        assert!(codes.windows(2).all(|w| w[0] != w[1]));
    }

    #[test]
    fn validation_renormalizes_and_is_idempotent() {
        let mut c = uniform_grid(3, 0.5, 1.0, 1.5, 3.0);
        c.p = vec![0.1, 0.2, 0.7 + 5e-13];
        c.q = c.p.clone();
        let once = c.validate(None).unwrap().config;
        let twice = once.validate(None).unwrap().config;
        assert_eq!(once, twice);
        assert!((once.p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        // the input is untouched
        assert_eq!(c.p[2], 0.7 + 5e-13);
    }

    #[test]
    fn income_per_period_accumulates() {
        let c = degenerate(3, 0.25, 1.1, Income::PerPeriod(1.0));
        let expect = 1.0 + 1.0 / 1.1 + 1.0 / 1.21;
        assert!((c.income_npv() - expect).abs() < 1e-15);
    }

    #[test]
    fn history_enumeration() {
        let c = degenerate(3, 0.25, 1.0, Income::TotalNpv(3.0));
        let h: Vec<Vec<usize>> = c.histories(2).unwrap().iter().map(|h| h.one_based()).collect();
        assert_eq!(h, vec![vec![1, 1], vec![1, 2], vec![2, 1], vec![2, 2]]);
        let r: Vec<Vec<usize>> =
            c.restricted_histories(2).unwrap().iter().map(|h| h.one_based()).collect();
        assert_eq!(r, vec![vec![1, 1], vec![1, 2]]);
        assert!(c.histories(3).is_err());
        assert!(c.histories(0).is_err());

        let c3 = uniform_grid(3, 0.5, 1.0, 1.5, 3.0);
        let h: Vec<Vec<usize>> = c3.histories(1).unwrap().iter().map(|h| h.one_based()).collect();
        assert_eq!(h, vec![vec![1], vec![2], vec![3]]);
    }
}
