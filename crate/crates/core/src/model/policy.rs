use serde::{Deserialize, Serialize};

use super::history::TypeHistory;
use crate::scalar::Real;
use crate::utility::UtilitySpec;

/// Utilities `v_t(H^t)` on the history tree below one initial type.
///
/// `dates[t-1]` holds the date-`t` values ordered by the tail rank of the
/// history: `N^(t-1)` entries for `t <= T-1`, and `N^(T-2)` entries at date
/// `T`, which reuses the date-`(T-1)` histories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy<S> {
    pub horizon: usize,
    pub n_types: usize,
    /// Zero-based initial type.
    pub root: usize,
    pub dates: Vec<Vec<S>>,
}

impl<S: Real> Policy<S> {
    pub fn filled(horizon: usize, n_types: usize, root: usize, value: S) -> Self {
        let dates = (1..=horizon)
            .map(|t| vec![value; nodes_at(horizon, n_types, t)])
            .collect();
        Self { horizon, n_types, root, dates }
    }

    /// Number of date-`t` values.
    pub fn nodes_at(&self, t: usize) -> usize {
        nodes_at(self.horizon, self.n_types, t)
    }

    /// Length of the history indexing date-`t` values.
    pub fn history_len(&self, t: usize) -> usize {
        t.min(self.horizon - 1)
    }

    pub fn histories_at(&self, t: usize) -> Vec<TypeHistory> {
        TypeHistory::enumerate(self.n_types, self.history_len(t), Some(self.root))
    }

    fn rank(&self, t: usize, h: &TypeHistory) -> usize {
        debug_assert_eq!(h.len(), self.history_len(t), "history length for date {t}");
        debug_assert_eq!(h.indices()[0], self.root);
        h.tail_rank(self.n_types)
    }

    pub fn get(&self, t: usize, h: &TypeHistory) -> S {
        self.dates[t - 1][self.rank(t, h)]
    }

    pub fn set(&mut self, t: usize, h: &TypeHistory, v: S) {
        let k = self.rank(t, h);
        self.dates[t - 1][k] = v;
    }

    pub fn values(&self) -> impl Iterator<Item = S> + '_ {
        self.dates.iter().flatten().copied()
    }

    pub fn sup_distance(&self, other: &Self) -> S {
        self.values()
            .zip(other.values())
            .fold(S::zero(), |m, (a, b)| m.max((a - b).abs()))
    }

    /// `E[sum_{tau > t} prod_{s=t+1}^{tau-1} delta_s v_tau(h, .)]` under
    /// truthful reporting and type probabilities `probs`, for a date-`t`
    /// history `h` with `t <= T-1`.
    pub fn continuation(&self, h: &TypeHistory, deltas: &[S], probs: &[S]) -> S {
        let t = h.len();
        if t + 1 == self.horizon {
            return self.get(self.horizon, h);
        }
        let mut acc = S::zero();
        for n in 0..self.n_types {
            let next = h.push(n);
            acc = acc
                + probs[n] * (self.get(t + 1, &next) + deltas[n] * self.continuation(&next, deltas, probs));
        }
        acc
    }

    /// Date-1 expected payoff `v_1 + delta_1 E_A[...]` of the initial type.
    pub fn agent_payoff(&self, deltas: &[S], q: &[S]) -> S {
        let root = TypeHistory::new(vec![self.root]);
        self.get(1, &root) + deltas[self.root] * self.continuation(&root, deltas, q)
    }

    /// Firm-belief expected NPV of `phi(v_t)` over the whole tree.
    pub fn expected_cost(&self, utility: &UtilitySpec<S>, p: &[S], rate: S) -> S {
        let root = TypeHistory::new(vec![self.root]);
        self.continuation_cost(&root, utility, p, rate).date1
    }

    /// Firm-belief expected cost of the continuation policy from date `t`
    /// onward at the date-`t` history `h`.
    pub fn continuation_cost(
        &self,
        h: &TypeHistory,
        utility: &UtilitySpec<S>,
        p: &[S],
        rate: S,
    ) -> ContinuationCost<S> {
        let t = h.len();
        let at_t = self.undiscounted_cost(h, utility, p, rate);
        let scale = rate.powi(t as i32 - 1);
        ContinuationCost { date1: at_t / scale, date_t: at_t }
    }

    // cost from date t onward discounted to date t
    fn undiscounted_cost(&self, h: &TypeHistory, utility: &UtilitySpec<S>, p: &[S], rate: S) -> S {
        let t = h.len();
        let here = utility.phi_unchecked(self.get(t, h));
        if t + 1 == self.horizon {
            return here + utility.phi_unchecked(self.get(self.horizon, h)) / rate;
        }
        let mut later = S::zero();
        for n in 0..self.n_types {
            later = later + p[n] * self.undiscounted_cost(&h.push(n), utility, p, rate);
        }
        here + later / rate
    }

    /// Consumption `phi(v)` at every node.
    pub fn consumption(&self, utility: &UtilitySpec<S>) -> Vec<Vec<S>> {
        self.dates
            .iter()
            .map(|d| d.iter().map(|&v| utility.phi_unchecked(v)).collect())
            .collect()
    }

    pub fn is_well_formed(&self) -> bool {
        self.horizon >= 3
            && self.root < self.n_types
            && self.dates.len() == self.horizon
            && (1..=self.horizon).all(|t| self.dates[t - 1].len() == self.nodes_at(t))
    }
}

fn nodes_at(horizon: usize, n_types: usize, t: usize) -> usize {
    n_types.pow((t.min(horizon - 1) - 1) as u32)
}

/// Firm's expected continuation cost, discounted to date 1 and to date `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationCost<S> {
    pub date1: S,
    pub date_t: S,
}
