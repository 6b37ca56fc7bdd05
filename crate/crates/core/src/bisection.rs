//! Root finding for budget multipliers.
//!
//! Every solver in the crate fixes the multiplier on the firm's break-even
//! condition, maximizes the Lagrangian in closed form (or by Newton), and then
//! searches the multiplier so that spending equals income. Spending is
//! continuous and strictly decreasing in the multiplier, so a bracket followed
//! by bisection always converges.

use thiserror::Error;

use crate::scalar::Real;

pub const MAX_BISECTION_STEPS: usize = 200;
const MAX_BRACKET_STEPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("could not bracket the budget multiplier (last bracket [{lo:e}, {hi:e}])")]
pub struct BracketFailure {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetRoot<S> {
    pub lambda: S,
    pub spend: S,
    pub iterations: usize,
}

/// Finds `lambda > 0` with `spend(lambda) == income`, assuming `spend` is
/// strictly decreasing. `lower_hint` should overspend and `upper_hint` should
/// underspend; both are widened by factors of two when they do not.
pub fn find_budget_multiplier<S, E, F>(
    income: S,
    lower_hint: S,
    upper_hint: S,
    rel_tol: S,
    mut spend: F,
) -> Result<BudgetRoot<S>, E>
where
    S: Real,
    E: From<BracketFailure>,
    F: FnMut(S) -> Result<S, E>,
{
    let two = S::lit(2.0);
    let fail = |lo: S, hi: S| BracketFailure {
        lo: lo.as_f64(),
        hi: hi.as_f64(),
    };

    let mut lo = lower_hint;
    let mut spend_lo = spend(lo)?;
    let mut steps = 0;
    while spend_lo <= income {
        if (spend_lo - income).abs() <= rel_tol * income {
            return Ok(BudgetRoot { lambda: lo, spend: spend_lo, iterations: 0 });
        }
        steps += 1;
        if steps > MAX_BRACKET_STEPS || lo <= S::min_positive_value() {
            return Err(fail(lo, upper_hint).into());
        }
        lo = lo / two;
        spend_lo = spend(lo)?;
    }

    let mut hi = upper_hint.max(lo);
    let mut spend_hi = spend(hi)?;
    steps = 0;
    while spend_hi >= income {
        if (spend_hi - income).abs() <= rel_tol * income {
            return Ok(BudgetRoot { lambda: hi, spend: spend_hi, iterations: 0 });
        }
        steps += 1;
        if steps > MAX_BRACKET_STEPS || !hi.is_finite() {
            return Err(fail(lo, hi).into());
        }
        lo = hi;
        hi = hi * two;
        spend_hi = spend(hi)?;
    }

    let mut best = if (spend_lo - income).abs() < (spend_hi - income).abs() {
        BudgetRoot { lambda: lo, spend: spend_lo, iterations: 0 }
    } else {
        BudgetRoot { lambda: hi, spend: spend_hi, iterations: 0 }
    };
    for it in 1..=MAX_BISECTION_STEPS {
        // geometric midpoint while the bracket spans orders of magnitude
        let mid = if hi > lo * S::lit(4.0) {
            (lo * hi).sqrt()
        } else {
            (lo + hi) / two
        };
        if mid <= lo || mid >= hi {
            break;
        }
        let s = spend(mid)?;
        if (s - income).abs() < (best.spend - income).abs() {
            best = BudgetRoot { lambda: mid, spend: s, iterations: it };
        }
        if (s - income).abs() <= rel_tol * income {
            return Ok(BudgetRoot { lambda: mid, spend: s, iterations: it });
        }
        if s > income {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_root_of_reciprocal_square() {
        // spend = 1/lambda^2, income 4 => lambda = 0.5
        let r: Result<BudgetRoot<f64>, BracketFailure> =
            find_budget_multiplier(4.0, 1.0, 1.0, 1e-14, |l| Ok(1.0 / (l * l)));
        let r = r.unwrap();
        assert!((r.lambda - 0.5).abs() < 1e-13);
    }

    #[test]
    fn widens_bad_hints() {
        let r: Result<BudgetRoot<f64>, BracketFailure> =
            find_budget_multiplier(1e-6, 1e3, 1e-3, 1e-13, |l| Ok(1.0 / l));
        assert!((r.unwrap().lambda - 1e6).abs() < 1e-4);
    }

    #[test]
    fn reports_bracket_failure() {
        let r: Result<BudgetRoot<f64>, BracketFailure> =
            find_budget_multiplier(1.0, 1.0, 2.0, 1e-12, |_| Ok(5.0));
        assert!(r.is_err());
    }
}
