//! Two types with a firm certain that the agent is impatient.
//!
//! Only the all-low history `L^t` carries firm cost, so the contract reduces
//! to a path `v_t(L^t)` maximizing a weighted sum of utilities subject to
//! break-even. Each kind of path differs only in its weights:
//!
//! | kind        | weight at `t <= T-1` | weight at `T`          |
//! |-------------|----------------------|------------------------|
//! | equilibrium | `qbar^(t-1)`         | `qbar^(T-2) delta^(1)` |
//! | efficient   | `delta^(1)^(t-1)`    | `delta^(1)^(T-1)`      |
//! | benchmark   | `qbar^(t-1)`         | `qbar^(T-1)`           |
//!
//! where `qbar = q_1 delta^(1) + q_2 delta^(2)`. Given a multiplier `lambda`
//! the optimal path is `v_t = rho(weight_t R^(t-1) / lambda)`, and `lambda`
//! is set by bisection so the budget binds.

use serde::{Deserialize, Serialize};

use crate::bisection::{find_budget_multiplier, BudgetRoot};
use crate::error::SolveError;
use crate::model::{Income, ModelConfig, Policy, Section, TypeHistory};
use crate::scalar::Real;

const BUDGET_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PathKind {
    Equilibrium,
    Efficient,
    Benchmark,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSolution<S> {
    pub kind: PathKind,
    /// `v_t(L^t)` for `t = 1..=T`.
    pub path: Vec<S>,
    pub lambda: S,
    /// Dates where the unconstrained value fell below the floor.
    pub corners: Vec<bool>,
    /// `v_t(L^(t-1), delta^(2))` for `t = 2..=T-1`, always the floor.
    pub off_path: Vec<S>,
    /// Spending minus income, in money.
    pub budget_residual: S,
}

impl<S: Real> PathSolution<S> {
    pub fn consumption(&self, config: &ModelConfig<S>) -> Vec<S> {
        self.path.iter().map(|&v| config.utility.phi_unchecked(v)).collect()
    }
}

fn mean_delta<S: Real>(config: &ModelConfig<S>) -> S {
    config.mean_delta_agent()
}

/// Path weights of the given kind.
pub fn path_weights<S: Real>(config: &ModelConfig<S>, kind: PathKind) -> Vec<S> {
    let horizon = config.horizon;
    let low = config.deltas[0];
    let base = match kind {
        PathKind::Efficient => low,
        PathKind::Equilibrium | PathKind::Benchmark => mean_delta(config),
    };
    let mut w: Vec<S> = (0..horizon).map(|k| base.powi(k as i32)).collect();
    if kind == PathKind::Equilibrium {
        w[horizon - 1] = base.powi(horizon as i32 - 2) * low;
    }
    w
}

fn check_instance<S: Real>(config: &ModelConfig<S>) -> Result<ModelConfig<S>, SolveError<S>> {
    Ok(config.validate(Some(Section::DegenerateImpatience))?.config)
}

fn path_at<S: Real>(
    config: &ModelConfig<S>,
    weights: &[S],
    lambda: S,
) -> Result<(Vec<S>, Vec<bool>), SolveError<S>> {
    let floor_slope = config.utility.phi_prime_at_floor().unwrap_or(S::zero());
    let mut path = Vec::with_capacity(weights.len());
    let mut corners = Vec::with_capacity(weights.len());
    let mut growth = S::one();
    for &w in weights {
        let x = w * growth / lambda;
        corners.push(x <= floor_slope);
        path.push(config.utility.rho(x)?);
        growth = growth * config.rate;
    }
    Ok((path, corners))
}

fn path_cost<S: Real>(config: &ModelConfig<S>, path: &[S]) -> S {
    let mut disc = S::one();
    let mut total = S::zero();
    for &v in path {
        total = total + config.utility.phi_unchecked(v) * disc;
        disc = disc / config.rate;
    }
    total
}

/// Optimal path of the given kind along the all-low history.
pub fn solve_low_path<S: Real>(
    config: &ModelConfig<S>,
    kind: PathKind,
) -> Result<PathSolution<S>, SolveError<S>> {
    let config = check_instance(config)?;
    let weights = path_weights(&config, kind);
    let income = config.income_npv();
    let u = config.utility;

    // lambda small enough that v_1 alone overspends
    let v_big = u.u_finite(income)? + S::one();
    let lo = weights[0] / u.phi_prime(v_big)?;
    let root: BudgetRoot<S> =
        find_budget_multiplier(income, lo, lo * S::lit(2.0), S::tol(BUDGET_REL_TOL), |lambda| {
            let (path, _) = path_at(&config, &weights, lambda)?;
            Ok::<S, SolveError<S>>(path_cost(&config, &path))
        })?;
    let (path, corners) = path_at(&config, &weights, root.lambda)?;
    let floor = u.floor().unwrap_or(S::zero());
    Ok(PathSolution {
        kind,
        budget_residual: path_cost(&config, &path) - income,
        path,
        lambda: root.lambda,
        corners,
        off_path: vec![floor; config.horizon - 2],
    })
}

/// Relative KKT residuals `|phi'(v_t) lambda - weight_t R^(t-1)| / (weight_t
/// R^(t-1))` at the interior dates, zero at corners.
pub fn kkt_residuals<S: Real>(config: &ModelConfig<S>, sol: &PathSolution<S>) -> Vec<S> {
    let weights = path_weights(config, sol.kind);
    let mut growth = S::one();
    let mut out = Vec::with_capacity(weights.len());
    for (t, &w) in weights.iter().enumerate() {
        let target = w * growth;
        out.push(if sol.corners[t] {
            S::zero()
        } else {
            (config.utility.phi_prime_unchecked(sol.path[t]) * sol.lambda - target).abs() / target
        });
        growth = growth * config.rate;
    }
    out
}

/// Weighted sum of a path under the given kind's weights.
pub fn path_value<S: Real>(config: &ModelConfig<S>, kind: PathKind, path: &[S]) -> S {
    path_weights(config, kind)
        .iter()
        .zip(path)
        .fold(S::zero(), |a, (&w, &v)| a + w * v)
}

/// A complete direct mechanism on the histories starting from the low type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mechanism<S> {
    pub policy: Policy<S>,
    /// Constant continuation `vbar(L^(t-1), delta^(2))` for `t = 2..=T-1`.
    pub continuation_values: Vec<S>,
    /// Low type's truthful minus mimicking payoff at `L^(t-1)`, `t = 2..=T-1`.
    pub low_ic_residuals: Vec<S>,
    /// High type's truthful minus mimicking payoff at `L^(t-1)`.
    pub high_ic_residuals: Vec<S>,
}

/// Fills in the whole mechanism around an equilibrium path: the high report at
/// `L^(t-1)` gets floor utility now and a constant `vbar` at every later date,
/// with `vbar` chosen so the low type is exactly indifferent. Built backwards
/// from `t = T-1`.
pub fn build_full_mechanism<S: Real>(
    config: &ModelConfig<S>,
    eq: &PathSolution<S>,
) -> Result<Mechanism<S>, SolveError<S>> {
    let config = check_instance(config)?;
    if eq.kind != PathKind::Equilibrium {
        return Err(SolveError::NotApplicable(
            "the full mechanism is built around an equilibrium path".into(),
        ));
    }
    let horizon = config.horizon;
    let (low, high) = (config.deltas[0], config.deltas[1]);
    let q = &config.q;
    let qbar = mean_delta(&config);
    let floor = config.utility.floor().unwrap_or(S::zero());

    let mut policy = Policy::filled(horizon, 2, 0, S::nan());
    for t in 1..=horizon {
        policy.set(t, &TypeHistory::lowest(policy.history_len(t)), eq.path[t - 1]);
    }

    let mut vbar = vec![S::zero(); horizon - 2];
    for t in (2..horizon).rev() {
        let on = TypeHistory::lowest(t);
        let off = TypeHistory::lowest(t - 1).push(1);
        let on_value = policy.get(t, &on) + low * policy.continuation(&on, &config.deltas, q);
        let annuity = (0..horizon - t).fold(S::zero(), |a, k| a + qbar.powi(k as i32));
        let v = (on_value - floor) / (low * annuity);
        if v < floor {
            return Err(SolveError::InfeasibleContinuation { date: t });
        }
        vbar[t - 2] = v;
        policy.set(t, &off, floor);
        for tau in t + 1..=horizon {
            for h in policy.histories_at(tau) {
                if h.indices()[..t] == *off.indices() {
                    policy.set(tau, &h, v);
                }
            }
        }
    }

    let mut low_ic = Vec::with_capacity(horizon - 2);
    let mut high_ic = Vec::with_capacity(horizon - 2);
    for t in 2..horizon {
        let on = TypeHistory::lowest(t);
        let off = TypeHistory::lowest(t - 1).push(1);
        let (v_on, x_on) = (policy.get(t, &on), policy.continuation(&on, &config.deltas, q));
        let (v_off, x_off) = (policy.get(t, &off), policy.continuation(&off, &config.deltas, q));
        low_ic.push((v_on + low * x_on) - (v_off + low * x_off));
        high_ic.push((v_off + high * x_off) - (v_on + high * x_on));
    }
    Ok(Mechanism { policy, continuation_values: vbar, low_ic_residuals: low_ic, high_ic_residuals: high_ic })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "date")]
pub enum Crossing {
    /// Equilibrium utility is strictly below efficient before this date and
    /// strictly above from it on.
    At(usize),
    /// The paths never cross (for instance when they coincide).
    None,
    /// The sign pattern is not a single switch; first offending date.
    NotMonotone(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WelfareReport<S> {
    pub horizon: usize,
    pub w_a: S,
    pub w_e: S,
    pub v_b: S,
    pub v_e: S,
    pub crossing: Crossing,
    /// First date violating "once weakly above and positive, stays weakly above".
    pub ordering_violation: Option<usize>,
    pub equilibrium: PathSolution<S>,
    pub efficient: PathSolution<S>,
    pub benchmark: PathSolution<S>,
}

impl<S: Real> WelfareReport<S> {
    /// Benchmark-discount welfare loss `W_A - W_E`.
    pub fn benchmark_gap(&self) -> S {
        self.w_a - self.w_e
    }

    /// Efficiency loss `V_B - V_E`.
    pub fn efficiency_gap(&self) -> S {
        self.v_b - self.v_e
    }
}

fn crossing<S: Real>(eq: &[S], eff: &[S]) -> Crossing {
    let Some(first_above) = eq.iter().zip(eff).position(|(e, b)| e > b) else {
        return Crossing::None;
    };
    for (t, (e, b)) in eq.iter().zip(eff).enumerate() {
        let ok = if t < first_above { e < b } else { e > b };
        if !ok {
            return Crossing::NotMonotone(t + 1);
        }
    }
    Crossing::At(first_above + 1)
}

fn ordering_violation<S: Real>(eq: &[S], eff: &[S]) -> Option<usize> {
    let start = eq.iter().zip(eff).position(|(e, b)| e >= b && *e > S::zero())?;
    (start + 1..eq.len()).find(|&s| eq[s] < eff[s]).map(|s| s + 1)
}

pub fn welfare_report<S: Real>(config: &ModelConfig<S>) -> Result<WelfareReport<S>, SolveError<S>> {
    let equilibrium = solve_low_path(config, PathKind::Equilibrium)?;
    let efficient = solve_low_path(config, PathKind::Efficient)?;
    let benchmark = solve_low_path(config, PathKind::Benchmark)?;
    let config = check_instance(config)?;
    Ok(WelfareReport {
        horizon: config.horizon,
        w_a: path_value(&config, PathKind::Benchmark, &benchmark.path),
        w_e: path_value(&config, PathKind::Benchmark, &equilibrium.path),
        v_b: path_value(&config, PathKind::Efficient, &efficient.path),
        v_e: path_value(&config, PathKind::Efficient, &equilibrium.path),
        crossing: crossing(&equilibrium.path, &efficient.path),
        ordering_violation: ordering_violation(&equilibrium.path, &efficient.path),
        equilibrium,
        efficient,
        benchmark,
    })
}

/// Status of `qbar R phi'(u(I_inf)) > phi'_+(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SideCondition {
    Holds,
    Fails,
    /// `R = 1` with per-period income: `I_inf` is infinite.
    NotCheckable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport<S> {
    pub reports: Vec<WelfareReport<S>>,
    pub side_condition: SideCondition,
    pub warnings: Vec<String>,
    /// Running minimum of `V_B - V_E` along the sweep.
    pub running_min_efficiency_gap: Vec<S>,
}

impl<S: Real> SweepReport<S> {
    pub fn benchmark_gaps(&self) -> Vec<S> {
        self.reports.iter().map(WelfareReport::benchmark_gap).collect()
    }

    pub fn efficiency_gaps(&self) -> Vec<S> {
        self.reports.iter().map(WelfareReport::efficiency_gap).collect()
    }
}

pub fn side_condition<S: Real>(config: &ModelConfig<S>) -> Result<SideCondition, SolveError<S>> {
    let limit_income = match config.income {
        Income::TotalNpv(i) => i,
        Income::PerPeriod(_) if config.rate <= S::one() => return Ok(SideCondition::NotCheckable),
        Income::PerPeriod(w) => w * config.rate / (config.rate - S::one()),
    };
    let u = config.utility;
    let lhs = mean_delta(config) * config.rate * u.phi_prime(u.u_finite(limit_income)?)?;
    let floor_slope = u.phi_prime_at_floor().unwrap_or(S::zero());
    Ok(if lhs > floor_slope { SideCondition::Holds } else { SideCondition::Fails })
}

/// Welfare reports for every horizon in `horizons`, in order.
pub fn sweep_horizon<S: Real>(
    template: &ModelConfig<S>,
    horizons: std::ops::RangeInclusive<usize>,
) -> Result<SweepReport<S>, SolveError<S>> {
    let template = check_instance(&template.with_horizon(3))?;
    let mut warnings = Vec::new();
    if template.deltas[0] * template.rate > S::one() {
        warnings.push(format!(
            "delta^(1) R = {} exceeds 1; the persistent-gap result assumes delta^(1) R <= 1",
            (template.deltas[0] * template.rate).as_f64()
        ));
    }
    let side = side_condition(&template)?;
    match side {
        SideCondition::Fails => warnings.push("side condition qbar R phi'(u(I_inf)) > phi'_+(0) fails".into()),
        SideCondition::NotCheckable => {
            warnings.push("side condition not checkable: I_inf is infinite at R = 1".into())
        }
        SideCondition::Holds => {}
    }
    let mut reports = Vec::new();
    let mut running = Vec::new();
    let mut lowest = S::infinity();
    for horizon in horizons {
        let r = welfare_report(&template.with_horizon(horizon))?;
        lowest = lowest.min(r.efficiency_gap());
        running.push(lowest);
        reports.push(r);
    }
    Ok(SweepReport { reports, side_condition: side, warnings, running_min_efficiency_gap: running })
}
