//! The general model: efficient policies on the full history tree, the
//! three-period equilibrium through the binding-upward-IC reduction, and the
//! diagnostics built on them.
//!
//! With `T = 3`, fix the initial type and write `w_n`, `z_n` for the date-2
//! and date-3 utilities after date-2 type `n`. When every local upward
//! constraint binds, the continuation utilities `U_n = w_n + delta_n z_n`
//! satisfy the envelope identity
//!
//! ```text
//! U_n = U_1 + sum_{i=2}^n (delta_i - delta_{i-1}) z_i,   U_1 = w_1 + delta_1 z_1
//! ```
//!
//! so `(v_1, w_1, z_1, ..., z_N)` determines everything. The agent's payoff is
//! linear in these variables and the firm's cost is convex, which makes the
//! reduced problem a smooth concave program for each budget multiplier.

use serde::{Deserialize, Serialize};

use crate::bisection::find_budget_multiplier;
use crate::error::SolveError;
use crate::linalg::solve_spd;
use crate::model::{ModelConfig, Policy, Section, TypeHistory};
use crate::scalar::{dot, max_abs, Real};
use crate::utility::UtilitySpec;

const BUDGET_REL_TOL: f64 = 1e-12;
const NEWTON_MAX_STEPS: usize = 200;
const NEWTON_MAX_HALVINGS: usize = 30;

/// Reduced three-period equilibrium for one initial type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedSolution<S> {
    /// Zero-based initial type.
    pub root: usize,
    pub v1: S,
    /// `U_1 = w_1 + delta^(1) z_1`.
    pub u1: S,
    pub w: Vec<S>,
    pub z: Vec<S>,
    /// `U_n = w_n + delta^(n) z_n`.
    pub u: Vec<S>,
    pub lambda: S,
    /// Upper-tail agent probabilities `Qbar_n`.
    pub qbar: Vec<S>,
    pub separating: bool,
    pub interior: bool,
    /// `U_n - (w_{n+1} + delta^(n) z_{n+1})` for `n < N`; zero when the
    /// upward constraint binds.
    pub upward_ic_residuals: Vec<S>,
    pub budget_residual: S,
}

impl<S: Real> ReducedSolution<S> {
    /// The solution as a three-period policy.
    pub fn policy(&self) -> Policy<S> {
        Policy {
            horizon: 3,
            n_types: self.w.len(),
            root: self.root,
            dates: vec![vec![self.v1], self.w.clone(), self.z.clone()],
        }
    }
}

/// Linear map from the reduced variables `[v1, w1, z_1..z_N]` to `w`.
struct Reduction<S> {
    n: usize,
    /// Row-major `N x (N+2)`.
    a: Vec<S>,
    objective: Vec<S>,
    qbar: Vec<S>,
}

impl<S: Real> Reduction<S> {
    fn new(config: &ModelConfig<S>, root: usize) -> Self {
        let d = &config.deltas;
        let n = d.len();
        let m = n + 2;
        let mut a = vec![S::zero(); n * m];
        for row in 0..n {
            let r = &mut a[row * m..(row + 1) * m];
            r[1] = S::one();
            r[2] = d[0];
            for i in 1..=row {
                r[2 + i] = r[2 + i] + d[i] - d[i - 1];
            }
            r[2 + row] = r[2 + row] - d[row];
        }
        let qbar = config.agent_upper_tails();
        let mut objective = vec![S::zero(); m];
        objective[0] = S::one();
        objective[1] = d[root];
        objective[2] = d[root] * d[0];
        for i in 1..n {
            objective[2 + i] = d[root] * qbar[i] * (d[i] - d[i - 1]);
        }
        Self { n, a, objective, qbar }
    }

    fn dim(&self) -> usize {
        self.n + 2
    }

    fn w(&self, x: &[S]) -> Vec<S> {
        let m = self.dim();
        (0..self.n).map(|row| dot(&self.a[row * m..(row + 1) * m], x)).collect()
    }

    fn z<'a>(&self, x: &'a [S]) -> &'a [S] {
        &x[2..]
    }

    fn cost(&self, config: &ModelConfig<S>, x: &[S]) -> S {
        let u = &config.utility;
        let r = config.rate;
        let w = self.w(x);
        let mut c = u.phi_unchecked(x[0]);
        for (k, (&wn, &zn)) in w.iter().zip(self.z(x)).enumerate() {
            c = c + config.p[k] * (u.phi_unchecked(wn) / r + u.phi_unchecked(zn) / (r * r));
        }
        c
    }

    /// Gradient of `c.x - lambda cost(x)` and the Hessian of `lambda cost(x)`.
    fn derivatives(&self, config: &ModelConfig<S>, x: &[S], lambda: S) -> (Vec<S>, Vec<S>) {
        let u = &config.utility;
        let r = config.rate;
        let m = self.dim();
        let w = self.w(x);
        let mut grad = self.objective.clone();
        let mut hess = vec![S::zero(); m * m];
        grad[0] = grad[0] - lambda * u.phi_prime_unchecked(x[0]);
        hess[0] = lambda * u.phi_second_unchecked(x[0]);
        for k in 0..self.n {
            let row = &self.a[k * m..(k + 1) * m];
            let g1 = lambda * config.p[k] / r * u.phi_prime_unchecked(w[k]);
            let h1 = lambda * config.p[k] / r * u.phi_second_unchecked(w[k]);
            for i in 0..m {
                if row[i] == S::zero() {
                    continue;
                }
                grad[i] = grad[i] - g1 * row[i];
                for j in 0..m {
                    hess[i * m + j] = hess[i * m + j] + h1 * row[i] * row[j];
                }
            }
            let zk = x[2 + k];
            grad[2 + k] = grad[2 + k] - lambda * config.p[k] / (r * r) * u.phi_prime_unchecked(zk);
            hess[(2 + k) * m + 2 + k] =
                hess[(2 + k) * m + 2 + k] + lambda * config.p[k] / (r * r) * u.phi_second_unchecked(zk);
        }
        (grad, hess)
    }

    fn lagrangian(&self, config: &ModelConfig<S>, x: &[S], lambda: S) -> S {
        dot(&self.objective, x) - lambda * self.cost(config, x)
    }

    // scale of the terms whose difference is the Lagrangian
    fn magnitude(&self, config: &ModelConfig<S>, x: &[S], lambda: S) -> S {
        let linear = self.objective.iter().zip(x).fold(S::zero(), |a, (&c, &v)| a + (c * v).abs());
        linear + lambda * self.cost(config, x)
    }

    fn in_domain(&self, config: &ModelConfig<S>, x: &[S]) -> bool {
        match config.utility {
            // phi is smooth on the whole line for these two
            UtilitySpec::Sqrt | UtilitySpec::Log => x.iter().all(|v| v.is_finite()),
            UtilitySpec::Isoelastic(_) => {
                x[0] > S::zero() && self.z(x).iter().all(|&v| v > S::zero()) && self.w(x).iter().all(|&v| v > S::zero())
            }
        }
    }

    /// Pooled start: constant `w` and `z` at the efficient levels for the mean
    /// date-2 type.
    fn pooled_start(&self, config: &ModelConfig<S>, root: usize, lambda: S) -> Result<Vec<S>, SolveError<S>> {
        let u = &config.utility;
        let r = config.rate;
        let d1 = config.deltas[root];
        let mut x = vec![S::zero(); self.dim()];
        x[0] = u.rho(S::one() / lambda)?;
        x[1] = u.rho(r * d1 / lambda)?;
        let zbar = u.rho(r * r * d1 * config.mean_delta_firm() / lambda)?;
        for v in x[2..].iter_mut() {
            *v = zbar;
        }
        Ok(x)
    }

    /// Maximizes `c.x - lambda cost(x)` by damped Newton.
    fn maximize(&self, config: &ModelConfig<S>, root: usize, lambda: S) -> Result<Vec<S>, SolveError<S>> {
        let m = self.dim();
        let mut x = self.pooled_start(config, root, lambda)?;
        let scale = max_abs(self.objective.iter().copied()).max(S::one());
        let tol = S::tol(1e-14) * scale;
        let mut value = self.lagrangian(config, &x, lambda);
        let mut last_norm = S::infinity();
        for _ in 0..NEWTON_MAX_STEPS {
            let (grad, hess) = self.derivatives(config, &x, lambda);
            let norm = max_abs(grad.iter().copied());
            last_norm = norm;
            if norm <= tol {
                return Ok(x);
            }
            let Some(step) = solve_spd(&hess, m, &grad) else {
                break;
            };
            let mut alpha = S::one();
            let mut accepted = false;
            for _ in 0..NEWTON_MAX_HALVINGS {
                let trial: Vec<S> = x.iter().zip(&step).map(|(&xi, &si)| xi + alpha * si).collect();
                if self.in_domain(config, &trial) {
                    let v = self.lagrangian(config, &trial, lambda);
                    // near the optimum the objective is flat to rounding, so a
                    // smaller gradient also counts as progress
                    let slack = S::lit(16.0) * S::epsilon() * self.magnitude(config, &trial, lambda);
                    let flat_progress = v >= value - slack
                        || max_abs(self.derivatives(config, &trial, lambda).0) < norm;
                    if flat_progress {
                        x = trial;
                        value = v;
                        accepted = true;
                        break;
                    }
                }
                alpha = alpha / S::lit(2.0);
            }
            if !accepted {
                break;
            }
        }
        let (grad, _) = self.derivatives(config, &x, lambda);
        let norm = max_abs(grad.iter().copied());
        if norm <= S::tol(1e-10) * scale {
            return Ok(x);
        }
        Err(SolveError::NewtonFailed {
            iterations: NEWTON_MAX_STEPS,
            residual: last_norm.min(norm).as_f64(),
        })
    }
}

fn check_general<S: Real>(config: &ModelConfig<S>) -> Result<ModelConfig<S>, SolveError<S>> {
    Ok(config.validate(Some(Section::General))?.config)
}

fn check_root<S: Real>(config: &ModelConfig<S>, root: usize) -> Result<(), SolveError<S>> {
    if root >= config.n_types() {
        return Err(SolveError::NotApplicable(format!(
            "initial type index {} outside 1..={}",
            root + 1,
            config.n_types()
        )));
    }
    Ok(())
}

/// Three-period equilibrium for initial type `root` (zero-based).
///
/// Errors with the candidate attached when the reduced solution is not
/// interior or not separating, since the reduction is then invalid.
pub fn solve_equilibrium_t3<S: Real>(
    config: &ModelConfig<S>,
    root: usize,
) -> Result<ReducedSolution<S>, SolveError<S>> {
    let config = check_general(config)?;
    if config.horizon != 3 {
        return Err(SolveError::NotApplicable(format!(
            "the reduced equilibrium solver needs T=3, got T={}",
            config.horizon
        )));
    }
    check_root(&config, root)?;
    let red = Reduction::new(&config, root);
    let income = config.income_npv();

    let (x, lambda) = if config.utility == UtilitySpec::Sqrt {
        // quadratic cost: x = M^{-1} c / lambda with M the Hessian of the cost
        let (_, m_lambda1) = red.derivatives(&config, &vec![S::zero(); red.dim()], S::one());
        let y = solve_spd(&m_lambda1, red.dim(), &red.objective)
            .ok_or_else(|| SolveError::NotApplicable("singular reduced system".into()))?;
        let lambda = (dot(&red.objective, &y) / (S::lit(2.0) * income)).sqrt();
        (y.iter().map(|&v| v / lambda).collect::<Vec<S>>(), lambda)
    } else {
        let start = S::one() / config.utility.phi_prime(config.utility.u_finite(income)?)?;
        let root_lambda = find_budget_multiplier(
            income,
            start,
            start * S::lit(2.0),
            S::tol(BUDGET_REL_TOL),
            |lambda| Ok::<S, SolveError<S>>(red.cost(&config, &red.maximize(&config, root, lambda)?)),
        )?;
        (red.maximize(&config, root, root_lambda.lambda)?, root_lambda.lambda)
    };

    let w = red.w(&x);
    let z = red.z(&x).to_vec();
    let d = &config.deltas;
    let u: Vec<S> = (0..red.n).map(|k| w[k] + d[k] * z[k]).collect();
    let upward = (0..red.n - 1).map(|k| u[k] - (w[k + 1] + d[k] * z[k + 1])).collect();
    let floor = config.utility.floor();
    let interior = match floor {
        Some(f) => x[0] > f && w.iter().chain(&z).all(|&v| v > f),
        None => true,
    };
    let separating = w.windows(2).all(|p| p[1] < p[0]) && z.windows(2).all(|p| p[1] > p[0]);
    let sol = ReducedSolution {
        root,
        v1: x[0],
        u1: u[0],
        budget_residual: red.cost(&config, &x) - income,
        w,
        z,
        u,
        lambda,
        qbar: red.qbar,
        separating,
        interior,
        upward_ic_residuals: upward,
    };
    if !sol.interior {
        return Err(SolveError::NonInterior(Box::new(sol)));
    }
    if !sol.separating {
        return Err(SolveError::NonSeparating(Box::new(sol)));
    }
    Ok(sol)
}

/// Residuals of the four stationarity conditions at a reduced solution, in
/// order: date 1, the `w_1` condition, the `z_n` conditions for `n >= 2`, and
/// efficiency at the bottom.
pub fn stationarity_residuals<S: Real>(sol: &ReducedSolution<S>, config: &ModelConfig<S>) -> Vec<S> {
    let u = &config.utility;
    let (r, lam) = (config.rate, sol.lambda);
    let d = &config.deltas;
    let p = &config.p;
    let n = d.len();
    let fw: Vec<S> = sol.w.iter().map(|&v| u.phi_prime_unchecked(v)).collect();
    let fz: Vec<S> = sol.z.iter().map(|&v| u.phi_prime_unchecked(v)).collect();
    let mut out = vec![S::one() - lam * u.phi_prime_unchecked(sol.v1)];
    out.push(d[sol.root] - lam / r * dot(p, &fw));
    for k in 1..n {
        let tail: S = (k..n).fold(S::zero(), |a, m| a + p[m] * fw[m]);
        let rent = (d[k] - d[k - 1]) * (d[sol.root] * sol.qbar[k] - lam / r * tail);
        out.push(rent + lam * p[k] * d[k] / r * fw[k] - lam * p[k] / (r * r) * fz[k]);
    }
    out.push(d[0] * r * fw[0] - fz[0]);
    out
}

/// Information-rent terms `delta_1 Qbar_n - (lambda/R) sum_{m>=n} p_m
/// phi'(w_m)` for `n >= 2`.
pub fn information_rents<S: Real>(sol: &ReducedSolution<S>, config: &ModelConfig<S>) -> Vec<S> {
    let u = &config.utility;
    let n = config.n_types();
    (1..n)
        .map(|k| {
            let tail = (k..n).fold(S::zero(), |a, m| a + config.p[m] * u.phi_prime_unchecked(sol.w[m]));
            config.deltas[sol.root] * sol.qbar[k] - sol.lambda / config.rate * tail
        })
        .collect()
}

/// Backloading gaps `g_n = phi'(z_n) - delta^(n) R phi'(w_n)`: zero when the
/// split between dates 2 and 3 is efficient, positive when backloaded.
pub fn check_backloading<S: Real>(sol: &ReducedSolution<S>, config: &ModelConfig<S>) -> Result<Vec<S>, SolveError<S>> {
    if !sol.separating || !sol.interior {
        return Err(SolveError::NonSeparating(Box::new(sol.clone())));
    }
    let u = &config.utility;
    Ok((0..sol.w.len())
        .map(|k| u.phi_prime_unchecked(sol.z[k]) - config.deltas[k] * config.rate * u.phi_prime_unchecked(sol.w[k]))
        .collect())
}

/// Residuals of the second-order difference equation linking consecutive
/// date-3 utilities, available for square-root utility on an evenly spaced
/// grid with common uniform beliefs.
pub fn difference_equation_residuals<S: Real>(sol: &ReducedSolution<S>, config: &ModelConfig<S>) -> Option<Vec<S>> {
    let n = config.n_types();
    let d = &config.deltas;
    let h = (d[n - 1] - d[0]) / S::from_usize_lossy(n - 1);
    let uniform = S::one() / S::from_usize_lossy(n);
    let tol = S::tol(1e-12);
    let even = (1..n).all(|k| (d[k] - d[k - 1] - h).abs() <= tol);
    let flat = config.p.iter().chain(&config.q).all(|&x| (x - uniform).abs() <= tol);
    if config.utility != UtilitySpec::Sqrt || !even || !flat || n < 3 {
        return None;
    }
    let inv_r = S::one() / config.rate;
    let z = &sol.z;
    Some(
        (0..n - 2)
            .map(|k| {
                let ratio = (inv_r + d[k + 1] * d[k] - S::lit(2.0) * h * d[k]) / (inv_r + d[k + 2] * d[k + 1]);
                (z[k + 2] - z[k + 1]) - (z[k + 1] - z[k]) * ratio
            })
            .collect(),
    )
}

/// Efficient policies for every initial type, sharing one multiplier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficientSolution<S> {
    pub lambda: S,
    /// One policy per initial type.
    pub policies: Vec<Policy<S>>,
    pub budget_residual: S,
}

fn efficient_tree<S: Real>(config: &ModelConfig<S>, root: usize, lambda: S) -> Result<Policy<S>, SolveError<S>> {
    let mut policy = Policy::filled(config.horizon, config.n_types(), root, S::zero());
    for t in 1..=config.horizon {
        let growth = config.rate.powi(t as i32 - 1);
        for h in policy.histories_at(t) {
            // date-t weight discounts by delta_1 .. delta_{t-1}
            let disc = h.indices()[..t - 1].iter().fold(S::one(), |a, &k| a * config.deltas[k]);
            policy.set(t, &h, config.utility.rho(growth * disc / lambda)?);
        }
    }
    Ok(policy)
}

/// First-best policy on the full history tree: maximizes firm-belief expected
/// discounted utility subject to break-even in expectation over all initial
/// types.
pub fn solve_efficient_policy<S: Real>(config: &ModelConfig<S>) -> Result<EfficientSolution<S>, SolveError<S>> {
    let config = check_general(config)?;
    let income = config.income_npv();
    let spend = |lambda: S| -> Result<S, SolveError<S>> {
        let mut total = S::zero();
        for root in 0..config.n_types() {
            let pol = efficient_tree(&config, root, lambda)?;
            total = total + config.p[root] * pol.expected_cost(&config.utility, &config.p, config.rate);
        }
        Ok(total)
    };
    let start = S::one() / config.utility.phi_prime(config.utility.u_finite(income)?)?;
    let root = find_budget_multiplier(income, start, start * S::lit(2.0), S::tol(BUDGET_REL_TOL), spend)?;
    let policies = (0..config.n_types())
        .map(|r| efficient_tree(&config, r, root.lambda))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EfficientSolution { lambda: root.lambda, policies, budget_residual: root.spend - income })
}

/// First-best policy for a known initial type, breaking even given that type.
/// This is the comparison the equilibrium of the same initial type faces.
pub fn solve_efficient_given_root<S: Real>(
    config: &ModelConfig<S>,
    root: usize,
) -> Result<(Policy<S>, S), SolveError<S>> {
    let config = check_general(config)?;
    check_root(&config, root)?;
    let income = config.income_npv();
    let start = S::one() / config.utility.phi_prime(config.utility.u_finite(income)?)?;
    let found = find_budget_multiplier(income, start, start * S::lit(2.0), S::tol(BUDGET_REL_TOL), |lambda| {
        Ok::<S, SolveError<S>>(efficient_tree(&config, root, lambda)?.expected_cost(&config.utility, &config.p, config.rate))
    })?;
    Ok((efficient_tree(&config, root, found.lambda)?, found.lambda))
}

/// Which beliefs weight the agent's discounting in an identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Beliefs {
    /// Agent beliefs, for equilibrium policies.
    Agent,
    /// Firm beliefs, for efficient policies.
    Firm,
}

impl Beliefs {
    fn probs<'a, S>(self, config: &'a ModelConfig<S>) -> &'a [S] {
        match self {
            Beliefs::Agent => &config.q,
            Beliefs::Firm => &config.p,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerResidual<S> {
    pub date: usize,
    /// History up to `t-1` (just the initial type at `t = 1`), one-based.
    pub history: Vec<usize>,
    pub lhs: S,
    pub rhs: S,
}

impl<S: Real> EulerResidual<S> {
    pub fn residual(&self) -> S {
        self.lhs - self.rhs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerReport<S> {
    pub beliefs: Beliefs,
    pub residuals: Vec<EulerResidual<S>>,
    pub max_abs_residual: S,
}

/// `E_F[phi'(v_{t+1})]` against `R E[delta] E_F[phi'(v_t)]` at every date
/// `t <= T-1` and history, with `delta_1` in place of the expectation at
/// `t = 1`.
pub fn check_inverse_euler<S: Real>(policy: &Policy<S>, config: &ModelConfig<S>, beliefs: Beliefs) -> EulerReport<S> {
    let u = &config.utility;
    let p = &config.p;
    let r = config.rate;
    let n = policy.n_types;
    let horizon = policy.horizon;
    let mean = dot(beliefs.probs(config), &config.deltas);
    let fp = |t: usize, h: &TypeHistory| u.phi_prime_unchecked(policy.get(t, h));

    let root = TypeHistory::new(vec![policy.root]);
    let mut residuals = Vec::new();
    let lhs = (0..n).fold(S::zero(), |a, k| a + p[k] * fp(2, &policy_history(policy, 2, &root, k)));
    residuals.push(EulerResidual {
        date: 1,
        history: root.one_based(),
        lhs,
        rhs: r * config.deltas[policy.root] * fp(1, &root),
    });
    for t in 2..horizon {
        for prefix in TypeHistory::enumerate(n, t - 1, Some(policy.root)) {
            let mut now = S::zero();
            let mut next = S::zero();
            for k in 0..n {
                let h = prefix.push(k);
                now = now + p[k] * fp(t, &h);
                next = next
                    + p[k]
                        * if t + 1 == horizon {
                            fp(horizon, &h)
                        } else {
                            (0..n).fold(S::zero(), |a, m| a + p[m] * fp(t + 1, &h.push(m)))
                        };
            }
            residuals.push(EulerResidual { date: t, history: prefix.one_based(), lhs: next, rhs: r * mean * now });
        }
    }
    let max_abs_residual = max_abs(residuals.iter().map(EulerResidual::residual));
    EulerReport { beliefs, residuals, max_abs_residual }
}

fn policy_history<S: Real>(policy: &Policy<S>, t: usize, prefix: &TypeHistory, k: usize) -> TypeHistory {
    if t <= policy.horizon - 1 {
        prefix.push(k)
    } else {
        prefix.clone()
    }
}

/// Change in `agent payoff - lambda * firm cost` from shifting every date-`t`
/// utility below `prefix` by `-eta E[delta]` and every date-`t+1` utility by
/// `+eta`. `prefix` is the history up to `t-1`; an empty prefix shifts date 1
/// by `-eta delta_1` and date 2 by `+eta`.
pub fn constant_shift_change<S: Real>(
    policy: &Policy<S>,
    config: &ModelConfig<S>,
    lambda: S,
    beliefs: Beliefs,
    prefix: &TypeHistory,
    eta: S,
) -> S {
    let probs = beliefs.probs(config);
    let t = prefix.len() + 1;
    let factor = if prefix.is_empty() { config.deltas[policy.root] } else { dot(probs, &config.deltas) };
    let mut shifted = policy.clone();
    let starts_with = |h: &TypeHistory| prefix.is_empty() || h.indices()[..prefix.len()] == *prefix.indices();
    for h in policy.histories_at(t) {
        if starts_with(&h) {
            shifted.set(t, &h, policy.get(t, &h) - eta * factor);
        }
    }
    for h in policy.histories_at(t + 1) {
        if starts_with(&h) {
            shifted.set(t + 1, &h, policy.get(t + 1, &h) + eta);
        }
    }
    let value = |pol: &Policy<S>| {
        pol.agent_payoff(&config.deltas, probs) - lambda * pol.expected_cost(&config.utility, &config.p, config.rate)
    };
    value(&shifted) - value(policy)
}

/// First-order effect of the shift in [`constant_shift_change`], by a
/// symmetric difference. Zero at an optimum.
pub fn shift_derivative<S: Real>(
    policy: &Policy<S>,
    config: &ModelConfig<S>,
    lambda: S,
    beliefs: Beliefs,
    prefix: &TypeHistory,
) -> S {
    let eta = S::lit(1e-5);
    let up = constant_shift_change(policy, config, lambda, beliefs, prefix, eta);
    let down = constant_shift_change(policy, config, lambda, beliefs, prefix, -eta);
    (up - down) / (eta + eta)
}

/// Ratios `E_F[c_{t+1}] / E_F[c_t]` for `t = 1..T-1`.
pub fn growth_ratios<S: Real>(policy: &Policy<S>, config: &ModelConfig<S>) -> Vec<S> {
    let means: Vec<S> = (1..=policy.horizon)
        .map(|t| {
            policy.histories_at(t).iter().fold(S::zero(), |a, h| {
                let prob = h.indices()[1..].iter().fold(S::one(), |pr, &k| pr * config.p[k]);
                a + prob * config.utility.phi_unchecked(policy.get(t, h))
            })
        })
        .collect();
    means.windows(2).map(|m| m[1] / m[0]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRatios<S> {
    pub equilibrium: Vec<S>,
    pub efficient: Vec<S>,
}

/// Expected-consumption growth ratios of the three-period equilibrium and the
/// efficient policy for the same initial type, for logarithmic utility.
pub fn log_growth_ratios<S: Real>(config: &ModelConfig<S>, root: usize) -> Result<GrowthRatios<S>, SolveError<S>> {
    if config.utility != UtilitySpec::Log {
        return Err(SolveError::NotApplicable("growth ratios are defined for logarithmic utility".into()));
    }
    let eq = solve_equilibrium_t3(config, root)?;
    let (eff, _) = solve_efficient_given_root(config, root)?;
    Ok(GrowthRatios { equilibrium: growth_ratios(&eq.policy(), config), efficient: growth_ratios(&eff, config) })
}

/// Per-date checks of monotonicity and local incentive compatibility on a
/// policy, at every date `2 <= t <= T-1` and history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalIcReport<S> {
    /// Largest increase of `v_t` between adjacent reports (should be <= 0).
    pub max_current_increase: S,
    /// Largest decrease of the agent-belief continuation (should be <= 0).
    pub max_continuation_decrease: S,
    /// Smallest downward local IC slack (should be >= 0).
    pub min_downward_slack: S,
    /// Largest upward local IC slack in absolute value (zero when binding).
    pub max_upward_slack: S,
}

pub fn local_ic_report<S: Real>(policy: &Policy<S>, config: &ModelConfig<S>) -> LocalIcReport<S> {
    let d = &config.deltas;
    let q = &config.q;
    let n = policy.n_types;
    let mut rep = LocalIcReport {
        max_current_increase: S::neg_infinity(),
        max_continuation_decrease: S::neg_infinity(),
        min_downward_slack: S::infinity(),
        max_upward_slack: S::zero(),
    };
    for t in 2..policy.horizon {
        for prefix in TypeHistory::enumerate(n, t - 1, Some(policy.root)) {
            let vals: Vec<(S, S)> = (0..n)
                .map(|k| {
                    let h = prefix.push(k);
                    (policy.get(t, &h), policy.continuation(&h, d, q))
                })
                .collect();
            for k in 0..n - 1 {
                let (v0, c0) = vals[k];
                let (v1, c1) = vals[k + 1];
                rep.max_current_increase = rep.max_current_increase.max(v1 - v0);
                rep.max_continuation_decrease = rep.max_continuation_decrease.max(c0 - c1);
                rep.min_downward_slack = rep.min_downward_slack.min((v1 + d[k + 1] * c1) - (v0 + d[k + 1] * c0));
                rep.max_upward_slack = rep.max_upward_slack.max(((v0 + d[k] * c0) - (v1 + d[k] * c1)).abs());
            }
        }
    }
    rep
}

/// Firm continuation cost after each date-2 type for a three-period policy,
/// discounted to date 2 (`c_2 + c_3 / R`).
pub fn date2_continuation_costs<S: Real>(policy: &Policy<S>, config: &ModelConfig<S>) -> Vec<S> {
    (0..policy.n_types)
        .map(|k| {
            let h = TypeHistory::new(vec![policy.root, k]);
            policy.continuation_cost(&h, &config.utility, &config.p, config.rate).date_t
        })
        .collect()
}
