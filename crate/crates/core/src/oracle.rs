//! Brute-force reference solver and deviation checker.
//!
//! [`FullProgram`] states the firm's problem for one initial type on the whole
//! history tree with every pairwise incentive constraint, and [`solve_full`]
//! maximizes it with an augmented Lagrangian. Nothing here uses the structure
//! the fast solvers exploit, which is what makes it a useful cross-check.
//! [`best_deviation`] finds the agent's best reporting strategy against any
//! policy by backward induction.

use serde::{Deserialize, Serialize};

use crate::error::SolveError;
use crate::linalg::{solve_lu, solve_psd_regularized};
use crate::model::{ModelConfig, Policy, Section, TypeHistory};
use crate::scalar::{dot, max_abs, Real};

pub const MAX_TYPES: usize = 3;
pub const MAX_HORIZON: usize = 4;
const KKT_TOL: f64 = 1e-7;
const ROUNDS_WITH_GROWTH: usize = 8;
const MAX_ROUNDS: usize = 40;
const MAX_INNER_TOTAL: usize = 100_000;
const MAX_INNER_PER_ROUND: usize = 500;
const MAX_HALVINGS: usize = 80;

/// One pairwise constraint: at date `date` after `history`, type `truth` weakly
/// prefers its own report to `report`. Holds when `coeffs . x >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcRow<S> {
    pub date: usize,
    pub history: TypeHistory,
    pub truth: usize,
    pub report: usize,
    pub coeffs: Vec<S>,
}

/// The firm's problem for a fixed initial type with all incentive constraints.
/// Variables follow the flattening order of [`Policy::values`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullProgram<S> {
    pub config: ModelConfig<S>,
    pub root: usize,
    pub shape: Policy<S>,
    pub objective: Vec<S>,
    /// Cost is `sum_i cost_weights[i] * phi(x_i)`.
    pub cost_weights: Vec<S>,
    pub income: S,
    pub ics: Vec<IcRow<S>>,
    pub lower: Vec<S>,
    pub upper: Vec<S>,
}

// Coefficients of the linear map `x -> policy.continuation(h, ..)`.
fn continuation_coeffs<S: Real>(
    coeffs: &mut Policy<S>,
    h: &TypeHistory,
    scale: S,
    deltas: &[S],
    probs: &[S],
) {
    let t = h.len();
    let horizon = coeffs.horizon;
    if t + 1 == horizon {
        let c = coeffs.get(horizon, h);
        coeffs.set(horizon, h, c + scale);
        return;
    }
    for n in 0..coeffs.n_types {
        let next = h.push(n);
        let w = scale * probs[n];
        let c = coeffs.get(t + 1, &next);
        coeffs.set(t + 1, &next, c + w);
        continuation_coeffs(coeffs, &next, w * deltas[n], deltas, probs);
    }
}

fn flat<S: Real>(p: &Policy<S>) -> Vec<S> {
    p.values().collect()
}

impl<S: Real> FullProgram<S> {
    /// Builds the program for initial type `root`. Two-type configurations
    /// with all firm mass on the low type are the degenerate setting; every
    /// other configuration must satisfy the general assumptions.
    pub fn new(config: &ModelConfig<S>, root: usize) -> Result<Self, SolveError<S>> {
        let n = config.n_types();
        let degenerate = n == 2 && config.p.first() == Some(&S::one());
        let section = if degenerate { Section::DegenerateImpatience } else { Section::General };
        let config = config.validate(Some(section))?.config;
        if n > MAX_TYPES || config.horizon > MAX_HORIZON {
            return Err(SolveError::NotApplicable(format!(
                "full program is limited to T <= {MAX_HORIZON} and N <= {MAX_TYPES} (got T={}, N={n})",
                config.horizon
            )));
        }
        if root >= n {
            return Err(SolveError::NotApplicable(format!("initial type index {} outside 1..={n}", root + 1)));
        }
        let horizon = config.horizon;
        let zero = Policy::filled(horizon, n, root, S::zero());
        let (d, p, q) = (&config.deltas, &config.p, &config.q);

        let root_h = TypeHistory::new(vec![root]);
        let mut obj = zero.clone();
        obj.set(1, &root_h, S::one());
        continuation_coeffs(&mut obj, &root_h, d[root], d, q);

        let mut cost = zero.clone();
        for t in 1..=horizon {
            let disc = S::one() / config.rate.powi(t as i32 - 1);
            for h in zero.histories_at(t) {
                let prob = h.indices()[1..].iter().fold(S::one(), |a, &k| a * p[k]);
                cost.set(t, &h, prob * disc);
            }
        }

        let mut ics = Vec::new();
        for t in 2..horizon {
            for prefix in TypeHistory::enumerate(n, t - 1, Some(root)) {
                for truth in 0..n {
                    for report in (0..n).filter(|&m| m != truth) {
                        let mut a = zero.clone();
                        let own = prefix.push(truth);
                        let other = prefix.push(report);
                        a.set(t, &own, S::one());
                        a.set(t, &other, -S::one());
                        continuation_coeffs(&mut a, &own, d[truth], d, q);
                        continuation_coeffs(&mut a, &other, -d[truth], d, q);
                        ics.push(IcRow { date: t, history: prefix.clone(), truth, report, coeffs: flat(&a) });
                    }
                }
            }
        }

        let income = config.income_npv();
        let u = &config.utility;
        let lo = match u.floor() {
            Some(f) => f,
            None => u.u_finite(S::lit(1e-9) * income)?,
        };
        let hi = u.u_finite(S::lit(1e3) * income)?;
        let m = zero.values().count();
        Ok(Self {
            root,
            objective: flat(&obj),
            cost_weights: flat(&cost),
            income,
            ics,
            lower: vec![lo; m],
            upper: vec![hi; m],
            shape: zero,
            config,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    /// Pairwise incentive constraints plus the budget.
    pub fn constraint_count(&self) -> usize {
        self.ics.len() + 1
    }

    pub fn cost(&self, x: &[S]) -> S {
        let u = &self.config.utility;
        self.cost_weights.iter().zip(x).fold(S::zero(), |a, (&w, &v)| a + w * u.phi_unchecked(v))
    }

    pub fn policy_from(&self, x: &[S]) -> Policy<S> {
        let mut p = self.shape.clone();
        let mut it = x.iter();
        for date in p.dates.iter_mut() {
            for v in date.iter_mut() {
                *v = *it.next().expect("vector length matches the tree");
            }
        }
        p
    }

    /// Constant policy exhausting the budget.
    pub fn constant_start(&self) -> Result<Policy<S>, SolveError<S>> {
        let total = self.cost_weights.iter().fold(S::zero(), |a, &w| a + w);
        let v = self.config.utility.u_finite(self.income / total)?;
        Ok(Policy::filled(self.config.horizon, self.config.n_types(), self.root, v))
    }

    fn constraints(&self) -> Vec<Constraint<S>> {
        let m = self.n_vars();
        let mut out: Vec<Constraint<S>> =
            self.ics.iter().map(|r| Constraint::Linear { a: r.coeffs.clone(), b: S::zero() }).collect();
        for i in 0..m {
            let mut e = vec![S::zero(); m];
            e[i] = S::one();
            out.push(Constraint::Linear { a: e.clone(), b: self.lower[i] });
            e[i] = -S::one();
            out.push(Constraint::Linear { a: e, b: -self.upper[i] });
        }
        out.push(Constraint::Budget);
        out
    }
}

enum Constraint<S> {
    /// `a . x - b >= 0`
    Linear { a: Vec<S>, b: S },
    /// `income - cost(x) >= 0`
    Budget,
}

impl<S: Real> Constraint<S> {
    fn value(&self, prog: &FullProgram<S>, x: &[S]) -> S {
        match self {
            Constraint::Linear { a, b } => dot(a, x) - *b,
            Constraint::Budget => prog.income - prog.cost(x),
        }
    }

    fn gradient(&self, prog: &FullProgram<S>, x: &[S]) -> Vec<S> {
        match self {
            Constraint::Linear { a, .. } => a.clone(),
            Constraint::Budget => {
                let u = &prog.config.utility;
                prog.cost_weights.iter().zip(x).map(|(&w, &v)| -w * u.phi_prime_unchecked(v)).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub violation: f64,
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.violation).max(self.complementarity)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullSolution<S> {
    pub policy: Policy<S>,
    pub objective: S,
    /// Multiplier on the budget.
    pub lambda: S,
    pub kkt: KktResiduals,
    pub rounds: usize,
    pub inner_iterations: usize,
    pub polished: bool,
}

struct State<S> {
    x: Vec<S>,
    y: Vec<S>,
    rho: S,
}

fn merit<S: Real>(prog: &FullProgram<S>, cons: &[Constraint<S>], st: &State<S>, x: &[S]) -> S {
    let mut v = -dot(&prog.objective, x);
    let two = S::lit(2.0);
    for (c, &y) in cons.iter().zip(&st.y) {
        let s = (y - st.rho * c.value(prog, x)).max(S::zero());
        v = v + (s * s - y * y) / (two * st.rho);
    }
    v
}

fn merit_derivatives<S: Real>(
    prog: &FullProgram<S>,
    cons: &[Constraint<S>],
    st: &State<S>,
) -> (Vec<S>, Vec<S>) {
    let m = prog.n_vars();
    let u = &prog.config.utility;
    let mut grad: Vec<S> = prog.objective.iter().map(|&c| -c).collect();
    let mut hess = vec![S::zero(); m * m];
    for (c, &y) in cons.iter().zip(&st.y) {
        let s = y - st.rho * c.value(prog, &st.x);
        if s <= S::zero() {
            continue;
        }
        let g = c.gradient(prog, &st.x);
        for i in 0..m {
            grad[i] = grad[i] - s * g[i];
        }
        match c {
            Constraint::Linear { a, .. } => {
                let nz: Vec<usize> = (0..m).filter(|&i| a[i] != S::zero()).collect();
                for &i in &nz {
                    for &j in &nz {
                        hess[i * m + j] = hess[i * m + j] + st.rho * a[i] * a[j];
                    }
                }
            }
            Constraint::Budget => {
                for i in 0..m {
                    for j in 0..m {
                        hess[i * m + j] = hess[i * m + j] + st.rho * g[i] * g[j];
                    }
                    hess[i * m + i] =
                        hess[i * m + i] + s * prog.cost_weights[i] * u.phi_second_unchecked(st.x[i]);
                }
            }
        }
    }
    (grad, hess)
}

fn in_domain<S: Real>(prog: &FullProgram<S>, x: &[S]) -> bool {
    use crate::utility::UtilitySpec;
    match prog.config.utility {
        UtilitySpec::Isoelastic(g) if g != S::lit(0.5) => x.iter().zip(&prog.lower).all(|(&v, &lo)| v >= lo),
        _ => x.iter().all(|v| v.is_finite()),
    }
}

// Semismooth Newton on the augmented Lagrangian for fixed multipliers.
fn inner_solve<S: Real>(prog: &FullProgram<S>, cons: &[Constraint<S>], st: &mut State<S>, budget: &mut usize) {
    let m = prog.n_vars();
    // penalty terms carry rounding of order rho * eps
    let scale = max_abs(prog.objective.iter().copied()).max(S::one());
    let tol = (S::tol(1e-13) * scale).max(st.rho * S::epsilon() * S::lit(16.0));
    for _ in 0..MAX_INNER_PER_ROUND {
        if *budget == 0 {
            return;
        }
        *budget -= 1;
        let (grad, hess) = merit_derivatives(prog, cons, st);
        if max_abs(grad.iter().copied()) <= tol {
            return;
        }
        let neg: Vec<S> = grad.iter().map(|&g| -g).collect();
        let step = solve_psd_regularized(&hess, m, &neg);
        let slope = dot(&grad, &step);
        if !(slope < S::zero()) {
            return;
        }
        let f0 = merit(prog, cons, st, &st.x);
        let mut alpha = S::one();
        let mut moved = false;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<S> = st.x.iter().zip(&step).map(|(&a, &d)| a + alpha * d).collect();
            if in_domain(prog, &trial) && merit(prog, cons, st, &trial) <= f0 + S::lit(1e-4) * alpha * slope {
                moved = trial != st.x;
                st.x = trial;
                break;
            }
            alpha = alpha / S::lit(2.0);
        }
        if !moved {
            return;
        }
    }
}

fn kkt<S: Real>(prog: &FullProgram<S>, cons: &[Constraint<S>], x: &[S], y: &[S]) -> KktResiduals {
    let mut stat: Vec<S> = prog.objective.iter().map(|&c| -c).collect();
    let mut violation = S::zero();
    let mut compl = S::zero();
    for (c, &yi) in cons.iter().zip(y) {
        let g = c.value(prog, x);
        violation = violation.max(-g);
        compl = compl.max((yi * g).abs());
        if yi != S::zero() {
            for (s, gi) in stat.iter_mut().zip(c.gradient(prog, x)) {
                *s = *s - yi * gi;
            }
        }
    }
    KktResiduals {
        stationarity: max_abs(stat).as_f64(),
        violation: violation.as_f64(),
        complementarity: compl.as_f64(),
    }
}

// Newton on the KKT system restricted to the constraints with positive
// multipliers. Returns `None` when the system is singular or the result is
// not an improvement.
fn polish<S: Real>(prog: &FullProgram<S>, cons: &[Constraint<S>], x: &[S], y: &[S]) -> Option<(Vec<S>, Vec<S>)> {
    let m = prog.n_vars();
    let u = &prog.config.utility;
    let ymax = max_abs(y.iter().copied()).max(S::one());
    let active: Vec<usize> = (0..cons.len()).filter(|&i| y[i] > S::tol(1e-12) * ymax).collect();
    let k = active.len();
    let dim = m + k;
    let mut x = x.to_vec();
    let mut ya: Vec<S> = active.iter().map(|&i| y[i]).collect();
    let residual = |x: &[S], ya: &[S]| -> Vec<S> {
        let mut r: Vec<S> = prog.objective.iter().map(|&c| -c).collect();
        for (j, &i) in active.iter().enumerate() {
            for (ri, gi) in r.iter_mut().zip(cons[i].gradient(prog, x)) {
                *ri = *ri - ya[j] * gi;
            }
        }
        r.extend(active.iter().map(|&i| cons[i].value(prog, x)));
        r
    };
    let start = max_abs(residual(&x, &ya));
    let mut norm = start;
    for _ in 0..30 {
        if norm <= S::epsilon() * S::lit(16.0) {
            break;
        }
        let r = residual(&x, &ya);
        let mut jac = vec![S::zero(); dim * dim];
        for (j, &i) in active.iter().enumerate() {
            let g = cons[i].gradient(prog, &x);
            for a in 0..m {
                jac[a * dim + m + j] = -g[a];
                jac[(m + j) * dim + a] = g[a];
            }
            if let Constraint::Budget = cons[i] {
                for a in 0..m {
                    jac[a * dim + a] =
                        jac[a * dim + a] + ya[j] * prog.cost_weights[a] * u.phi_second_unchecked(x[a]);
                }
            }
        }
        let neg: Vec<S> = r.iter().map(|&v| -v).collect();
        let d = solve_lu(&jac, dim, &neg)?;
        for a in 0..m {
            x[a] = x[a] + d[a];
        }
        for j in 0..k {
            ya[j] = ya[j] + d[m + j];
        }
        let next = max_abs(residual(&x, &ya));
        if !(next < norm) {
            norm = next;
            break;
        }
        norm = next;
    }
    let feasible = (0..cons.len()).all(|i| cons[i].value(prog, &x) >= -S::tol(1e-12));
    if !(norm <= start) || !feasible || ya.iter().any(|&v| v < S::zero()) || !in_domain(prog, &x) {
        return None;
    }
    let mut y_full = vec![S::zero(); cons.len()];
    for (j, &i) in active.iter().enumerate() {
        y_full[i] = ya[j];
    }
    Some((x, y_full))
}

/// Maximizes the full program from `start` (the constant budget-exhausting
/// policy when `None`). Deterministic: a fixed schedule, no randomness.
pub fn solve_full<S: Real>(prog: &FullProgram<S>, start: Option<&Policy<S>>) -> Result<FullSolution<S>, SolveError<S>> {
    let cons = prog.constraints();
    let x0 = match start {
        Some(p) => p.values().collect(),
        None => prog.constant_start()?.values().collect(),
    };
    let mut st = State { x: x0, y: vec![S::zero(); cons.len()], rho: S::lit(10.0) };
    let mut budget = MAX_INNER_TOTAL;
    let mut rounds = 0;
    let fine = S::tol(1e-10);
    let mut last_violation = S::infinity();
    while rounds < MAX_ROUNDS && budget > 0 {
        rounds += 1;
        inner_solve(prog, &cons, &mut st, &mut budget);
        let mut violation = S::zero();
        for (c, y) in cons.iter().zip(st.y.iter_mut()) {
            let g = c.value(prog, &st.x);
            violation = violation.max(-g);
            *y = (*y - st.rho * g).max(S::zero());
        }
        let res = kkt(prog, &cons, &st.x, &st.y);
        if S::lit(res.max()) <= fine && violation <= fine {
            break;
        }
        // grow the penalty only while feasibility stalls
        if rounds <= ROUNDS_WITH_GROWTH && violation > S::lit(0.25) * last_violation {
            st.rho = st.rho * S::lit(10.0);
        }
        last_violation = violation;
    }
    let mut polished = false;
    if let Some((x, y)) = polish(prog, &cons, &st.x, &st.y) {
        if kkt(prog, &cons, &x, &y).max() <= kkt(prog, &cons, &st.x, &st.y).max() {
            st.x = x;
            st.y = y;
            polished = true;
        }
    }
    let res = kkt(prog, &cons, &st.x, &st.y);
    if res.max() > KKT_TOL {
        return Err(SolveError::IterationCap { stationarity: res.stationarity, violation: res.violation });
    }
    let lambda = *st.y.last().expect("budget is the last constraint");
    Ok(FullSolution {
        policy: prog.policy_from(&st.x),
        objective: dot(&prog.objective, &st.x),
        lambda,
        kkt: res,
        rounds,
        inner_iterations: MAX_INNER_TOTAL - budget,
        polished,
    })
}

/// First profitable misreport found at the node with the largest gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationWitness<S> {
    pub date: usize,
    /// Reported history before `date`, one-based.
    pub history: Vec<usize>,
    /// One-based.
    pub true_type: usize,
    /// One-based.
    pub report: usize,
    pub gain: S,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport<S> {
    /// Expected value from date 2 on of the best reporting strategy.
    pub best_value: S,
    pub truthful_value: S,
    /// Largest gain over truth-telling at any date, history and type.
    pub max_node_gap: S,
    pub witness: Option<DeviationWitness<S>>,
}

impl<S: Real> DeviationReport<S> {
    pub fn gap(&self) -> S {
        self.best_value - self.truthful_value
    }
}

const WITNESS_THRESHOLD: f64 = 1e-8;

/// Agent-belief optimal reporting against `policy`, by backward induction over
/// reported histories. Values are in date-2 utility units.
pub fn best_deviation<S: Real>(policy: &Policy<S>, config: &ModelConfig<S>) -> DeviationReport<S> {
    let n = policy.n_types;
    let horizon = policy.horizon;
    let (d, q) = (&config.deltas, &config.q);
    let root = TypeHistory::new(vec![policy.root]);

    // best[h] and truthful[h]: expected value from date len(h)+1 onward after
    // the reported history h, before that date's type is drawn
    fn walk<S: Real>(
        policy: &Policy<S>,
        d: &[S],
        q: &[S],
        h: &TypeHistory,
        best_gap: &mut Option<DeviationWitness<S>>,
        max_gap: &mut S,
    ) -> (S, S) {
        let t = h.len() + 1;
        let n = policy.n_types;
        let mut next = Vec::with_capacity(n);
        for m in 0..n {
            let hm = h.push(m);
            let cont = if t + 1 == policy.horizon {
                let v = policy.get(policy.horizon, &hm);
                (v, v)
            } else {
                walk(policy, d, q, &hm, best_gap, max_gap)
            };
            next.push((policy.get(t, &hm), cont));
        }
        let (mut best, mut truthful) = (S::zero(), S::zero());
        for k in 0..n {
            let own = next[k].0 + d[k] * next[k].1 .1;
            let (arg, top) = (0..n)
                .map(|m| (m, next[m].0 + d[k] * next[m].1 .0))
                .fold((k, S::neg_infinity()), |acc, c| if c.1 > acc.1 { c } else { acc });
            let gain = top - own;
            if gain > *max_gap {
                *max_gap = gain;
                if gain > S::lit(WITNESS_THRESHOLD) {
                    *best_gap = Some(DeviationWitness {
                        date: t,
                        history: h.one_based(),
                        true_type: k + 1,
                        report: arg + 1,
                        gain,
                    });
                }
            }
            best = best + q[k] * top;
            truthful = truthful + q[k] * own;
        }
        (best, truthful)
    }

    let mut witness = None;
    let mut max_gap = S::zero();
    let (best_value, truthful_value) = if horizon >= 3 && n > 0 {
        walk(policy, d, q, &root, &mut witness, &mut max_gap)
    } else {
        (S::zero(), S::zero())
    };
    DeviationReport { best_value, truthful_value, max_node_gap: max_gap, witness }
}

/// Date-`t` values along the all-low history, `t = 1..T`.
pub fn low_path<S: Real>(policy: &Policy<S>) -> Vec<S> {
    (1..=policy.horizon).map(|t| policy.get(t, &TypeHistory::lowest(policy.history_len(t)))).collect()
}

/// Date-`t` values after the first high report, `t = 2..T-1`.
pub fn first_high_values<S: Real>(policy: &Policy<S>) -> Vec<S> {
    (2..policy.horizon)
        .map(|t| policy.get(t, &TypeHistory::lowest(t - 1).push(1)))
        .collect()
}
