use std::path::Path;

use serde::{Deserialize, Serialize};

use screening_core::model::{Section, TypeHistory};
use screening_core::{ModelConfig, Policy};
use screening_core::oracle::{best_deviation, first_high_values, low_path, solve_full, FullProgram, MAX_HORIZON, MAX_TYPES};
use screening_core::sec3::{build_full_mechanism, kkt_residuals, path_value, welfare_report, Crossing, PathKind};
use screening_core::sec4::{
    check_backloading, check_inverse_euler, local_ic_report, shift_derivative, solve_efficient_policy,
    solve_equilibrium_t3, stationarity_residuals, Beliefs,
};
use screening_core::SolveError;

use crate::config::Document;
use crate::fmt::write_json;
use crate::Failure;

const TIGHT: f64 = 1e-8;
const OBJECTIVE_REL: f64 = 1e-6;
const POLICY_SUP: f64 = 1e-5;

#[derive(Debug, Serialize)]
struct Check {
    name: String,
    passed: bool,
    value: Option<f64>,
    tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    detail: Option<String>,
}

#[derive(Default)]
struct Checks(Vec<Check>);

impl Checks {
    fn at_most(&mut self, name: impl Into<String>, value: f64, tol: f64) {
        self.0.push(Check { name: name.into(), passed: value.abs() <= tol, value: Some(value), tolerance: Some(tol), detail: None });
    }

    fn flag(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.0.push(Check { name: name.into(), passed, value: None, tolerance: None, detail: Some(detail.into()) });
    }

    fn error(&mut self, name: impl Into<String>, e: &SolveError) {
        self.flag(name, false, e.to_string());
    }
}

fn max_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn deviation(checks: &mut Checks, name: &str, policy: &Policy, model: &ModelConfig) {
    let rep = best_deviation(policy, model);
    let gap = rep.gap().max(rep.max_node_gap);
    let mut c = Check { name: name.into(), passed: gap <= TIGHT, value: Some(gap), tolerance: Some(TIGHT), detail: None };
    if let Some(w) = rep.witness {
        let h: Vec<String> = w.history.iter().map(|k| k.to_string()).collect();
        c.detail = Some(format!(
            "type {} at date {} after ({}) gains {:.3e} by reporting {}",
            w.true_type,
            w.date,
            h.join(","),
            w.gain,
            w.report
        ));
    }
    checks.0.push(c);
}

fn general_three_period(checks: &mut Checks, model: &ModelConfig, root: usize) {
    let tag = format!("delta1={}", root + 1);
    let eq = match solve_equilibrium_t3(model, root) {
        Ok(s) => s,
        Err(e) => return checks.error(format!("{tag} reduced solve"), &e),
    };
    let pol = eq.policy();
    checks.at_most(format!("{tag} budget"), eq.budget_residual, 1e-9 * model.income_npv());
    checks.at_most(format!("{tag} binding upward IC"), max_abs(&eq.upward_ic_residuals), 1e-9);
    checks.at_most(format!("{tag} stationarity"), max_abs(&stationarity_residuals(&eq, model)), TIGHT);
    checks.at_most(format!("{tag} inverse Euler"), check_inverse_euler(&pol, model, Beliefs::Agent).max_abs_residual, TIGHT);
    let shift = [TypeHistory::new(vec![]), TypeHistory::new(vec![root])]
        .iter()
        .map(|h| shift_derivative(&pol, model, eq.lambda, Beliefs::Agent, h).abs())
        .fold(0.0, f64::max);
    checks.at_most(format!("{tag} constant shift"), shift, TIGHT);
    let local = local_ic_report(&pol, model);
    checks.flag(
        format!("{tag} monotone"),
        local.max_current_increase < 0.0 && local.max_continuation_decrease < 0.0,
        format!("max rise in v2 {:.3e}, max fall in continuation {:.3e}", local.max_current_increase, local.max_continuation_decrease),
    );
    match check_backloading(&eq, model) {
        Ok(g) => checks.at_most(format!("{tag} efficient at bottom"), g[0], TIGHT),
        Err(e) => checks.error(format!("{tag} backloading"), &e),
    }
    deviation(checks, &format!("{tag} full IC"), &pol, model);
    if model.n_types() <= MAX_TYPES {
        match FullProgram::new(model, root).and_then(|p| solve_full(&p, None)) {
            Ok(full) => {
                let v = pol.agent_payoff(&model.deltas, &model.q);
                checks.at_most(format!("{tag} oracle objective"), (full.objective - v) / v, OBJECTIVE_REL);
                checks.at_most(format!("{tag} oracle policy"), full.policy.sup_distance(&pol), POLICY_SUP);
            }
            Err(e) => checks.error(format!("{tag} oracle"), &e),
        }
    }
}

fn general_oracle(checks: &mut Checks, model: &ModelConfig, root: usize) {
    let tag = format!("delta1={}", root + 1);
    match FullProgram::new(model, root).and_then(|p| solve_full(&p, None)) {
        Ok(full) => {
            checks.at_most(format!("{tag} oracle KKT"), full.kkt.max(), 1e-7);
            let e = check_inverse_euler(&full.policy, model, Beliefs::Agent);
            checks.at_most(format!("{tag} inverse Euler (full program)"), e.max_abs_residual, TIGHT);
            deviation(checks, &format!("{tag} full IC"), &full.policy, model);
        }
        Err(e) => checks.error(format!("{tag} oracle"), &e),
    }
}

fn general(checks: &mut Checks, model: &ModelConfig) {
    match solve_efficient_policy(model) {
        Ok(eff) => {
            checks.at_most("efficient budget", eff.budget_residual, 1e-9 * model.income_npv());
            let worst = eff
                .policies
                .iter()
                .map(|p| check_inverse_euler(p, model, Beliefs::Firm).max_abs_residual)
                .fold(0.0, f64::max);
            checks.at_most("efficient inverse Euler", worst, TIGHT);
        }
        Err(e) => checks.error("efficient", &e),
    }
    let small = model.n_types() <= MAX_TYPES && model.horizon <= MAX_HORIZON;
    for root in 0..model.n_types() {
        if model.horizon == 3 {
            general_three_period(checks, model, root);
        } else if small {
            general_oracle(checks, model, root);
        }
    }
    if model.horizon > 3 && !small {
        checks.flag("equilibrium", true, format!("skipped: full program limited to T <= {MAX_HORIZON}, N <= {MAX_TYPES}"));
    }
}

fn two_type(checks: &mut Checks, model: &ModelConfig) {
    let rep = match welfare_report(model) {
        Ok(r) => r,
        Err(e) => return checks.error("paths", &e),
    };
    for (name, path) in [("equilibrium", &rep.equilibrium), ("efficient", &rep.efficient), ("benchmark", &rep.benchmark)] {
        checks.at_most(format!("{name} path KKT"), max_abs(&kkt_residuals(model, path)), TIGHT);
        checks.at_most(format!("{name} budget"), path.budget_residual, 1e-9 * model.income_npv());
    }
    checks.flag("single crossing", matches!(rep.crossing, Crossing::At(_) | Crossing::None), format!("{:?}", rep.crossing));
    checks.flag("first-date ordering", rep.efficient.path[0] >= rep.equilibrium.path[0], format!("{} vs {}", rep.efficient.path[0], rep.equilibrium.path[0]));
    let mech = match build_full_mechanism(model, &rep.equilibrium) {
        Ok(m) => m,
        Err(e) => return checks.error("mechanism", &e),
    };
    let floor = model.utility.floor().unwrap_or(0.0);
    let off = first_high_values(&mech.policy).iter().fold(0.0f64, |m, v| m.max((v - floor).abs()));
    checks.at_most("off-path at floor", off, 0.0);
    let payoff = mech.policy.agent_payoff(&model.deltas, &model.q);
    let reduced = path_value(model, PathKind::Equilibrium, &rep.equilibrium.path);
    checks.at_most("payoff identity", (payoff - reduced) / reduced.abs().max(1.0), 1e-9);
    deviation(checks, "full IC", &mech.policy, model);
    if model.horizon <= MAX_HORIZON {
        match FullProgram::new(model, 0).and_then(|p| solve_full(&p, None)) {
            Ok(full) => {
                checks.at_most("oracle objective", (full.objective - payoff) / payoff.abs().max(1.0), OBJECTIVE_REL);
                let mut sup = 0.0f64;
                for (a, b) in low_path(&full.policy).iter().zip(&rep.equilibrium.path) {
                    sup = sup.max((a - b).abs());
                }
                for (a, b) in first_high_values(&full.policy).iter().zip(first_high_values(&mech.policy)) {
                    sup = sup.max((a - b).abs());
                }
                checks.at_most("oracle path", sup, POLICY_SUP);
            }
            Err(e) => checks.error("oracle", &e),
        }
    }
}

/// Accepts a bare policy or any object holding one under `policy`.
#[derive(Deserialize)]
#[serde(untagged)]
enum PolicyFile {
    Bare(Policy),
    Wrapped { policy: Policy },
}

fn stored_policy(checks: &mut Checks, model: &ModelConfig, path: &Path) -> Result<(), Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Validation(format!("cannot read {}: {e}", path.display())))?;
    let policy = match serde_json::from_str::<PolicyFile>(&text) {
        Ok(PolicyFile::Bare(p)) | Ok(PolicyFile::Wrapped { policy: p }) => p,
        Err(e) => return Err(Failure::Validation(format!("{}: not a policy: {e}", path.display()))),
    };
    let shaped = policy.is_well_formed() && policy.horizon == model.horizon && policy.n_types == model.n_types();
    checks.flag("policy shape", shaped, format!("T={}, N={}, initial type {}", policy.horizon, policy.n_types, policy.root + 1));
    if !shaped {
        return Ok(());
    }
    let cost = policy.expected_cost(&model.utility, &model.p, model.rate);
    checks.at_most("policy budget", (cost - model.income_npv()) / model.income_npv(), 1e-8);
    deviation(checks, "policy full IC", &policy, model);
    Ok(())
}

pub fn run(config: &Path, policy: Option<&Path>, out: Option<&Path>) -> Result<(), Failure> {
    let doc = Document::load(config)?;
    let model = doc.model();
    let section = match doc.run.section {
        Some(3) => Section::DegenerateImpatience,
        Some(4) => Section::General,
        Some(s) => return Err(Failure::Validation(format!("at `run.section`: expected 3 or 4, got {s}"))),
        None if model.n_types() == 2 && model.p.first() == Some(&1.0) => Section::DegenerateImpatience,
        None => Section::General,
    };
    model.validate(Some(section)).map_err(|e| Failure::Validation(e.to_string()))?;

    let mut checks = Checks::default();
    match (policy, section) {
        (Some(p), _) => stored_policy(&mut checks, &model, p)?,
        (None, Section::DegenerateImpatience) => two_type(&mut checks, &model),
        (None, Section::General) => general(&mut checks, &model),
    }
    let failed: Vec<&str> = checks.0.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let report = serde_json::json!({ "passed": failed.is_empty(), "checks": checks.0 });
    println!("{}", serde_json::to_string_pretty(&report).unwrap_or_default());
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
        write_json(&dir.join("verify.json"), &report)?;
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verify(format!("{} check(s) failed: {}", failed.len(), failed.join(", "))))
    }
}
