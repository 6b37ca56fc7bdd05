use std::path::Path;

use serde_json::{json, Value};

use screening_core::model::{Section, TypeHistory};
use screening_core::sec4::{
    check_backloading, check_inverse_euler, date2_continuation_costs, difference_equation_residuals,
    information_rents, local_ic_report, log_growth_ratios, solve_efficient_given_root, solve_equilibrium_t3,
    stationarity_residuals, Beliefs,
};
use screening_core::{ModelConfig, SolveError, UtilitySpec};

use crate::config::{Document, Format};
use crate::fmt::{num, write_json, Table};
use crate::Failure;

/// Everything reported for one initial type.
struct RootResult {
    root: usize,
    rows: Table,
    gaps: Vec<f64>,
    report: Value,
}

fn solve_root(model: &ModelConfig, root: usize) -> Result<RootResult, SolveError> {
    let eq = solve_equilibrium_t3(model, root)?;
    let (eff, eff_lambda) = solve_efficient_given_root(model, root)?;
    let u = model.utility;
    let pol = eq.policy();
    let gaps = check_backloading(&eq, model)?;
    let cost_eq = date2_continuation_costs(&pol, model);
    let cost_eff = date2_continuation_costs(&eff, model);
    let n = model.n_types();

    let mut rows = Table::new(&["n", "delta2", "v1", "w_n", "z_n", "c2", "c3", "contCostEq", "contCostEff", "g_n"]);
    for k in 0..n {
        rows.row(vec![
            (k + 1).to_string(),
            num(model.deltas[k]),
            num(eq.v1),
            num(eq.w[k]),
            num(eq.z[k]),
            num(u.phi(eq.w[k]).map_err(SolveError::from)?),
            num(u.phi(eq.z[k]).map_err(SolveError::from)?),
            num(cost_eq[k]),
            num(cost_eff[k]),
            num(gaps[k]),
        ]);
    }

    // date-1 normalization of the same costs, ordering types identically
    let literal: Vec<f64> = (0..n)
        .map(|k| pol.continuation_cost(&TypeHistory::new(vec![root, k]), &u, &model.p, model.rate).date1)
        .collect();
    let fall = (cost_eq[n - 1] - cost_eq[0]) / cost_eq[n - 1];
    let growth = match u {
        UtilitySpec::Log => Some(log_growth_ratios(model, root)?),
        _ => None,
    };
    let report = json!({
        "delta1Index": root + 1,
        "delta1": model.deltas[root],
        "lambda": eq.lambda,
        "efficientLambda": eff_lambda,
        "equilibrium": check_inverse_euler(&pol, model, Beliefs::Agent),
        "efficient": check_inverse_euler(&eff, model, Beliefs::Firm),
        "continuationCost": {
            "equilibrium": cost_eq,
            "efficient": cost_eff,
            "equilibriumDate1": literal,
            "fallBottomVsTop": fall,
        },
        "stationarityResiduals": stationarity_residuals(&eq, model),
        "upwardIcResiduals": eq.upward_ic_residuals,
        "informationRents": information_rents(&eq, model),
        "differenceEquationResiduals": difference_equation_residuals(&eq, model),
        "localIc": local_ic_report(&pol, model),
        "backloadingGaps": gaps,
        "growthRatios": growth,
        "budgetResidual": eq.budget_residual,
    });
    Ok(RootResult { root, rows, gaps, report })
}

fn diagnostic(e: &SolveError) -> Option<Value> {
    match e {
        SolveError::NonSeparating(c) | SolveError::NonInterior(c) => Some(json!({
            "error": e.to_string(),
            "candidate": c,
        })),
        _ => None,
    }
}

/// Top backloading gap on an even grid over the configured range for each
/// number of types.
fn n_sweep(model: &ModelConfig, list: &[usize], root_top: bool) -> Result<Table, Failure> {
    let lo = model.deltas[0];
    let hi = model.deltas[model.n_types() - 1];
    let mut t = Table::new(&["N", "delta1", "gTop", "gMinAboveBottom"]);
    for &n in list {
        if n < 2 {
            return Err(Failure::Validation(format!("at `run.sweep.nList`: need N >= 2, got {n}")));
        }
        let mut c = model.clone();
        c.deltas = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
        c.p = vec![1.0 / n as f64; n];
        c.q = vec![1.0 / n as f64; n];
        let root = if root_top { n - 1 } else { 0 };
        let eq = solve_equilibrium_t3(&c, root)?;
        let g = check_backloading(&eq, &c)?;
        let min = g[1..].iter().copied().fold(f64::INFINITY, f64::min);
        t.row(vec![n.to_string(), num(c.deltas[root]), num(g[n - 1]), num(min)]);
    }
    Ok(t)
}

pub fn run(config: &Path, out: Option<&Path>, formats: &[Format]) -> Result<(), Failure> {
    let doc = Document::load(config)?;
    doc.expect_section(4)?;
    let model = doc.model();
    model.validate(Some(Section::General)).map_err(|e| Failure::Validation(e.to_string()))?;
    if model.horizon != 3 {
        return Err(Failure::Validation(format!(
            "solve-sec4 handles T=3 (got T={}); use `verify` for the full-program solve",
            model.horizon
        )));
    }
    let roots: Vec<usize> = match doc.delta1()? {
        Some(r) => vec![r],
        None => (0..model.n_types()).collect(),
    };
    let dir = doc.out_dir(out);
    std::fs::create_dir_all(&dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    let formats = doc.formats(formats);

    let mut results = Vec::new();
    for &root in &roots {
        match solve_root(&model, root) {
            Ok(r) => results.push(r),
            Err(e) => {
                if let Some(d) = diagnostic(&e) {
                    write_json(&dir.join("diagnostic.json"), &d)?;
                    eprintln!("{}", serde_json::to_string_pretty(&d).unwrap_or_default());
                }
                return Err(e.into());
            }
        }
    }

    if formats.contains(&Format::Csv) {
        let mut back = Table::new(&["delta1Index", "n", "delta2", "g_n"]);
        for r in &results {
            r.rows.write(&dir.join(format!("sec4_delta1_{}.csv", r.root + 1)))?;
            for (k, g) in r.gaps.iter().enumerate() {
                back.row(vec![(r.root + 1).to_string(), (k + 1).to_string(), num(model.deltas[k]), num(*g)]);
            }
        }
        back.write(&dir.join("backloading.csv"))?;
        if let Some(list) = doc.run.sweep.as_ref().and_then(|s| s.n_list.as_ref()) {
            let top = roots.last() == Some(&(model.n_types() - 1));
            n_sweep(&model, list, top)?.write(&dir.join("backloading_sweep.csv"))?;
        }
    }
    if formats.contains(&Format::Json) {
        let all: Vec<&Value> = results.iter().map(|r| &r.report).collect();
        write_json(&dir.join("euler.json"), &all)?;
    }
    Ok(())
}
