use std::path::Path;

use serde::Serialize;
use serde_json::json;

use screening_core::model::Section;
use screening_core::ModelConfig;
use screening_core::sec3::{build_full_mechanism, sweep_horizon, welfare_report, Crossing, PathKind};

use crate::config::{Document, Format};
use crate::fmt::{num, write_json, Table};
use crate::Failure;

#[derive(Serialize)]
struct GapPoint {
    #[serde(rename = "T")]
    horizon: usize,
    #[serde(rename = "W_A_minus_W_E")]
    benchmark_gap: f64,
    #[serde(rename = "V_B_minus_V_E")]
    efficiency_gap: f64,
}

fn t_star(c: Crossing) -> Option<usize> {
    match c {
        Crossing::At(t) => Some(t),
        _ => None,
    }
}

pub fn run(config: &Path, out: Option<&Path>, formats: &[Format]) -> Result<(), Failure> {
    let doc = Document::load(config)?;
    doc.expect_section(3)?;
    let model: ModelConfig = doc.model();
    let validated = model.validate(Some(Section::DegenerateImpatience)).map_err(|e| Failure::Validation(e.to_string()))?;
    for note in &validated.notes {
        eprintln!("note: {note}");
    }
    let report = welfare_report(&model)?;
    let mech = build_full_mechanism(&model, &report.equilibrium)?;

    let (gaps, side, warnings) = match &doc.run.sweep {
        Some(s) if s.t_min.is_some() || s.t_max.is_some() => {
            let lo = s.t_min.unwrap_or(3);
            let hi = s.t_max.unwrap_or(model.horizon);
            if lo < 3 || hi < lo {
                return Err(Failure::Validation(format!("at `run.sweep`: need 3 <= tMin <= tMax, got {lo}..{hi}")));
            }
            let sweep = sweep_horizon(&model, lo..=hi)?;
            let points = sweep
                .reports
                .iter()
                .map(|r| GapPoint { horizon: r.horizon, benchmark_gap: r.benchmark_gap(), efficiency_gap: r.efficiency_gap() })
                .collect();
            (points, Some(sweep.side_condition), sweep.warnings)
        }
        _ => (
            vec![GapPoint {
                horizon: report.horizon,
                benchmark_gap: report.benchmark_gap(),
                efficiency_gap: report.efficiency_gap(),
            }],
            None,
            Vec::new(),
        ),
    };
    for w in &warnings {
        eprintln!("warning: {w}");
    }

    let dir = doc.out_dir(out);
    std::fs::create_dir_all(&dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    let formats = doc.formats(formats);
    let u = model.utility;
    if formats.contains(&Format::Csv) {
        let mut t = Table::new(&["t", "vEq", "vEff", "vBench", "cEq", "cEff", "cBench"]);
        let ce = report.equilibrium.consumption(&model);
        let cb = report.efficient.consumption(&model);
        let ca = report.benchmark.consumption(&model);
        for k in 0..model.horizon {
            t.row(vec![
                (k + 1).to_string(),
                num(report.equilibrium.path[k]),
                num(report.efficient.path[k]),
                num(report.benchmark.path[k]),
                num(ce[k]),
                num(cb[k]),
                num(ca[k]),
            ]);
        }
        t.write(&dir.join("path.csv"))?;
    }
    if formats.contains(&Format::Json) {
        let welfare = json!({
            "W_A": report.w_a,
            "W_E": report.w_e,
            "V_B": report.v_b,
            "V_E": report.v_e,
            "tStar": t_star(report.crossing),
            "crossing": report.crossing,
            "orderingViolation": report.ordering_violation,
            "gapSeries": gaps,
            "sideCondition": side,
            "warnings": warnings,
            "notes": validated.notes,
            "lambda": {
                "equilibrium": report.equilibrium.lambda,
                "efficient": report.efficient.lambda,
                "benchmark": report.benchmark.lambda,
            },
            "utilityFloor": u.floor(),
        });
        write_json(&dir.join("welfare.json"), &welfare)?;
        let mechanism = json!({
            "kind": PathKind::Equilibrium,
            "policy": mech.policy,
            "continuationValues": mech.continuation_values,
            "lowIcResiduals": mech.low_ic_residuals,
            "highIcResiduals": mech.high_ic_residuals,
        });
        write_json(&dir.join("mechanism.json"), &mechanism)?;
    }
    Ok(())
}
