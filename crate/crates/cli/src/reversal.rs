use serde_json::json;

use screening_core::model::{choice_reversal, DiscountRepresentation, RewardChoice};
use screening_core::{Income, ModelConfig, UtilitySpec};

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum Style {
    Text,
    Json,
}

const IMMEDIATE: f64 = 50.0;
const DELAYED: f64 = 100.0;

fn config(p: [f64; 2]) -> ModelConfig {
    ModelConfig {
        horizon: 3,
        deltas: vec![0.4, 0.9],
        p: p.to_vec(),
        q: vec![0.75, 0.25],
        rate: 1.0,
        income: Income::PerPeriod(1.0),
        utility: UtilitySpec::Sqrt,
    }
}

fn label(c: RewardChoice) -> &'static str {
    match c {
        RewardChoice::Immediate => "immediate",
        RewardChoice::Delayed => "delayed",
    }
}

pub fn run(style: Style) {
    let variants = [("p = q = (0.75, 0.25)", config([0.75, 0.25])), ("p = (1, 0), q = (0.75, 0.25)", config([1.0, 0.0]))];
    let rep = DiscountRepresentation::new(&variants[0].1);
    let rows: Vec<_> = variants
        .iter()
        .map(|(name, c)| {
            let a = choice_reversal(c, IMMEDIATE, DELAYED, 1);
            let b: Vec<&str> = (1..=4).map(|s| label(choice_reversal(c, IMMEDIATE, DELAYED, s).choice_deferred)).collect();
            (*name, a.prob_immediate_now, b)
        })
        .collect();
    match style {
        Style::Json => {
            let out = json!({
                "immediate": IMMEDIATE,
                "delayed": DELAYED,
                "deltas": [0.4, 0.9],
                "deltaBar": rep.delta_bar,
                "betas": rep.betas,
                "topBetaExceedsOne": rep.top_beta_exceeds_one,
                "variants": rows.iter().map(|(n, a, b)| json!({"beliefs": n, "problemA": a, "problemB": b})).collect::<Vec<_>>(),
            });
            println!("{}", serde_json::to_string_pretty(&out).unwrap_or_default());
        }
        Style::Text => {
            println!("utility {IMMEDIATE} at t vs {DELAYED} at t+1; delta in {{0.4, 0.9}}");
            println!("delta_bar = {:.4}, beta = ({:.4}, {:.4})", rep.delta_bar, rep.betas[0], rep.betas[1]);
            if rep.top_beta_exceeds_one {
                println!("beta of the patient type exceeds 1: not quasi-hyperbolic");
            }
            println!();
            println!("{:<30} {:>22} {:>30}", "beliefs", "A: P(take immediate)", "B: choice for s = 1..4");
            for (name, a, b) in &rows {
                println!("{:<30} {:>22} {:>30}", name, a, b.join(" "));
            }
        }
    }
}
