use std::path::Path;

use screening_core::sec4::{date2_continuation_costs, solve_efficient_given_root, solve_equilibrium_t3};
use screening_core::{Income, ModelConfig, UtilitySpec};

use crate::fmt::{num, Table};
use crate::Failure;

/// Ten evenly spaced types on [0.5, 1], uniform beliefs, R = 3/2, I = 3,
/// square-root utility.
pub fn figure_config() -> ModelConfig {
    let n = 10;
    ModelConfig {
        horizon: 3,
        deltas: (0..n).map(|i| 0.5 + 0.5 * i as f64 / (n - 1) as f64).collect(),
        p: vec![0.1; n],
        q: vec![0.1; n],
        rate: 1.5,
        income: Income::TotalNpv(3.0),
        utility: UtilitySpec::Sqrt,
    }
}

pub fn run(out: &Path) -> Result<(), Failure> {
    let c = figure_config();
    let root = c.n_types() - 1;
    let eq = solve_equilibrium_t3(&c, root)?;
    let (eff, _) = solve_efficient_given_root(&c, root)?;
    let eq_pol = eq.policy();
    let cost_eq = date2_continuation_costs(&eq_pol, &c);
    let cost_eff = date2_continuation_costs(&eff, &c);
    let ce = eq_pol.consumption(&c.utility);
    let cb = eff.consumption(&c.utility);

    std::fs::create_dir_all(out).map_err(|e| Failure::Io(format!("{}: {e}", out.display())))?;
    let mut f1 = Table::new(&["delta2", "contCostEq", "contCostEff"]);
    let mut f2 = Table::new(&["delta2", "c2Eq", "c2Eff"]);
    let mut f3 = Table::new(&["delta2", "c3Eq", "c3Eff"]);
    for (k, &d) in c.deltas.iter().enumerate() {
        f1.row(vec![num(d), num(cost_eq[k]), num(cost_eff[k])]);
        f2.row(vec![num(d), num(ce[1][k]), num(cb[1][k])]);
        f3.row(vec![num(d), num(ce[2][k]), num(cb[2][k])]);
    }
    f1.write(&out.join("figure1.csv"))?;
    f2.write(&out.join("figure2.csv"))?;
    f3.write(&out.join("figure3.csv"))
}
