mod common;

use approx::assert_relative_eq;
use common::{two_type, uniform};
use screening_core::model::{Income, Policy};
use screening_core::oracle::{best_deviation, first_high_values, low_path, solve_full, FullProgram};
use screening_core::sec3::{build_full_mechanism, solve_low_path, PathKind};
use screening_core::sec4::{check_inverse_euler, solve_efficient_given_root, solve_equilibrium_t3, Beliefs};
use screening_core::utility::UtilitySpec;

#[test]
fn reduced_equilibrium_matches_full_program() {
    for n in [2, 3] {
        let c = uniform(n, 0.5, 1.0, 1.5, 3.0);
        for root in 0..n {
            let red = solve_equilibrium_t3(&c, root).unwrap();
            let full = solve_full(&FullProgram::new(&c, root).unwrap(), None).unwrap();
            let pol = red.policy();
            assert_relative_eq!(full.objective, pol.agent_payoff(&c.deltas, &c.q), max_relative = 1e-9);
            assert!(full.policy.sup_distance(&pol) < 1e-7, "n={n} root={root}");
        }
    }
}

#[test]
fn reduced_equilibrium_matches_with_optimistic_agent() {
    let mut c = uniform(3, 0.5, 1.0, 1.5, 3.0);
    c.p = vec![0.5, 0.3, 0.2];
    c.q = vec![0.2, 0.3, 0.5];
    for utility in [UtilitySpec::Sqrt, UtilitySpec::Log] {
        c.utility = utility;
        let red = solve_equilibrium_t3(&c, 1).unwrap();
        let full = solve_full(&FullProgram::new(&c, 1).unwrap(), None).unwrap();
        assert!(full.policy.sup_distance(&red.policy()) < 1e-7, "{utility:?}");
    }
}

#[test]
fn different_starts_reach_the_same_policy() {
    let mut c = uniform(2, 0.5, 1.0, 1.5, 3.0);
    c.horizon = 4;
    let prog = FullProgram::new(&c, 0).unwrap();
    let a = solve_full(&prog, None).unwrap();
    let (eff, _) = solve_efficient_given_root(&c, 0).unwrap();
    let b = solve_full(&prog, Some(&eff)).unwrap();
    assert!(a.policy.sup_distance(&b.policy) < 1e-5);
}

#[test]
fn euler_identities_hold_on_four_period_solutions() {
    for n in [2, 3] {
        let mut c = uniform(n, 0.5, 1.0, 1.5, 3.0);
        c.horizon = 4;
        let full = solve_full(&FullProgram::new(&c, n - 1).unwrap(), None).unwrap();
        let rep = check_inverse_euler(&full.policy, &c, Beliefs::Agent);
        assert!(rep.max_abs_residual < 1e-8, "n={n}: {rep:?}");
        assert!(best_deviation(&full.policy, &c).gap() < 1e-8);
    }
}

#[test]
fn two_type_setting_embeds_in_full_program() {
    for horizon in [3, 4] {
        for rate in [1.0, 1.1] {
            let c = two_type(horizon, 0.75, rate, Income::PerPeriod(1.0));
            let path = solve_low_path(&c, PathKind::Equilibrium).unwrap();
            let mech = build_full_mechanism(&c, &path).unwrap();
            let full = solve_full(&FullProgram::new(&c, 0).unwrap(), None).unwrap();
            assert_relative_eq!(full.objective, mech.policy.agent_payoff(&c.deltas, &c.q), max_relative = 1e-8);
            for (a, b) in low_path(&full.policy).iter().zip(&path.path) {
                assert!((a - b).abs() < 1e-6, "T={horizon} R={rate}: {a} vs {b}");
            }
            assert!(first_high_values(&full.policy).iter().all(|v| v.abs() < 1e-6));
        }
    }
}

#[test]
fn tampering_is_detected_at_half_the_violation() {
    let c = uniform(3, 0.5, 1.0, 1.5, 3.0);
    let pol = solve_equilibrium_t3(&c, 2).unwrap().policy();
    for s in [1e-3, 1e-2, 0.1] {
        // make reporting the top type at date 2 better for everyone by s
        let mut bad: Policy<f64> = pol.clone();
        bad.dates[1][2] += s;
        let rep = best_deviation(&bad, &c);
        assert!(rep.max_node_gap >= s / 2.0);
        assert!(rep.witness.is_some());
    }
}
