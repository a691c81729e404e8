mod common;

use common::{any_params, model, reference_closed, reference_open, rel_gap};
use mixmarket::closed::{coexistence_check, large_firm_price};
use mixmarket::open::open_feasibility;
use mixmarket::oracle::{free_entry_oracle, stage2_fixed_point, DiscretizedMarket, Economy, OracleOptions, Stage2Options};
use mixmarket::params::internalization;
use mixmarket::{solve_closed, solve_open};
use proptest::prelude::*;

fn with_nodes(nodes: usize) -> OracleOptions {
    OracleOptions {
        nodes,
        ..OracleOptions::default()
    }
}

#[test]
fn closed_oracle_matches_analytic_equilibrium() {
    let p = reference_closed();
    let eq = solve_closed(&p).unwrap();
    let oracle = free_entry_oracle(&p, Economy::Closed, &OracleOptions::default()).unwrap();
    assert!(rel_gap(oracle.cutoff, eq.cutoff) < 1e-10);
    assert!(rel_gap(oracle.mass, eq.mass) < 1e-4);
    assert!(rel_gap(oracle.choke_price, oracle.cutoff) < 1e-12);
}

#[test]
fn open_oracle_matches_analytic_equilibrium() {
    let p = reference_open();
    let eq = solve_open(&p).unwrap();
    let oracle = free_entry_oracle(&p, Economy::Open, &OracleOptions::default()).unwrap();
    assert!(rel_gap(oracle.cutoff, eq.cutoffs.domestic) < 1e-10);
    assert!(rel_gap(oracle.export_cutoff.unwrap(), eq.cutoffs.export) < 1e-10);
    assert!(rel_gap(oracle.mass, eq.mass) < 1e-4);
    assert!(rel_gap(oracle.entrants, eq.entrants) < 1e-4);
    assert!(rel_gap(oracle.producers, eq.producers) < 1e-4);
}

#[test]
fn costless_entry_drives_cutoff_to_zero() {
    let mut last = f64::INFINITY;
    for f_e in [1e-2, 1e-4, 1e-6, 1e-8] {
        let p = model(1.0, 1.0, 1.0, 0.0, 0.0, 100.0, 1.0, 2.0, f_e, 1.0);
        let oracle = free_entry_oracle(&p, Economy::Closed, &with_nodes(100)).unwrap();
        assert!(oracle.cutoff < last);
        last = oracle.cutoff;
    }
    assert!(last < 1e-2);
}

#[test]
fn mass_error_shrinks_with_refinement() {
    for p in [reference_closed(), model(2.0, 1.0, 0.5, 3.0, 0.2, 80.0, 1.2, 1.5, 0.8, 1.0)] {
        let exact = solve_closed(&p).unwrap();
        let errors: Vec<f64> = [250, 500, 1000, 2000]
            .iter()
            .map(|&j| {
                let o = free_entry_oracle(&p, Economy::Closed, &with_nodes(j)).unwrap();
                rel_gap(o.mass, exact.mass)
            })
            .collect();
        for w in errors.windows(2) {
            assert!(w[1] < w[0], "{errors:?}");
        }
    }
}

#[test]
fn stage2_reproduces_analytic_prices() {
    let p = reference_closed();
    let eq = solve_closed(&p).unwrap();
    let market = DiscretizedMarket::closed(eq.cutoff, eq.mass, 2000, &p).unwrap();
    let s = stage2_fixed_point(&market, &p, &Stage2Options::default()).unwrap();
    assert!((s.choke_price - eq.cutoff).abs() < 1e-6);
    for (price, c) in s.small_prices.iter().zip(market.small_costs()) {
        assert!((price - 0.5 * (eq.cutoff + c)).abs() < 1e-6);
    }
    assert!((s.large_prices[0] - eq.large_price).abs() < 1e-6);
    // Against the internalization of the discrete market itself.
    let discrete = large_firm_price(s.choke_price, s.theta, p.large().cost());
    assert!((s.large_prices[0] - discrete).abs() < 1e-8);
    assert!(s.small_foc_residual < 1e-10 && s.large_foc_residual < 1e-10);
}

#[test]
fn stage2_lone_large_firm_is_monopoly_price() {
    let p = model(1.0, 1.0, 1.0, 1.0, 0.3, 100.0, 1.0, 2.0, 1.0, 1.0);
    let market = DiscretizedMarket::new(vec![], vec![], vec![0.3]).unwrap();
    let s = stage2_fixed_point(&market, &p, &Stage2Options::default()).unwrap();
    let theta = internalization(0.0, 1.0, p.prefs());
    assert!((theta - 0.5).abs() < 1e-15);
    assert!((s.large_prices[0] - large_firm_price(s.choke_price, theta, 0.3)).abs() < 1e-10);
    // p = (alpha + C) / 2 when the firm faces the whole linear demand.
    assert!((s.large_prices[0] - 0.65).abs() < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn oracle_and_analytic_agree_on_feasibility(p in any_params()) {
        prop_assume!(p.large().integer_count().is_some());
        let analytic = coexistence_check(&p).classify();
        let oracle = free_entry_oracle(&p, Economy::Closed, &with_nodes(200));
        let oracle_class = match &oracle {
            Ok(_) => None,
            Err(e) => e.infeasibility(),
        };
        prop_assert_eq!(analytic, oracle_class);
    }

    #[test]
    fn open_oracle_and_analytic_agree_on_feasibility(p in any_params(), tau in 1.05f64..2.5) {
        let p = p.with_tau(tau).unwrap();
        let analytic = open_feasibility(&p).classify();
        let oracle = free_entry_oracle(&p, Economy::Open, &with_nodes(200));
        let oracle_class = match &oracle {
            Ok(_) => None,
            Err(e) => e.infeasibility(),
        };
        prop_assert_eq!(analytic, oracle_class);
    }
}
