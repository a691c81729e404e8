//! Closed-economy equilibrium: cost cutoff from free entry, mass of small
//! firms from the choke-price condition, and the coexistence conditions.

use serde::Serialize;

use crate::error::{ModelError, Result};
use crate::feasibility::{self, Condition, FeasibilityReport, Infeasibility, Relation};
use crate::params::{self, ModelParams};
use crate::roots;

/// Relative tolerance for the quadrature route of the entry-profit integral.
pub const ENTRY_QUADRATURE_TOL: f64 = 1e-12;
/// Agreement required between the closed-form and quadrature entry profit.
pub const ENTRY_AGREEMENT_TOL: f64 = 1e-8;
/// Residual bound on the mass equation, relative to `max(1, LHS)`.
pub const MASS_RESIDUAL_TOL: f64 = 1e-10;
/// Tolerance on `p_max = c_D` at a solved equilibrium.
pub const CONSISTENCY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedEquilibrium {
    pub cutoff: f64,
    pub mass: f64,
    pub theta: f64,
    pub large_price: f64,
    pub aggregate_price: f64,
    pub report: FeasibilityReport,
}

/// Price, quantity and operating profit of an active firm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FirmSales {
    pub price: f64,
    pub quantity: f64,
    pub profit: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FirmOutcome {
    Active(FirmSales),
    /// Cost at or above the cutoff; demand at the choke price is zero.
    Exits { choke_price: f64 },
}

impl FirmOutcome {
    pub fn sales(&self) -> Option<&FirmSales> {
        match self {
            FirmOutcome::Active(s) => Some(s),
            FirmOutcome::Exits { .. } => None,
        }
    }
}

pub(crate) fn cutoff_from_free_entry(p: &ModelParams, rho: f64) -> f64 {
    let k = p.small().shape();
    (p.prefs().beta() * params::technology_index(p.small()) / (p.market_size() * (1.0 + rho)))
        .powf(1.0 / (k + 2.0))
}

/// Smallest `c_M` for which the free-entry cutoff is interior.
pub(crate) fn min_cost_max(p: &ModelParams, rho: f64) -> f64 {
    let k = p.small().shape();
    (2.0 * p.prefs().beta() * (k + 1.0) * (k + 2.0) * p.small().entry_cost() / (p.market_size() * (1.0 + rho)))
        .sqrt()
}

pub(crate) fn support_condition(cutoff: f64, p: &ModelParams) -> Condition {
    Condition::new(
        feasibility::SUPPORT,
        cutoff,
        Relation::LessOrEqual,
        p.small().cost_max(),
        Infeasibility::Support,
    )
}

/// `(beta phi / L)^(1/(k+2))`.
pub fn solve_cutoff_closed(p: &ModelParams) -> Result<f64> {
    let cutoff = cutoff_from_free_entry(p, 0.0);
    if cutoff > p.small().cost_max() {
        return Err(ModelError::SupportViolation {
            cutoff,
            cost_max: p.small().cost_max(),
            min_cost_max: Some(min_cost_max(p, 0.0)),
        });
    }
    Ok(cutoff)
}

fn check_cutoff_domain(cutoff: f64, p: &ModelParams) -> Result<()> {
    if !(0.0..=p.small().cost_max()).contains(&cutoff) {
        return Err(ModelError::Domain {
            what: "cutoff",
            value: cutoff,
            lo: 0.0,
            hi: p.small().cost_max(),
        });
    }
    Ok(())
}

/// Expected operating profit of an entrant, `(L / 4 beta) ∫_0^c_D (c_D - c)^2 dG`.
///
/// Evaluated in closed form and cross-checked against quadrature.
pub fn expected_entry_profit(cutoff: f64, p: &ModelParams) -> Result<f64> {
    check_cutoff_domain(cutoff, p)?;
    let scale = p.market_size() / (4.0 * p.prefs().beta());
    let closed = scale * params::squared_gap_moment(cutoff, p.small());
    let numeric = scale * params::squared_gap_moment_quadrature(cutoff, p.small(), ENTRY_QUADRATURE_TOL);
    let gap = (closed - numeric).abs();
    if gap > ENTRY_AGREEMENT_TOL * closed.abs() {
        return Err(ModelError::Inconsistent {
            what: "entry profit quadrature",
            residual: gap,
        });
    }
    Ok(closed)
}

/// Optimal price, quantity and profit of a small firm with cost `c`.
pub fn small_firm_outcomes(c: f64, cutoff: f64, p: &ModelParams) -> Result<FirmOutcome> {
    if !(c >= 0.0 && c.is_finite()) {
        return Err(ModelError::Domain {
            what: "cost",
            value: c,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    if c >= cutoff {
        return Ok(FirmOutcome::Exits { choke_price: cutoff });
    }
    let gap = cutoff - c;
    let beta = p.prefs().beta();
    let l = p.market_size();
    Ok(FirmOutcome::Active(FirmSales {
        price: 0.5 * (cutoff + c),
        quantity: l / (2.0 * beta) * gap,
        profit: l / (4.0 * beta) * gap * gap,
    }))
}

/// Price of a large firm that internalizes its effect on the aggregate
/// price: `(c_D + (1 - Θ) C) / (2 - Θ)`. It lies below the choke price iff
/// `C < c_D`.
pub fn large_firm_price(cutoff: f64, theta: f64, cost: f64) -> f64 {
    (cutoff + (1.0 - theta) * cost) / (2.0 - theta)
}

/// Large-firm markup factor `(1 - Θ) / (2 - Θ)`.
pub(crate) fn markup_share(theta: f64) -> f64 {
    (1.0 - theta) / (2.0 - theta)
}

/// Left side of the mass equation, `(alpha - c_D) beta / gamma`.
pub(crate) fn mass_lhs(cutoff: f64, p: &ModelParams) -> f64 {
    (p.prefs().alpha() - cutoff) * p.prefs().beta() / p.prefs().gamma()
}

/// Right side minus left side of the closed-economy mass equation.
/// Strictly increasing in `mass` whenever `C < c_D`.
pub fn mass_equation_residual(mass: f64, cutoff: f64, p: &ModelParams) -> f64 {
    let k = p.small().shape();
    let n = p.large().count();
    let theta = params::internalization(mass, n, p.prefs());
    mass * cutoff / (2.0 * (k + 1.0)) + n * (cutoff - p.large().cost()) * markup_share(theta) - mass_lhs(cutoff, p)
}

/// The two coexistence inequalities evaluated at a given cutoff.
fn coexistence_conditions(cutoff: f64, p: &ModelParams, report: &mut FeasibilityReport) {
    let prefs = p.prefs();
    let (beta, gamma) = (prefs.beta(), prefs.gamma());
    let n = p.large().count();
    let cost = p.large().cost();
    if n > 0.0 {
        report.push(Condition::new(
            feasibility::PROP1_LARGE,
            cost,
            Relation::Less,
            cutoff,
            Infeasibility::LargeFirmsInactive,
        ));
    }
    let factor = (beta + gamma * (n - 1.0)) / (2.0 * beta + gamma * (2.0 * n - 1.0));
    report.push(Condition::new(
        feasibility::PROP1_MASS,
        (prefs.alpha() - cutoff) * beta,
        Relation::Greater,
        gamma * n * (cutoff - cost) * factor,
        Infeasibility::NoPositiveMass,
    ));
}

/// Existence conditions of the mixed equilibrium, with slacks.
pub fn coexistence_check(p: &ModelParams) -> FeasibilityReport {
    let cutoff = cutoff_from_free_entry(p, 0.0);
    let mut report = FeasibilityReport::default();
    report.push(support_condition(cutoff, p));
    coexistence_conditions(cutoff, p, &mut report);
    report
}

pub(crate) fn mass_upper_bound(cutoff: f64, p: &ModelParams) -> f64 {
    let k = p.small().shape();
    2.0 * (k + 1.0) * mass_lhs(cutoff, p) / cutoff
}

/// Solve `residual(M) = 0` on `[0, upper]` and verify the residual.
pub(crate) fn bisect_mass<F>(residual: F, upper: f64, lhs: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut hi = upper;
    let mut grow = 0;
    while residual(hi) < 0.0 {
        // Only reachable through rounding when the large-firm term is tiny.
        hi *= 2.0;
        grow += 1;
        if grow > 60 {
            return Err(ModelError::Inconsistent {
                what: "mass bracket",
                residual: residual(hi),
            });
        }
    }
    let mass = roots::bisect(&residual, 0.0, hi, 0.0, roots::MAX_BISECTIONS)?;
    let r = residual(mass).abs();
    if r > MASS_RESIDUAL_TOL * lhs.max(1.0) {
        return Err(ModelError::Inconsistent {
            what: "mass equation",
            residual: r,
        });
    }
    Ok(mass)
}

/// Equilibrium mass of small firms for a given cutoff.
pub fn solve_mass_closed(cutoff: f64, p: &ModelParams) -> Result<f64> {
    let mut report = FeasibilityReport::default();
    coexistence_conditions(cutoff, p, &mut report);
    if !report.all_pass() {
        return Err(ModelError::Infeasible(report));
    }
    let upper = mass_upper_bound(cutoff, p);
    if p.large().count() == 0.0 {
        return Ok(upper);
    }
    bisect_mass(|m| mass_equation_residual(m, cutoff, p), upper, mass_lhs(cutoff, p))
}

/// Mean price of the small firms that sell, `c_D (2k+1) / (2(k+1))`.
pub(crate) fn mean_small_price(cutoff: f64, shape: f64) -> f64 {
    cutoff * (2.0 * shape + 1.0) / (2.0 * (shape + 1.0))
}

/// Aggregate price at a solved equilibrium, checked against the choke-price
/// fixed point.
pub fn aggregate_price_closed(eq: &ClosedEquilibrium, p: &ModelParams) -> Result<f64> {
    let n = p.large().count();
    let aggregate = eq.mass * mean_small_price(eq.cutoff, p.small().shape()) + n * eq.large_price;
    let choke = params::price_bound(aggregate, eq.mass, n, p.prefs());
    let gap = (choke - eq.cutoff).abs();
    if gap > CONSISTENCY_TOL * eq.cutoff.max(1.0) {
        return Err(ModelError::Inconsistent {
            what: "choke price at equilibrium",
            residual: gap,
        });
    }
    Ok(aggregate)
}

/// Full closed-economy equilibrium.
pub fn solve_closed(p: &ModelParams) -> Result<ClosedEquilibrium> {
    let report = coexistence_check(p);
    let cutoff = solve_cutoff_closed(p)?;
    if !report.all_pass() {
        return Err(ModelError::Infeasible(report));
    }
    let mass = solve_mass_closed(cutoff, p)?;
    let theta = params::internalization(mass, p.large().count(), p.prefs());
    let large_price = large_firm_price(cutoff, theta, p.large().cost());
    let mut eq = ClosedEquilibrium {
        cutoff,
        mass,
        theta,
        large_price,
        aggregate_price: f64::NAN,
        report,
    };
    eq.aggregate_price = aggregate_price_closed(&eq, p)?;
    Ok(eq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{LargeFirmSector, Preferences, SmallFirmTech};

    fn params(alpha: f64, n: f64, cost: f64, k: f64, c_m: f64, l: f64) -> ModelParams {
        ModelParams::new(
            Preferences::new(alpha, 1.0, 1.0).unwrap(),
            SmallFirmTech::new(c_m, k, 1.0).unwrap(),
            LargeFirmSector::new(n, cost).unwrap(),
            l,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn unit_base_cutoff() {
        // beta phi / L = 24 / 24
        let p = params(2.0, 0.0, 0.0, 2.0, 1.0, 24.0);
        assert!((solve_cutoff_closed(&p).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn doubling_market_size_scales_cutoff() {
        let a = solve_cutoff_closed(&params(1.0, 1.0, 0.1, 2.0, 1.0, 100.0)).unwrap();
        let b = solve_cutoff_closed(&params(1.0, 1.0, 0.1, 2.0, 1.0, 200.0)).unwrap();
        assert!((b / a - 2f64.powf(-0.25)).abs() < 1e-14);
    }

    #[test]
    fn support_violation_reports_minimal_cost_max() {
        let p = params(1.0, 1.0, 0.1, 2.0, 0.3, 100.0);
        match solve_cutoff_closed(&p) {
            Err(ModelError::SupportViolation {
                cutoff, min_cost_max, ..
            }) => {
                assert!(cutoff > 0.3);
                let m = min_cost_max.unwrap();
                assert!((m - 0.24f64.sqrt()).abs() < 1e-15);
                let fixed = params(1.0, 1.0, 0.1, 2.0, m * (1.0 + 1e-12), 100.0);
                assert!(solve_cutoff_closed(&fixed).is_ok());
            }
            other => panic!("expected support violation, got {other:?}"),
        }
    }

    #[test]
    fn entry_profit_examples() {
        let p = params(1.0, 1.0, 0.3, 2.0, 1.0, 100.0);
        assert_eq!(expected_entry_profit(0.0, &p).unwrap(), 0.0);
        let v = expected_entry_profit(0.5, &p).unwrap();
        assert!((v - 100.0 * 0.0625 / 24.0).abs() < 1e-14);
        let c_d = solve_cutoff_closed(&p).unwrap();
        assert!((expected_entry_profit(c_d, &p).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(expected_entry_profit(1.5, &p), Err(ModelError::Domain { .. })));
    }

    #[test]
    fn small_firm_examples() {
        let p = params(1.0, 1.0, 0.3, 2.0, 1.0, 100.0);
        let s = small_firm_outcomes(0.3, 0.7, &p).unwrap();
        let s = s.sales().unwrap();
        assert!((s.price - 0.5).abs() < 1e-15);
        assert!((s.quantity - 20.0).abs() < 1e-12);
        // (p - c) q = 0.2 * 20
        assert!((s.profit - 4.0).abs() < 1e-12);
        let zero = *small_firm_outcomes(0.0, 0.7, &p).unwrap().sales().unwrap();
        assert_eq!(zero.price, 0.35);
        assert!((zero.quantity - 100.0 * 0.7 / 2.0).abs() < 1e-12);
        assert!((zero.profit - 100.0 * 0.49 / 4.0).abs() < 1e-12);
        assert_eq!(
            small_firm_outcomes(0.7, 0.7, &p).unwrap(),
            FirmOutcome::Exits { choke_price: 0.7 }
        );
        assert!(small_firm_outcomes(0.9, 0.7, &p).unwrap().sales().is_none());
        assert!(small_firm_outcomes(-1.0, 0.7, &p).is_err());
    }

    #[test]
    fn large_price_examples() {
        assert_eq!(large_firm_price(0.7, 0.0, 0.3), 0.5);
        assert!((large_firm_price(0.9, 0.5, 0.0) - 0.6).abs() < 1e-15);
        let v = large_firm_price(0.7, 0.25, 0.3);
        assert!((v - 0.925 / 1.75).abs() < 1e-15);
        assert!(v > 0.5 && v < 0.7);
        // C above the cutoff pushes the price above the choke price.
        assert!(large_firm_price(0.7, 0.25, 0.9) > 0.7);
    }

    #[test]
    fn no_large_firms_closed_form() {
        let p = params(1.0, 0.0, 0.0, 2.0, 1.0, 100.0);
        let c_d = solve_cutoff_closed(&p).unwrap();
        let m = solve_mass_closed(c_d, &p).unwrap();
        assert_eq!(m, 2.0 * 3.0 * (1.0 - c_d) / c_d);
        let report = coexistence_check(&p);
        assert!(report.get(feasibility::PROP1_LARGE).is_none());
        let ii = report.get(feasibility::PROP1_MASS).unwrap();
        assert_eq!(ii.rhs, 0.0);
    }

    #[test]
    fn alpha_at_cutoff_is_rejected() {
        let base = params(1.0, 1.0, 0.3, 2.0, 1.0, 100.0);
        let c_d = solve_cutoff_closed(&base).unwrap();
        let p = params(c_d, 0.0, 0.0, 2.0, 1.0, 100.0);
        assert!(matches!(solve_mass_closed(c_d, &p), Err(ModelError::Infeasible(_))));
    }

    #[test]
    fn large_cost_above_cutoff_fails_condition_one() {
        let p = params(1.0, 1.0, 0.8, 2.0, 1.0, 100.0);
        let report = coexistence_check(&p);
        assert!(!report.get(feasibility::PROP1_LARGE).unwrap().pass);
        let err = solve_closed(&p).unwrap_err();
        assert_eq!(err.infeasibility(), Some(Infeasibility::LargeFirmsInactive));
    }

    #[test]
    fn aggregate_price_without_large_firms() {
        let p = params(1.0, 0.0, 0.0, 2.0, 1.0, 100.0);
        let eq = solve_closed(&p).unwrap();
        let expected = eq.mass * eq.cutoff * 5.0 / 6.0;
        assert!((eq.aggregate_price - expected).abs() < 1e-14);
        let choke = params::price_bound(eq.aggregate_price, eq.mass, 0.0, p.prefs());
        assert!((choke - eq.cutoff).abs() < 1e-12);
    }

    #[test]
    fn aggregate_price_detects_inconsistency() {
        let p = params(1.0, 1.0, 0.3, 2.0, 1.0, 100.0);
        let mut eq = solve_closed(&p).unwrap();
        eq.mass *= 1.01;
        assert!(matches!(
            aggregate_price_closed(&eq, &p),
            Err(ModelError::Inconsistent { .. })
        ));
        let empty = ClosedEquilibrium {
            cutoff: 0.7,
            mass: 0.0,
            theta: 1.0,
            large_price: 0.0,
            aggregate_price: 0.0,
            report: FeasibilityReport::default(),
        };
        let p0 = params(0.7, 0.0, 0.0, 2.0, 1.0, 100.0);
        assert_eq!(aggregate_price_closed(&empty, &p0).unwrap(), 0.0);
    }
}
