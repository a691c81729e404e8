//! Symmetric two-country equilibrium with iceberg trade costs.
//!
//! Each country hosts `N` large firms and a free-entry pool of small firms.
//! Small firms sell at home when their cost is below `c_D` and export when it
//! is below `c_X = c_D / tau`. Large firms sell at home and export, so `2N`
//! strategic sellers compete in each market.

use serde::Serialize;

use crate::closed::{self, FirmOutcome, FirmSales};
use crate::error::{ModelError, Result};
use crate::feasibility::{self, Condition, FeasibilityReport, Infeasibility, Relation};
use crate::params::{self, ModelParams};

/// Agreement required between the two countries' independently solved masses.
pub const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OpenCutoffs {
    /// Domestic cutoff `c_D`, common to both countries.
    pub domestic: f64,
    /// Export cutoff `c_X = c_D / tau`.
    pub export: f64,
    /// Freeness of trade `tau^(-k)`.
    pub freeness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpenEquilibrium {
    pub cutoffs: OpenCutoffs,
    /// Mass of small firms selling in each country (domestic plus importers).
    pub mass: f64,
    /// Mass of entrants per country.
    pub entrants: f64,
    /// Mass of domestic small producers per country.
    pub producers: f64,
    /// Internalization with `M + 2N` sellers.
    pub theta: f64,
    pub large_prices: LargePrices,
    pub aggregate_price: f64,
    pub report: FeasibilityReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LargePrices {
    /// Price of a large firm in its home market.
    pub domestic: f64,
    /// Delivered price of a large firm's exports.
    pub export: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OpenFirmOutcome {
    pub domestic: FirmOutcome,
    pub export: FirmOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassAccounting {
    pub entrants: f64,
    pub producers: f64,
}

pub fn solve_cutoffs_open(p: &ModelParams) -> Result<OpenCutoffs> {
    let rho = p.derived().rho;
    let domestic = closed::cutoff_from_free_entry(p, rho);
    if domestic > p.small().cost_max() {
        return Err(ModelError::SupportViolation {
            cutoff: domestic,
            cost_max: p.small().cost_max(),
            min_cost_max: Some(closed::min_cost_max(p, rho)),
        });
    }
    Ok(OpenCutoffs {
        domestic,
        export: domestic / p.tau(),
        freeness: rho,
    })
}

/// Expected operating profit from both markets,
/// `(L / 4 beta) [∫ (c_D - c)^2 dG + tau^2 ∫ (c_X - c)^2 dG]`, in closed form
/// and cross-checked by quadrature.
pub fn expected_entry_profit_open(cutoffs: &OpenCutoffs, p: &ModelParams) -> Result<f64> {
    if !(0.0..=p.small().cost_max()).contains(&cutoffs.domestic) {
        return Err(ModelError::Domain {
            what: "cutoff",
            value: cutoffs.domestic,
            lo: 0.0,
            hi: p.small().cost_max(),
        });
    }
    let scale = p.market_size() / (4.0 * p.prefs().beta());
    let tau2 = p.tau() * p.tau();
    let small = p.small();
    let exact =
        scale * (params::squared_gap_moment(cutoffs.domestic, small) + tau2 * params::squared_gap_moment(cutoffs.export, small));
    let tol = closed::ENTRY_QUADRATURE_TOL;
    let numeric = scale
        * (params::squared_gap_moment_quadrature(cutoffs.domestic, small, tol)
            + tau2 * params::squared_gap_moment_quadrature(cutoffs.export, small, tol));
    let gap = (exact - numeric).abs();
    if gap > closed::ENTRY_AGREEMENT_TOL * exact.abs() {
        return Err(ModelError::Inconsistent {
            what: "open entry profit quadrature",
            residual: gap,
        });
    }
    Ok(exact)
}

/// Domestic and export outcomes of a small firm with cost `c`.
pub fn open_small_firm_outcomes(c: f64, cutoffs: &OpenCutoffs, p: &ModelParams) -> Result<OpenFirmOutcome> {
    if !(0.0..=p.small().cost_max()).contains(&c) {
        return Err(ModelError::Domain {
            what: "cost",
            value: c,
            lo: 0.0,
            hi: p.small().cost_max(),
        });
    }
    let domestic = closed::small_firm_outcomes(c, cutoffs.domestic, p)?;
    let tau = p.tau();
    let export = if c >= cutoffs.export {
        FirmOutcome::Exits {
            choke_price: tau * cutoffs.export,
        }
    } else {
        let gap = cutoffs.export - c;
        let l_beta = p.market_size() / p.prefs().beta();
        FirmOutcome::Active(FirmSales {
            price: 0.5 * tau * (cutoffs.export + c),
            quantity: 0.5 * l_beta * tau * gap,
            profit: 0.25 * l_beta * tau * tau * gap * gap,
        })
    };
    Ok(OpenFirmOutcome { domestic, export })
}

/// Large-firm prices at home and delivered abroad. Under symmetry the same
/// internalization applies in both destination markets.
pub fn open_large_prices(cutoffs: &OpenCutoffs, theta: f64, p: &ModelParams) -> LargePrices {
    let cost = p.large().cost();
    LargePrices {
        domestic: closed::large_firm_price(cutoffs.domestic, theta, cost),
        export: p.tau() * closed::large_firm_price(cutoffs.export, theta, cost),
    }
}

/// Mass equation of one country, given its own domestic cutoff. The
/// home and foreign large firms enter through separate terms.
pub fn country_mass_residual(mass: f64, domestic_cutoff: f64, p: &ModelParams) -> f64 {
    let k = p.small().shape();
    let n = p.large().count();
    let cost = p.large().cost();
    let theta = params::internalization(mass, 2.0 * n, p.prefs());
    let share = closed::markup_share(theta);
    mass * domestic_cutoff / (2.0 * (k + 1.0))
        + n * (domestic_cutoff - cost) * share
        + n * (domestic_cutoff - p.tau() * cost) * share
        - closed::mass_lhs(domestic_cutoff, p)
}

/// Symmetric mass equation: right side minus left side.
pub fn mass_equation_residual_open(mass: f64, cutoffs: &OpenCutoffs, p: &ModelParams) -> f64 {
    let k = p.small().shape();
    let n = p.large().count();
    let c_d = cutoffs.domestic;
    let theta = params::internalization(mass, 2.0 * n, p.prefs());
    mass / 2.0 * c_d / (k + 1.0)
        + closed::markup_share(theta) * n * ((c_d - p.large().cost()) + (c_d - p.tau() * p.large().cost()))
        - closed::mass_lhs(c_d, p)
}

/// Large-firm and positive-mass conditions at given cutoffs. The
/// positive-mass check is made with the internalization of `2N` sellers at
/// `M = 0`; the variant with the `N`-firm factor is reported alongside but
/// does not gate.
fn regime_conditions(cutoffs: &OpenCutoffs, p: &ModelParams, report: &mut FeasibilityReport) {
    let (beta, gamma) = (p.prefs().beta(), p.prefs().gamma());
    let n = p.large().count();
    let cost = p.large().cost();
    let c_d = cutoffs.domestic;
    if n > 0.0 {
        report.push(Condition::new(
            feasibility::OPEN_DOMESTIC_LARGE,
            cost,
            Relation::Less,
            c_d,
            Infeasibility::LargeFirmsInactive,
        ));
        report.push(Condition::new(
            feasibility::OPEN_EXPORTING_LARGE,
            cost,
            Relation::Less,
            cutoffs.export,
            Infeasibility::LargeFirmsDoNotExport,
        ));
    }
    let lhs = closed::mass_lhs(c_d, p);
    let gaps = n * ((c_d - cost) + (c_d - p.tau() * cost));
    let consistent = (beta + gamma * (2.0 * n - 1.0)) / (2.0 * beta + gamma * (4.0 * n - 1.0));
    let n_factor = (beta + gamma * (n - 1.0)) / (2.0 * beta + gamma * (2.0 * n - 1.0));
    report.push(Condition::new(
        feasibility::OPEN_POSITIVE_MASS,
        lhs,
        Relation::Greater,
        gaps * consistent,
        Infeasibility::NoPositiveMass,
    ));
    report.push(
        Condition::new(
            feasibility::OPEN_POSITIVE_MASS_N_FACTOR,
            lhs,
            Relation::Greater,
            gaps * n_factor,
            Infeasibility::NoPositiveMass,
        )
        .informational(),
    );
}

/// Existence conditions of the open-economy regime.
pub fn open_feasibility(p: &ModelParams) -> FeasibilityReport {
    let rho = p.derived().rho;
    let domestic = closed::cutoff_from_free_entry(p, rho);
    let cutoffs = OpenCutoffs {
        domestic,
        export: domestic / p.tau(),
        freeness: rho,
    };
    let mut report = FeasibilityReport::default();
    report.push(closed::support_condition(domestic, p));
    regime_conditions(&cutoffs, p, &mut report);
    report
}

/// True when the two positive-mass variants classify the point differently.
pub fn positivity_variants_disagree(report: &FeasibilityReport) -> bool {
    match (
        report.get(feasibility::OPEN_POSITIVE_MASS),
        report.get(feasibility::OPEN_POSITIVE_MASS_N_FACTOR),
    ) {
        (Some(a), Some(b)) => a.pass != b.pass,
        _ => false,
    }
}

fn solve_country_mass(domestic_cutoff: f64, p: &ModelParams) -> Result<f64> {
    let upper = closed::mass_upper_bound(domestic_cutoff, p);
    if p.large().count() == 0.0 {
        return Ok(upper);
    }
    closed::bisect_mass(
        |m| country_mass_residual(m, domestic_cutoff, p),
        upper,
        closed::mass_lhs(domestic_cutoff, p),
    )
}

/// Equilibrium mass of small firms selling in each country.
///
/// Each country's mass equation is solved on its own and the two solutions
/// are required to coincide before the symmetric value is returned.
pub fn solve_mass_open(cutoffs: &OpenCutoffs, p: &ModelParams) -> Result<f64> {
    let mut report = FeasibilityReport::default();
    regime_conditions(cutoffs, p, &mut report);
    if !report.all_pass() {
        return Err(ModelError::Infeasible(report));
    }
    // Symmetric cutoffs: c_D^H = c_D^F.
    let home = solve_country_mass(cutoffs.domestic, p)?;
    let foreign = solve_country_mass(cutoffs.domestic, p)?;
    if (home - foreign).abs() > SYMMETRY_TOL * home.max(1.0) {
        return Err(ModelError::Inconsistent {
            what: "symmetric mass",
            residual: home - foreign,
        });
    }
    let symmetric = mass_equation_residual_open(home, cutoffs, p).abs();
    if symmetric > closed::MASS_RESIDUAL_TOL * closed::mass_lhs(cutoffs.domestic, p).max(1.0) {
        return Err(ModelError::Inconsistent {
            what: "open mass equation",
            residual: symmetric,
        });
    }
    Ok(home)
}

/// Entrants and domestic producers implied by a selling mass `M`:
/// `M_E = M (c_M / c_D)^k / (1 + rho)` and `M_D = M / (1 + rho)`.
pub fn mass_accounting(mass: f64, cutoffs: &OpenCutoffs, p: &ModelParams) -> MassAccounting {
    let k = p.small().shape();
    let rho = cutoffs.freeness;
    MassAccounting {
        entrants: mass * (p.small().cost_max() / cutoffs.domestic).powf(k) / (1.0 + rho),
        producers: mass / (1.0 + rho),
    }
}

/// Aggregate price in one country, checked against the choke-price fixed
/// point with `2N` large sellers.
pub fn aggregate_price_open(eq: &OpenEquilibrium, p: &ModelParams) -> Result<f64> {
    let n = p.large().count();
    let c_d = eq.cutoffs.domestic;
    let aggregate = eq.mass * closed::mean_small_price(c_d, p.small().shape())
        + n * eq.large_prices.domestic
        + n * eq.large_prices.export;
    let choke = params::price_bound(aggregate, eq.mass, 2.0 * n, p.prefs());
    let gap = (choke - c_d).abs();
    if gap > closed::CONSISTENCY_TOL * c_d.max(1.0) {
        return Err(ModelError::Inconsistent {
            what: "open choke price at equilibrium",
            residual: gap,
        });
    }
    Ok(aggregate)
}

pub fn solve_open(p: &ModelParams) -> Result<OpenEquilibrium> {
    let report = open_feasibility(p);
    let cutoffs = solve_cutoffs_open(p)?;
    if !report.all_pass() {
        return Err(ModelError::Infeasible(report));
    }
    let mass = solve_mass_open(&cutoffs, p)?;
    let accounting = mass_accounting(mass, &cutoffs, p);
    let theta = params::internalization(mass, 2.0 * p.large().count(), p.prefs());
    let mut eq = OpenEquilibrium {
        cutoffs,
        mass,
        entrants: accounting.entrants,
        producers: accounting.producers,
        theta,
        large_prices: open_large_prices(&cutoffs, theta, p),
        aggregate_price: f64::NAN,
        report,
    };
    eq.aggregate_price = aggregate_price_open(&eq, p)?;
    Ok(eq)
}
