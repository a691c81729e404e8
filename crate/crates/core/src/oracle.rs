//! Independent check of the analytic equilibria.
//!
//! Two routes that avoid the Pareto closed forms:
//!
//! * [`stage2_fixed_point`] finds Bertrand prices on a finite market by damped
//!   best-response iteration, with every best response derived directly from
//!   the linear demand system (small firms take the aggregate price as given,
//!   large firms account for their own contribution to it).
//! * [`free_entry_oracle`] pins the cutoff by bisection on a quadrature of the
//!   entry-profit integral, then scales a discretized population of entrants
//!   until the market's choke price equals that cutoff.

use serde::Serialize;

use crate::error::{ModelError, Result};
use crate::feasibility::{self, Condition, FeasibilityReport, Infeasibility, Relation};
use crate::params::{self, ModelParams};
use crate::roots;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Economy {
    Closed,
    Open,
}

/// A finite market: small-firm cost nodes with masses, plus strategic
/// sellers. Costs are delivered costs, so exporters appear at `tau c`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedMarket {
    small_costs: Vec<f64>,
    weights: Vec<f64>,
    large_costs: Vec<f64>,
}

impl DiscretizedMarket {
    pub fn new(small_costs: Vec<f64>, weights: Vec<f64>, large_costs: Vec<f64>) -> Result<Self> {
        if small_costs.len() != weights.len() {
            return Err(ModelError::InvalidArgument(format!(
                "{} cost nodes but {} weights",
                small_costs.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(ModelError::InvalidArgument("weights must be finite and non-negative".into()));
        }
        if small_costs.iter().chain(&large_costs).any(|c| !(*c >= 0.0 && c.is_finite())) {
            return Err(ModelError::InvalidArgument("costs must be finite and non-negative".into()));
        }
        Ok(DiscretizedMarket {
            small_costs,
            weights,
            large_costs,
        })
    }

    /// Closed economy: `nodes` midpoints on `[0, cutoff]`, total mass `mass`
    /// distributed by Pareto cell probabilities, and `N` large firms.
    pub fn closed(cutoff: f64, mass: f64, nodes: usize, p: &ModelParams) -> Result<Self> {
        let n = large_count(p)?;
        let (costs, cells) = pareto_cells(cutoff, nodes, 1.0, p);
        let total: f64 = cells.iter().sum();
        let weights = cells.iter().map(|w| mass * w / total).collect();
        DiscretizedMarket::new(costs, weights, vec![p.large().cost(); n])
    }

    /// One country of the symmetric open economy: domestic producers on
    /// `[0, cutoff]` and foreign exporters with delivered costs on
    /// `[0, cutoff]` (production costs on `[0, cutoff / tau]`), both drawn
    /// from the same entrant pool, plus `N` home and `N` foreign large firms.
    pub fn open(cutoff: f64, mass: f64, nodes: usize, p: &ModelParams) -> Result<Self> {
        let n = large_count(p)?;
        let tau = p.tau();
        let (mut costs, mut cells) = pareto_cells(cutoff, nodes, 1.0, p);
        let (export_costs, export_cells) = pareto_cells(cutoff / tau, nodes, tau, p);
        costs.extend(export_costs);
        cells.extend(export_cells);
        let total: f64 = cells.iter().sum();
        let weights = cells.iter().map(|w| mass * w / total).collect();
        let mut large = vec![p.large().cost(); n];
        large.extend(std::iter::repeat_n(tau * p.large().cost(), n));
        DiscretizedMarket::new(costs, weights, large)
    }

    pub fn small_costs(&self) -> &[f64] {
        &self.small_costs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn large_costs(&self) -> &[f64] {
        &self.large_costs
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

fn large_count(p: &ModelParams) -> Result<usize> {
    p.large().integer_count().ok_or_else(|| {
        ModelError::InvalidArgument(format!(
            "a discretized market needs an integer number of large firms, got {}",
            p.large().count()
        ))
    })
}

/// Midpoint nodes of `nodes` equal cells on `[0, upper]`, scaled by
/// `cost_scale`, with the Pareto probability of each cell as weight.
fn pareto_cells(upper: f64, nodes: usize, cost_scale: f64, p: &ModelParams) -> (Vec<f64>, Vec<f64>) {
    let width = upper / nodes as f64;
    let small = p.small();
    (0..nodes)
        .map(|j| {
            let a = width * j as f64;
            let b = if j + 1 == nodes { upper } else { a + width };
            let prob = params::pareto_cdf_capped(b, small) - params::pareto_cdf_capped(a, small);
            (cost_scale * 0.5 * (a + b), prob)
        })
        .unzip()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stage2Options {
    /// Weight on the best response in each update.
    pub damping: f64,
    /// Convergence threshold on the largest best-response step.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Iterations after which the aggregate price must not fall.
    pub monotone_after: usize,
}

impl Default for Stage2Options {
    fn default() -> Self {
        Stage2Options {
            damping: 0.5,
            tolerance: 1e-12,
            max_iterations: 100_000,
            monotone_after: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stage2Solution {
    pub small_prices: Vec<f64>,
    pub large_prices: Vec<f64>,
    pub choke_price: f64,
    pub aggregate_price: f64,
    /// Internalization with the active sellers.
    pub theta: f64,
    pub active_mass: f64,
    pub active_large: usize,
    pub iterations: usize,
    pub damping: f64,
    /// Largest deviation of an active small price from `(p_max + c) / 2`.
    pub small_foc_residual: f64,
    /// Largest deviation of an active large price from
    /// `(p_max + (1 - Θ) C) / (2 - Θ)`.
    pub large_foc_residual: f64,
}

struct Aggregates {
    mass: f64,
    large: usize,
    aggregate: f64,
}

fn aggregates(market: &DiscretizedMarket, small: &[f64], small_on: &[bool], large: &[f64], large_on: &[bool]) -> Aggregates {
    let mut mass = 0.0;
    let mut aggregate = 0.0;
    for ((w, p), on) in market.weights.iter().zip(small).zip(small_on) {
        if *on {
            mass += w;
            aggregate += w * p;
        }
    }
    let mut count = 0;
    for (p, on) in large.iter().zip(large_on) {
        if *on {
            count += 1;
            aggregate += p;
        }
    }
    Aggregates {
        mass,
        large: count,
        aggregate,
    }
}

enum Attempt {
    Converged(Stage2Solution),
    Failed,
}

fn iterate(market: &DiscretizedMarket, p: &ModelParams, opts: &Stage2Options, damping: f64) -> Attempt {
    let (alpha, beta, gamma) = (p.prefs().alpha(), p.prefs().beta(), p.prefs().gamma());
    let mut small = market.small_costs.clone();
    let mut large = market.large_costs.clone();
    let mut small_on: Vec<bool> = market.weights.iter().map(|w| *w > 0.0).collect();
    let mut large_on = vec![true; large.len()];
    let mut previous_aggregate = f64::NEG_INFINITY;

    for iteration in 1..=opts.max_iterations {
        let agg = aggregates(market, &small, &small_on, &large, &large_on);
        if iteration > opts.monotone_after && agg.aggregate < previous_aggregate - 1e-14 * agg.aggregate.abs().max(1.0) {
            return Attempt::Failed;
        }
        previous_aggregate = agg.aggregate;

        let denom = beta + gamma * (agg.mass + agg.large as f64);
        let choke = (alpha * beta + gamma * agg.aggregate) / denom;
        let mut step: f64 = 0.0;

        // Small firms: q = (L/beta)(p_max - p), aggregate price taken as given.
        for ((price, &c), on) in small.iter_mut().zip(&market.small_costs).zip(small_on.iter_mut()) {
            let best = if c < choke { 0.5 * (choke + c) } else { choke };
            *on = c < choke;
            step = step.max((best - *price).abs());
            *price += damping * (best - *price);
        }
        // Large firms: the own price enters the aggregate, so the demand
        // slope is (L/beta)(1 - gamma/D) with D counting this firm.
        for (i, (price, &cost)) in large.iter_mut().zip(&market.large_costs).enumerate() {
            let others = agg.aggregate - if large_on[i] { *price } else { 0.0 };
            let own_denom = if large_on[i] { denom } else { denom + gamma };
            let intercept = (alpha * beta + gamma * others) / (own_denom - gamma);
            let best = if cost < intercept { 0.5 * (intercept + cost) } else { intercept };
            large_on[i] = cost < intercept;
            step = step.max((best - *price).abs());
            *price += damping * (best - *price);
        }

        if step < opts.tolerance {
            let agg = aggregates(market, &small, &small_on, &large, &large_on);
            let denom = beta + gamma * (agg.mass + agg.large as f64);
            let choke = (alpha * beta + gamma * agg.aggregate) / denom;
            let theta = gamma / denom;
            let small_foc_residual = small
                .iter()
                .zip(&market.small_costs)
                .zip(&small_on)
                .filter(|(_, on)| **on)
                .map(|((p, c), _)| (p - 0.5 * (choke + c)).abs())
                .fold(0.0, f64::max);
            let large_foc_residual = large
                .iter()
                .zip(&market.large_costs)
                .zip(&large_on)
                .filter(|(_, on)| **on)
                .map(|((p, c), _)| (p - (choke + (1.0 - theta) * c) / (2.0 - theta)).abs())
                .fold(0.0, f64::max);
            return Attempt::Converged(Stage2Solution {
                small_prices: small,
                large_prices: large,
                choke_price: choke,
                aggregate_price: agg.aggregate,
                theta,
                active_mass: agg.mass,
                active_large: agg.large,
                iterations: iteration,
                damping,
                small_foc_residual,
                large_foc_residual,
            });
        }
    }
    Attempt::Failed
}

/// Bertrand-Nash prices of a finite market by damped best-response
/// iteration, starting from marginal cost. If the iteration stalls or the
/// aggregate price stops rising, the damping is halved once and the run
/// repeated.
pub fn stage2_fixed_point(market: &DiscretizedMarket, p: &ModelParams, opts: &Stage2Options) -> Result<Stage2Solution> {
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(ModelError::InvalidArgument(format!("damping {} outside (0, 1]", opts.damping)));
    }
    for damping in [opts.damping, 0.5 * opts.damping] {
        if let Attempt::Converged(solution) = iterate(market, p, opts, damping) {
            return Ok(solution);
        }
    }
    Err(ModelError::NoConvergence {
        iterations: opts.max_iterations,
        damping: 0.5 * opts.damping,
    })
}

/// Equilibrium choke price of a finite market with weights multiplied by
/// `scale`, from the best-response prices written as functions of the choke
/// price. The choke-price equation is linear given the set of active
/// sellers; the active set is updated until it settles.
fn choke_price(market: &DiscretizedMarket, scale: f64, p: &ModelParams) -> f64 {
    let (alpha, beta, gamma) = (p.prefs().alpha(), p.prefs().beta(), p.prefs().gamma());
    let mut small_on: Vec<bool> = market.weights.iter().map(|w| *w > 0.0).collect();
    let mut large_on = vec![true; market.large_costs.len()];
    let mut choke = f64::NAN;
    for _ in 0..=(small_on.len() + large_on.len()) {
        let mut mass = 0.0;
        let mut cost_sum = 0.0;
        for ((w, c), on) in market.weights.iter().zip(&market.small_costs).zip(&small_on) {
            if *on {
                mass += scale * w;
                cost_sum += scale * w * c;
            }
        }
        let large: Vec<f64> = market
            .large_costs
            .iter()
            .zip(&large_on)
            .filter(|(_, on)| **on)
            .map(|(c, _)| *c)
            .collect();
        let n = large.len() as f64;
        let denom = beta + gamma * (mass + n);
        let theta = gamma / denom;
        let markup = (1.0 - theta) / (2.0 - theta);
        let slope = denom - 0.5 * gamma * mass - gamma * n / (2.0 - theta);
        let intercept = alpha * beta + gamma * (0.5 * cost_sum + markup * large.iter().sum::<f64>());
        choke = intercept / slope;

        let mut changed = false;
        for (c, on) in market.small_costs.iter().zip(small_on.iter_mut()) {
            let now = *on && *c < choke;
            changed |= now != *on;
            *on = now;
        }
        for (c, on) in market.large_costs.iter().zip(large_on.iter_mut()) {
            let now = *on && *c < choke;
            changed |= now != *on;
            *on = now;
        }
        if !changed {
            break;
        }
    }
    choke
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleOptions {
    /// Cost nodes per market segment.
    pub nodes: usize,
    pub quadrature_tol: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            nodes: 2000,
            quadrature_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleEquilibrium {
    pub economy: Economy,
    pub cutoff: f64,
    pub export_cutoff: Option<f64>,
    /// Mass of small firms selling in a market.
    pub mass: f64,
    pub entrants: f64,
    pub producers: f64,
    /// Choke price of the discretized market at the returned mass.
    pub choke_price: f64,
}

/// Expected operating profit of an entrant, by quadrature of the CDF only.
pub fn entry_profit_quadrature(cutoff: f64, p: &ModelParams, economy: Economy, tol: f64) -> f64 {
    let scale = p.market_size() / (4.0 * p.prefs().beta());
    let domestic = params::squared_gap_moment_quadrature(cutoff, p.small(), tol);
    match economy {
        Economy::Closed => scale * domestic,
        Economy::Open => {
            let tau = p.tau();
            scale * (domestic + tau * tau * params::squared_gap_moment_quadrature(cutoff / tau, p.small(), tol))
        }
    }
}

/// Cutoff at which quadrature-evaluated entry profit equals `f_E`. Above
/// `c_M` the CDF is capped at one, so the root always exists.
pub fn oracle_cutoff(p: &ModelParams, economy: Economy, tol: f64) -> Result<f64> {
    let target = p.small().entry_cost();
    let excess = |x: f64| entry_profit_quadrature(x, p, economy, tol) - target;
    let mut hi = p.small().cost_max();
    while excess(hi) < 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(ModelError::InvalidArgument("entry profit never reaches f_E".into()));
        }
    }
    roots::bisect(excess, 0.0, hi, 0.0, roots::MAX_BISECTIONS)
}

/// Free-entry equilibrium computed without the Pareto closed forms.
pub fn free_entry_oracle(p: &ModelParams, economy: Economy, opts: &OracleOptions) -> Result<OracleEquilibrium> {
    if opts.nodes < 100 {
        return Err(ModelError::InvalidArgument(format!(
            "oracle needs at least 100 nodes, got {}",
            opts.nodes
        )));
    }
    let n = large_count(p)?;
    let cutoff = oracle_cutoff(p, economy, opts.quadrature_tol)?;
    if cutoff > p.small().cost_max() {
        return Err(ModelError::SupportViolation {
            cutoff,
            cost_max: p.small().cost_max(),
            min_cost_max: None,
        });
    }

    let cost = p.large().cost();
    let tau = p.tau();
    let mut report = FeasibilityReport::default();
    if n > 0 {
        match economy {
            Economy::Closed => report.push(Condition::new(
                feasibility::PROP1_LARGE,
                cost,
                Relation::Less,
                cutoff,
                Infeasibility::LargeFirmsInactive,
            )),
            Economy::Open => {
                report.push(Condition::new(
                    feasibility::OPEN_DOMESTIC_LARGE,
                    cost,
                    Relation::Less,
                    cutoff,
                    Infeasibility::LargeFirmsInactive,
                ));
                // Delivered cost against the foreign choke price.
                report.push(Condition::new(
                    feasibility::OPEN_EXPORTING_LARGE,
                    tau * cost,
                    Relation::Less,
                    cutoff,
                    Infeasibility::LargeFirmsDoNotExport,
                ));
            }
        }
    }

    let base = match economy {
        Economy::Closed => DiscretizedMarket::closed(cutoff, 1.0, opts.nodes, p)?,
        Economy::Open => DiscretizedMarket::open(cutoff, 1.0, opts.nodes, p)?,
    };
    let empty_choke = choke_price(&base, 0.0, p);
    let mass_name = match economy {
        Economy::Closed => feasibility::PROP1_MASS,
        Economy::Open => feasibility::OPEN_POSITIVE_MASS,
    };
    report.push(Condition::new(
        mass_name,
        empty_choke,
        Relation::Greater,
        cutoff,
        Infeasibility::NoPositiveMass,
    ));
    if !report.all_pass() {
        return Err(ModelError::Infeasible(report));
    }

    // More sellers lower the choke price.
    let gap = |m: f64| cutoff - choke_price(&base, m, p);
    let mut hi = 1.0;
    while gap(hi) < 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(ModelError::InvalidArgument("no mass brings the choke price to the cutoff".into()));
        }
    }
    let mass = roots::bisect(gap, 0.0, hi, 0.0, roots::MAX_BISECTIONS)?;

    let small = p.small();
    let (export_cutoff, sell_prob) = match economy {
        Economy::Closed => (None, params::pareto_cdf_capped(cutoff, small)),
        Economy::Open => (
            Some(cutoff / tau),
            params::pareto_cdf_capped(cutoff, small) + params::pareto_cdf_capped(cutoff / tau, small),
        ),
    };
    let entrants = mass / sell_prob;
    Ok(OracleEquilibrium {
        economy,
        cutoff,
        export_cutoff,
        mass,
        entrants,
        producers: entrants * params::pareto_cdf_capped(cutoff, small),
        choke_price: choke_price(&base, mass, p),
    })
}
