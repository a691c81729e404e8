//! Comparative statics of bilateral trade liberalization.
//!
//! The authoritative `dM/dtau` comes from implicit differentiation of the
//! symmetric mass equation and is cross-checked by central differences that
//! re-solve the whole equilibrium. A shorter closed form for `dM/dtau` that
//! drops the markup factor `(1-Θ)/(2-Θ)` on the `(1+tau) N C` term is kept
//! for comparison only; the liberalization condition retains the factor.

use serde::Serialize;

use crate::closed;
use crate::error::{ModelError, Result};
use crate::open::{self, OpenEquilibrium};
use crate::params::ModelParams;

/// Relative central-difference step on `tau`.
pub const FD_STEP: f64 = 1e-6;
/// Required relative agreement between implicit and finite-difference `dM/dtau`.
pub const DM_AGREEMENT_TOL: f64 = 1e-5;
/// Required relative agreement between analytic and finite-difference `dc_D/dtau`.
pub const DCD_AGREEMENT_TOL: f64 = 1e-6;
const JACOBIAN_FLOOR: f64 = 1e-14;

/// Inequality evaluated at an equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs - rhs`; positive exactly when the condition holds.
    pub slack: f64,
}

impl ConditionCheck {
    fn greater(lhs: f64, rhs: f64) -> Self {
        ConditionCheck {
            holds: lhs > rhs,
            lhs,
            rhs,
            slack: lhs - rhs,
        }
    }
}

/// `dM_D/dtau` split into the change in sellers and the reallocation of
/// sellers between domestic producers and foreign exporters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProducerMassDerivative {
    pub total: f64,
    pub mass_effect: f64,
    pub reallocation_effect: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AgreementFlags {
    pub implicit_fd_same_sign: bool,
    pub implicit_fd_relative_gap: f64,
    pub implicit_fd_within_tol: bool,
    pub display_implicit_same_sign: bool,
    pub display_fd_same_sign: bool,
    /// `display - implicit`.
    pub display_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparativeStaticsResult {
    pub dcd_dtau: f64,
    pub dm_dtau_display: f64,
    pub dm_dtau_implicit: f64,
    pub dm_dtau_fd: f64,
    pub dmd_dtau: ProducerMassDerivative,
    pub prop2: ConditionCheck,
    pub prop3: ConditionCheck,
    pub agreement: AgreementFlags,
}

fn require_interior_tau(p: &ModelParams) -> Result<()> {
    if p.tau() > 1.0 {
        Ok(())
    } else {
        Err(ModelError::InvalidArgument(format!(
            "comparative statics need tau > 1, got {}",
            p.tau()
        )))
    }
}

/// `(k / (k+2)) (rho / (1+rho)) / tau`, the elasticity factor of `c_D` in `tau`.
fn cutoff_growth_rate(shape: f64, rho: f64, tau: f64) -> f64 {
    shape / (shape + 2.0) * rho / (1.0 + rho) / tau
}

/// Exact derivative of the open-economy cutoff with respect to `tau`.
pub fn dcd_dtau(p: &ModelParams) -> Result<f64> {
    require_interior_tau(p)?;
    let cutoffs = open::solve_cutoffs_open(p)?;
    Ok(cutoffs.domestic * cutoff_growth_rate(p.small().shape(), cutoffs.freeness, p.tau()))
}

fn central_difference<F>(p: &ModelParams, f: F) -> Result<f64>
where
    F: Fn(&ModelParams) -> Result<f64>,
{
    require_interior_tau(p)?;
    let tau = p.tau();
    let h = FD_STEP * tau;
    if tau - h < 1.0 {
        return Err(ModelError::InvalidArgument(format!(
            "tau = {tau} too close to 1 for a central difference"
        )));
    }
    let up = f(&p.with_tau(tau + h)?)?;
    let down = f(&p.with_tau(tau - h)?)?;
    Ok((up - down) / (2.0 * h))
}

/// Central difference of the cutoff in `tau`, step `1e-6 tau`.
pub fn dcd_dtau_fd(p: &ModelParams) -> Result<f64> {
    central_difference(p, |q| Ok(open::solve_cutoffs_open(q)?.domestic))
}

/// Central difference of the equilibrium mass, re-solving both sides from
/// scratch.
pub fn dm_dtau_fd(p: &ModelParams) -> Result<f64> {
    central_difference(p, |q| Ok(open::solve_open(q)?.mass))
}

/// Short closed form for `dM/dtau`, without the markup factor on `(1+tau) N C`.
pub fn dm_dtau_display(eq: &OpenEquilibrium, p: &ModelParams) -> f64 {
    let prefs = p.prefs();
    let k = p.small().shape();
    let n = p.large().count();
    let cost = p.large().cost();
    let tau = p.tau();
    let rho = eq.cutoffs.freeness;
    let theta = eq.theta;
    let numerator = (prefs.alpha() * prefs.beta() / prefs.gamma() + (1.0 + tau) * n * cost) * k / (k + 2.0) * rho
        / (rho + 1.0)
        / tau
        - closed::markup_share(theta) * n * cost;
    -numerator / mass_jacobian(eq, p)
}

/// `dF/dM` of the symmetric mass equation at the equilibrium.
fn mass_jacobian(eq: &OpenEquilibrium, p: &ModelParams) -> f64 {
    let k = p.small().shape();
    let n = p.large().count();
    let c_d = eq.cutoffs.domestic;
    let r = eq.theta / (2.0 - eq.theta);
    c_d / (2.0 * (k + 1.0)) + r * r * n * ((c_d - p.large().cost()) + (c_d - p.tau() * p.large().cost()))
}

/// `dM/dtau = -F_tau / F_M` for `F(M, tau)` = right side minus left side of
/// the symmetric mass equation, using `dΘ/dM = -Θ^2`.
pub fn dm_dtau_implicit(eq: &OpenEquilibrium, p: &ModelParams) -> Result<f64> {
    require_interior_tau(p)?;
    let prefs = p.prefs();
    let k = p.small().shape();
    let n = p.large().count();
    let cost = p.large().cost();
    let c_d = eq.cutoffs.domestic;
    let dcd = c_d * cutoff_growth_rate(k, eq.cutoffs.freeness, p.tau());
    let share = closed::markup_share(eq.theta);

    let f_m = mass_jacobian(eq, p);
    if f_m.abs() < JACOBIAN_FLOOR {
        return Err(ModelError::DegenerateJacobian { value: f_m });
    }
    // ∂F/∂c_D · dc_D/dτ + ∂F/∂τ at fixed c_D
    let f_cd = eq.mass / (2.0 * (k + 1.0)) + 2.0 * n * share + prefs.beta() / prefs.gamma();
    let f_tau = f_cd * dcd - share * n * cost;
    Ok(-f_tau / f_m)
}

/// Condition under which lower trade costs raise the mass of sellers:
/// `(2-Θ)/(1-Θ) · alpha beta / gamma > ((2 rho + k + 2) tau / (k rho) - 1) N C`.
///
/// Without large firms the markup factor has nothing to scale and the
/// condition reduces to `alpha beta / gamma > 0`.
pub fn prop2_condition(eq: &OpenEquilibrium, p: &ModelParams) -> ConditionCheck {
    let prefs = p.prefs();
    let k = p.small().shape();
    let rho = eq.cutoffs.freeness;
    let tau = p.tau();
    if p.large().count() == 0.0 {
        return ConditionCheck::greater(prefs.alpha() * prefs.beta() / prefs.gamma(), 0.0);
    }
    let lhs = (2.0 - eq.theta) / (1.0 - eq.theta) * prefs.alpha() * prefs.beta() / prefs.gamma();
    let rhs = ((2.0 * rho + k + 2.0) * tau / (k * rho) - 1.0) * p.large().count() * p.large().cost();
    ConditionCheck::greater(lhs, rhs)
}

/// `dM_D/dtau = (1/(1+rho)) [dM/dtau + k rho M / ((1+rho) tau)]`.
pub fn dmd_dtau(eq: &OpenEquilibrium, p: &ModelParams, dm_dtau: f64) -> ProducerMassDerivative {
    let k = p.small().shape();
    let rho = eq.cutoffs.freeness;
    let tau = p.tau();
    let mass_effect = dm_dtau / (1.0 + rho);
    let reallocation_effect = k * rho * eq.mass / ((1.0 + rho) * (1.0 + rho) * tau);
    ProducerMassDerivative {
        total: mass_effect + reallocation_effect,
        mass_effect,
        reallocation_effect,
    }
}

/// Short-form condition under which lower trade costs raise the mass of
/// domestic producers (that is, predicts `dM_D/dtau < 0`).
pub fn prop3_condition(eq: &OpenEquilibrium, p: &ModelParams) -> ConditionCheck {
    let prefs = p.prefs();
    let k = p.small().shape();
    let n = p.large().count();
    let cost = p.large().cost();
    let tau = p.tau();
    let rho = eq.cutoffs.freeness;
    let c_d = eq.cutoffs.domestic;
    let m = eq.mass;
    let r = eq.theta / (2.0 - eq.theta);
    let lhs = (prefs.alpha() * prefs.beta() / prefs.gamma() + (1.0 + tau) * n * cost) / (k + 2.0);
    let rhs = m * c_d / (2.0 * (k + 1.0))
        + m * n * (2.0 * c_d - (1.0 + tau) * cost) * r * r
        + n * cost * (1.0 + rho) * tau / (rho * k) * closed::markup_share(eq.theta);
    ConditionCheck::greater(lhs, rhs)
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Every trade-liberalization statistic at one parameter point.
pub fn comparative_statics(p: &ModelParams) -> Result<ComparativeStaticsResult> {
    require_interior_tau(p)?;
    let eq = open::solve_open(p)?;
    let dcd = dcd_dtau(p)?;
    let display = dm_dtau_display(&eq, p);
    let implicit = dm_dtau_implicit(&eq, p)?;
    let fd = dm_dtau_fd(p)?;
    let gap = relative_gap(implicit, fd);
    Ok(ComparativeStaticsResult {
        dcd_dtau: dcd,
        dm_dtau_display: display,
        dm_dtau_implicit: implicit,
        dm_dtau_fd: fd,
        dmd_dtau: dmd_dtau(&eq, p, implicit),
        prop2: prop2_condition(&eq, p),
        prop3: prop3_condition(&eq, p),
        agreement: AgreementFlags {
            implicit_fd_same_sign: implicit.signum() == fd.signum(),
            implicit_fd_relative_gap: gap,
            implicit_fd_within_tol: gap <= DM_AGREEMENT_TOL,
            display_implicit_same_sign: display.signum() == implicit.signum(),
            display_fd_same_sign: display.signum() == fd.signum(),
            display_residual: display - implicit,
        },
    })
}

/// Solved values of one sweep row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepValues {
    pub rho: f64,
    pub cutoff: f64,
    pub export_cutoff: f64,
    pub mass: f64,
    pub producers: f64,
    pub entrants: f64,
    pub dm_dtau: f64,
    pub dmd_dtau: f64,
    pub prop2: bool,
    pub prop3: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub tau: f64,
    /// Solved values, or the name of the condition that failed.
    pub outcome: std::result::Result<SweepValues, String>,
}

fn failure_name(err: &ModelError) -> String {
    match err {
        ModelError::Infeasible(report) => report
            .failures()
            .next()
            .map(|c| c.name.to_string())
            .unwrap_or_else(|| err.to_string()),
        ModelError::SupportViolation { .. } => crate::feasibility::SUPPORT.to_string(),
        ModelError::InvalidArgument(_) | ModelError::InvalidParameter { .. } => "tau > 1".to_string(),
        other => other.to_string(),
    }
}

fn sweep_point(p: &ModelParams) -> Result<SweepValues> {
    require_interior_tau(p)?;
    let eq = open::solve_open(p)?;
    let dm = dm_dtau_implicit(&eq, p)?;
    Ok(SweepValues {
        rho: eq.cutoffs.freeness,
        cutoff: eq.cutoffs.domestic,
        export_cutoff: eq.cutoffs.export,
        mass: eq.mass,
        producers: eq.producers,
        entrants: eq.entrants,
        dm_dtau: dm,
        dmd_dtau: dmd_dtau(&eq, p, dm).total,
        prop2: prop2_condition(&eq, p).holds,
        prop3: prop3_condition(&eq, p).holds,
    })
}

/// Equilibrium and derivatives along an ascending grid of trade costs.
/// Points that fail a regime condition are kept with the failure named.
pub fn tau_sweep(p: &ModelParams, tau_grid: &[f64]) -> Result<Vec<SweepRow>> {
    if tau_grid.is_empty() {
        return Err(ModelError::InvalidArgument("empty tau grid".into()));
    }
    if tau_grid.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less)) {
        return Err(ModelError::InvalidArgument("tau grid must be strictly ascending".into()));
    }
    Ok(tau_grid
        .iter()
        .map(|&tau| {
            let outcome = p
                .with_tau(tau)
                .and_then(|q| sweep_point(&q))
                .map_err(|e| failure_name(&e));
            SweepRow { tau, outcome }
        })
        .collect())
}
