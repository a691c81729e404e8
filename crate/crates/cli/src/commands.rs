//! Subcommand drivers. Every number in a report comes straight from the
//! library; this layer only selects, labels and formats.

use mixmarket::closed::{self, coexistence_check, solve_cutoff_closed};
use mixmarket::feasibility::Condition;
use mixmarket::open::{self, open_feasibility, positivity_variants_disagree, solve_cutoffs_open};
use mixmarket::oracle::{self, DiscretizedMarket, Economy, OracleOptions, Stage2Options};
use mixmarket::statics::{self, ConditionCheck, ProducerMassDerivative};
use mixmarket::{comparative_statics, solve_closed, solve_open, FeasibilityReport, Infeasibility, ModelError, ModelParams};
use serde::Serialize;

use crate::emit::{self, csv_table, opt_bool, opt_real, real, SCHEMA_VERSION};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    SolveClosed,
    SolveOpen,
    Statics,
    Sweep,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SolveClosed => "solve-closed",
            Command::SolveOpen => "solve-open",
            Command::Statics => "statics",
            Command::Sweep => "sweep",
            Command::Verify => "verify",
        }
    }

    pub fn default_format(self) -> Format {
        match self {
            Command::Sweep => Format::Csv,
            _ => Format::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Exit status of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Feasible,
    InvalidInput,
    Infeasible,
    /// Oracle and analytic solvers disagree beyond the stated tolerance.
    ToleranceExceeded,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Feasible => 0,
            Status::InvalidInput => 1,
            Status::Infeasible => 2,
            Status::ToleranceExceeded => 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub body: String,
    pub status: Status,
    /// One-line summaries for standard error.
    pub notes: Vec<String>,
}

/// A run that produced no report.
#[derive(Debug, Clone, PartialEq)]
pub struct RunError(pub String);

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for RunError {}

pub fn run(command: Command, scenario: &Scenario, format: Format) -> Result<Outcome, RunError> {
    match command {
        Command::SolveClosed => solve_closed_report(scenario, format),
        Command::SolveOpen => solve_open_report(scenario, format),
        Command::Statics => statics_report(scenario, format),
        Command::Sweep => sweep_report(scenario, format),
        Command::Verify => verify_report(scenario, format),
    }
}

/// Scenario parameters under their file keys.
#[derive(Debug, Serialize)]
struct Echo {
    alpha: f64,
    beta: f64,
    gamma: f64,
    #[serde(rename = "L")]
    market_size: f64,
    #[serde(rename = "N")]
    large_count: f64,
    #[serde(rename = "C")]
    large_cost: f64,
    #[serde(rename = "c_M")]
    cost_max: f64,
    k: f64,
    #[serde(rename = "f_E")]
    entry_cost: f64,
    tau: f64,
}

impl Echo {
    fn of(p: &ModelParams) -> Self {
        Echo {
            alpha: p.prefs().alpha(),
            beta: p.prefs().beta(),
            gamma: p.prefs().gamma(),
            market_size: p.market_size(),
            large_count: p.large().count(),
            large_cost: p.large().cost(),
            cost_max: p.small().cost_max(),
            k: p.small().shape(),
            entry_cost: p.small().entry_cost(),
            tau: p.tau(),
        }
    }
}

/// Errors that classify the parameter point rather than the input.
fn infeasible(err: &ModelError) -> bool {
    err.infeasibility().is_some()
}

fn failed_names(report: &FeasibilityReport) -> String {
    report.failures().map(|c| c.name).collect::<Vec<_>>().join("; ")
}

fn feasibility_note(report: &FeasibilityReport) -> Vec<String> {
    if report.all_pass() {
        Vec::new()
    } else {
        vec![format!("infeasible: {}", report.failure_summary())]
    }
}

fn solver_failure(err: ModelError) -> RunError {
    RunError(format!("solver failed: {err}"))
}

#[derive(Debug, Serialize)]
struct ClosedReport<'a> {
    schema: u32,
    command: &'static str,
    params: Echo,
    feasible: bool,
    #[serde(rename = "c_D")]
    cutoff: Option<f64>,
    #[serde(rename = "M")]
    mass: Option<f64>,
    theta: Option<f64>,
    #[serde(rename = "P_large")]
    large_price: Option<f64>,
    #[serde(rename = "P_agg")]
    aggregate_price: Option<f64>,
    feasibility: &'a [Condition],
}

fn solve_closed_report(scenario: &Scenario, format: Format) -> Result<Outcome, RunError> {
    let p = &scenario.params;
    let report = coexistence_check(p);
    let cutoff = solve_cutoff_closed(p).ok();
    let eq = match solve_closed(p) {
        Ok(eq) => Some(eq),
        Err(e) if infeasible(&e) => None,
        Err(e) => return Err(solver_failure(e)),
    };
    let out = ClosedReport {
        schema: SCHEMA_VERSION,
        command: Command::SolveClosed.name(),
        params: Echo::of(p),
        feasible: eq.is_some(),
        cutoff,
        mass: eq.as_ref().map(|e| e.mass),
        theta: eq.as_ref().map(|e| e.theta),
        large_price: eq.as_ref().map(|e| e.large_price),
        aggregate_price: eq.as_ref().map(|e| e.aggregate_price),
        feasibility: &report.conditions,
    };
    let body = match format {
        Format::Json => emit::json(&out),
        Format::Csv => csv_table(
            &["c_D", "M", "theta", "P_large", "P_agg", "feasible", "failed"],
            &[vec![
                opt_real(out.cutoff),
                opt_real(out.mass),
                opt_real(out.theta),
                opt_real(out.large_price),
                opt_real(out.aggregate_price),
                out.feasible.to_string(),
                failed_names(&report),
            ]],
        ),
    };
    Ok(Outcome {
        body,
        status: if out.feasible { Status::Feasible } else { Status::Infeasible },
        notes: feasibility_note(&report),
    })
}

#[derive(Debug, Serialize)]
struct OpenReport<'a> {
    schema: u32,
    command: &'static str,
    params: Echo,
    feasible: bool,
    rho: f64,
    #[serde(rename = "c_D")]
    cutoff: Option<f64>,
    #[serde(rename = "c_X")]
    export_cutoff: Option<f64>,
    #[serde(rename = "M")]
    mass: Option<f64>,
    #[serde(rename = "M_E")]
    entrants: Option<f64>,
    #[serde(rename = "M_D")]
    producers: Option<f64>,
    theta: Option<f64>,
    #[serde(rename = "P_large_domestic")]
    large_price_domestic: Option<f64>,
    #[serde(rename = "P_large_export")]
    large_price_export: Option<f64>,
    #[serde(rename = "P_agg")]
    aggregate_price: Option<f64>,
    /// The informational positivity variant classifies differently.
    positivity_variants_disagree: bool,
    feasibility: &'a [Condition],
}

fn solve_open_report(scenario: &Scenario, format: Format) -> Result<Outcome, RunError> {
    let p = &scenario.params;
    let report = open_feasibility(p);
    let cutoffs = solve_cutoffs_open(p).ok();
    let eq = match solve_open(p) {
        Ok(eq) => Some(eq),
        Err(e) if infeasible(&e) => None,
        Err(e) => return Err(solver_failure(e)),
    };
    let out = OpenReport {
        schema: SCHEMA_VERSION,
        command: Command::SolveOpen.name(),
        params: Echo::of(p),
        feasible: eq.is_some(),
        rho: p.derived().rho,
        cutoff: cutoffs.map(|c| c.domestic),
        export_cutoff: cutoffs.map(|c| c.export),
        mass: eq.as_ref().map(|e| e.mass),
        entrants: eq.as_ref().map(|e| e.entrants),
        producers: eq.as_ref().map(|e| e.producers),
        theta: eq.as_ref().map(|e| e.theta),
        large_price_domestic: eq.as_ref().map(|e| e.large_prices.domestic),
        large_price_export: eq.as_ref().map(|e| e.large_prices.export),
        aggregate_price: eq.as_ref().map(|e| e.aggregate_price),
        positivity_variants_disagree: positivity_variants_disagree(&report),
        feasibility: &report.conditions,
    };
    let body = match format {
        Format::Json => emit::json(&out),
        Format::Csv => csv_table(
            &[
                "rho",
                "c_D",
                "c_X",
                "M",
                "M_E",
                "M_D",
                "theta",
                "P_large_domestic",
                "P_large_export",
                "P_agg",
                "feasible",
                "failed",
            ],
            &[vec![
                real(out.rho),
                opt_real(out.cutoff),
                opt_real(out.export_cutoff),
                opt_real(out.mass),
                opt_real(out.entrants),
                opt_real(out.producers),
                opt_real(out.theta),
                opt_real(out.large_price_domestic),
                opt_real(out.large_price_export),
                opt_real(out.aggregate_price),
                out.feasible.to_string(),
                failed_names(&report),
            ]],
        ),
    };
    Ok(Outcome {
        body,
        status: if out.feasible { Status::Feasible } else { Status::Infeasible },
        notes: feasibility_note(&report),
    })
}

#[derive(Debug, Serialize)]
struct StaticsValues {
    #[serde(rename = "dcD_dtau")]
    dcd_dtau: f64,
    #[serde(rename = "dM_dtau_display")]
    dm_dtau_display: f64,
    #[serde(rename = "dM_dtau_implicit")]
    dm_dtau_implicit: f64,
    #[serde(rename = "dM_dtau_fd")]
    dm_dtau_fd: f64,
    /// `dM_dtau_display - dM_dtau_implicit`.
    display_residual: f64,
    #[serde(rename = "dMD_dtau")]
    dmd_dtau: ProducerMassDerivative,
    prop2: ConditionCheck,
    prop3: ConditionCheck,
    implicit_fd_relative_gap: f64,
    implicit_fd_within_tol: bool,
    implicit_fd_same_sign: bool,
    display_implicit_same_sign: bool,
    display_fd_same_sign: bool,
}

#[derive(Debug, Serialize)]
struct StaticsReport<'a> {
    schema: u32,
    command: &'static str,
    params: Echo,
    feasible: bool,
    statics: Option<StaticsValues>,
    feasibility: &'a [Condition],
}

fn statics_report(scenario: &Scenario, format: Format) -> Result<Outcome, RunError> {
    let p = &scenario.params;
    if p.tau() <= 1.0 {
        return Err(RunError(format!(
            "statics needs tau > 1 in the scenario, got tau = {}",
            p.tau()
        )));
    }
    let report = open_feasibility(p);
    let values = match comparative_statics(p) {
        Ok(cs) => Some(StaticsValues {
            dcd_dtau: cs.dcd_dtau,
            dm_dtau_display: cs.dm_dtau_display,
            dm_dtau_implicit: cs.dm_dtau_implicit,
            dm_dtau_fd: cs.dm_dtau_fd,
            display_residual: cs.agreement.display_residual,
            dmd_dtau: cs.dmd_dtau,
            prop2: cs.prop2,
            prop3: cs.prop3,
            implicit_fd_relative_gap: cs.agreement.implicit_fd_relative_gap,
            implicit_fd_within_tol: cs.agreement.implicit_fd_within_tol,
            implicit_fd_same_sign: cs.agreement.implicit_fd_same_sign,
            display_implicit_same_sign: cs.agreement.display_implicit_same_sign,
            display_fd_same_sign: cs.agreement.display_fd_same_sign,
        }),
        Err(e) if infeasible(&e) => None,
        Err(e) => return Err(solver_failure(e)),
    };
    let mut notes = feasibility_note(&report);
    if report.all_pass() && values.is_none() {
        notes.push("infeasible: a neighbouring trade cost used by the finite difference is infeasible".into());
    }
    let status = if values.is_some() { Status::Feasible } else { Status::Infeasible };
    let out = StaticsReport {
        schema: SCHEMA_VERSION,
        command: Command::Statics.name(),
        params: Echo::of(p),
        feasible: values.is_some(),
        statics: values,
        feasibility: &report.conditions,
    };
    let body = match format {
        Format::Json => emit::json(&out),
        Format::Csv => {
            let v = out.statics.as_ref();
            csv_table(
                &[
                    "tau",
                    "dcD_dtau",
                    "dM_dtau_display",
                    "dM_dtau_implicit",
                    "dM_dtau_fd",
                    "display_residual",
                    "dMD_dtau",
                    "dMD_mass_effect",
                    "dMD_reallocation_effect",
                    "prop2",
                    "prop2_slack",
                    "prop3",
                    "prop3_slack",
                    "implicit_fd_relative_gap",
                    "feasible",
                    "failed",
                ],
                &[vec![
                    real(p.tau()),
                    opt_real(v.map(|v| v.dcd_dtau)),
                    opt_real(v.map(|v| v.dm_dtau_display)),
                    opt_real(v.map(|v| v.dm_dtau_implicit)),
                    opt_real(v.map(|v| v.dm_dtau_fd)),
                    opt_real(v.map(|v| v.display_residual)),
                    opt_real(v.map(|v| v.dmd_dtau.total)),
                    opt_real(v.map(|v| v.dmd_dtau.mass_effect)),
                    opt_real(v.map(|v| v.dmd_dtau.reallocation_effect)),
                    opt_bool(v.map(|v| v.prop2.holds)),
                    opt_real(v.map(|v| v.prop2.slack)),
                    opt_bool(v.map(|v| v.prop3.holds)),
                    opt_real(v.map(|v| v.prop3.slack)),
                    opt_real(v.map(|v| v.implicit_fd_relative_gap)),
                    out.feasible.to_string(),
                    failed_names(&report),
                ]],
            )
        }
    };
    Ok(Outcome { body, status, notes })
}

/// Column order of the sweep table.
pub const SWEEP_COLUMNS: [&str; 12] = [
    "tau",
    "rho",
    "c_D",
    "c_X",
    "M",
    "M_D",
    "M_E",
    "dM_dtau_implicit",
    "dMD_dtau",
    "prop2",
    "prop3",
    "status",
];

#[derive(Debug, Serialize)]
struct SweepJsonRow {
    tau: f64,
    rho: Option<f64>,
    #[serde(rename = "c_D")]
    cutoff: Option<f64>,
    #[serde(rename = "c_X")]
    export_cutoff: Option<f64>,
    #[serde(rename = "M")]
    mass: Option<f64>,
    #[serde(rename = "M_D")]
    producers: Option<f64>,
    #[serde(rename = "M_E")]
    entrants: Option<f64>,
    #[serde(rename = "dM_dtau_implicit")]
    dm_dtau: Option<f64>,
    #[serde(rename = "dMD_dtau")]
    dmd_dtau: Option<f64>,
    prop2: Option<bool>,
    prop3: Option<bool>,
    /// `ok`, or the name of the condition that failed.
    status: String,
}

#[derive(Debug, Serialize)]
struct SweepReport {
    schema: u32,
    command: &'static str,
    params: Echo,
    rows: Vec<SweepJsonRow>,
}

fn sweep_report(scenario: &Scenario, format: Format) -> Result<Outcome, RunError> {
    let spec = scenario
        .sweep
        .ok_or_else(|| RunError("sweep needs a [sweep] table with tau_min, tau_max and steps".into()))?;
    let p = &scenario.params;
    let rows = statics::tau_sweep(p, &spec.grid()).map_err(|e| RunError(e.to_string()))?;
    let rows: Vec<SweepJsonRow> = rows
        .into_iter()
        .map(|r| match r.outcome {
            Ok(v) => SweepJsonRow {
                tau: r.tau,
                rho: Some(v.rho),
                cutoff: Some(v.cutoff),
                export_cutoff: Some(v.export_cutoff),
                mass: Some(v.mass),
                producers: Some(v.producers),
                entrants: Some(v.entrants),
                dm_dtau: Some(v.dm_dtau),
                dmd_dtau: Some(v.dmd_dtau),
                prop2: Some(v.prop2),
                prop3: Some(v.prop3),
                status: "ok".into(),
            },
            Err(name) => SweepJsonRow {
                tau: r.tau,
                rho: None,
                cutoff: None,
                export_cutoff: None,
                mass: None,
                producers: None,
                entrants: None,
                dm_dtau: None,
                dmd_dtau: None,
                prop2: None,
                prop3: None,
                status: name,
            },
        })
        .collect();
    let bad = rows.iter().filter(|r| r.status != "ok").count();
    let notes = if bad > 0 {
        vec![format!("infeasible: {bad} of {} sweep points", rows.len())]
    } else {
        Vec::new()
    };
    let status = if bad > 0 { Status::Infeasible } else { Status::Feasible };
    let body = match format {
        Format::Csv => csv_table(
            &SWEEP_COLUMNS,
            &rows
                .iter()
                .map(|r| {
                    vec![
                        real(r.tau),
                        opt_real(r.rho),
                        opt_real(r.cutoff),
                        opt_real(r.export_cutoff),
                        opt_real(r.mass),
                        opt_real(r.producers),
                        opt_real(r.entrants),
                        opt_real(r.dm_dtau),
                        opt_real(r.dmd_dtau),
                        opt_bool(r.prop2),
                        opt_bool(r.prop3),
                        r.status.clone(),
                    ]
                })
                .collect::<Vec<_>>(),
        ),
        Format::Json => emit::json(&SweepReport {
            schema: SCHEMA_VERSION,
            command: Command::Sweep.name(),
            params: Echo::of(p),
            rows,
        }),
    };
    Ok(Outcome { body, status, notes })
}

/// Absolute tolerance on stage-2 prices against their closed forms.
pub const STAGE2_PRICE_TOL: f64 = 1e-6;
/// Grid sizes of the refinement table.
pub const REFINEMENT_NODES: [usize; 4] = [250, 500, 1000, 2000];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
enum GapKind {
    Relative,
    Absolute,
}

impl GapKind {
    fn label(self) -> &'static str {
        match self {
            GapKind::Relative => "relative",
            GapKind::Absolute => "absolute",
        }
    }
}

fn regime_label(regime: Option<Infeasibility>) -> &'static str {
    regime.map(Infeasibility::label).unwrap_or("feasible")
}

#[derive(Debug, Serialize)]
struct Check {
    check: String,
    oracle: f64,
    analytic: f64,
    gap: f64,
    kind: GapKind,
    tolerance: f64,
    pass: bool,
}

impl Check {
    fn relative(check: impl Into<String>, oracle: f64, analytic: f64, tolerance: f64) -> Self {
        let gap = (oracle - analytic).abs() / analytic.abs().max(f64::MIN_POSITIVE);
        Check {
            check: check.into(),
            oracle,
            analytic,
            gap,
            kind: GapKind::Relative,
            tolerance,
            pass: gap <= tolerance,
        }
    }

    fn absolute(check: impl Into<String>, oracle: f64, analytic: f64, tolerance: f64) -> Self {
        let gap = (oracle - analytic).abs();
        Check {
            check: check.into(),
            oracle,
            analytic,
            gap,
            kind: GapKind::Absolute,
            tolerance,
            pass: gap <= tolerance,
        }
    }
}

#[derive(Debug, Serialize)]
struct RefinementRow {
    nodes: usize,
    mass: f64,
    analytic_mass: f64,
    relative_error: f64,
}

#[derive(Debug, Serialize)]
struct EconomyVerification {
    economy: &'static str,
    analytic_regime: Option<Infeasibility>,
    oracle_regime: Option<Infeasibility>,
    regimes_agree: bool,
    checks: Vec<Check>,
    refinement: Vec<RefinementRow>,
    refinement_monotone: Option<bool>,
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    schema: u32,
    command: &'static str,
    params: Echo,
    nodes: usize,
    tolerance: f64,
    pass: bool,
    economies: Vec<EconomyVerification>,
}

fn regime(result: &Result<impl Sized, ModelError>) -> Result<Option<Infeasibility>, RunError> {
    match result {
        Ok(_) => Ok(None),
        Err(e) => match e.infeasibility() {
            Some(kind) => Ok(Some(kind)),
            None => Err(solver_failure(e.clone())),
        },
    }
}

fn refinement(
    p: &ModelParams,
    economy: Economy,
    exact_mass: f64,
) -> Result<(Vec<RefinementRow>, Option<bool>), RunError> {
    let mut rows = Vec::new();
    for nodes in REFINEMENT_NODES {
        let opts = OracleOptions {
            nodes,
            ..OracleOptions::default()
        };
        let o = oracle::free_entry_oracle(p, economy, &opts).map_err(solver_failure)?;
        rows.push(RefinementRow {
            nodes,
            mass: o.mass,
            analytic_mass: exact_mass,
            relative_error: (o.mass - exact_mass).abs() / exact_mass,
        });
    }
    let monotone = rows.windows(2).all(|w| w[1].relative_error <= w[0].relative_error);
    Ok((rows, Some(monotone)))
}

fn verify_closed(scenario: &Scenario) -> Result<EconomyVerification, RunError> {
    let p = &scenario.params;
    let opts = OracleOptions {
        nodes: scenario.oracle.nodes,
        ..OracleOptions::default()
    };
    let analytic = solve_closed(p);
    let simulated = oracle::free_entry_oracle(p, Economy::Closed, &opts);
    let analytic_regime = regime(&analytic)?;
    let oracle_regime = regime(&simulated)?;
    let mut out = EconomyVerification {
        economy: "closed",
        analytic_regime,
        oracle_regime,
        regimes_agree: analytic_regime == oracle_regime,
        checks: Vec::new(),
        refinement: Vec::new(),
        refinement_monotone: None,
    };
    let (Ok(eq), Ok(o)) = (analytic, simulated) else {
        return Ok(out);
    };
    let tol = scenario.oracle.tolerance;
    out.checks.push(Check::relative("c_D", o.cutoff, eq.cutoff, tol));
    out.checks.push(Check::relative("M", o.mass, eq.mass, tol));

    let market = DiscretizedMarket::closed(eq.cutoff, eq.mass, scenario.oracle.nodes, p).map_err(solver_failure)?;
    let s = oracle::stage2_fixed_point(&market, p, &Stage2Options::default()).map_err(solver_failure)?;
    out.checks.push(Check::absolute("stage-2 choke price", s.choke_price, eq.cutoff, STAGE2_PRICE_TOL));
    let worst_small = s
        .small_prices
        .iter()
        .zip(market.small_costs())
        .map(|(price, &c)| (price, closed::small_firm_outcomes(c, eq.cutoff, p)))
        .filter_map(|(price, outcome)| outcome.ok()?.sales().map(|sales| (*price, sales.price)))
        .fold((0.0, 0.0), |worst: (f64, f64), (sim, exact)| {
            if (sim - exact).abs() > (worst.0 - worst.1).abs() {
                (sim, exact)
            } else {
                worst
            }
        });
    out.checks.push(Check::absolute("stage-2 small price (worst node)", worst_small.0, worst_small.1, STAGE2_PRICE_TOL));
    if let Some(&large) = s.large_prices.first() {
        out.checks.push(Check::absolute("stage-2 large price", large, eq.large_price, STAGE2_PRICE_TOL));
    }

    let (rows, monotone) = refinement(p, Economy::Closed, eq.mass)?;
    out.refinement = rows;
    out.refinement_monotone = monotone;
    Ok(out)
}

fn verify_open(scenario: &Scenario) -> Result<EconomyVerification, RunError> {
    let p = &scenario.params;
    let opts = OracleOptions {
        nodes: scenario.oracle.nodes,
        ..OracleOptions::default()
    };
    let analytic = solve_open(p);
    let simulated = oracle::free_entry_oracle(p, Economy::Open, &opts);
    let analytic_regime = regime(&analytic)?;
    let oracle_regime = regime(&simulated)?;
    let mut out = EconomyVerification {
        economy: "open",
        analytic_regime,
        oracle_regime,
        regimes_agree: analytic_regime == oracle_regime,
        checks: Vec::new(),
        refinement: Vec::new(),
        refinement_monotone: None,
    };
    let (Ok(eq), Ok(o)) = (analytic, simulated) else {
        return Ok(out);
    };
    let tol = scenario.oracle.tolerance;
    out.checks.push(Check::relative("c_D", o.cutoff, eq.cutoffs.domestic, tol));
    if let Some(c_x) = o.export_cutoff {
        out.checks.push(Check::relative("c_X", c_x, eq.cutoffs.export, tol));
    }
    out.checks.push(Check::relative("M", o.mass, eq.mass, tol));
    out.checks.push(Check::relative("M_E", o.entrants, eq.entrants, tol));
    out.checks.push(Check::relative("M_D", o.producers, eq.producers, tol));

    let market = DiscretizedMarket::open(eq.cutoffs.domestic, eq.mass, scenario.oracle.nodes, p).map_err(solver_failure)?;
    let s = oracle::stage2_fixed_point(&market, p, &Stage2Options::default()).map_err(solver_failure)?;
    out.checks.push(Check::absolute(
        "stage-2 choke price",
        s.choke_price,
        eq.cutoffs.domestic,
        STAGE2_PRICE_TOL,
    ));
    let prices = open::open_large_prices(&eq.cutoffs, eq.theta, p);
    let n = s.large_prices.len() / 2;
    if n > 0 {
        out.checks.push(Check::absolute(
            "stage-2 domestic large price",
            s.large_prices[0],
            prices.domestic,
            STAGE2_PRICE_TOL,
        ));
        out.checks.push(Check::absolute(
            "stage-2 imported large price",
            s.large_prices[n],
            prices.export,
            STAGE2_PRICE_TOL,
        ));
    }

    let (rows, monotone) = refinement(p, Economy::Open, eq.mass)?;
    out.refinement = rows;
    out.refinement_monotone = monotone;
    Ok(out)
}

fn verify_report(scenario: &Scenario, format: Format) -> Result<Outcome, RunError> {
    let p = &scenario.params;
    let mut economies = vec![verify_closed(scenario)?];
    if p.tau() > 1.0 {
        economies.push(verify_open(scenario)?);
    }

    let mut notes = Vec::new();
    let mut status = Status::Feasible;
    for e in &economies {
        if !e.regimes_agree {
            notes.push(format!(
                "{}: oracle regime {} differs from analytic regime {}",
                e.economy,
                regime_label(e.oracle_regime),
                regime_label(e.analytic_regime)
            ));
            status = Status::ToleranceExceeded;
        }
        for c in e.checks.iter().filter(|c| !c.pass) {
            notes.push(format!(
                "{} {}: oracle {:e} vs analytic {:e}, {} gap {:e} exceeds {:e}",
                e.economy,
                c.check,
                c.oracle,
                c.analytic,
                c.kind.label(),
                c.gap,
                c.tolerance
            ));
            status = Status::ToleranceExceeded;
        }
        if e.refinement_monotone == Some(false) {
            notes.push(format!("{}: mass error does not shrink monotonically with J", e.economy));
            status = Status::ToleranceExceeded;
        }
    }
    if status == Status::Feasible && economies.iter().any(|e| e.analytic_regime.is_some()) {
        status = Status::Infeasible;
        for e in economies.iter().filter(|e| e.analytic_regime.is_some()) {
            notes.push(format!("infeasible: {} economy, {}", e.economy, regime_label(e.analytic_regime)));
        }
    }

    let report = VerifyReport {
        schema: SCHEMA_VERSION,
        command: Command::Verify.name(),
        params: Echo::of(p),
        nodes: scenario.oracle.nodes,
        tolerance: scenario.oracle.tolerance,
        pass: status != Status::ToleranceExceeded,
        economies,
    };
    let body = match format {
        Format::Json => emit::json(&report),
        Format::Csv => {
            let mut rows = Vec::new();
            for e in &report.economies {
                for c in &e.checks {
                    rows.push(vec![
                        e.economy.to_string(),
                        c.check.clone(),
                        real(c.oracle),
                        real(c.analytic),
                        real(c.gap),
                        c.kind.label().into(),
                        real(c.tolerance),
                        c.pass.to_string(),
                    ]);
                }
                let mut previous = f64::INFINITY;
                for r in &e.refinement {
                    rows.push(vec![
                        e.economy.to_string(),
                        format!("M at J={}", r.nodes),
                        real(r.mass),
                        real(r.analytic_mass),
                        real(r.relative_error),
                        "relative".into(),
                        emit::MISSING.into(),
                        (r.relative_error <= previous).to_string(),
                    ]);
                    previous = r.relative_error;
                }
                if e.checks.is_empty() {
                    rows.push(vec![
                        e.economy.to_string(),
                        "regime".into(),
                        regime_label(e.oracle_regime).into(),
                        regime_label(e.analytic_regime).into(),
                        emit::MISSING.into(),
                        emit::MISSING.into(),
                        emit::MISSING.into(),
                        e.regimes_agree.to_string(),
                    ]);
                }
            }
            csv_table(
                &["economy", "check", "oracle", "analytic", "gap", "kind", "tolerance", "pass"],
                &rows,
            )
        }
    };
    Ok(Outcome { body, status, notes })
}
