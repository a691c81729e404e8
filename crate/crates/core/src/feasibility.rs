//! Named existence inequalities with their evaluated sides.

use serde::Serialize;

pub const SUPPORT: &str = "support (c_D <= c_M)";
pub const PROP1_LARGE: &str = "large firms active (C < c_D)";
pub const PROP1_MASS: &str = "positive small-firm mass";
pub const OPEN_DOMESTIC_LARGE: &str = "domestic large firms (C < c_D)";
pub const OPEN_EXPORTING_LARGE: &str = "exporting large firms (C < c_X)";
pub const OPEN_POSITIVE_MASS: &str = "positive mass (2N-firm internalization)";
pub const OPEN_POSITIVE_MASS_N_FACTOR: &str = "positive mass (N-firm factor)";

/// Direction of the inequality `lhs ? rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = ">")]
    Greater,
    #[serde(rename = "<")]
    Less,
    #[serde(rename = "<=")]
    LessOrEqual,
}

impl Relation {
    fn holds(self, slack: f64) -> bool {
        match self {
            Relation::Greater => slack > 0.0,
            Relation::Less => slack < 0.0,
            Relation::LessOrEqual => slack <= 0.0,
        }
    }
}

/// What a failed condition says about the equilibrium regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Infeasibility {
    Support,
    LargeFirmsInactive,
    LargeFirmsDoNotExport,
    NoPositiveMass,
}

impl Infeasibility {
    pub fn label(self) -> &'static str {
        match self {
            Infeasibility::Support => "support",
            Infeasibility::LargeFirmsInactive => "large_firms_inactive",
            Infeasibility::LargeFirmsDoNotExport => "large_firms_do_not_export",
            Infeasibility::NoPositiveMass => "no_positive_mass",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condition {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs - rhs`.
    pub slack: f64,
    pub relation: Relation,
    pub pass: bool,
    /// Non-binding conditions are reported for comparison only.
    pub binding: bool,
    #[serde(skip)]
    pub kind: Infeasibility,
}

impl Condition {
    pub fn new(name: &'static str, lhs: f64, relation: Relation, rhs: f64, kind: Infeasibility) -> Self {
        let slack = lhs - rhs;
        Condition {
            name,
            lhs,
            rhs,
            slack,
            relation,
            pass: relation.holds(slack),
            binding: true,
            kind,
        }
    }

    pub fn informational(mut self) -> Self {
        self.binding = false;
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub conditions: Vec<Condition>,
}

impl FeasibilityReport {
    pub fn push(&mut self, condition: Condition) {
        self.conditions.push(condition);
    }

    pub fn get(&self, name: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name == name)
    }

    /// True when every binding condition passes.
    pub fn all_pass(&self) -> bool {
        self.conditions.iter().filter(|c| c.binding).all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Condition> {
        self.conditions.iter().filter(|c| c.binding && !c.pass)
    }

    /// Regime implied by the first failing binding condition.
    pub fn classify(&self) -> Option<Infeasibility> {
        self.failures().next().map(|c| c.kind)
    }

    pub fn failure_summary(&self) -> String {
        let failed: Vec<String> = self
            .failures()
            .map(|c| format!("{} fails (lhs {:.6e}, rhs {:.6e})", c.name, c.lhs, c.rhs))
            .collect();
        if failed.is_empty() {
            "all conditions pass".to_string()
        } else {
            failed.join("; ")
        }
    }
}
