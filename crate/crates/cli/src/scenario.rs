//! Scenario files: TOML with flat model keys and optional `[sweep]` and
//! `[oracle]` tables.
//!
//! ```toml
//! # reference point
//! alpha = 1.0
//! beta = 1.0
//! gamma = 1.0
//! L = 100
//! N = 1
//! C = 0.3
//! c_M = 1.0
//! k = 2.0
//! f_E = 1.0
//! tau = 1.5          # optional, defaults to 1
//!
//! [sweep]
//! tau_min = 1.05
//! tau_max = 3.0
//! steps = 40
//!
//! [oracle]
//! J = 2000           # cost nodes, optional
//! tolerance = 1e-4   # relative, optional
//! ```

use std::fmt;
use std::path::Path;

use mixmarket::{LargeFirmSector, ModelError, ModelParams, Preferences, SmallFirmTech};
use serde::Deserialize;
use toml::Spanned;

pub const DEFAULT_NODES: usize = 2000;
pub const DEFAULT_TOLERANCE: f64 = 1e-4;

/// A scenario that could not be read or does not describe a valid model.
#[derive(Debug, Clone, PartialEq)]
pub struct InputError {
    pub file: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{}: {}", self.file, line, self.message),
            None => write!(f, "{}: {}", self.file, self.message),
        }
    }
}

impl std::error::Error for InputError {}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    alpha: Spanned<f64>,
    beta: Spanned<f64>,
    gamma: Spanned<f64>,
    #[serde(rename = "L")]
    market_size: Spanned<f64>,
    #[serde(rename = "N")]
    large_count: Spanned<u32>,
    #[serde(rename = "C")]
    large_cost: Spanned<f64>,
    #[serde(rename = "c_M")]
    cost_max: Spanned<f64>,
    k: Spanned<f64>,
    #[serde(rename = "f_E")]
    entry_cost: Spanned<f64>,
    tau: Option<Spanned<f64>>,
    sweep: Option<Spanned<RawSweep>>,
    oracle: Option<Spanned<RawOracle>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    tau_min: f64,
    tau_max: f64,
    steps: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOracle {
    #[serde(rename = "J")]
    nodes: Option<usize>,
    tolerance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub tau_min: f64,
    pub tau_max: f64,
    pub steps: usize,
}

impl SweepSpec {
    /// `steps` evenly spaced trade costs from `tau_min` to `tau_max`.
    pub fn grid(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.tau_min];
        }
        let width = (self.tau_max - self.tau_min) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| if i + 1 == self.steps { self.tau_max } else { self.tau_min + width * i as f64 })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSpec {
    pub nodes: usize,
    pub tolerance: f64,
}

impl Default for OracleSpec {
    fn default() -> Self {
        OracleSpec {
            nodes: DEFAULT_NODES,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params: ModelParams,
    pub sweep: Option<SweepSpec>,
    pub oracle: OracleSpec,
}

fn line_of(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())].bytes().filter(|b| *b == b'\n').count() + 1
}

pub fn load(path: &Path) -> Result<Scenario, InputError> {
    let file = path.display().to_string();
    let source = std::fs::read_to_string(path).map_err(|e| InputError {
        file: file.clone(),
        line: None,
        message: format!("cannot read scenario: {e}"),
    })?;
    parse(&source, &file)
}

/// Parse and validate scenario text. `file` only labels diagnostics.
pub fn parse(source: &str, file: &str) -> Result<Scenario, InputError> {
    let fail = |line: Option<usize>, message: String| InputError {
        file: file.to_string(),
        line,
        message,
    };
    let raw: RawScenario = toml::from_str(source).map_err(|e| {
        // Errors about the document as a whole (a missing key) carry an
        // empty span at the start; a line number would only mislead.
        let line = e.span().filter(|s| !s.is_empty()).map(|s| line_of(source, s.start));
        fail(line, e.message().to_string())
    })?;

    // Map a validation failure back to the key that caused it.
    let keyed = |err: ModelError| -> InputError {
        let line = match &err {
            ModelError::InvalidParameter { name, .. } => {
                let span = match *name {
                    "alpha" => Some(raw.alpha.span()),
                    "beta" => Some(raw.beta.span()),
                    "gamma" => Some(raw.gamma.span()),
                    "L" => Some(raw.market_size.span()),
                    "N" => Some(raw.large_count.span()),
                    "C" => Some(raw.large_cost.span()),
                    "c_M" => Some(raw.cost_max.span()),
                    "k" => Some(raw.k.span()),
                    "f_E" => Some(raw.entry_cost.span()),
                    "tau" => raw.tau.as_ref().map(|t| t.span()),
                    _ => None,
                };
                span.map(|s| line_of(source, s.start))
            }
            _ => None,
        };
        fail(line, err.to_string())
    };

    let prefs = Preferences::new(*raw.alpha.get_ref(), *raw.beta.get_ref(), *raw.gamma.get_ref()).map_err(&keyed)?;
    let small =
        SmallFirmTech::new(*raw.cost_max.get_ref(), *raw.k.get_ref(), *raw.entry_cost.get_ref()).map_err(&keyed)?;
    let large = LargeFirmSector::new(f64::from(*raw.large_count.get_ref()), *raw.large_cost.get_ref()).map_err(&keyed)?;
    let tau = raw.tau.as_ref().map(|t| *t.get_ref()).unwrap_or(1.0);
    let params = ModelParams::new(prefs, small, large, *raw.market_size.get_ref(), tau).map_err(&keyed)?;

    let sweep = match &raw.sweep {
        None => None,
        Some(block) => {
            let line = Some(line_of(source, block.span().start));
            let s = block.get_ref();
            if !(s.tau_min >= 1.0 && s.tau_min.is_finite()) {
                return Err(fail(line, format!("sweep.tau_min = {} must be >= 1", s.tau_min)));
            }
            if s.steps == 0 {
                return Err(fail(line, "sweep.steps must be at least 1".into()));
            }
            if s.steps > 1 && !(s.tau_max > s.tau_min && s.tau_max.is_finite()) {
                return Err(fail(
                    line,
                    format!("sweep.tau_max = {} must exceed tau_min = {}", s.tau_max, s.tau_min),
                ));
            }
            Some(SweepSpec {
                tau_min: s.tau_min,
                tau_max: s.tau_max,
                steps: s.steps,
            })
        }
    };

    let oracle = match &raw.oracle {
        None => OracleSpec::default(),
        Some(block) => {
            let line = Some(line_of(source, block.span().start));
            let o = block.get_ref();
            let spec = OracleSpec {
                nodes: o.nodes.unwrap_or(DEFAULT_NODES),
                tolerance: o.tolerance.unwrap_or(DEFAULT_TOLERANCE),
            };
            if spec.nodes < 100 {
                return Err(fail(line, format!("oracle.J = {} must be at least 100", spec.nodes)));
            }
            if !(spec.tolerance > 0.0 && spec.tolerance.is_finite()) {
                return Err(fail(line, format!("oracle.tolerance = {} must be positive", spec.tolerance)));
            }
            spec
        }
    };

    Ok(Scenario { params, sweep, oracle })
}
