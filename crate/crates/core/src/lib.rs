//! Equilibrium engine for a differentiated-goods market in which a few
//! strategic large firms compete with a continuum of heterogeneous,
//! monopolistically competitive small firms.
//!
//! * [`params`]: primitives, the Pareto cost distribution and the linear
//!   demand system.
//! * [`closed`]: closed-economy cutoff, mass and coexistence conditions.
//! * [`open`]: symmetric two-country equilibrium with iceberg trade costs.
//! * [`statics`]: effects of bilateral trade liberalization.
//! * [`oracle`]: best-response and quadrature-based cross-checks that do not
//!   use the Pareto closed forms.
//!
//! Every operation is a pure function of immutable inputs.

pub mod closed;
pub mod error;
pub mod feasibility;
pub mod open;
pub mod oracle;
pub mod params;
pub mod quadrature;
mod roots;
pub mod statics;

pub use closed::{solve_closed, ClosedEquilibrium};
pub use error::{ModelError, Result};
pub use feasibility::{FeasibilityReport, Infeasibility};
pub use open::{solve_open, OpenEquilibrium};
pub use params::{LargeFirmSector, ModelParams, Preferences, SmallFirmTech};
pub use statics::{comparative_statics, ComparativeStaticsResult};
