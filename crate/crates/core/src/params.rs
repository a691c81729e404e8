//! Model primitives, derived constants, the Pareto cost distribution and the
//! linear demand system shared by the closed and open economies.
//!
//! All magnitudes are in units of the numeraire (wage normalized to one).

use serde::Serialize;

use crate::error::{ModelError, Result};
use crate::quadrature;

fn require(name: &'static str, value: f64, ok: bool, requirement: &'static str) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            name,
            value,
            requirement,
        })
    }
}

/// Linear-quadratic preferences over the differentiated varieties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Preferences {
    alpha: f64,
    beta: f64,
    gamma: f64,
}

impl Preferences {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        require("alpha", alpha, alpha > 0.0, "alpha > 0")?;
        require("beta", beta, beta > 0.0, "beta > 0")?;
        require("gamma", gamma, gamma > 0.0, "gamma > 0")?;
        Ok(Preferences { alpha, beta, gamma })
    }

    /// Demand intercept.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Own-variety differentiation.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Substitutability with the numeraire.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// Technology of small firms: Pareto cost draws on `[0, cost_max]` with
/// shape `shape`, revealed after paying the sunk `entry_cost`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallFirmTech {
    cost_max: f64,
    shape: f64,
    entry_cost: f64,
}

impl SmallFirmTech {
    pub fn new(cost_max: f64, shape: f64, entry_cost: f64) -> Result<Self> {
        require("c_M", cost_max, cost_max > 0.0, "c_M > 0")?;
        require("k", shape, shape > 0.0, "k > 0")?;
        require("f_E", entry_cost, entry_cost > 0.0, "f_E > 0")?;
        Ok(SmallFirmTech {
            cost_max,
            shape,
            entry_cost,
        })
    }

    pub fn cost_max(&self) -> f64 {
        self.cost_max
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn entry_cost(&self) -> f64 {
        self.entry_cost
    }
}

/// The oligopolistic sector: `count` incumbents per country, all with
/// marginal cost `cost`. The count is integral in practice but any
/// non-negative real is accepted so that formulas can be swept smoothly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LargeFirmSector {
    count: f64,
    cost: f64,
}

impl LargeFirmSector {
    pub fn new(count: f64, cost: f64) -> Result<Self> {
        require("N", count, count >= 0.0, "N >= 0")?;
        require("C", cost, cost >= 0.0, "C >= 0")?;
        Ok(LargeFirmSector { count, cost })
    }

    pub fn count(&self) -> f64 {
        self.count
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    /// Number of large firms as an integer, if it is one.
    pub fn integer_count(&self) -> Option<usize> {
        (self.count.fract() == 0.0 && self.count <= u32::MAX as f64).then_some(self.count as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    prefs: Preferences,
    small: SmallFirmTech,
    large: LargeFirmSector,
    market_size: f64,
    tau: f64,
}

impl ModelParams {
    pub fn new(
        prefs: Preferences,
        small: SmallFirmTech,
        large: LargeFirmSector,
        market_size: f64,
        tau: f64,
    ) -> Result<Self> {
        require("L", market_size, market_size > 0.0, "L > 0")?;
        require("tau", tau, tau >= 1.0, "tau >= 1")?;
        Ok(ModelParams {
            prefs,
            small,
            large,
            market_size,
            tau,
        })
    }

    pub fn prefs(&self) -> &Preferences {
        &self.prefs
    }

    pub fn small(&self) -> &SmallFirmTech {
        &self.small
    }

    pub fn large(&self) -> &LargeFirmSector {
        &self.large
    }

    /// Consumers per country.
    pub fn market_size(&self) -> f64 {
        self.market_size
    }

    /// Iceberg trade cost.
    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        ModelParams::new(self.prefs, self.small, self.large, self.market_size, tau)
    }

    pub fn derived(&self) -> DerivedConstants {
        DerivedConstants {
            phi: technology_index(&self.small),
            rho: freeness(self.tau, self.small.shape),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedConstants {
    /// Technology index.
    pub phi: f64,
    /// Freeness of trade.
    pub rho: f64,
}

/// `2 (k+1)(k+2) c_M^k f_E`.
pub fn technology_index(small: &SmallFirmTech) -> f64 {
    let k = small.shape;
    2.0 * (k + 1.0) * (k + 2.0) * small.cost_max.powf(k) * small.entry_cost
}

/// `tau^(-k)`, equal to one at free trade and vanishing as trade becomes
/// prohibitive.
pub fn freeness(tau: f64, shape: f64) -> f64 {
    tau.powf(-shape)
}

/// Pareto CDF `(c / c_M)^k` on `[0, c_M]`.
pub fn pareto_cdf(c: f64, small: &SmallFirmTech) -> Result<f64> {
    if !(0.0..=small.cost_max).contains(&c) {
        return Err(ModelError::Domain {
            what: "cost",
            value: c,
            lo: 0.0,
            hi: small.cost_max,
        });
    }
    Ok((c / small.cost_max).powf(small.shape))
}

/// CDF extended with `G(c) = 1` above the support.
pub(crate) fn pareto_cdf_capped(c: f64, small: &SmallFirmTech) -> f64 {
    (c.max(0.0) / small.cost_max).min(1.0).powf(small.shape)
}

/// Pareto density `k c^(k-1) / c_M^k` on `[0, c_M]`, zero elsewhere.
pub fn pareto_density(c: f64, small: &SmallFirmTech) -> f64 {
    if !(0.0..=small.cost_max).contains(&c) {
        return 0.0;
    }
    let k = small.shape;
    k * c.powf(k - 1.0) / small.cost_max.powf(k)
}

/// Internalization wedge `gamma / (beta + gamma (M + firm_count))`.
///
/// Pass `N` large firms in the closed economy and `2N` in the open economy.
pub fn internalization(mass: f64, firm_count: f64, prefs: &Preferences) -> f64 {
    prefs.gamma / (prefs.beta + prefs.gamma * (mass + firm_count))
}

/// Choke price `(alpha beta + gamma P) / (beta + gamma (M + total_large))`
/// at which demand for any variety vanishes.
pub fn price_bound(aggregate_price: f64, mass: f64, total_large: f64, prefs: &Preferences) -> f64 {
    (prefs.alpha * prefs.beta + prefs.gamma * aggregate_price)
        / (prefs.beta + prefs.gamma * (mass + total_large))
}

/// `∫_0^x (x - c)^2 dG(c)` for the Pareto distribution, `0 <= x <= c_M`.
pub fn squared_gap_moment(x: f64, small: &SmallFirmTech) -> f64 {
    let k = small.shape;
    2.0 * x.powf(k + 2.0) / ((k + 1.0) * (k + 2.0) * small.cost_max.powf(k))
}

/// Same integral by quadrature, using only the CDF. Integrating by parts,
/// `∫_0^x (x - c)^2 dG(c) = 2 ∫_0^x (x - c) G(c) dc`, which keeps the
/// integrand bounded for every `k > 0`. Above the support `G` is capped at 1.
pub fn squared_gap_moment_quadrature(x: f64, small: &SmallFirmTech, rel_tol: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    2.0 * quadrature::integrate(|c| (x - c) * pareto_cdf_capped(c, small), 0.0, x, rel_tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tech(c_m: f64, k: f64, f_e: f64) -> SmallFirmTech {
        SmallFirmTech::new(c_m, k, f_e).unwrap()
    }

    #[test]
    fn technology_index_values() {
        assert_eq!(technology_index(&tech(1.0, 1.0, 1.0)), 12.0);
        assert_eq!(technology_index(&tech(1.0, 2.0, 1.0)), 24.0);
        assert_eq!(technology_index(&tech(0.5, 2.0, 1.0)), 6.0);
    }

    #[test]
    fn pareto_cdf_values_and_domain() {
        let t = tech(2.0, 2.0, 1.0);
        assert_eq!(pareto_cdf(0.0, &t).unwrap(), 0.0);
        assert_eq!(pareto_cdf(2.0, &t).unwrap(), 1.0);
        assert_eq!(pareto_cdf(1.0, &t).unwrap(), 0.25);
        assert!(matches!(pareto_cdf(2.5, &t), Err(ModelError::Domain { .. })));
        assert!(matches!(pareto_cdf(-0.1, &t), Err(ModelError::Domain { .. })));
    }

    #[test]
    fn internalization_values() {
        let p = Preferences::new(1.0, 1.0, 1.0).unwrap();
        assert_eq!(internalization(0.0, 1.0, &p), 0.5);
        assert!((internalization(0.0, 2.0, &p) - 1.0 / 3.0).abs() < 1e-15);
        assert!(internalization(1e12, 1.0, &p) < 1e-11);
    }

    #[test]
    fn price_bound_values() {
        let p = Preferences::new(1.3, 0.7, 0.4).unwrap();
        assert_eq!(price_bound(0.0, 0.0, 0.0, &p), 1.3);
        let n = 3.0;
        let agg = 0.9;
        let expected = (1.3 * 0.7 + 0.4 * agg) / (0.7 + 0.4 * n);
        assert!((price_bound(agg, 0.0, n, &p) - expected).abs() < 1e-15);
    }

    #[test]
    fn rejects_invalid_primitives() {
        assert!(Preferences::new(0.0, 1.0, 1.0).is_err());
        assert!(Preferences::new(1.0, -1.0, 1.0).is_err());
        assert!(Preferences::new(1.0, 1.0, f64::NAN).is_err());
        assert!(SmallFirmTech::new(1.0, 0.0, 1.0).is_err());
        assert!(LargeFirmSector::new(-1.0, 0.0).is_err());
        assert!(LargeFirmSector::new(1.0, -0.1).is_err());
        let prefs = Preferences::new(1.0, 1.0, 1.0).unwrap();
        let small = tech(1.0, 2.0, 1.0);
        let large = LargeFirmSector::new(1.0, 0.1).unwrap();
        assert!(ModelParams::new(prefs, small, large, 0.0, 1.0).is_err());
        assert!(ModelParams::new(prefs, small, large, 1.0, 0.99).is_err());
        let p = ModelParams::new(prefs, small, large, 1.0, 1.0).unwrap();
        assert_eq!(p.derived().rho, 1.0);
    }

    #[test]
    fn freeness_limits() {
        assert_eq!(freeness(1.0, 3.0), 1.0);
        assert!((freeness(1.5, 2.0) - 4.0 / 9.0).abs() < 1e-15);
        assert!(freeness(1e6, 2.0) < 1e-11);
    }

    #[test]
    fn integer_count_detection() {
        assert_eq!(LargeFirmSector::new(3.0, 0.0).unwrap().integer_count(), Some(3));
        assert_eq!(LargeFirmSector::new(2.5, 0.0).unwrap().integer_count(), None);
    }

    #[test]
    fn squared_gap_moment_routes_agree() {
        for &k in &[0.3, 1.0, 2.0, 4.5] {
            let t = tech(1.2, k, 1.0);
            for &x in &[0.1, 0.5, 1.2] {
                let a = squared_gap_moment(x, &t);
                let b = squared_gap_moment_quadrature(x, &t, 1e-12);
                assert!(((a - b) / a).abs() < 1e-10, "k={k} x={x}: {a} vs {b}");
            }
        }
    }
}
