#![allow(dead_code)]

use mixmarket::{LargeFirmSector, ModelParams, Preferences, SmallFirmTech};
use proptest::prelude::*;

#[allow(clippy::too_many_arguments)]
pub fn model(alpha: f64, beta: f64, gamma: f64, n: f64, cost: f64, l: f64, c_m: f64, k: f64, f_e: f64, tau: f64) -> ModelParams {
    ModelParams::new(
        Preferences::new(alpha, beta, gamma).unwrap(),
        SmallFirmTech::new(c_m, k, f_e).unwrap(),
        LargeFirmSector::new(n, cost).unwrap(),
        l,
        tau,
    )
    .unwrap()
}

/// alpha = beta = gamma = 1, N = 1, C = 0.3, L = 100, c_M = 1, k = 2, f_E = 1.
pub fn reference_closed() -> ModelParams {
    model(1.0, 1.0, 1.0, 1.0, 0.3, 100.0, 1.0, 2.0, 1.0, 1.0)
}

/// Open reference with an interior mass: alpha = 1.5, C = 0.1, tau = 1.5.
pub fn reference_open() -> ModelParams {
    model(1.5, 1.0, 1.0, 1.0, 0.1, 100.0, 1.0, 2.0, 1.0, 1.5)
}

pub fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Broad parameter draws; many are infeasible on purpose.
pub fn any_params() -> impl Strategy<Value = ModelParams> {
    (
        (0.3f64..4.0, 0.3f64..3.0, 0.3f64..3.0),
        (0usize..=4, 0.0f64..0.9),
        (10.0f64..400.0, 0.3f64..3.0, 0.5f64..5.0, 0.05f64..3.0),
    )
        .prop_map(|((alpha, beta, gamma), (n, cost), (l, c_m, k, f_e))| {
            model(alpha, beta, gamma, n as f64, cost, l, c_m, k, f_e, 1.0)
        })
}

/// Draws for the open economy and comparative statics, with `tau` kept away
/// from one so that central differences stay well conditioned.
pub fn open_params() -> impl Strategy<Value = ModelParams> {
    (any_params(), 1.05f64..2.5).prop_map(|(p, tau)| p.with_tau(tau).unwrap())
}
