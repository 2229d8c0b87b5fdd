//! Anti-concentration of log U: for U uniform on [0,1] and any interval
//! [a, b] with a < b ≤ 1 and b − a ≤ 1, the probability that log U lands in
//! it is `e^b − e^a`, which never exceeds `(3e/2)(b − a)`.

use rand::Rng;

use crate::error::Result;
use crate::math;
use crate::rng;

use super::{ExperimentResult, Provenance};

const BOUND_COEF: f64 = 1.5 * core::f64::consts::E;

/// Exact `P[log U ∈ [a,b]]`.
pub fn log_uniform_probability(a: f64, b: f64) -> f64 {
    math::exp(b) - math::exp(a)
}

/// Check the bound over random intervals; zero failures expected.
pub fn exp_log_uniform(trials: u32, seed: u64) -> Result<ExperimentResult> {
    let mut res = ExperimentResult::new("log_uniform", seed);
    res.input("trials", trials as f64);
    let mut r = rng::stream(seed, "log-uniform", 0);
    let mut failures = 0u32;
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..trials {
        let b = 1.0 - 3.0 * r.gen::<f64>();
        let len = r.gen::<f64>();
        let a = b - len;
        let exact = log_uniform_probability(a, b);
        let bound = BOUND_COEF * (b - a);
        if exact > bound {
            failures += 1;
        }
        if bound > 0.0 {
            worst_ratio = worst_ratio.max(exact / bound);
        }
    }
    res.measure("failures", failures as f64, None);
    res.measure("worst_ratio", worst_ratio, None);
    res.reference("bound_coefficient", BOUND_COEF, Provenance::Reported);
    res.require(failures == 0);
    Ok(res)
}
