//! Small-perturbation rate for the wide-tail pair: with bounded
//! log-likelihoods `|log p(x|θ)| ≤ C` and subsample factor
//! `A(n) = ⌈4C²·n·log n⌉`, the worst row-wise TV between the subsampled
//! wide-tail kernel and its full-data wide-tail reference is at most 2/√n.

use crate::error::{Error, Result};
use crate::grid::{discretize, kernel_delta, Grid, Inner};
use crate::kernels::{KernelConfig, KernelVariant};
use crate::math;
use crate::model::{target_params, DataSet, ModelSpec, ProposalKernel};

use super::{ExperimentResult, Provenance, Table};

/// `A(n) = max(1, ⌈4 C² n ln n⌉)`.
pub fn subsample_factor(n: u64, c_bound: f64) -> u64 {
    let v = 4.0 * c_bound * c_bound * n as f64 * math::ln(n as f64);
    math::ceil(v).max(1.0) as u64
}

pub struct PerturbationGridSpec {
    pub cells: usize,
    pub k_sd: f64,
    pub mc_draws: u32,
}

impl Default for PerturbationGridSpec {
    fn default() -> Self {
        PerturbationGridSpec { cells: 160, k_sd: 7.0, mc_draws: 10_000 }
    }
}

/// Build the kernel pair at one n and measure their worst row-wise TV.
pub fn perturbation_delta(
    model: &ModelSpec,
    data: &DataSet,
    n: u64,
    a: u64,
    spec: &PerturbationGridSpec,
    seed: u64,
) -> Result<(f64, Grid)> {
    let params = target_params(model, data, Some(n as usize))?;
    let grid = Grid::around(&params, spec.k_sd, spec.cells)?;
    let proposal = ProposalKernel::new(params.sd())?;
    let reference = discretize(
        &KernelConfig { variant: KernelVariant::WideMh { n: n as usize }, proposal },
        model,
        Some(data),
        &grid,
        Inner::Exact,
    )?;
    let approx = discretize(
        &KernelConfig {
            variant: KernelVariant::SubsampleWide { n: n as usize, a: a as usize },
            proposal,
        },
        model,
        Some(data),
        &grid,
        Inner::Auto { draws: spec.mc_draws, seed },
    )?;
    Ok((kernel_delta(&reference, &approx)?, grid))
}

/// Certify `δ ≤ 2/√n` across `n_list` for a bounded-likelihood model.
pub fn exp_small_perturbation(
    model: &ModelSpec,
    data: &DataSet,
    n_list: &[u64],
    spec: &PerturbationGridSpec,
    seed: u64,
) -> Result<ExperimentResult> {
    let c_bound = model
        .log_lik_bound()
        .ok_or_else(|| Error::UnsupportedModel("the perturbation rate needs a bounded likelihood".into()))?;
    let mut res = ExperimentResult::new("small_perturbation", seed);
    res.input("n_data", data.len() as f64)
        .input("c_bound", c_bound)
        .input("cells", spec.cells as f64)
        .input("mc_draws", spec.mc_draws as f64);
    let mut rows = alloc::vec::Vec::new();
    for (i, &n) in n_list.iter().enumerate() {
        let a = subsample_factor(n, c_bound);
        if a * n > data.len() as u64 {
            return Err(Error::Parameter(alloc::format!(
                "A(n)·n = {} exceeds the data size {}",
                a * n,
                data.len()
            )));
        }
        let (delta, _) = perturbation_delta(model, data, n, a, spec, crate::rng::child_seed(seed, "perturbation", i as u64))?;
        let bound = 2.0 / math::sqrt(n as f64);
        rows.push(alloc::vec![n as f64, a as f64, (a * n) as f64, delta, bound, bound - delta]);
        res.measure(&alloc::format!("delta[n={n}]"), delta, None);
        res.reference(&alloc::format!("bound[n={n}]"), bound, Provenance::Reported);
        res.require(delta <= bound);
    }
    res.table = Some(Table {
        columns: alloc::vec![
            "n".into(),
            "a".into(),
            "subsample".into(),
            "delta".into(),
            "bound".into(),
            "slack".into()
        ],
        rows,
    });
    Ok(res)
}

/// δ is non-increasing in the subsample factor at fixed n.
pub fn exp_perturbation_a_sweep(
    model: &ModelSpec,
    data: &DataSet,
    n: u64,
    a_multipliers: &[u64],
    spec: &PerturbationGridSpec,
    seed: u64,
) -> Result<ExperimentResult> {
    let c_bound = model
        .log_lik_bound()
        .ok_or_else(|| Error::UnsupportedModel("the perturbation rate needs a bounded likelihood".into()))?;
    let a0 = subsample_factor(n, c_bound);
    let mut res = ExperimentResult::new("perturbation_a_sweep", seed);
    res.input("n", n as f64).input("a0", a0 as f64);
    let mut rows = alloc::vec::Vec::new();
    let mut last = f64::INFINITY;
    let mut monotone = true;
    for (i, &mult) in a_multipliers.iter().enumerate() {
        let a = a0 * mult;
        let (delta, _) = perturbation_delta(model, data, n, a, spec, crate::rng::child_seed(seed, "a-sweep", i as u64))?;
        if delta > last {
            monotone = false;
        }
        last = delta;
        rows.push(alloc::vec![a as f64, delta]);
        res.measure(&alloc::format!("delta[a={a}]"), delta, None);
    }
    res.require(monotone);
    res.table = Some(Table { columns: alloc::vec!["a".into(), "delta".into()], rows });
    Ok(res)
}
