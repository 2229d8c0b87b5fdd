//! Does per-step resampling help? Long runs of the fresh-sample chain
//! estimate `n·π(θ²)` under its stationary law, set against the dual oracle
//! for the fixed-subsample alternative, whose stationary second moment
//! averages to `n(σ⁻²+n)⁻² + (σ⁻²+n)⁻¹` over data sets.
//!
//! The source display for the fixed-subsample average is internally
//! inconsistent (its second term is the square of the posterior variance
//! rather than the variance), so the verdict here is Investigative by
//! construction: both readings are recorded and the two independent oracles
//! are required to agree with each other, not with the display.

use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::kernels::{run_chain, KernelConfig, KernelVariant};
use crate::math;
use crate::model::{ModelSpec, ProposalKernel};
use crate::rng;

use super::{ExperimentResult, Provenance, Verdict};

/// Analytic `E[π_ss(θ²)]` over data sets of size n, prior sd σ.
pub fn fixed_subsample_second_moment(n: u64, sigma: f64) -> f64 {
    let prec = 1.0 / (sigma * sigma) + n as f64;
    n as f64 / (prec * prec) + 1.0 / prec
}

/// The displayed closed form `(n+1)·(σ⁻²+n)⁻²`, kept verbatim.
pub fn fixed_subsample_second_moment_displayed(n: u64, sigma: f64) -> f64 {
    let prec = 1.0 / (sigma * sigma) + n as f64;
    (n as f64 + 1.0) / (prec * prec)
}

/// Estimate `n·π(θ²)` for the fresh-sample chain and compute the dual oracle.
///
/// `steps` transitions per chain with the first tenth discarded as burn-in;
/// `reps` independent chains give the standard error; `oracle_datasets`
/// simulated data sets feed the brute-force side of the dual oracle.
pub fn exp_resampling_help(
    n: u64,
    steps: u64,
    reps: u32,
    oracle_datasets: u32,
    seed: u64,
) -> Result<ExperimentResult> {
    let sigma = 1.0;
    let theta_star = 0.0;
    let mut res = ExperimentResult::new("resampling_help", seed);
    res.input("n", n as f64)
        .input("steps", steps as f64)
        .input("reps", reps as f64)
        .input("oracle_datasets", oracle_datasets as f64)
        .input("burn_in_fraction", 0.1);

    // fresh-sample chain: proposal variance 1/n, i.e. sd n^{-1/2}
    let model = ModelSpec::GaussianConjugate { prior_sd: sigma };
    let config = KernelConfig {
        variant: KernelVariant::InfiniteResample { n: n as usize, theta_star },
        proposal: ProposalKernel::new(1.0 / math::sqrt(n as f64))?,
    };
    let burn = (steps / 10) as usize;
    let mut ests = alloc::vec::Vec::with_capacity(reps as usize);
    for rep in 0..reps {
        let traj = run_chain(
            &config,
            &model,
            None,
            steps,
            theta_star,
            rng::child_seed(seed, "resampling-chain", rep as u64),
            None,
        )?;
        let tail = &traj.states[burn..];
        let mean_sq: f64 = tail.iter().map(|&t| t * t).sum::<f64>() / tail.len() as f64;
        ests.push(n as f64 * mean_sq);
    }
    let mean = ests.iter().sum::<f64>() / reps as f64;
    let var = ests.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (reps as f64 - 1.0).max(1.0);
    let se = math::sqrt(var / reps as f64);
    res.measure("n_times_second_moment_resampling", mean, Some(se));

    // dual oracle for the fixed-subsample alternative
    let analytic = n as f64 * fixed_subsample_second_moment(n, sigma);
    res.reference("n_times_fixed_subsample_analytic", analytic, Provenance::Analytic);
    let mut r = rng::stream(seed, "resampling-oracle", 0);
    let prec = 1.0 / (sigma * sigma) + n as f64;
    let mut s = 0.0;
    let mut s2 = 0.0;
    for _ in 0..oracle_datasets {
        let mut sum_x = 0.0;
        for _ in 0..n {
            let z: f64 = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut r);
            sum_x += theta_star + z;
        }
        let post_mean = sum_x / prec;
        let v = post_mean * post_mean + 1.0 / prec;
        s += v;
        s2 += v * v;
    }
    let sim = n as f64 * s / oracle_datasets as f64;
    let sim_se = n as f64
        * math::sqrt(
            { let m = s / oracle_datasets as f64; (s2 / oracle_datasets as f64 - m * m).max(0.0) }
                / oracle_datasets as f64,
        );
    res.measure("n_times_fixed_subsample_simulated", sim, Some(sim_se));

    // the two reported figures, verbatim
    res.reference("reported_resampling_lower_bound", 1.4, Provenance::Reported);
    res.reference(
        "reported_fixed_subsample_display",
        n as f64 * fixed_subsample_second_moment_displayed(n, sigma),
        Provenance::Reported,
    );

    let oracle_gap = math::abs(sim - analytic);
    res.measure("dual_oracle_gap", oracle_gap, Some(sim_se));
    res.note(alloc::format!(
        "dual oracle agreement: analytic {analytic:.5} vs simulated {sim:.5} ± {sim_se:.5}"
    ));
    res.note(
        "the displayed fixed-subsample closed form squares the posterior-variance term; \
         the analytic oracle gives n·E ≈ 2 while the display gives ≈ 1 for large n; \
         recorded, not adjudicated"
            .into(),
    );
    res.verdict = Verdict::Investigative;
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_limits() {
        // σ = 1: n·E → 2, displayed → 1
        assert!((1000.0 * fixed_subsample_second_moment(1000, 1.0) - 2.0).abs() < 0.01);
        assert!((1000.0 * fixed_subsample_second_moment_displayed(1000, 1.0) - 1.0).abs() < 0.01);
    }

    #[test]
    fn fixed_subsample_is_full_mh_on_subsample() {
        // With a frozen data set the alternative chain is just the full-data
        // chain; its stationary second moment is the closed form exactly.
        use crate::model::{closed_form_posterior, DataSet, TestFunction};
        let data = DataSet::synthesize(25, 0.0, 3).unwrap();
        let m = ModelSpec::GaussianConjugate { prior_sd: 1.0 };
        let p = closed_form_posterior(&m, &data).unwrap();
        let second = p.mean * p.mean + p.variance;
        assert!((p.expect(&TestFunction::Square) - second).abs() < 1e-9);
    }

    #[test]
    fn oracles_agree_at_modest_n() {
        let r = exp_resampling_help(20, 20_000, 4, 100_000, 13).unwrap();
        assert_eq!(r.verdict, Verdict::Investigative);
        let gap = r.measurement("dual_oracle_gap").unwrap();
        assert!(gap.value <= 3.0 * gap.std_error.unwrap() + 1e-9, "gap {}", gap.value);
    }
}
