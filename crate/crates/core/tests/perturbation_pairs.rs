//! Certificates exercised on a real kernel pair: the wide-tail reference
//! against its subsampled approximation on the bounded model.

use submc_core::experiments::subsample_factor;
use submc_core::grid::{
    certify_perturbation, discretize, drift_like_report, kernel_delta, verify_drift, CertifyOptions,
    Grid, Inner, Lyapunov, MetricSpec, Status,
};
use submc_core::kernels::{KernelConfig, KernelVariant};
use submc_core::model::{target_params, DataSet, ModelSpec, ProposalKernel};

fn wide_pair(
    n: u64,
    n_data: usize,
    cells: usize,
    draws: u32,
) -> (submc_core::grid::TransitionMatrix, submc_core::grid::TransitionMatrix) {
    let model = ModelSpec::BoundedGaussian { prior_sd: 1.0, clip: 1.0 };
    let data = DataSet::synthesize(n_data, 0.0, 77).unwrap();
    let a = subsample_factor(n, 1.0);
    assert!(a * n <= n_data as u64);
    let params = target_params(&model, &data, Some(n as usize)).unwrap();
    let grid = Grid::around(&params, 7.0, cells).unwrap();
    let proposal = ProposalKernel::new(params.sd()).unwrap();
    let reference = discretize(
        &KernelConfig { variant: KernelVariant::WideMh { n: n as usize }, proposal },
        &model,
        Some(&data),
        &grid,
        Inner::Exact,
    )
    .unwrap();
    let approx = discretize(
        &KernelConfig {
            variant: KernelVariant::SubsampleWide { n: n as usize, a: a as usize },
            proposal,
        },
        &model,
        Some(&data),
        &grid,
        Inner::Auto { draws, seed: 5 },
    )
    .unwrap();
    (reference, approx)
}

#[test]
fn certificates_on_a_real_pair() {
    let (reference, approx) = wide_pair(4, 600, 80, 4000);
    let rep = certify_perturbation(&reference, &approx, &CertifyOptions::default()).unwrap();
    assert!(rep.monte_carlo_uncertainty);
    assert!(rep.delta > 0.0);

    // every certificate with satisfied hypotheses must hold on this pair
    for c in &rep.certificates {
        assert_ne!(
            c.holds,
            Status::Fails,
            "{} failed: lhs {} rhs {} (delta {})",
            c.name,
            c.lhs,
            c.rhs,
            rep.delta
        );
    }
    let tv = rep.certificates.iter().find(|c| c.name == "tv_stationary").unwrap();
    assert_eq!(tv.holds, Status::Holds);
    assert!(tv.slack >= 0.0);

    // drift inheritance: approximate contraction within 2δ of the base rate
    let inh = rep.certificates.iter().find(|c| c.name == "drift_inheritance").unwrap();
    assert_eq!(inh.holds, Status::Holds, "lhs {} rhs {}", inh.lhs, inh.rhs);
}

#[test]
fn inherited_drift_rate_matches_lemma_form() {
    let (reference, approx) = wide_pair(4, 600, 60, 3000);
    let delta = kernel_delta(&reference, &approx).unwrap();
    let base_fit = verify_drift(&reference, Lyapunov::OnePlusSquare, 1).unwrap();
    let rb = base_fit.report().expect("base drift");
    // row-wise: E_approx[V] ≤ (1 − (a − 2δ))·V + b
    let grid = reference.grid();
    let vvec: Vec<f64> = grid.centers().iter().map(|&c| 1.0 + c * c).collect();
    let w = approx.mat().mat_vec(&vvec);
    for g in 0..grid.cells() {
        let rhs = (1.0 - (rb.a - 2.0 * delta)) * vvec[g] + rb.b;
        assert!(
            w[g] <= rhs + 1e-9,
            "row {g}: E[V] {} vs inherited bound {rhs} (a {}, delta {delta})",
            w[g],
            rb.a
        );
    }
}

#[test]
fn drift_like_report_terms_are_coherent() {
    let (reference, approx) = wide_pair(4, 600, 60, 3000);
    let fit = verify_drift(&reference, Lyapunov::OnePlusSquare, 1).unwrap();
    let rb = fit.report().unwrap();
    let level = 6.0 * rb.b / rb.a;
    let start = reference.grid().cells() / 2;
    let rep = drift_like_report(
        &reference,
        &approx,
        Lyapunov::OnePlusSquare,
        level,
        MetricSpec::Euclid,
        40,
        start,
    )
    .unwrap();
    assert!(rep.hypotheses_met, "no Wasserstein contraction on the level set");
    assert!(rep.delta_w >= 0.0 && rep.alpha > 0.0);
    assert!(rep.escape_bound >= 0.0 && rep.escape_bound <= 1.0);
    assert!(rep.rhs.is_finite());
    // the report's bound must sit above the exactly computed left side
    assert!(rep.lhs <= rep.rhs, "lhs {} vs rhs {}", rep.lhs, rep.rhs);
}
