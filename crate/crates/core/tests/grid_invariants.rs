//! Cross-module invariants of the grid diagnostics.

use submc_core::grid::{
    curvature, discretize, kernel_delta, mixing_time, stationary, tv_distance, wasserstein, Grid,
    Inner, InnerKind, MetricSpec, PairScope, TransitionMatrix, DEFAULT_T_MAX,
};
use submc_core::kernels::{KernelConfig, KernelVariant};
use submc_core::linalg::Mat;
use submc_core::model::{closed_form_posterior, log_posterior, DataSet, ModelSpec, ProposalKernel};
use submc_core::rng;

use rand::Rng;

fn gauss() -> ModelSpec {
    ModelSpec::GaussianConjugate { prior_sd: 1.0 }
}

fn full_mh_matrix(n_data: usize, cells: usize, k_sd: f64, seed: u64) -> (ModelSpec, DataSet, TransitionMatrix) {
    let m = gauss();
    let data = DataSet::synthesize(n_data, 0.2, seed).unwrap();
    let post = closed_form_posterior(&m, &data).unwrap();
    let grid = Grid::around(&post, k_sd, cells).unwrap();
    let k = KernelConfig {
        variant: KernelVariant::FullMh,
        proposal: ProposalKernel::new(post.sd()).unwrap(),
    };
    let p = discretize(&k, &m, Some(&data), &grid, Inner::Exact).unwrap();
    (m, data, p)
}

#[test]
fn grid_normalized_posterior_matches_closed_form() {
    let m = gauss();
    let data = DataSet::synthesize(60, -0.3, 9).unwrap();
    let post = closed_form_posterior(&m, &data).unwrap();
    let grid = Grid::around(&post, 8.0, 600).unwrap();
    let from_logs = grid
        .normalize_log_density(|t| log_posterior(&m, &data, t).unwrap())
        .unwrap();
    let reference = grid
        .normalize_log_density(|t| {
            let z = (t - post.mean) / post.sd();
            -0.5 * z * z
        })
        .unwrap();
    let tv = tv_distance(&from_logs, &reference).unwrap();
    assert!(tv <= 1e-4, "tv {tv}");
}

#[test]
fn stationary_is_a_fixed_point_to_tolerance() {
    let (_, _, p) = full_mh_matrix(50, 150, 6.0, 3);
    let pi = stationary(&p).unwrap();
    let stepped = pi.step(&p).unwrap();
    let l1: f64 = pi
        .weights()
        .iter()
        .zip(stepped.weights())
        .map(|(a, b)| (a - b).abs())
        .sum();
    assert!(l1 <= 1e-10, "residual {l1}");
}

#[test]
fn positive_curvature_of_a_power_bounds_mixing_time() {
    let (_, _, p) = full_mh_matrix(40, 80, 6.0, 5);
    let tau = mixing_time(&p, DEFAULT_T_MAX).unwrap();
    // find a power with positive discrete-metric curvature
    let mut power = p.clone();
    let mut s = 1u32;
    let kappa = loop {
        let k = curvature(&power, MetricSpec::Discrete, PairScope::AllPairs).unwrap();
        if k > 0.0 {
            break k;
        }
        let sq = power.mat().matmul(power.mat());
        power = TransitionMatrix::from_parts(sq, *p.grid(), InnerKind::Exact).unwrap();
        s *= 2;
        assert!(s <= 64, "no positive-curvature power found");
    };
    let bound = (s as f64 * 4f64.ln() / (1.0 / (1.0 - kappa)).ln()).ceil() as u64;
    assert!(tau <= bound, "tau {tau} vs curvature bound {bound} (s={s}, kappa={kappa})");
}

#[test]
fn kernel_delta_identity_and_triangle() {
    let mut r = rng::stream(8, "triangle", 0);
    let grid = Grid::new(-1.0, 1.0, 12).unwrap();
    let mut random_tm = |r: &mut rand_chacha::ChaCha8Rng| {
        let mut rows = Vec::new();
        for _ in 0..12 {
            let mut row: Vec<f64> = (0..12).map(|_| r.gen::<f64>()).collect();
            let z: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= z);
            rows.push(row);
        }
        TransitionMatrix::from_parts(Mat::from_rows(&rows), grid, InnerKind::Exact).unwrap()
    };
    for _ in 0..50 {
        let a = random_tm(&mut r);
        let b = random_tm(&mut r);
        let c = random_tm(&mut r);
        assert_eq!(kernel_delta(&a, &a).unwrap(), 0.0);
        let ab = kernel_delta(&a, &b).unwrap();
        let ac = kernel_delta(&a, &c).unwrap();
        let cb = kernel_delta(&c, &b).unwrap();
        assert!(ab <= ac + cb + 1e-12, "triangle violated: {ab} > {ac} + {cb}");
    }
}

#[test]
fn discrete_wasserstein_equals_tv_everywhere() {
    let grid = Grid::new(0.0, 1.0, 40).unwrap();
    let mut r = rng::stream(14, "w-discrete", 0);
    for _ in 0..100 {
        let mut a: Vec<f64> = (0..40).map(|_| r.gen::<f64>()).collect();
        let mut b: Vec<f64> = (0..40).map(|_| r.gen::<f64>()).collect();
        let za: f64 = a.iter().sum();
        let zb: f64 = b.iter().sum();
        a.iter_mut().for_each(|v| *v /= za);
        b.iter_mut().for_each(|v| *v /= zb);
        let da = submc_core::grid::DistVector::new(grid, a).unwrap();
        let db = submc_core::grid::DistVector::new(grid, b).unwrap();
        let w = wasserstein(&da, &db, MetricSpec::Discrete).unwrap();
        let tv = tv_distance(&da, &db).unwrap();
        assert!((w - tv).abs() < 1e-12);
    }
}

#[test]
fn eccentricity_at_posterior_mean_is_mean_absolute_deviation() {
    let (m, data, p) = full_mh_matrix(80, 400, 7.0, 11);
    let post = closed_form_posterior(&m, &data).unwrap();
    let pi = stationary(&p).unwrap();
    // cell containing the posterior mean
    let grid = p.grid();
    let g_mean = (0..grid.cells())
        .min_by(|&a, &b| {
            (grid.center(a) - post.mean)
                .abs()
                .partial_cmp(&(grid.center(b) - post.mean).abs())
                .unwrap()
        })
        .unwrap();
    let e = submc_core::grid::eccentricity(&pi, MetricSpec::Euclid, g_mean);
    // Gaussian mean absolute deviation is σ√(2/π), up to the grid offset
    let mad = post.sd() * (2.0 / core::f64::consts::PI).sqrt();
    assert!(
        (e - mad).abs() < 0.02 * mad + (grid.center(g_mean) - post.mean).abs(),
        "eccentricity {e} vs mad {mad}"
    );
}
