//! Data sets, likelihood/prior families, proposal kernels and the closed-form
//! reference posteriors used as oracles.
//!
//! The state space is a 1-D real parameter θ. Observations follow
//! `x | θ ~ N(θ, 1)` and the prior is `θ ~ N(0, prior_sd²)`. The bounded
//! variant hard-clamps each per-observation log-likelihood to `[-clip, clip]`,
//! which realizes the uniformly-bounded-log-likelihood assumption some of the
//! perturbation bounds need.
//!
//! Log densities are kept unnormalized wherever only ratios matter; the grid
//! module renormalizes explicitly.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::rng;

/// Observed scalar data points, ordering stable under the synthesis seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSet {
    points: Vec<f64>,
}

impl DataSet {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Parameter("data set must contain at least one point".into()));
        }
        if let Some(bad) = points.iter().find(|x| !x.is_finite()) {
            return Err(Error::NumericOverflow { what: "data point", at: *bad });
        }
        Ok(DataSet { points })
    }

    /// Draw `n` i.i.d. points from `N(theta_star, 1)` on the `data` stream.
    pub fn synthesize(n: usize, theta_star: f64, seed: u64) -> Result<Self> {
        let mut r = rng::stream(seed, "data", 0);
        let points = (0..n)
            .map(|_| theta_star + <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut r))
            .collect();
        DataSet::new(points)
    }

    /// Affinely rescale to exactly zero mean and unit population variance.
    ///
    /// Some closed-form identities hold exactly only for standardized data.
    pub fn standardized(&self) -> Result<Self> {
        let n = self.len() as f64;
        let mean = self.points.iter().sum::<f64>() / n;
        let var = self.points.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        if var <= 0.0 {
            return Err(Error::Parameter("cannot standardize a constant data set".into()));
        }
        let sd = math::sqrt(var);
        DataSet::new(self.points.iter().map(|x| (x - mean) / sd).collect())
    }

    #[inline]
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest |x_i|; one-time O(N) setup used by the adaptive stopping rule.
    pub fn max_abs(&self) -> f64 {
        self.points.iter().fold(0.0, |m, x| if math::abs(*x) > m { math::abs(*x) } else { m })
    }
}

/// Likelihood/prior family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum ModelSpec {
    /// `x|θ ~ N(θ,1)`, `θ ~ N(0, prior_sd²)`; conjugate, closed-form posterior.
    GaussianConjugate { prior_sd: f64 },
    /// Same family with each log-likelihood term clamped to `[-clip, clip]`.
    BoundedGaussian { prior_sd: f64, clip: f64 },
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        let (sd, clip) = match *self {
            ModelSpec::GaussianConjugate { prior_sd } => (prior_sd, 1.0),
            ModelSpec::BoundedGaussian { prior_sd, clip } => (prior_sd, clip),
        };
        if !(sd > 0.0 && sd.is_finite()) {
            return Err(Error::Parameter("prior_sd must be a positive real".into()));
        }
        if !(clip > 0.0 && clip.is_finite()) {
            return Err(Error::Parameter("clip must be a positive real".into()));
        }
        Ok(())
    }

    pub fn prior_sd(&self) -> f64 {
        match *self {
            ModelSpec::GaussianConjugate { prior_sd } | ModelSpec::BoundedGaussian { prior_sd, .. } => prior_sd,
        }
    }

    /// Log prior density at θ (normalized; constants are harmless).
    #[inline]
    pub fn log_prior(&self, theta: f64) -> f64 {
        let sd = self.prior_sd();
        math::norm_logpdf(theta / sd) - math::ln(sd)
    }

    /// Per-observation log-likelihood, clamped for the bounded variant.
    #[inline]
    pub fn log_lik(&self, theta: f64, x: f64) -> f64 {
        let raw = math::norm_logpdf(x - theta);
        match *self {
            ModelSpec::GaussianConjugate { .. } => raw,
            ModelSpec::BoundedGaussian { clip, .. } => {
                let v = raw.clamp(-clip, clip);
                debug_assert!(math::abs(v) <= clip);
                v
            }
        }
    }

    /// Declared uniform bound on |log_lik|, when the variant has one.
    pub fn log_lik_bound(&self) -> Option<f64> {
        match *self {
            ModelSpec::GaussianConjugate { .. } => None,
            ModelSpec::BoundedGaussian { clip, .. } => Some(clip),
        }
    }
}

/// Unnormalized log posterior `log p(θ) + Σ_i log p(x_i|θ)`.
pub fn log_posterior(model: &ModelSpec, data: &DataSet, theta: f64) -> Result<f64> {
    let mut acc = model.log_prior(theta);
    for &x in data.points() {
        acc += model.log_lik(theta, x);
    }
    if !acc.is_finite() {
        return Err(Error::NumericOverflow { what: "log posterior", at: theta });
    }
    Ok(acc)
}

/// Parameters of a Gaussian reference distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorParams {
    pub mean: f64,
    pub variance: f64,
}

impl PosteriorParams {
    pub fn sd(&self) -> f64 {
        math::sqrt(self.variance)
    }

    /// E[f(θ)] under this Gaussian, by Simpson quadrature on ±10 sd split at
    /// the test function's kinks so every panel integrates a smooth function.
    pub fn expect(&self, f: &TestFunction) -> f64 {
        let lo = self.mean - 10.0 * self.sd();
        let hi = self.mean + 10.0 * self.sd();
        let mut cuts = alloc::vec![lo];
        for b in f.breakpoints() {
            if b > lo && b < hi {
                cuts.push(b);
            }
        }
        cuts.push(hi);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let dens = |t: f64| {
            let z = (t - self.mean) / self.sd();
            math::exp(math::norm_logpdf(z)) / self.sd()
        };
        let mut total = 0.0;
        for pair in cuts.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let mid = 0.5 * (a + b);
            let m = 2000;
            let h = (b - a) / m as f64;
            let mut acc = 0.0;
            for k in 0..=m {
                let t = a + k as f64 * h;
                let w = if k == 0 || k == m {
                    1.0
                } else if k % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                // evaluate the open-interval branch at the panel edges
                let ft = if k == 0 || k == m { f.eval_toward(t, mid) } else { f.eval(t) };
                acc += w * ft * dens(t);
            }
            total += acc * h / 3.0;
        }
        total
    }
}

/// Closed-form conjugate posterior `N((σ⁻²+N)⁻¹ Σx, (σ⁻²+N)⁻¹)`.
pub fn closed_form_posterior(model: &ModelSpec, data: &DataSet) -> Result<PosteriorParams> {
    match *model {
        ModelSpec::GaussianConjugate { prior_sd } => {
            let prec = 1.0 / (prior_sd * prior_sd) + data.len() as f64;
            let sum: f64 = data.points().iter().sum();
            Ok(PosteriorParams { mean: sum / prec, variance: 1.0 / prec })
        }
        ModelSpec::BoundedGaussian { .. } => Err(Error::UnsupportedModel(
            "closed-form posterior requires the conjugate Gaussian variant".into(),
        )),
    }
}

/// Closed-form tempered posterior of the wide-tail chain,
/// `∝ p(θ) Π p(x_i|θ)^{n/N}`, for the conjugate variant.
pub fn tempered_closed_form(model: &ModelSpec, data: &DataSet, n: usize) -> Result<PosteriorParams> {
    match *model {
        ModelSpec::GaussianConjugate { prior_sd } => {
            check_temper_index(data, n)?;
            let n_over_big_n = n as f64 / data.len() as f64;
            let prec = 1.0 / (prior_sd * prior_sd) + n as f64;
            let sum: f64 = data.points().iter().sum();
            Ok(PosteriorParams { mean: n_over_big_n * sum / prec, variance: 1.0 / prec })
        }
        ModelSpec::BoundedGaussian { .. } => Err(Error::UnsupportedModel(
            "tempered closed form requires the conjugate Gaussian variant".into(),
        )),
    }
}

fn check_temper_index(data: &DataSet, n: usize) -> Result<()> {
    if n < 1 || n > data.len() {
        return Err(Error::Parameter(alloc::format!(
            "tempering index n={n} out of range 1..={}",
            data.len()
        )));
    }
    Ok(())
}

/// Unnormalized tempered log density `log p(θ) + (n/N) Σ_i log p(x_i|θ)`.
pub fn tempered_log_posterior(model: &ModelSpec, data: &DataSet, n: usize, theta: f64) -> Result<f64> {
    check_temper_index(data, n)?;
    let frac = n as f64 / data.len() as f64;
    let mut acc = 0.0;
    for &x in data.points() {
        acc += model.log_lik(theta, x);
    }
    let out = model.log_prior(theta) + frac * acc;
    if !out.is_finite() {
        return Err(Error::NumericOverflow { what: "tempered log posterior", at: theta });
    }
    Ok(out)
}

/// Precomputed structure for evaluating `Σ_i log p(x_i | v)` quickly.
///
/// For the conjugate Gaussian the sum is a quadratic in `v` through the
/// sufficient statistics. For the bounded variant only points within the
/// clamp window of `v` contribute non-constant terms, so sorted data plus
/// prefix sums give an O(log N) evaluation. Both paths reproduce the naive
/// sum exactly up to floating-point summation order.
#[derive(Debug, Clone)]
pub struct LogLikSums {
    model: ModelSpec,
    n: usize,
    sum_x: f64,
    sum_xx: f64,
    // bounded variant: sorted points with prefix sums of x and x²
    sorted: Vec<f64>,
    pre_x: Vec<f64>,
    pre_xx: Vec<f64>,
    window: f64,
}

impl LogLikSums {
    pub fn new(model: &ModelSpec, data: &DataSet) -> Self {
        let n = data.len();
        let sum_x: f64 = data.points().iter().sum();
        let sum_xx: f64 = data.points().iter().map(|x| x * x).sum();
        let mut sorted = data.points().to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let (pre_x, pre_xx, window) = match *model {
            ModelSpec::GaussianConjugate { .. } => (Vec::new(), Vec::new(), 0.0),
            ModelSpec::BoundedGaussian { clip, .. } => {
                let mut px = Vec::with_capacity(n + 1);
                let mut pxx = Vec::with_capacity(n + 1);
                px.push(0.0);
                pxx.push(0.0);
                for &x in &sorted {
                    px.push(px.last().unwrap() + x);
                    pxx.push(pxx.last().unwrap() + x * x);
                }
                // |x-v| below this keeps the unclamped density above -clip
                let w = if clip > math::LN_SQRT_2PI {
                    math::sqrt(2.0 * (clip - math::LN_SQRT_2PI))
                } else {
                    0.0
                };
                (px, pxx, w)
            }
        };
        LogLikSums { model: *model, n, sum_x, sum_xx, sorted, pre_x, pre_xx, window }
    }

    #[inline]
    pub fn data_len(&self) -> usize {
        self.n
    }

    /// `Σ_{i=1..N} log p(x_i | v)`.
    pub fn total(&self, v: f64) -> f64 {
        match self.model {
            ModelSpec::GaussianConjugate { .. } => {
                let n = self.n as f64;
                -0.5 * (self.sum_xx - 2.0 * v * self.sum_x + n * v * v) - n * math::LN_SQRT_2PI
            }
            ModelSpec::BoundedGaussian { clip, .. } => {
                let lo = self.sorted.partition_point(|&x| x < v - self.window);
                let hi = self.sorted.partition_point(|&x| x <= v + self.window);
                let cnt = (hi - lo) as f64;
                let sx = self.pre_x[hi] - self.pre_x[lo];
                let sxx = self.pre_xx[hi] - self.pre_xx[lo];
                let in_window =
                    -0.5 * (sxx - 2.0 * v * sx + cnt * v * v) - cnt * math::LN_SQRT_2PI;
                in_window - clip * (self.n as f64 - cnt)
            }
        }
    }

    /// Half-open index range `[lo, hi)` of the sorted points inside the clamp
    /// window of `v` (bounded variant only); used by the grid discretizer.
    pub fn window_bounds(&self, v: f64) -> (usize, usize) {
        let lo = self.sorted.partition_point(|&x| x < v - self.window);
        let hi = self.sorted.partition_point(|&x| x <= v + self.window);
        (lo, hi)
    }

    pub fn sorted_points(&self) -> &[f64] {
        &self.sorted
    }

    /// `(clip, window)` of the bounded variant; None for the conjugate model.
    pub fn clip_params(&self) -> Option<(f64, f64)> {
        match self.model {
            ModelSpec::GaussianConjugate { .. } => None,
            ModelSpec::BoundedGaussian { clip, .. } => Some((clip, self.window)),
        }
    }
}

/// Moments of the (tempered) target, used to auto-size grids and proposals.
///
/// `temper_n = Some(n)` targets `p(θ) Π p(x_i|θ)^{n/N}`, `None` the full
/// posterior. Conjugate models use the closed form; the bounded variant
/// integrates numerically on a wide probe grid.
pub fn target_params(model: &ModelSpec, data: &DataSet, temper_n: Option<usize>) -> Result<PosteriorParams> {
    match *model {
        ModelSpec::GaussianConjugate { .. } => match temper_n {
            None => closed_form_posterior(model, data),
            Some(n) => tempered_closed_form(model, data, n),
        },
        ModelSpec::BoundedGaussian { prior_sd, .. } => {
            let n = temper_n.unwrap_or(data.len());
            check_temper_index(data, n)?;
            let frac = n as f64 / data.len() as f64;
            let sums = LogLikSums::new(model, data);
            // posterior sd is at most the prior sd here, so ±10 prior sd is ample
            let lo = -10.0 * prior_sd + data.points().iter().sum::<f64>() / data.len() as f64;
            let hi = lo + 20.0 * prior_sd;
            let m = 8000;
            let h = (hi - lo) / m as f64;
            let mut logs = Vec::with_capacity(m + 1);
            let mut max_l = f64::NEG_INFINITY;
            for k in 0..=m {
                let t = lo + k as f64 * h;
                let l = model.log_prior(t) + frac * sums.total(t);
                if l > max_l {
                    max_l = l;
                }
                logs.push(l);
            }
            let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
            for (k, l) in logs.iter().enumerate() {
                let t = lo + k as f64 * h;
                let w = math::exp(l - max_l);
                z += w;
                m1 += w * t;
                m2 += w * t * t;
            }
            let mean = m1 / z;
            let variance = m2 / z - mean * mean;
            Ok(PosteriorParams { mean, variance })
        }
    }
}

/// Symmetric Gaussian random-walk proposal with standard deviation `scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProposalKernel {
    pub scale: f64,
}

impl ProposalKernel {
    pub fn new(scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Parameter("proposal scale must be a positive real".into()));
        }
        Ok(ProposalKernel { scale })
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, from: f64, rng: &mut R) -> f64 {
        from + self.scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
    }

    /// Log density of proposing `to` from `from`; symmetric by construction.
    #[inline]
    pub fn log_density(&self, from: f64, to: f64) -> f64 {
        math::norm_logpdf((to - from) / self.scale) - math::ln(self.scale)
    }
}

/// Test functions the estimators average.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum TestFunction {
    /// min(1, θ²); maps into [0,1] as the error lemmas require.
    SquareClipped,
    /// θ² unclipped; used by the worked examples.
    Square,
    /// 1 on [lo, hi], 0 elsewhere.
    IndicatorInterval { lo: f64, hi: f64 },
}

impl TestFunction {
    #[inline]
    pub fn eval(&self, theta: f64) -> f64 {
        match *self {
            TestFunction::SquareClipped => (theta * theta).min(1.0),
            TestFunction::Square => theta * theta,
            TestFunction::IndicatorInterval { lo, hi } => {
                if theta >= lo && theta <= hi {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Whether the range is contained in [0,1] (needed by the error lemmas).
    pub fn unit_range(&self) -> bool {
        !matches!(self, TestFunction::Square)
    }

    /// Points where the function is non-smooth (kinks or jumps).
    pub fn breakpoints(&self) -> alloc::vec::Vec<f64> {
        match *self {
            TestFunction::SquareClipped => alloc::vec![-1.0, 1.0],
            TestFunction::Square => alloc::vec![],
            TestFunction::IndicatorInterval { lo, hi } => alloc::vec![lo, hi],
        }
    }

    /// Value taken from the side of `toward`; disambiguates jump points.
    fn eval_toward(&self, t: f64, toward: f64) -> f64 {
        let eps = 1e-9 * (1.0 + math::abs(t));
        let shifted = if toward > t { t + eps } else { t - eps };
        self.eval(shifted)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn gauss() -> ModelSpec {
        ModelSpec::GaussianConjugate { prior_sd: 1.0 }
    }

    #[test]
    fn single_point_posterior_is_symmetric_at_zero() {
        let data = DataSet::new(alloc::vec![0.0]).unwrap();
        let p = closed_form_posterior(&gauss(), &data).unwrap();
        assert_eq!(p.mean, 0.0);
        assert!((p.variance - 0.5).abs() < 1e-15);
        // mode at 0: density decreases either side
        let at0 = log_posterior(&gauss(), &data, 0.0).unwrap();
        let off = log_posterior(&gauss(), &data, 0.4).unwrap();
        assert!(at0 > off);
    }

    #[test]
    fn log_posterior_difference_ignores_constant() {
        let data = DataSet::synthesize(40, 0.3, 9).unwrap();
        let m = gauss();
        // evaluate the difference two ways: directly, and via tempered with n=N
        let d1 = log_posterior(&m, &data, 0.7).unwrap() - log_posterior(&m, &data, -0.2).unwrap();
        let n = data.len();
        let d2 = tempered_log_posterior(&m, &data, n, 0.7).unwrap()
            - tempered_log_posterior(&m, &data, n, -0.2).unwrap();
        assert!((d1 - d2).abs() < 1e-12);
    }

    #[test]
    fn tempered_equals_posterior_at_full_index() {
        let data = DataSet::synthesize(25, -0.5, 3).unwrap();
        let m = gauss();
        let mut r = rng::stream(11, "theta-probe", 0);
        for _ in 0..100 {
            let theta = 4.0 * (r.gen::<f64>() - 0.5);
            let a = tempered_log_posterior(&m, &data, data.len(), theta).unwrap();
            let b = log_posterior(&m, &data, theta).unwrap();
            assert!((a - b).abs() < 1e-12, "theta={theta}: {a} vs {b}");
        }
    }

    #[test]
    fn tempered_index_range_checked() {
        let data = DataSet::synthesize(5, 0.0, 1).unwrap();
        assert!(matches!(
            tempered_log_posterior(&gauss(), &data, 0, 0.0),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            tempered_log_posterior(&gauss(), &data, 6, 0.0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn bounded_log_lik_respects_clip_on_grid_sweep() {
        let m = ModelSpec::BoundedGaussian { prior_sd: 1.0, clip: 2.0 };
        let mut worst: f64 = 0.0;
        for i in 0..400 {
            let theta = -10.0 + i as f64 * 0.05;
            for j in 0..400 {
                let x = -10.0 + j as f64 * 0.05;
                worst = worst.max(math::abs(m.log_lik(theta, x)));
            }
        }
        assert!(worst <= 2.0, "clip violated: {worst}");
    }

    #[test]
    fn closed_form_mean_square_matches_data_average_oracle() {
        // E over data of π_ss(θ²) should equal mean²+variance averaged over
        // simulated data sets; the analytic expectation is
        // n(σ⁻²+n)⁻² + (σ⁻²+n)⁻¹ for x_i ~ N(0,1).
        let n = 12usize;
        let m = gauss();
        let analytic = n as f64 / ((1.0 + n as f64) * (1.0 + n as f64)) + 1.0 / (1.0 + n as f64);
        let reps = 200_000;
        let mut r = rng::stream(5, "pi-ss-oracle", 0);
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..reps {
            let data = (0..n)
                .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut r))
                .collect::<Vec<f64>>();
            let ds = DataSet::new(data).unwrap();
            let p = closed_form_posterior(&m, &ds).unwrap();
            let v = p.mean * p.mean + p.variance;
            s += v;
            s2 += v * v;
        }
        let mean = s / reps as f64;
        let se = math::sqrt((s2 / reps as f64 - mean * mean) / reps as f64);
        assert!(
            math::abs(mean - analytic) < 3.0 * se,
            "sim {mean} vs analytic {analytic} (se {se})"
        );
    }

    #[test]
    fn loglik_sums_match_naive_for_both_variants() {
        let data = DataSet::synthesize(300, 0.2, 21).unwrap();
        for m in [gauss(), ModelSpec::BoundedGaussian { prior_sd: 1.0, clip: 1.0 }] {
            let sums = LogLikSums::new(&m, &data);
            for k in 0..40 {
                let v = -4.0 + 0.2 * k as f64;
                let naive: f64 = data.points().iter().map(|&x| m.log_lik(v, x)).sum();
                assert!(
                    math::abs(sums.total(v) - naive) < 1e-9 * (1.0 + math::abs(naive)),
                    "variant {m:?} v={v}: {} vs {naive}",
                    sums.total(v)
                );
            }
        }
    }

    #[test]
    fn target_params_numeric_matches_closed_form_shape() {
        // bounded with a huge clip behaves like the conjugate model
        let data = DataSet::synthesize(50, 0.4, 7).unwrap();
        let loose = ModelSpec::BoundedGaussian { prior_sd: 1.0, clip: 50.0 };
        let p_num = target_params(&loose, &data, None).unwrap();
        let p_cf = closed_form_posterior(&gauss(), &data).unwrap();
        assert!(math::abs(p_num.mean - p_cf.mean) < 1e-6);
        assert!(math::abs(p_num.variance - p_cf.variance) < 1e-6);
    }

    #[test]
    fn quadrature_matches_gaussian_second_moment() {
        let p = PosteriorParams { mean: 0.3, variance: 0.25 };
        let ex = p.expect(&TestFunction::Square);
        assert!((ex - (0.3 * 0.3 + 0.25)).abs() < 1e-10);
        // indicator integrates to the CDF difference
        let ind = p.expect(&TestFunction::IndicatorInterval { lo: 0.0, hi: 1.0 });
        let want = math::norm_cdf((1.0 - 0.3) / 0.5) - math::norm_cdf((0.0 - 0.3) / 0.5);
        assert!((ind - want).abs() < 1e-6);
    }
}
