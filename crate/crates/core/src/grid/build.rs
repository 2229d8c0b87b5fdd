//! Compiling a kernel into an exact row-stochastic matrix.
//!
//! Row `g` is the one-step law from the cell center: proposal mass is laid
//! over destination cells by the midpoint rule (rows renormalized), the
//! acceptance probability at `(θ, ℓ)` is marginalized over the uniform
//! analytically (the accept event is a half-line in `u`), and over the
//! subsample either exactly (full enumeration when feasible) or by shared
//! seeded Monte Carlo draws. Rejected mass sits on the diagonal.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::kernels::{austerity_decide, IndexSampler, KernelConfig, KernelVariant};
use crate::linalg::Mat;
use crate::math;
use crate::model::{DataSet, LogLikSums, ModelSpec};
use crate::rng;

use super::{Grid, InnerKind, TransitionMatrix};

/// How to marginalize the per-step randomness beyond the uniform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Inner {
    /// Closed form or full subset enumeration; error if infeasible.
    Exact,
    /// Shared Monte Carlo draws.
    MonteCarlo { draws: u32, seed: u64 },
    /// Exact when the enumeration fits the budget, Monte Carlo otherwise.
    Auto { draws: u32, seed: u64 },
}

const ENUM_LIMIT_LOG10: f64 = 6.0;

fn log10_choose(n: usize, k: usize) -> f64 {
    let lg = |x: f64| libm::lgamma(x);
    (lg(n as f64 + 1.0) - lg(k as f64 + 1.0) - lg((n - k) as f64 + 1.0)) / core::f64::consts::LN_10
}

/// Midpoint-rule proposal weights, renormalized row-wise.
pub(crate) fn proposal_rows(grid: &Grid, scale: f64) -> Mat {
    let g = grid.cells();
    let centers = grid.centers();
    let mut q = Mat::zeros(g);
    for i in 0..g {
        let row = q.row_mut(i);
        let mut z = 0.0;
        for (j, &c) in centers.iter().enumerate() {
            let w = math::exp(math::norm_logpdf((c - centers[i]) / scale));
            row[j] = w;
            z += w;
        }
        for v in row.iter_mut() {
            *v /= z;
        }
    }
    q
}

/// Accumulates mean acceptance probabilities over subsample draws.
///
/// For each draw the subset log-likelihood sum `W_S(v)` is evaluated at every
/// grid center; the accept probability between centers is
/// `min(1, exp(coef·(W_S(ℓ)−W_S(θ)) + Δ log-prior))`, antisymmetric in the
/// exponent, so each unordered pair costs one exponential.
struct AlphaAccumulator {
    g: usize,
    acc: Vec<f64>,
    log_prior: Vec<f64>,
    coef: f64,
    draws: u64,
}

impl AlphaAccumulator {
    fn new(grid: &Grid, model: &ModelSpec, coef: f64) -> Self {
        let log_prior = grid.centers().iter().map(|&c| model.log_prior(c)).collect();
        AlphaAccumulator { g: grid.cells(), acc: vec![0.0; grid.cells() * grid.cells()], log_prior, coef, draws: 0 }
    }

    fn add_subset(&mut self, w: &[f64]) {
        let g = self.g;
        self.draws += 1;
        for a in 0..g {
            let wa = self.coef * w[a] + self.log_prior[a];
            for b in a + 1..g {
                let e = self.coef * w[b] + self.log_prior[b] - wa;
                self.acc[a * g + b] += math::cap_exp(e);
                self.acc[b * g + a] += math::cap_exp(-e);
            }
        }
    }

    fn finish(mut self) -> Vec<f64> {
        let inv = 1.0 / self.draws as f64;
        for v in &mut self.acc {
            *v *= inv;
        }
        for a in 0..self.g {
            self.acc[a * self.g + a] = 1.0;
        }
        self.acc
    }
}

/// Evaluates `W_S(v) = Σ_{i∈S} log p(x_i|v)` at all centers for one subset.
struct SubsetEval<'a> {
    model: ModelSpec,
    sums: &'a LogLikSums,
    centers: &'a [f64],
    // scratch for the sorted-values path
    values: Vec<f64>,
    pre_x: Vec<f64>,
    pre_xx: Vec<f64>,
    // scratch for the masked-prefix path over the full sorted data
    mask_cnt: Vec<f64>,
    mask_x: Vec<f64>,
    mask_xx: Vec<f64>,
}

impl<'a> SubsetEval<'a> {
    fn new(model: &ModelSpec, sums: &'a LogLikSums, centers: &'a [f64]) -> Self {
        SubsetEval {
            model: *model,
            sums,
            centers,
            values: Vec::new(),
            pre_x: Vec::new(),
            pre_xx: Vec::new(),
            mask_cnt: Vec::new(),
            mask_x: Vec::new(),
            mask_xx: Vec::new(),
        }
    }

    /// Subset given as positions into the sorted data.
    fn eval_positions(&mut self, positions: &[u32], out: &mut [f64]) {
        match self.model {
            ModelSpec::GaussianConjugate { .. } => {
                let pts = self.sums.sorted_points();
                let (mut sx, mut sxx) = (0.0, 0.0);
                for &p in positions {
                    let x = pts[p as usize];
                    sx += x;
                    sxx += x * x;
                }
                let s = positions.len() as f64;
                for (g, &c) in self.centers.iter().enumerate() {
                    out[g] = -0.5 * (sxx - 2.0 * c * sx + s * c * c) - s * math::LN_SQRT_2PI;
                }
            }
            ModelSpec::BoundedGaussian { .. } => {
                let n = self.sums.data_len();
                let s = positions.len();
                // sorted-values path when cheaper than a full-data sweep
                if s * (usize::BITS - s.leading_zeros()) as usize + self.centers.len() < n {
                    let pts = self.sums.sorted_points();
                    self.values.clear();
                    self.values.extend(positions.iter().map(|&p| pts[p as usize]));
                    self.values.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    self.eval_sorted_values_into(out);
                } else {
                    self.mask_cnt.clear();
                    self.mask_cnt.resize(n + 1, 0.0);
                    self.mask_x.clear();
                    self.mask_x.resize(n + 1, 0.0);
                    self.mask_xx.clear();
                    self.mask_xx.resize(n + 1, 0.0);
                    let pts = self.sums.sorted_points();
                    for &p in positions {
                        let i = p as usize;
                        self.mask_cnt[i + 1] = 1.0;
                        self.mask_x[i + 1] = pts[i];
                        self.mask_xx[i + 1] = pts[i] * pts[i];
                    }
                    for i in 0..n {
                        self.mask_cnt[i + 1] += self.mask_cnt[i];
                        self.mask_x[i + 1] += self.mask_x[i];
                        self.mask_xx[i + 1] += self.mask_xx[i];
                    }
                    let (clip, _) = self.sums.clip_params().unwrap();
                    let s_total = positions.len() as f64;
                    for (g, &c) in self.centers.iter().enumerate() {
                        let (lo, hi) = self.sums.window_bounds(c);
                        let cnt = self.mask_cnt[hi] - self.mask_cnt[lo];
                        let sx = self.mask_x[hi] - self.mask_x[lo];
                        let sxx = self.mask_xx[hi] - self.mask_xx[lo];
                        out[g] = -0.5 * (sxx - 2.0 * c * sx + cnt * c * c)
                            - cnt * math::LN_SQRT_2PI
                            - clip * (s_total - cnt);
                    }
                }
            }
        }
    }

    /// Subset given as raw values (fresh draws).
    fn eval_values(&mut self, values: &[f64], out: &mut [f64]) {
        match self.model {
            ModelSpec::GaussianConjugate { .. } => {
                let (mut sx, mut sxx) = (0.0, 0.0);
                for &x in values {
                    sx += x;
                    sxx += x * x;
                }
                let s = values.len() as f64;
                for (g, &c) in self.centers.iter().enumerate() {
                    out[g] = -0.5 * (sxx - 2.0 * c * sx + s * c * c) - s * math::LN_SQRT_2PI;
                }
            }
            ModelSpec::BoundedGaussian { .. } => {
                self.values.clear();
                self.values.extend_from_slice(values);
                self.values.sort_by(|a, b| a.partial_cmp(b).unwrap());
                self.eval_sorted_values_into(out);
            }
        }
    }

    fn eval_sorted_values_into(&mut self, out: &mut [f64]) {
        let (clip, window) = self.sums.clip_params().unwrap();
        let s = self.values.len();
        self.pre_x.clear();
        self.pre_x.reserve(s + 1);
        self.pre_x.push(0.0);
        self.pre_xx.clear();
        self.pre_xx.reserve(s + 1);
        self.pre_xx.push(0.0);
        for &x in &self.values {
            self.pre_x.push(self.pre_x.last().unwrap() + x);
            self.pre_xx.push(self.pre_xx.last().unwrap() + x * x);
        }
        for (g, &c) in self.centers.iter().enumerate() {
            let lo = self.values.partition_point(|&x| x < c - window);
            let hi = self.values.partition_point(|&x| x <= c + window);
            let cnt = (hi - lo) as f64;
            let sx = self.pre_x[hi] - self.pre_x[lo];
            let sxx = self.pre_xx[hi] - self.pre_xx[lo];
            out[g] = -0.5 * (sxx - 2.0 * c * sx + cnt * c * c)
                - cnt * math::LN_SQRT_2PI
                - clip * (s as f64 - cnt);
        }
    }
}

/// Compile `config` into its exact one-step matrix on `grid`.
pub fn discretize(
    config: &KernelConfig,
    model: &ModelSpec,
    data: Option<&DataSet>,
    grid: &Grid,
    inner: Inner,
) -> Result<TransitionMatrix> {
    model.validate()?;
    config.variant.validate(data.map(|d| d.len()))?;
    let q = proposal_rows(grid, config.proposal.scale);
    let (alpha, kind) = acceptance_matrix(config, model, data, grid, inner)?;
    assemble(q, alpha, grid, kind)
}

fn assemble(q: Mat, alpha: Vec<f64>, grid: &Grid, kind: InnerKind) -> Result<TransitionMatrix> {
    let g = grid.cells();
    let mut p = Mat::zeros(g);
    for a in 0..g {
        let mut off_sum = 0.0;
        {
            let row = p.row_mut(a);
            for b in 0..g {
                if b == a {
                    continue;
                }
                let v = q.get(a, b) * alpha[a * g + b];
                row[b] = v;
                off_sum += v;
            }
            row[a] = (1.0 - off_sum).max(0.0);
        }
    }
    let mut tm = TransitionMatrix::from_parts(p, *grid, kind)?;
    tm.set_proposal(q);
    Ok(tm)
}

fn acceptance_matrix(
    config: &KernelConfig,
    model: &ModelSpec,
    data: Option<&DataSet>,
    grid: &Grid,
    inner: Inner,
) -> Result<(Vec<f64>, InnerKind)> {
    let centers = grid.centers();
    match config.variant {
        KernelVariant::FullMh | KernelVariant::WideMh { .. } => {
            let data = data.expect("validated");
            let n = data.len();
            let (m, _) = config.variant.tail_and_subsample(n).unwrap();
            let sums = LogLikSums::new(model, data);
            let coef = m as f64 / n as f64;
            let mut acc = AlphaAccumulator::new(grid, model, coef);
            let w: Vec<f64> = centers.iter().map(|&c| sums.total(c)).collect();
            acc.add_subset(&w);
            Ok((acc.finish(), InnerKind::Exact))
        }
        KernelVariant::SubsampleNarrow { .. } | KernelVariant::SubsampleWide { .. } => {
            let data = data.expect("validated");
            let n = data.len();
            let (m, s) = config.variant.tail_and_subsample(n).unwrap();
            let s = s as usize;
            let sums = LogLikSums::new(model, data);
            let coef = m as f64 / s as f64;
            let mut acc = AlphaAccumulator::new(grid, model, coef);
            let mut eval = SubsetEval::new(model, &sums, &centers);
            let mut w = vec![0.0; centers.len()];
            let log10_count = log10_choose(n, s);
            let exact_ok = log10_count <= ENUM_LIMIT_LOG10;
            match inner {
                Inner::Exact | Inner::Auto { .. } if exact_ok => {
                    // full enumeration over positions 0..n choose s
                    let mut comb: Vec<u32> = (0..s as u32).collect();
                    loop {
                        eval.eval_positions(&comb, &mut w);
                        acc.add_subset(&w);
                        // next combination in lexicographic order
                        let mut i = s;
                        loop {
                            if i == 0 {
                                return Ok((acc.finish(), InnerKind::Exact));
                            }
                            i -= 1;
                            if comb[i] != (n - s + i) as u32 {
                                break;
                            }
                        }
                        comb[i] += 1;
                        for j in i + 1..s {
                            comb[j] = comb[j - 1] + 1;
                        }
                    }
                }
                Inner::Exact => Err(Error::ExactInfeasible {
                    combinations_log10: log10_count,
                    limit_log10: ENUM_LIMIT_LOG10,
                }),
                Inner::MonteCarlo { draws, seed } | Inner::Auto { draws, seed } => {
                    let mut r = rng::stream(seed, "discretize", 0);
                    let mut sampler = IndexSampler::new(n);
                    for _ in 0..draws {
                        let positions = sampler.draw(s, &mut r);
                        eval.eval_positions(positions, &mut w);
                        acc.add_subset(&w);
                    }
                    Ok((acc.finish(), InnerKind::MonteCarlo { draws, seed }))
                }
            }
        }
        KernelVariant::InfiniteResample { n, theta_star } => match (*model, inner) {
            (ModelSpec::GaussianConjugate { .. }, Inner::Exact | Inner::Auto { .. }) => {
                Ok((infinite_resample_gaussian_alpha(model, grid, n, theta_star), InnerKind::Exact))
            }
            (ModelSpec::BoundedGaussian { .. }, Inner::Exact) => Err(Error::ExactInfeasible {
                combinations_log10: f64::INFINITY,
                limit_log10: ENUM_LIMIT_LOG10,
            }),
            (_, Inner::MonteCarlo { draws, seed } | Inner::Auto { draws, seed }) => {
                // fresh-sample Monte Carlo; exact-capable models land here only
                // when Monte Carlo was requested explicitly
                let probe = DataSet::new(vec![theta_star]).unwrap();
                let sums = LogLikSums::new(model, &probe);
                let mut acc = AlphaAccumulator::new(grid, model, 1.0);
                let mut eval = SubsetEval::new(model, &sums, &centers);
                let mut w = vec![0.0; centers.len()];
                let mut r = rng::stream(seed, "discretize", 0);
                let mut values = vec![0.0; n];
                use rand_distr::{Distribution, StandardNormal};
                for _ in 0..draws {
                    for v in &mut values {
                        let z: f64 = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut r);
                        *v = theta_star + z;
                    }
                    eval.eval_values(&values, &mut w);
                    acc.add_subset(&w);
                }
                Ok((acc.finish(), InnerKind::MonteCarlo { draws, seed }))
            }
        },
        KernelVariant::Austerity { gamma, delta0, rho } => {
            let data = data.expect("validated");
            match inner {
                Inner::Exact => Err(Error::ExactInfeasible {
                    combinations_log10: f64::INFINITY,
                    limit_log10: ENUM_LIMIT_LOG10,
                }),
                Inner::MonteCarlo { draws, seed } | Inner::Auto { draws, seed } => {
                    let g = grid.cells();
                    let max_abs_x = data.max_abs();
                    let mut alpha = vec![0.0; g * g];
                    let mut sampler = IndexSampler::new(data.len());
                    for a in 0..g {
                        for b in 0..g {
                            if a == b {
                                alpha[a * g + a] = 1.0;
                                continue;
                            }
                            let mut r = rng::stream(seed, "discretize-austerity", (a * g + b) as u64);
                            let mut hits = 0u32;
                            for _ in 0..draws {
                                let u: f64 = r.gen();
                                let (accept, _) = austerity_decide(
                                    model,
                                    data,
                                    max_abs_x,
                                    gamma,
                                    delta0,
                                    rho,
                                    centers[a],
                                    centers[b],
                                    u,
                                    &mut sampler,
                                    &mut r,
                                );
                                if accept {
                                    hits += 1;
                                }
                            }
                            alpha[a * g + b] = hits as f64 / draws as f64;
                        }
                    }
                    Ok((alpha, InnerKind::MonteCarlo { draws, seed }))
                }
            }
        }
    }
}

/// Metropolis chain targeting `N(mean, sd²)` directly on a grid; the
/// reference construction for limit comparisons.
pub fn discretize_gaussian_target(
    grid: &Grid,
    proposal_scale: f64,
    mean: f64,
    sd: f64,
) -> Result<TransitionMatrix> {
    let q = proposal_rows(grid, proposal_scale);
    let g = grid.cells();
    let centers = grid.centers();
    let logd: Vec<f64> = centers
        .iter()
        .map(|&c| {
            let z = (c - mean) / sd;
            -0.5 * z * z
        })
        .collect();
    let mut alpha = vec![0.0; g * g];
    for a in 0..g {
        alpha[a * g + a] = 1.0;
        for b in a + 1..g {
            let e = logd[b] - logd[a];
            alpha[a * g + b] = math::cap_exp(e);
            alpha[b * g + a] = math::cap_exp(-e);
        }
    }
    assemble(q, alpha, grid, InnerKind::Exact)
}

/// Closed-form acceptance for the fresh-sample chain on the conjugate model:
/// the log accept ratio is linear in the sample mean, hence Gaussian, and
/// `E[min(1, e^Y)]` has a Φ-expression.
fn infinite_resample_gaussian_alpha(model: &ModelSpec, grid: &Grid, n: usize, theta_star: f64) -> Vec<f64> {
    let centers = grid.centers();
    let g = grid.cells();
    let lp: Vec<f64> = centers.iter().map(|&c| model.log_prior(c)).collect();
    let nf = n as f64;
    let mut alpha = vec![0.0; g * g];
    for a in 0..g {
        alpha[a * g + a] = 1.0;
        for b in a + 1..g {
            let (theta, ell) = (centers[a], centers[b]);
            let diff = ell - theta;
            let mu = nf * diff * theta_star - nf * (ell * ell - theta * theta) / 2.0 + lp[b] - lp[a];
            let sigma = math::abs(diff) * math::sqrt(nf);
            alpha[a * g + b] = expect_capped_exp_gaussian(mu, sigma);
            alpha[b * g + a] = expect_capped_exp_gaussian(-mu, sigma);
        }
    }
    alpha
}

/// E[min(1, e^Y)] for Y ~ N(μ, σ²).
fn expect_capped_exp_gaussian(mu: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return math::cap_exp(mu);
    }
    let head = math::norm_cdf(mu / sigma);
    let tail = math::exp(mu + 0.5 * sigma * sigma + math::norm_logcdf(-(mu + sigma * sigma) / sigma));
    (head + tail).min(1.0)
}
