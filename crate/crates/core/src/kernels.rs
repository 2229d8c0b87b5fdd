//! One Markov transition step for each sampler variant, with exact cost
//! accounting.
//!
//! All variants share the same accept test: draw a proposal `ℓ` and a uniform
//! `u`, form the threshold `ψ = (1/m)·log(u · p(θ)L(θ,ℓ) / (p(ℓ)L(ℓ,θ)))` and
//! the averaged log-likelihood ratio `Λ* = (1/s)·Σ log(p(x*|ℓ)/p(x*|θ))` over
//! the `s` points the variant looks at, and accept iff `Λ* > ψ`. The tail
//! denominator `m` and the subsample size `s` are what distinguish the
//! variants; the adaptive variant grows its sample until a concentration
//! bound decides confidently.
//!
//! Cost unit: one ledger unit is one data point's log-likelihood ratio at a
//! `(θ, ℓ)` pair (the two parameter values at one point count as one unit),
//! so the simple subsampling variant costs exactly `n` per step.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::model::{DataSet, LogLikSums, ModelSpec, ProposalKernel, TestFunction};
use crate::rng::{self, ChaCha8Rng};

/// Which sampler a step executes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum KernelVariant {
    /// Full-data chain: `m = N`, `s = N`.
    FullMh,
    /// Wide-tail full-data chain: `m = n`, `s = N`; targets the tempered posterior.
    WideMh { n: usize },
    /// Narrow-tail subsampler: `m = N`, `s = n`, without replacement.
    SubsampleNarrow { n: usize },
    /// Wide-tail subsampler: `m = n`, `s = a·n`, without replacement.
    SubsampleWide { n: usize, a: usize },
    /// Adaptive subsampler growing the sample geometrically until a
    /// concentration bound separates `Λ*` from `ψ`.
    Austerity { gamma: f64, delta0: f64, rho: f64 },
    /// Fresh i.i.d. sample of size `n` from `p(·|θ*)` every step; `m = n`, `s = n`.
    InfiniteResample { n: usize, theta_star: f64 },
}

/// A sampler variant plus its proposal kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub variant: KernelVariant,
    pub proposal: ProposalKernel,
}

impl KernelVariant {
    /// Validate parameters against a data set size (None when data-free).
    pub fn validate(&self, data_len: Option<usize>) -> Result<()> {
        let err = |msg: String| Err(Error::Parameter(msg));
        match *self {
            KernelVariant::FullMh | KernelVariant::WideMh { .. } | KernelVariant::SubsampleNarrow { .. } | KernelVariant::SubsampleWide { .. } | KernelVariant::Austerity { .. } => {
                let n_data = match data_len {
                    Some(n) => n,
                    None => return err("this kernel variant requires a data set".into()),
                };
                match *self {
                    KernelVariant::WideMh { n } | KernelVariant::SubsampleNarrow { n } => {
                        if n < 1 || n > n_data {
                            return err(alloc::format!("n={n} out of range 1..={n_data}"));
                        }
                    }
                    KernelVariant::SubsampleWide { n, a } => {
                        if n < 1 || a < 1 || n.saturating_mul(a) > n_data {
                            return err(alloc::format!(
                                "subsample a*n={} exceeds data size {n_data}",
                                n.saturating_mul(a)
                            ));
                        }
                    }
                    KernelVariant::Austerity { gamma, delta0, rho } => {
                        if !(gamma > 1.0) {
                            return err("austerity gamma must exceed 1 (the sample must grow)".into());
                        }
                        if !(delta0 > 0.0 && delta0 < 1.0) || !(rho > 0.0 && rho < 1.0) {
                            return err("austerity delta0 and rho must lie in (0,1)".into());
                        }
                    }
                    _ => {}
                }
                Ok(())
            }
            KernelVariant::InfiniteResample { n, .. } => {
                if n < 1 {
                    return err("infinite-resample n must be at least 1".into());
                }
                Ok(())
            }
        }
    }

    /// `(m, s)`: tail denominator and subsample size, for the non-adaptive variants.
    pub fn tail_and_subsample(&self, data_len: usize) -> Option<(u64, u64)> {
        match *self {
            KernelVariant::FullMh => Some((data_len as u64, data_len as u64)),
            KernelVariant::WideMh { n } => Some((n as u64, data_len as u64)),
            KernelVariant::SubsampleNarrow { n } => Some((data_len as u64, n as u64)),
            KernelVariant::SubsampleWide { n, a } => Some((n as u64, (a * n) as u64)),
            KernelVariant::InfiniteResample { n, .. } => Some((n as u64, n as u64)),
            KernelVariant::Austerity { .. } => None,
        }
    }

    /// Ledger units per step; None for the adaptive variant.
    pub fn cost_per_step(&self, data_len: usize) -> Option<u64> {
        self.tail_and_subsample(data_len).map(|(_, s)| s)
    }

    /// Tempering index this variant targets (the wide-tail family), if any.
    pub fn temper_index(&self) -> Option<usize> {
        match *self {
            KernelVariant::WideMh { n }
            | KernelVariant::SubsampleWide { n, .. }
            | KernelVariant::InfiniteResample { n, .. } => Some(n),
            _ => None,
        }
    }
}

/// Chain position plus its reproducible randomness stream.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub theta: f64,
    pub step_index: u64,
    pub rng: ChaCha8Rng,
}

impl ChainState {
    pub fn new(theta: f64, seed: u64) -> Self {
        ChainState { theta, step_index: 0, rng: rng::stream(seed, "chain", 0) }
    }
}

/// Per-step and cumulative likelihood-evaluation counts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CostLedger {
    per_step: Vec<u64>,
    total: u64,
}

impl CostLedger {
    pub fn push(&mut self, c: u64) {
        self.per_step.push(c);
        self.total += c;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn per_step(&self) -> &[u64] {
        &self.per_step
    }
}

/// A finished run: `T+1` states, per-transition accept flags, the ledger.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<f64>,
    pub accepted: Vec<bool>,
    pub ledger: CostLedger,
    pub seed: u64,
    /// Set when an evaluation cap stopped the run before `steps` transitions.
    pub truncated: bool,
}

/// Outcome of a single transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub accepted: bool,
    pub lik_evals: u64,
}

/// The deterministic accept predicate shared by every variant.
#[inline]
pub fn decide(lambda_star: f64, psi: f64) -> bool {
    lambda_star > psi
}

/// `ψ(u, θ, ℓ)` for a symmetric proposal: the `L` ratio cancels.
#[inline]
pub fn psi_threshold(m: u64, u: f64, model: &ModelSpec, theta: f64, ell: f64) -> f64 {
    (math::ln(u) + model.log_prior(theta) - model.log_prior(ell)) / m as f64
}

/// `Λ*` over explicit points.
pub fn lambda_over_points(model: &ModelSpec, points: &[f64], theta: f64, ell: f64) -> f64 {
    let s: f64 = points.iter().map(|&x| model.log_lik(ell, x) - model.log_lik(theta, x)).sum();
    s / points.len() as f64
}

/// `Λ*` over data indices.
pub fn lambda_over_indices(model: &ModelSpec, data: &DataSet, idx: &[u32], theta: f64, ell: f64) -> f64 {
    let pts = data.points();
    let s: f64 = idx
        .iter()
        .map(|&i| {
            let x = pts[i as usize];
            model.log_lik(ell, x) - model.log_lik(theta, x)
        })
        .sum();
    s / idx.len() as f64
}

/// Replays the accept decision of an MH-family step from logged randomness.
pub fn mh_family_decide(
    m: u64,
    model: &ModelSpec,
    lambda_star: f64,
    theta: f64,
    ell: f64,
    u: f64,
) -> bool {
    decide(lambda_star, psi_threshold(m, u, model, theta, ell))
}

/// Reusable without-replacement index sampler (partial Fisher-Yates).
///
/// The buffer stays permuted between draws; any starting permutation yields
/// the uniform law, so no reset is needed and each draw costs O(s).
#[derive(Debug, Clone)]
pub struct IndexSampler {
    idx: Vec<u32>,
}

impl IndexSampler {
    pub fn new(n: usize) -> Self {
        IndexSampler { idx: (0..n as u32).collect() }
    }

    pub fn draw<R: Rng + ?Sized>(&mut self, s: usize, rng: &mut R) -> &[u32] {
        let n = self.idx.len();
        assert!(s <= n);
        for i in 0..s {
            let j = i + rng.gen_range(0..(n - i));
            self.idx.swap(i, j);
        }
        &self.idx[..s]
    }
}

/// Everything a run precomputes once.
pub struct KernelRuntime<'a> {
    pub config: KernelConfig,
    pub model: ModelSpec,
    pub data: Option<&'a DataSet>,
    sums: Option<LogLikSums>,
    sampler: Option<IndexSampler>,
    /// One-time max |x_i| for the adaptive confidence radius (amortized, not charged).
    max_abs_x: f64,
    scratch: Vec<f64>,
}

impl<'a> KernelRuntime<'a> {
    pub fn new(config: KernelConfig, model: ModelSpec, data: Option<&'a DataSet>) -> Result<Self> {
        model.validate()?;
        config.variant.validate(data.map(|d| d.len()))?;
        let needs_full_sum = matches!(config.variant, KernelVariant::FullMh | KernelVariant::WideMh { .. });
        let needs_sampler = matches!(
            config.variant,
            KernelVariant::SubsampleNarrow { .. } | KernelVariant::SubsampleWide { .. } | KernelVariant::Austerity { .. }
        );
        let sums = if needs_full_sum { Some(LogLikSums::new(&model, data.unwrap())) } else { None };
        let sampler = if needs_sampler { Some(IndexSampler::new(data.unwrap().len())) } else { None };
        let max_abs_x = data.map(|d| d.max_abs()).unwrap_or(0.0);
        Ok(KernelRuntime { config, model, data, sums, sampler, max_abs_x, scratch: Vec::new() })
    }

    /// Advance the chain one transition.
    pub fn step(&mut self, state: &mut ChainState) -> Result<StepRecord> {
        let rec = match self.config.variant {
            KernelVariant::FullMh | KernelVariant::WideMh { .. } | KernelVariant::SubsampleNarrow { .. } | KernelVariant::SubsampleWide { .. } => self.mh_family_step(state)?,
            KernelVariant::Austerity { gamma, delta0, rho } => self.austerity_step(state, gamma, delta0, rho)?,
            KernelVariant::InfiniteResample { n, theta_star } => self.infinite_resample_step(state, n, theta_star),
        };
        state.step_index += 1;
        Ok(rec)
    }

    /// One step of the four fixed-size variants.
    fn mh_family_step(&mut self, state: &mut ChainState) -> Result<StepRecord> {
        let data_len = self.data.map(|d| d.len()).unwrap_or(0);
        let (m, s) = self.config.variant.tail_and_subsample(data_len).expect("fixed-size variant");
        let theta = state.theta;
        let ell = self.config.proposal.sample(theta, &mut state.rng);
        let u: f64 = state.rng.gen();
        let lambda = match self.config.variant {
            KernelVariant::FullMh | KernelVariant::WideMh { .. } => {
                let sums = self.sums.as_ref().expect("full-data sums");
                (sums.total(ell) - sums.total(theta)) / data_len as f64
            }
            KernelVariant::SubsampleNarrow { .. } | KernelVariant::SubsampleWide { .. } => {
                let idx = self.sampler.as_mut().expect("sampler").draw(s as usize, &mut state.rng);
                lambda_over_indices(&self.model, self.data.unwrap(), idx, theta, ell)
            }
            _ => unreachable!(),
        };
        let accepted = decide(lambda, psi_threshold(m, u, &self.model, theta, ell));
        if accepted {
            state.theta = ell;
        }
        Ok(StepRecord { accepted, lik_evals: s })
    }

    /// One adaptive step; see [`austerity_decide`].
    fn austerity_step(&mut self, state: &mut ChainState, gamma: f64, delta0: f64, rho: f64) -> Result<StepRecord> {
        let data = self.data.expect("austerity requires data");
        let theta = state.theta;
        let ell = self.config.proposal.sample(theta, &mut state.rng);
        let u: f64 = state.rng.gen();
        let sampler = self.sampler.as_mut().expect("sampler");
        let (accepted, consumed) = austerity_decide(
            &self.model,
            data,
            self.max_abs_x,
            gamma,
            delta0,
            rho,
            theta,
            ell,
            u,
            sampler,
            &mut state.rng,
        );
        if accepted {
            state.theta = ell;
        }
        Ok(StepRecord { accepted, lik_evals: consumed })
    }

    /// One step against a fresh size-`n` sample from `p(·|θ*)`.
    fn infinite_resample_step(&mut self, state: &mut ChainState, n: usize, theta_star: f64) -> StepRecord {
        use rand_distr::{Distribution, StandardNormal};
        let theta = state.theta;
        let ell = self.config.proposal.sample(theta, &mut state.rng);
        let u: f64 = state.rng.gen();
        self.scratch.clear();
        for _ in 0..n {
            let z: f64 = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut state.rng);
            self.scratch.push(theta_star + z);
        }
        let lambda = lambda_over_points(&self.model, &self.scratch, theta, ell);
        let accepted = decide(lambda, psi_threshold(n as u64, u, &self.model, theta, ell));
        if accepted {
            state.theta = ell;
        }
        StepRecord { accepted, lik_evals: n as u64 }
    }
}

impl IndexSampler {
    /// Extend an in-progress without-replacement sample from `have` to `want`
    /// distinct indices; returns the newly drawn block.
    pub fn draw_more<R: Rng + ?Sized>(&mut self, have: usize, want: usize, rng: &mut R) -> &[u32] {
        let n = self.idx.len();
        assert!(have <= want && want <= n);
        for i in have..want {
            let j = i + rng.gen_range(0..(n - i));
            self.idx.swap(i, j);
        }
        &self.idx[have..want]
    }
}

/// Uniform bound on |log p(x|θ') − log p(x|θ)| over the data set.
///
/// From `log p(x|θ') − log p(x|θ) = (θ'−θ)x − (θ'²−θ²)/2`; clamping is
/// 1-Lipschitz in the unclamped value so the same bound holds, and `2·clip`
/// is taken when tighter. Needs only the precomputed max |x_i|.
pub fn log_ratio_bound(model: &ModelSpec, max_abs_x: f64, theta: f64, ell: f64) -> f64 {
    let analytic = math::abs(ell - theta) * max_abs_x + math::abs(ell * ell - theta * theta) / 2.0;
    match model.log_lik_bound() {
        Some(c) => analytic.min(2.0 * c),
        None => analytic,
    }
}

/// The adaptive accept decision at fixed `(θ, ℓ, u)`: grow the
/// without-replacement sample geometrically (`b ← min(N, ⌈γ·s⌉)`), stop when
/// the stage confidence radius separates the running mean from `ψ` or the
/// data are exhausted (at which point the decision is exact), then accept
/// iff `Λ* > ψ`. Returns the decision and the distinct points consumed.
///
/// Stage radius: `c = 2·C_{θ,ℓ}·√((1−f*)·log(2/δ_stage)/(2s))` with
/// `f* = (s−1)/N` and the geometric stage schedule `δ_stage = δ₀·ρ^stage`.
#[allow(clippy::too_many_arguments)]
pub fn austerity_decide<R: Rng + ?Sized>(
    model: &ModelSpec,
    data: &DataSet,
    max_abs_x: f64,
    gamma: f64,
    delta0: f64,
    rho: f64,
    theta: f64,
    ell: f64,
    u: f64,
    sampler: &mut IndexSampler,
    rng: &mut R,
) -> (bool, u64) {
    let n_data = data.len();
    let psi = psi_threshold(n_data as u64, u, model, theta, ell);
    let c_ratio = log_ratio_bound(model, max_abs_x, theta, ell);
    let pts = data.points();
    let mut consumed = 0usize;
    let mut sum = 0.0;
    let lambda;
    let mut s_look = 0u32;
    let mut b = 1usize;
    loop {
        let fresh = sampler.draw_more(consumed, b, rng);
        for &i in fresh {
            let x = pts[i as usize];
            sum += model.log_lik(ell, x) - model.log_lik(theta, x);
        }
        consumed = b;
        let running_mean = sum / consumed as f64;
        let delta_stage = delta0 * math::powf(rho, s_look as f64);
        let f_star = (consumed as f64 - 1.0) / n_data as f64;
        let c = 2.0
            * c_ratio
            * math::sqrt((1.0 - f_star) * math::ln(2.0 / delta_stage) / (2.0 * consumed as f64));
        s_look += 1;
        b = n_data.min(math::ceil(gamma * consumed as f64) as usize);
        if math::abs(running_mean - psi) >= c || consumed == n_data {
            lambda = running_mean;
            break;
        }
    }
    (decide(lambda, psi), consumed as u64)
}

/// Run `steps` transitions from `theta0` under the given seed.
///
/// With `max_lik_evals`, the run stops (flagged truncated) before any step
/// that would push the ledger past the cap; a partial adaptive step that
/// crosses the cap is discarded.
pub fn run_chain(
    config: &KernelConfig,
    model: &ModelSpec,
    data: Option<&DataSet>,
    steps: u64,
    theta0: f64,
    seed: u64,
    max_lik_evals: Option<u64>,
) -> Result<Trajectory> {
    if !theta0.is_finite() {
        return Err(Error::NumericOverflow { what: "initial state", at: theta0 });
    }
    let mut rt = KernelRuntime::new(*config, *model, data)?;
    let mut state = ChainState::new(theta0, seed);
    let mut traj = Trajectory {
        states: alloc::vec![theta0],
        accepted: Vec::new(),
        ledger: CostLedger::default(),
        seed,
        truncated: false,
    };
    for _ in 0..steps {
        // when the cost is known up front, stop before an over-budget step
        if let (Some(cap), Some(c)) = (max_lik_evals, config.variant.cost_per_step(data.map(|d| d.len()).unwrap_or(0))) {
            if traj.ledger.total() + c > cap {
                traj.truncated = true;
                break;
            }
        }
        let rec = rt.step(&mut state)?;
        if let Some(cap) = max_lik_evals {
            if traj.ledger.total() + rec.lik_evals > cap {
                // adaptive step crossed the cap: discard the partial step
                traj.truncated = true;
                break;
            }
        }
        traj.states.push(state.theta);
        traj.accepted.push(rec.accepted);
        traj.ledger.push(rec.lik_evals);
    }
    Ok(traj)
}

/// Time average of `f` over all states (the MCMC estimator).
pub fn mcmc_estimate(traj: &Trajectory, f: &TestFunction) -> f64 {
    let s: f64 = traj.states.iter().map(|&t| f.eval(t)).sum();
    s / traj.states.len() as f64
}
