//! The large-data limit of the one-per-step wide-tail subsampler: under the
//! appendix coupling (shared data/proposal/uniform streams, first-touch
//! relabeling so consumption is consecutive), its path law meets the
//! fresh-sample chain's except on the index-collision event, whose
//! probability is at most `n²(T+1)²/N`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::kernels::{decide, lambda_over_points, psi_threshold};
use crate::math;
use crate::model::{ModelSpec, ProposalKernel};
use crate::rng;

use super::{ExperimentResult, Provenance, Table};

/// One coupled replication; returns whether the θ-paths fully agree.
///
/// The data set of size `n_data` is materialized lazily: the j-th distinct
/// index the finite chain touches is assigned the j-th value of the shared
/// stream, which is exactly the appendix's relabeling (σ₁ = 1, consecutive
/// consumption). The fresh-sample chain consumes that same stream in order,
/// so the paths coincide until a repeated index appears.
#[allow(clippy::too_many_arguments)]
fn coupled_paths_match<R: Rng + ?Sized>(
    model: &ModelSpec,
    proposal: &ProposalKernel,
    n: usize,
    steps: u64,
    n_data: u64,
    theta_star: f64,
    theta0: f64,
    rng: &mut R,
) -> bool {
    let m = n as u64;
    // shared fresh-value stream; drawn per consumption slot
    let mut fresh: alloc::vec::Vec<f64> = alloc::vec::Vec::new();
    // finite chain's lazy index → label map (labels index `fresh`)
    let mut label_of: alloc::collections::BTreeMap<u64, usize> = alloc::collections::BTreeMap::new();
    let next_value = |rng: &mut R, fresh: &mut alloc::vec::Vec<f64>| -> f64 {
        let z: f64 = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng);
        let v = theta_star + z;
        fresh.push(v);
        v
    };

    let mut theta_finite = theta0;
    let mut theta_infinite = theta0;
    let mut matched = true;
    let mut infinite_cursor = 0usize;
    let mut scratch_finite = alloc::vec![0.0f64; n];
    let mut scratch_infinite = alloc::vec![0.0f64; n];
    let mut step_indices: alloc::vec::Vec<u64> = alloc::vec::Vec::with_capacity(n);

    for _ in 0..steps {
        // shared proposal and uniform
        let ell_f = proposal.sample(theta_finite, rng);
        let ell_offset = ell_f - theta_finite;
        let u: f64 = rng.gen();

        // finite chain: sample n distinct indices of 0..n_data (rejection,
        // exact without-replacement law), consuming values lazily
        step_indices.clear();
        while step_indices.len() < n {
            let idx = rng.gen_range(0..n_data);
            if !step_indices.contains(&idx) {
                step_indices.push(idx);
            }
        }
        for (slot, &idx) in step_indices.iter().enumerate() {
            let label = match label_of.get(&idx) {
                Some(&l) => l,
                None => {
                    let l = fresh.len();
                    let _ = next_value(rng, &mut fresh);
                    label_of.insert(idx, l);
                    l
                }
            };
            scratch_finite[slot] = fresh[label];
        }
        let lam_f = lambda_over_points(model, &scratch_finite, theta_finite, ell_f);
        if decide(lam_f, psi_threshold(m, u, model, theta_finite, ell_f)) {
            theta_finite = ell_f;
        }

        // fresh-sample chain: consume the shared stream consecutively
        for slot in 0..n {
            if infinite_cursor + slot >= fresh.len() {
                let _ = next_value(rng, &mut fresh);
            }
            scratch_infinite[slot] = fresh[infinite_cursor + slot];
        }
        infinite_cursor += n;
        let ell_i = theta_infinite + ell_offset;
        let lam_i = lambda_over_points(model, &scratch_infinite, theta_infinite, ell_i);
        if decide(lam_i, psi_threshold(m, u, model, theta_infinite, ell_i)) {
            theta_infinite = ell_i;
        }

        if theta_finite != theta_infinite {
            matched = false;
            break;
        }
    }
    matched
}

/// Measure the coupled path-mismatch frequency against `n²(T+1)²/N`.
pub fn exp_kernel_limit(
    n: usize,
    steps: u64,
    n_data_list: &[u64],
    reps: u32,
    seed: u64,
) -> Result<ExperimentResult> {
    if n == 0 {
        return Err(Error::Parameter("n must be positive".into()));
    }
    let model = ModelSpec::GaussianConjugate { prior_sd: 1.0 };
    let proposal = ProposalKernel::new(1.0 / math::sqrt(n as f64))?;
    let mut res = ExperimentResult::new("kernel_limit", seed);
    res.input("n", n as f64).input("steps", steps as f64).input("reps", reps as f64);
    let mut rows = alloc::vec::Vec::new();
    for (i, &n_data) in n_data_list.iter().enumerate() {
        if (n as u64) > n_data {
            return Err(Error::Parameter(alloc::format!("n={n} exceeds data size {n_data}")));
        }
        let mut mismatches = 0u32;
        let mut r = rng::stream(seed, "kernel-limit", i as u64);
        for _ in 0..reps {
            if !coupled_paths_match(&model, &proposal, n, steps, n_data, 0.0, 0.0, &mut r) {
                mismatches += 1;
            }
        }
        let freq = mismatches as f64 / reps as f64;
        let se = math::sqrt(freq * (1.0 - freq) / reps as f64);
        let bound = (n as f64 * n as f64) * ((steps + 1) as f64 * (steps + 1) as f64) / n_data as f64;
        res.measure(&alloc::format!("mismatch_freq[n_data={n_data}]"), freq, Some(se));
        res.reference(&alloc::format!("bound[n_data={n_data}]"), bound, Provenance::Reported);
        res.require(freq <= bound);
        rows.push(alloc::vec![n_data as f64, freq, se, bound, bound - freq]);
    }
    res.table = Some(Table {
        columns: alloc::vec!["n_data".into(), "mismatch_freq".into(), "se".into(), "bound".into(), "slack".into()],
        rows,
    });
    Ok(res)
}
