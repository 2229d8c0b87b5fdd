//! Numerical certificates for the perturbation inequalities.
//!
//! Every certificate compares exact finite-matrix quantities; `holds` is a
//! literal comparison with no sampling noise beyond what the input matrices
//! already carry (Monte Carlo-built matrices are flagged).

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;

use super::analysis::{self, PairScope, DEFAULT_T_MAX};
use super::drift::{self, DriftFit, Lyapunov};
use super::wasserstein::{self, MetricSpec};
use super::TransitionMatrix;

/// A named hypothesis a certificate depends on.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Hypothesis {
    pub name: String,
    pub satisfied: bool,
}

/// Tri-state outcome: an inequality with an unsatisfied hypothesis is
/// neither held nor failed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Holds,
    Fails,
    HypothesisNotSatisfied,
}

/// One certified inequality: `lhs ≤ rhs` with slack `rhs − lhs`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Certificate {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: Status,
    pub slack: f64,
    pub hypotheses: Vec<Hypothesis>,
}

/// Absolute slack tolerated by the `lhs ≤ rhs` comparison; covers float
/// round-off only, never statistical noise.
pub const ARITHMETIC_SLACK: f64 = 1e-10;

impl Certificate {
    fn check(name: String, lhs: f64, rhs: f64, hypotheses: Vec<Hypothesis>) -> Self {
        let all_ok = hypotheses.iter().all(|h| h.satisfied);
        let holds = if !all_ok {
            Status::HypothesisNotSatisfied
        } else if lhs <= rhs + ARITHMETIC_SLACK {
            Status::Holds
        } else {
            Status::Fails
        };
        Certificate { name, lhs, rhs, holds, slack: rhs - lhs, hypotheses }
    }
}

/// Options for [`certify_perturbation`].
#[derive(Debug, Clone)]
pub struct CertifyOptions {
    /// Ground metric for the Wasserstein certificate.
    pub metric: MetricSpec,
    /// Lyapunov function for the drift-based certificates.
    pub lyapunov: Lyapunov,
    /// Drift lag ℓ.
    pub lag: u32,
    /// Level-set constants as multiples of the fitted b/a.
    pub level_multipliers: Vec<f64>,
    /// Mixing-time step cap.
    pub t_max: u64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            metric: MetricSpec::Euclid,
            lyapunov: Lyapunov::OnePlusSquare,
            lag: 1,
            level_multipliers: alloc::vec![4.0, 8.0],
            t_max: DEFAULT_T_MAX,
        }
    }
}

/// Everything `certify_perturbation` measured, plus the certificates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateReport {
    pub certificates: Vec<Certificate>,
    /// Worst row-wise TV between the kernels (the δ of the bounds).
    pub delta: f64,
    pub tau_base: Option<u64>,
    pub tau_approx: Option<u64>,
    pub tv_stationary: f64,
    /// Set when either matrix carries Monte Carlo noise in its entries.
    pub monte_carlo_uncertainty: bool,
}

/// Evaluate every perturbation certificate for the pair (base, approx).
pub fn certify_perturbation(
    base: &TransitionMatrix,
    approx: &TransitionMatrix,
    opts: &CertifyOptions,
) -> Result<CertificateReport> {
    if base.grid() != approx.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = *base.grid();
    let pi = analysis::stationary(base)?;
    let pi_tilde = analysis::stationary(approx)?;
    let delta = analysis::kernel_delta(base, approx)?;
    let tv_stat = analysis::tv_distance(&pi, &pi_tilde)?;
    let tau_base = match analysis::mixing_time_with(base, pi.weights(), opts.t_max) {
        Ok(t) => Some(t),
        Err(Error::NotMixedWithinCap { .. }) => None,
        Err(e) => return Err(e),
    };
    let tau_approx = match analysis::mixing_time_with(approx, pi_tilde.weights(), opts.t_max) {
        Ok(t) => Some(t),
        Err(Error::NotMixedWithinCap { .. }) => None,
        Err(e) => return Err(e),
    };

    let mut certs = Vec::new();

    // Wasserstein stationary bound: W(π̃, π) ≤ δ_W / α under uniform contraction.
    {
        let scope = match opts.metric {
            MetricSpec::Euclid => PairScope::Adjacent,
            _ => PairScope::AllPairs,
        };
        let kappa = analysis::curvature(base, opts.metric, scope)?;
        let mut delta_w: f64 = 0.0;
        for g in 0..grid.cells() {
            let w = wasserstein::wasserstein_slices(base.row(g), approx.row(g), &grid, opts.metric)?;
            delta_w = delta_w.max(w);
        }
        let lhs = wasserstein::wasserstein(&pi_tilde, &pi, opts.metric)?;
        let contraction = Hypothesis {
            name: alloc::format!("uniform Wasserstein contraction (curvature {kappa:.4e} > 0)"),
            satisfied: kappa > 0.0,
        };
        let rhs = if kappa > 0.0 { delta_w / kappa } else { f64::INFINITY };
        certs.push(Certificate::check("wasserstein_stationary".into(), lhs, rhs, alloc::vec![contraction]));
    }

    // TV stationary bound: ‖π̃ − π‖ ≤ (4δ/3)·τ.
    {
        let hyp = Hypothesis {
            name: "base mixing time computable within the step cap".into(),
            satisfied: tau_base.is_some(),
        };
        let rhs = tau_base.map(|t| 4.0 * delta / 3.0 * t as f64).unwrap_or(f64::INFINITY);
        certs.push(Certificate::check("tv_stationary".into(), tv_stat, rhs, alloc::vec![hyp]));
    }

    // Mixing-time doubling: δ < 9/(128τ) ⇒ τ̃ ≤ 2τ.
    {
        let threshold = tau_base.map(|t| 9.0 / (128.0 * t as f64));
        let hyp_small = Hypothesis {
            name: alloc::format!(
                "δ = {delta:.4e} below 9/(128·τ) = {}",
                threshold.map(|v| alloc::format!("{v:.4e}")).unwrap_or_else(|| "n/a".into())
            ),
            satisfied: threshold.map(|v| delta < v).unwrap_or(false),
        };
        let hyp_tau = Hypothesis {
            name: "both mixing times computable within the step cap".into(),
            satisfied: tau_base.is_some() && tau_approx.is_some(),
        };
        let lhs = tau_approx.map(|t| t as f64).unwrap_or(f64::INFINITY);
        let rhs = tau_base.map(|t| 2.0 * t as f64).unwrap_or(f64::INFINITY);
        certs.push(Certificate::check(
            "mixing_time_doubling".into(),
            lhs,
            rhs,
            alloc::vec![hyp_small, hyp_tau],
        ));
    }

    // Drift-based certificates.
    let fit_base = drift::verify_drift(base, opts.lyapunov, opts.lag)?;
    let fit_approx = drift::verify_drift(approx, opts.lyapunov, opts.lag)?;
    if let (DriftFit::Fitted(rb), DriftFit::Fitted(ra)) = (&fit_base, &fit_approx) {
        let ratio_base = rb.b / rb.a;
        let ratio_approx = ra.b / ra.a;
        for &mult in &opts.level_multipliers {
            let level = mult * ratio_base;

            // concentration for the base chain: 1 − b/(aC) ≤ π({V ≤ C})
            let mass = drift::mass_of_level_set(&pi, opts.lyapunov, level);
            certs.push(Certificate::check(
                alloc::format!("drift_concentration[c={mult}b/a]"),
                1.0 - rb.b / (rb.a * level),
                mass,
                Vec::new(),
            ));

            // geometric-ergodicity bias bound on the joint level set
            let vfun = opts.lyapunov;
            let keep: Vec<bool> = grid
                .centers()
                .iter()
                .map(|&c| vfun.eval(c) <= level)
                .collect();
            let kept = keep.iter().filter(|&&k| k).count();
            let mut hyps = alloc::vec![
                Hypothesis {
                    name: alloc::format!(
                        "C = {level:.4} strictly above 4·max(b/a, b̃/ã) = {:.4}",
                        4.0 * ratio_base.max(ratio_approx)
                    ),
                    satisfied: level > 4.0 * ratio_base.max(ratio_approx),
                },
                Hypothesis {
                    name: alloc::format!("joint level set nonempty ({kept} cells)"),
                    satisfied: kept > 0,
                },
            ];
            if kept == 0 {
                certs.push(Certificate::check(
                    alloc::format!("bias_geometric_ergodic[c={mult}b/a]"),
                    tv_stat,
                    f64::INFINITY,
                    hyps,
                ));
                continue;
            }
            // δ restricted to the level set
            let mut delta_set: f64 = 0.0;
            for g in 0..grid.cells() {
                if keep[g] {
                    delta_set = delta_set.max(analysis::tv_slices(base.row(g), approx.row(g)));
                }
            }
            let trace = analysis::trace_kernel(base, &keep)?;
            let tau_trace = match analysis::mixing_time(&trace, opts.t_max) {
                Ok(t) => Some(t),
                Err(Error::NotMixedWithinCap { .. }) => None,
                Err(e) => return Err(e),
            };
            hyps.push(Hypothesis {
                name: "trace mixing time computable within the step cap".into(),
                satisfied: tau_trace.is_some(),
            });
            let rhs = tau_trace
                .map(|t| {
                    4.0 * delta_set / 3.0 * t as f64
                        + 2.0 * rb.b / (rb.a * level)
                        + 2.0 * ra.b / (ra.a * level)
                })
                .unwrap_or(f64::INFINITY);
            certs.push(Certificate::check(
                alloc::format!("bias_geometric_ergodic[c={mult}b/a]"),
                tv_stat,
                rhs,
                hyps,
            ));
        }

        // drift inheritance: the approximate chain satisfies the base drift
        // with rate a − 2δ', where δ' also dominates sup|α − α̃| so that the
        // lemma's acceptance-difference hypothesis is applied with a valid δ
        {
            let vvec: Vec<f64> = grid.centers().iter().map(|&c| opts.lyapunov.eval(c)).collect();
            let mut w = vvec.clone();
            for _ in 0..opts.lag {
                w = approx.mat().mat_vec(&w);
            }
            // largest a' with b(a') ≤ b_base, i.e. min over rows
            let mut a_inherited = f64::INFINITY;
            for (wi, vi) in w.iter().zip(&vvec) {
                a_inherited = a_inherited.min((vi + rb.b - wi) / vi);
            }
            let a_inherited = a_inherited.min(1.0);
            let (hyp, delta_lemma) = multiplicative_hypothesis(base, approx, &vvec, delta);
            certs.push(Certificate::check(
                "drift_inheritance".into(),
                rb.a - 2.0 * delta_lemma,
                a_inherited,
                alloc::vec![hyp],
            ));
        }
    } else {
        certs.push(Certificate {
            name: "bias_geometric_ergodic".into(),
            lhs: tv_stat,
            rhs: f64::INFINITY,
            holds: Status::HypothesisNotSatisfied,
            slack: f64::INFINITY,
            hypotheses: alloc::vec![Hypothesis {
                name: "both chains admit an informative drift fit".into(),
                satisfied: false,
            }],
        });
    }

    Ok(CertificateReport {
        certificates: certs,
        delta,
        tau_base,
        tau_approx,
        tv_stationary: tv_stat,
        monte_carlo_uncertainty: base.is_monte_carlo() || approx.is_monte_carlo(),
    })
}

/// Checks the acceptance-difference hypothesis of the drift-inheritance
/// lemma when both matrices carry the shared proposal they were built with:
/// `|α − α̃| ≤ δ'·f ≤ δ'` with `Σ_y L(x,y) f(x,y) V(y) ≤ V(x)` row-wise,
/// where `δ' = max(row-TV δ, sup|α − α̃|)` so both of the lemma's δ-roles are
/// covered by one constant. Returns the hypothesis verdict and δ'.
fn multiplicative_hypothesis(
    base: &TransitionMatrix,
    approx: &TransitionMatrix,
    vvec: &[f64],
    delta_tv: f64,
) -> (Hypothesis, f64) {
    let (q1, q2) = match (base.proposal_rows(), approx.proposal_rows()) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return (
                Hypothesis {
                    name: "shared proposal decomposition available".into(),
                    satisfied: false,
                },
                delta_tv,
            )
        }
    };
    if q1 != q2 {
        return (
            Hypothesis { name: "proposal kernels identical".into(), satisfied: false },
            delta_tv,
        );
    }
    let g = vvec.len();
    let mut sup_diff: f64 = 0.0;
    for a in 0..g {
        for b in 0..g {
            if a == b || q1.get(a, b) == 0.0 {
                continue;
            }
            let alpha = base.mat().get(a, b) / q1.get(a, b);
            let alpha_t = approx.mat().get(a, b) / q1.get(a, b);
            sup_diff = sup_diff.max(math::abs(alpha - alpha_t));
        }
    }
    let delta_lemma = delta_tv.max(sup_diff);
    // f = |α−α̃|/δ' must satisfy the V-weighted proposal integral bound
    let mut ok = true;
    if delta_lemma > 0.0 {
        for a in 0..g {
            let mut acc = 0.0;
            for b in 0..g {
                if a == b || q1.get(a, b) == 0.0 {
                    continue;
                }
                let diff = math::abs(base.mat().get(a, b) - approx.mat().get(a, b)) / q1.get(a, b);
                acc += q1.get(a, b) * (diff / delta_lemma) * vvec[b];
            }
            if acc > vvec[a] + 1e-9 {
                ok = false;
                break;
            }
        }
    }
    (
        Hypothesis {
            name: alloc::format!(
                "acceptance-difference multiplicative bound with δ' = {delta_lemma:.4e} (|α−α̃| ≤ δ'·f, ∫fVL ≤ V)"
            ),
            satisfied: ok,
        },
        delta_lemma,
    )
}
