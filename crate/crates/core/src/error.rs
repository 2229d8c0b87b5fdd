//! Error type shared across the crate.

use alloc::string::String;

/// Errors surfaced by model evaluation, kernel stepping and grid analysis.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A log-density or derived quantity came out non-finite.
    NumericOverflow { what: &'static str, at: f64 },
    /// A parameter violated its documented range.
    Parameter(String),
    /// An operation was asked of a model variant that does not support it.
    UnsupportedModel(String),
    /// Exact subsample enumeration was requested but is infeasible.
    ExactInfeasible { combinations_log10: f64, limit_log10: f64 },
    /// The transition matrix is reducible; lists the closed classes found.
    Reducible { closed_classes: alloc::vec::Vec<alloc::vec::Vec<usize>> },
    /// An iterative computation hit its cap before reaching its tolerance.
    NotConverged { what: &'static str, residual: f64 },
    /// Mixing time exceeded the step cap; carries the distance at the cap.
    NotMixedWithinCap { t_max: u64, distance_at_cap: f64 },
    /// Two grid-indexed objects live on different grids.
    GridMismatch,
    /// The computational budget does not allow a single step.
    BudgetBelowOneStep { budget: u64, cost_per_step: u64 },
    /// Fitting needs more data points than were supplied.
    FitUnderdetermined { needed: usize, got: usize },
}

impl core::fmt::Display for Error {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Error::NumericOverflow { what, at } => {
                write!(f, "non-finite {what} at {at}")
            }
            Error::Parameter(msg) => write!(f, "parameter error: {msg}"),
            Error::UnsupportedModel(msg) => write!(f, "unsupported model: {msg}"),
            Error::ExactInfeasible { combinations_log10, limit_log10 } => write!(
                f,
                "exact enumeration infeasible: ~10^{combinations_log10:.1} subsets exceeds the 10^{limit_log10:.0} limit"
            ),
            Error::Reducible { closed_classes } => write!(
                f,
                "matrix is reducible: {} closed classes (stationary distribution not unique)",
                closed_classes.len()
            ),
            Error::NotConverged { what, residual } => {
                write!(f, "{what} did not converge (residual {residual:.3e})")
            }
            Error::NotMixedWithinCap { t_max, distance_at_cap } => write!(
                f,
                "not mixed within {t_max} steps (distance {distance_at_cap:.6} at cap)"
            ),
            Error::GridMismatch => write!(f, "operands live on different grids"),
            Error::BudgetBelowOneStep { budget, cost_per_step } => write!(
                f,
                "budget {budget} is below the per-step cost {cost_per_step}"
            ),
            Error::FitUnderdetermined { needed, got } => {
                write!(f, "fit needs at least {needed} points, got {got}")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
